"""Independent numerical validation of the certificates.

Nothing here trusts the cone machinery: sweeps re-solve perturbed problems,
the instability probe constructs explicit alternate solutions and re-checks
their optimality residuals, and the difference-quotient laboratory compares
tangent-cone membership against second-order quotients and proximal graph
samples.
"""

from dataclasses import dataclass

import numpy as np

from . import regularizers as rz
from .cones import PolyhedralCone, PsdCone, SubspaceCone, SubspacePlusRays
from .solver import SolverConfig, SolverError, kkt_residual, solve_perturbed


@dataclass
class KappaEstimate:
    """Empirical calmness-modulus statistics from a perturbation sweep."""

    radii: list
    samples: list                       # dicts, one per perturbation
    kappa_hat_per_radius: list
    blowup_flag: bool

    def to_json_dict(self):
        return {"radii": [float(r) for r in self.radii],
                "samples": self.samples,
                "kappa_hat_per_radius": [None if v is None else float(v)
                                         for v in self.kappa_hat_per_radius],
                "blowup_flag": bool(self.blowup_flag)}

    def csv_rows(self):
        header = ["radius", "db_norm", "dmu", "x_dist", "ratio",
                  "solver_iters", "flag"]
        rows = [header]
        for s in self.samples:
            rows.append([s["radius"], s["db_norm"], s["dmu"], s["x_dist"],
                         "inf" if s["ratio"] is None else s["ratio"],
                         s["solver_iters"], s["flag"]])
        return rows


@dataclass
class GraphSample:
    """A point ((x + t w), (v + t z)) on the subgradient graph."""

    t: float
    w: np.ndarray
    z: np.ndarray
    residual: float


def perturbation_sweep(instance, pair, radii, n_per_radius=16, seed=0, cfg=None):
    """Max displacement-to-perturbation ratios over random (db, dmu) spheres.

    Samples whose solution jumps far from x_bar (possibly a different branch
    of the solution set) are flagged 'nonlocal' and excluded from kappa_hat;
    non-converged solves are flagged, never dropped silently.
    """
    rng = np.random.default_rng(seed)
    cfg = cfg or SolverConfig(tol_kkt=min(1e-12, instance.tol.kkt))
    ne = len(instance.b)
    x_bar = np.asarray(pair.x_bar, dtype=float)
    local_cap = 0.1 * float(np.linalg.norm(x_bar)) + 0.1
    samples = []
    kappa = []
    radii = [float(r) for r in radii]
    for r in radii:
        best = None
        for _ in range(n_per_radius):
            z = rng.standard_normal(ne + 1)
            z = r * z / np.linalg.norm(z)
            db, dmu = z[:ne], float(z[ne])
            if instance.mu + dmu < instance.mu / 2.0:
                dmu = -instance.mu / 2.0
            denom = float(np.linalg.norm(db)) + abs(dmu)
            entry = {"radius": r, "db_norm": float(np.linalg.norm(db)),
                     "dmu": dmu}
            try:
                sol = solve_perturbed(instance, db, dmu, pair, cfg)
                dist = float(np.linalg.norm(sol.x_bar - x_bar))
                ratio = dist / denom if denom > 0 else None
                entry.update(x_dist=dist, ratio=ratio,
                             solver_iters=sol.iterations, flag="ok")
                if dist > local_cap:
                    entry["flag"] = "nonlocal"
            except SolverError as exc:
                dist = float(np.linalg.norm(exc.pair.x_bar - x_bar))
                entry.update(x_dist=dist, ratio=dist / denom if denom else None,
                             solver_iters=exc.pair.iterations,
                             flag="nonconverged")
            samples.append(entry)
            if entry["flag"] == "ok" and entry["ratio"] is not None:
                best = entry["ratio"] if best is None else max(best, entry["ratio"])
        kappa.append(best)
    blowup = False
    for i in range(len(radii)):
        for j in range(len(radii)):
            if radii[i] >= 99.0 * radii[j] and kappa[i] and kappa[j]:
                if kappa[j] >= 10.0 * kappa[i]:
                    blowup = True
    return KappaEstimate(radii=radii, samples=samples,
                         kappa_hat_per_radius=kappa, blowup_flag=blowup)


# ---------------------------------------------------------------------------
# witness-direction instability construction


def instability_probe(instance, pair, witness, t_grid):
    """Build alternate solutions x_t along a witness and verify them by KKT.

    x_t is the projection of x_bar + t*witness onto the solution-set face;
    b_t := b + Phi(x_t - x_bar) makes x_t optimal for P(b_t, mu) whenever the
    face membership holds, which is re-verified through the KKT residuals.
    A ratio of None means b_t = b exactly (alternate solution of the SAME
    problem, the strongest possible refutation).
    """
    tol = instance.tol
    x_bar = np.asarray(pair.x_bar, dtype=float)
    y = np.asarray(pair.y_bar, dtype=float)
    w = np.asarray(witness, dtype=float)
    try:
        face = rz.conj_subdiff_face(instance.reg, y, tol)
    except ValueError as exc:
        return {"available": False, "reason": str(exc), "entries": []}
    scale = 1.0 + float(np.linalg.norm(instance.b))
    entries = []
    for t in t_grid:
        t = float(t)
        cand = x_bar + t * w
        kc = instance.k.apply(cand)
        if instance.k.is_identity:
            proj = face.project(kc)
            x_t = proj
            proj_res = float(np.linalg.norm(kc - proj))
        else:
            if face.contains(kc, 10 * tol.member):
                x_t = cand
                proj_res = float(np.linalg.norm(kc - face.project(kc)))
            else:
                entries.append({"t": t, "available": False,
                                "reason": "projection onto the preimage of the "
                                          "face is not available for this K"})
                continue
        db = instance.phi.apply(x_t - x_bar)
        b_dist = float(np.linalg.norm(db))
        if b_dist <= 1e-13 * scale:
            # the witness lies in Ker Phi to float precision: construct the
            # alternate solution for the SAME data, exactly
            db = np.zeros_like(db)
            b_dist = 0.0
        pert = instance.perturbed(db, 0.0)
        res = kkt_residual(pert, x_t, y)
        verified = max(res.values()) <= max(1e-10, 10 * tol.kkt) * scale
        x_dist = float(np.linalg.norm(x_t - x_bar))
        ratio = None if b_dist == 0.0 else x_dist / b_dist
        entries.append({"t": t, "available": True, "x_dist": x_dist,
                        "b_dist": b_dist, "ratio": ratio,
                        "stationarity": res["stationarity"],
                        "graph": res["graph"], "verified": verified,
                        "projection_residual": proj_res})
    usable = [e for e in entries if e.get("available")]
    finite = [e["ratio"] for e in usable if e["ratio"] is not None]
    min_ratio = min(finite) if finite else None
    refuted = bool(usable) and all(e["verified"] for e in usable) and \
        all(e["x_dist"] > 0 for e in usable) and \
        (min_ratio is None or min_ratio >= 1e6)
    return {"available": bool(usable), "entries": entries,
            "min_ratio": min_ratio, "refuted": refuted}


# ---------------------------------------------------------------------------
# second-subderivative difference quotients


def _strict_value_fn(reg):
    """Regularizer value with machine-precision domain checks.

    The catalog value() applies the membership tolerance to the polyhedral
    indicator; inside an O(t^2) difference quotient that slack would absorb
    genuine constraint violations, so the quotient lab uses a strict one.
    """
    if callable(reg):
        return reg
    if reg.kind == "polyhedral_indicator":
        a, c = reg.A, reg.c

        def fn(z):
            if a.shape[0]:
                slack = 1e-12 * max(1.0, float(np.linalg.norm(z)))
                if float(np.max(a @ z - c)) > slack:
                    return np.inf
            return 0.0

        return fn
    return lambda z: rz.value(reg, z)


def _face_projector(reg, v_bar):
    """Projection onto the conjugate face of v_bar, or None."""
    if callable(reg):
        return None
    try:
        face = rz.conj_subdiff_face(reg, np.asarray(v_bar, dtype=float),
                                    rz.DEFAULT_TOL)
    except ValueError:
        return None
    return face.project


def second_subderivative_estimate(reg, x_bar, v_bar, w, t_grid, perturb=1e-3,
                                  refine_above=None):
    """Difference quotients [g(x+tw) - g(x) - t<v,w>] / (t^2/2) along t_grid.

    Raw quotients by default (divergent directions show up as large or
    infinite values).  With refine_above set, any raw quotient exceeding it
    is re-minimized over nearby directions, a desk approximation of the
    liminf: a per-coordinate perturbation grid of w, plus the face-projected
    secant (the canonical recovery sequence for tangent directions of curved
    faces, e.g. embedded PSD blocks in a rotated basis).  Both stay within
    the locality radius `perturb` of w.
    """
    fn = _strict_value_fn(reg)
    x_bar = np.asarray(x_bar, dtype=float)
    v_bar = np.asarray(v_bar, dtype=float)
    w = np.asarray(w, dtype=float)
    base = fn(x_bar)
    projector = None
    projector_ready = False

    def quotient(t, direction):
        val = fn(x_bar + t * direction)
        if not np.isfinite(val):
            return np.inf
        return (val - base - t * float(v_bar @ direction)) / (0.5 * t * t)

    cutoff = np.inf if refine_above is None else float(refine_above)
    out = []
    for t in t_grid:
        t = float(t)
        q = quotient(t, w)
        if q > cutoff or not np.isfinite(q):
            for i in range(w.size):
                for sgn in (1.0, -1.0):
                    wp = w.copy()
                    wp[i] += sgn * perturb
                    q = min(q, quotient(t, wp))
            if not projector_ready:
                projector = _face_projector(reg, v_bar)
                projector_ready = True
            if projector is not None:
                secant = (projector(x_bar + t * w) - x_bar) / t
                if float(np.linalg.norm(secant - w)) <= perturb:
                    q = min(q, quotient(t, secant))
        out.append(float(q))
    return out


def _cone_project(cone, w):
    if isinstance(cone, (SubspaceCone, SubspacePlusRays, PsdCone)):
        return cone.project(w)
    if isinstance(cone, PolyhedralCone):
        return rz.project_polyhedron(w, cone.A, np.zeros(cone.A.shape[0]),
                                     cone.E, np.zeros(cone.E.shape[0]))
    return None


def kernel_formula_check(reg, x_bar, v_bar, n_dirs=50, seed=0,
                         t=1e-5, threshold=1e-4, tol=None):
    """Classify directions by the quotient estimator vs cone membership.

    Directions are half uniform on the sphere, half projected onto the
    computed tangent cone so both classes are exercised; the acceptance
    standard is zero disagreements.
    """
    tol = tol or rz.DEFAULT_TOL
    rng = np.random.default_rng(seed)
    x_bar = np.asarray(x_bar, dtype=float)
    v_bar = np.asarray(v_bar, dtype=float)
    cone = rz.tangent_conj_subdiff(reg, v_bar, x_bar, tol)
    n = x_bar.size
    dirs = []
    for i in range(n_dirs):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        if i % 2 == 1:
            p = _cone_project(cone, d)
            if p is not None and np.linalg.norm(p) > 1e-9:
                d = p / np.linalg.norm(p)
        dirs.append(d)
    agreements, disagreements, details = 0, 0, []
    for d in dirs:
        member = cone.member(d, tol.member)
        q = second_subderivative_estimate(reg, x_bar, v_bar, d, [t],
                                          refine_above=threshold)[0]
        est_member = q <= threshold
        ok = member == est_member
        agreements += ok
        disagreements += not ok
        details.append({"member": bool(member), "quotient": q,
                        "estimator_member": bool(est_member)})
    return {"n": len(dirs), "agreements": agreements,
            "disagreements": disagreements, "details": details}


# ---------------------------------------------------------------------------
# zero-product property on proximal graph samples


def graph_sample(reg, x_bar, v_bar, d, t):
    """Exact subgradient-graph point from one prox evaluation."""
    x_bar = np.asarray(x_bar, dtype=float)
    v_bar = np.asarray(v_bar, dtype=float)
    p = x_bar + v_bar + t * np.asarray(d, dtype=float)
    u = rz.prox(reg, 1.0, p)
    s = p - u
    res = float(np.linalg.norm(u - rz.prox(reg, 1.0, u + s)))
    return GraphSample(t=t, w=(u - x_bar) / t, z=(s - v_bar) / t, residual=res)


def zero_product_check(reg, x_bar, v_bar, n_samples=200, seed=0,
                       t=1e-6, tol=1e-6, cone_tol=None):
    """Two-way zero-product test on random proximal graph samples.

    For each sample (w, z) of the subgradient graphical derivative:
      * positivity: <z, w> >= -1e-8 (1 + ||z|| ||w||)  (monotonicity)
      * product ~ 0  =>  z and w lie in the respective tangent cones
      * both memberships (strict)  =>  product ~ 0

    On curved faces the product is quadratic in the distance to the kernel,
    so the forward conclusion is checked at a sqrt-scaled slack while the
    backward hypothesis uses the strict linear slack.
    """
    cone_tol = cone_tol or rz.DEFAULT_TOL
    rng = np.random.default_rng(seed)
    x_bar = np.asarray(x_bar, dtype=float)
    v_bar = np.asarray(v_bar, dtype=float)
    t_primal = rz.tangent_subdiff(reg, x_bar, v_bar, cone_tol)
    t_dual = rz.tangent_conj_subdiff(reg, v_bar, x_bar, cone_tol)
    if t_primal is None:
        return {"available": False,
                "reason": "tangent cone to dg(x_bar) not representable"}
    n = x_bar.size
    counts = {"n": 0, "positivity_violations": 0, "forward_violations": 0,
              "backward_violations": 0, "zero_products": 0,
              "both_members": 0, "min_inner": np.inf}
    for _ in range(n_samples):
        d = rng.standard_normal(n)
        d /= np.linalg.norm(d)
        sample = graph_sample(reg, x_bar, v_bar, d, t)
        w, z = sample.w, sample.z
        inner = float(z @ w)
        norms = float(np.linalg.norm(z) * np.linalg.norm(w))
        counts["n"] += 1
        counts["min_inner"] = min(counts["min_inner"], inner / (1.0 + norms))
        if inner < -1e-8 * (1.0 + norms):
            counts["positivity_violations"] += 1
        near_zero = inner <= tol * (norms + 1.0)
        loose = 3.0 * np.sqrt(max(inner, 0.0) + tol) + 10 * tol
        if near_zero:
            counts["zero_products"] += 1
            if not (t_primal.member(z, loose) and t_dual.member(w, loose)):
                counts["forward_violations"] += 1
        if t_primal.member(z, 10 * tol) and t_dual.member(w, 10 * tol):
            counts["both_members"] += 1
            if abs(inner) > 10 * tol * (norms + 1.0):
                counts["backward_violations"] += 1
    counts["available"] = True
    return counts
