"""Machine verdicts for isolated calmness of the solution mappings.

certify_solution_map: is the optimal-solution map of P(b, mu) isolated calm
at (b, mu) for x_bar?  Decided through Ker Phi against the (range-restricted)
tangent cone of the conjugate-subdifferential face, with qualification flags
that close the necessary/sufficient gap.

certify_primal_dual: the same for the primal-dual (Lagrange) solution map,
adding the adjoint-kernel condition Ker K* cap T_{dg(Kx)}(y) = {0}.

Verdict logic is three-valued and conservative: Unknown cone answers never
upgrade to a decisive conclusion.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import regularizers as rz
from .cones import (TrivialityVerdict, preimage, polar_cone,
                    tangent_with_range_restriction, trivial_intersection)
from .linalg import null_space
from .model import materialize
from .solver import kkt_residual


class CertificateError(RuntimeError):
    """Certificate preconditions (KKT point, valid multiplier) violated."""


class InternalInconsistency(AssertionError):
    """Qualification holds but the two characterizations disagree."""


@dataclass
class Conclusion:
    status: str                  # isolated_calm | not_isolated_calm | inconclusive
    witness: np.ndarray = None
    reason: str = ""

    @property
    def is_decisive(self):
        return self.status != "inconclusive"

    def to_json_dict(self):
        return {"status": self.status,
                "witness": None if self.witness is None
                else [float(v) for v in self.witness],
                "reason": self.reason}


def _verdict_json(v):
    if v is None:
        return {"outcome": "unknown", "witness": None, "reason": "not evaluated"}
    outcome = {"trivial": "holds", "nontrivial": "fails",
               "unknown": "unknown"}[v.outcome]
    return {"outcome": outcome,
            "witness": None if v.witness is None
            else [float(x) for x in v.witness],
            "reason": v.reason}


def _tri_json(value):
    return {"yes": "holds", "no": "fails", "unknown": "unknown"}[value]


@dataclass
class CertificateReport:
    v_bar: np.ndarray
    y_used: np.ndarray
    cond_suf: TrivialityVerdict
    cond_nes: TrivialityVerdict
    qual_polyhedral: bool
    qual_ri: str
    qgc: rz.QgcFlags
    conclusion_solution_map: Conclusion
    srcq: TrivialityVerdict = None
    pd_conditions: dict = None
    conclusion_primal_dual: Conclusion = None
    notes: dict = field(default_factory=dict)

    def to_json_dict(self):
        out = {
            "v_bar": [float(v) for v in self.v_bar],
            "y_used": [float(v) for v in self.y_used],
            "cond_suf": _verdict_json(self.cond_suf),
            "cond_nes": _verdict_json(self.cond_nes),
            "qual_polyhedral": bool(self.qual_polyhedral),
            "qual_ri": _tri_json(self.qual_ri),
            "srcq": _verdict_json(self.srcq),
            "pd_conditions": None if self.pd_conditions is None
            else {k: _tri_json(v) for k, v in self.pd_conditions.items()},
            "qgc": {"primal_qgc": self.qgc.primal_qgc,
                    "dual_qgc": self.qgc.dual_qgc,
                    "polyhedral_conjugate_face": self.qgc.polyhedral_conjugate_face},
            "conclusion_solution_map": self.conclusion_solution_map.to_json_dict(),
            "conclusion_primal_dual": None if self.conclusion_primal_dual is None
            else self.conclusion_primal_dual.to_json_dict(),
            "notes": self.notes,
        }
        return out

    @property
    def has_unknown(self):
        flags = [self.cond_suf.is_unknown, self.cond_nes.is_unknown,
                 self.qual_ri == "unknown",
                 not self.conclusion_solution_map.is_decisive]
        if self.srcq is not None:
            flags.append(self.srcq.is_unknown)
        if self.conclusion_primal_dual is not None:
            flags.append(not self.conclusion_primal_dual.is_decisive)
        return any(flags)


# ---------------------------------------------------------------------------
# multiplier validation / refinement


def _prepare_multiplier(instance, pair):
    """Validate the KKT pair; refine a near-feasible multiplier once."""
    tol = instance.tol
    scale = 1.0 + float(np.linalg.norm(instance.b))
    x = np.asarray(pair.x_bar, dtype=float)
    y = np.asarray(pair.y_bar, dtype=float)
    res = kkt_residual(instance, x, y)
    worst = max(res.values())
    if worst <= tol.kkt * scale:
        return x, y, res
    if worst > 100 * tol.kkt * scale:
        raise CertificateError(
            f"pair is not a KKT point: residuals {res} exceed "
            f"100 * tol_kkt * scale = {100 * tol.kkt * scale:.3g}")
    # one alternating refinement step: least squares onto {K* y = v_bar},
    # then pulled toward dg(K x_bar)
    v = instance.v_of(x)
    kt = materialize(instance.k).T
    corr, *_ = np.linalg.lstsq(kt, v - kt @ y, rcond=None)
    y1 = y + corr
    y2 = rz.project_multiplier(instance.reg, instance.k.apply(x), y1, tol)
    res2 = kkt_residual(instance, x, y2)
    if max(res2.values()) > 100 * tol.kkt * scale:
        raise CertificateError(
            f"multiplier refinement failed: residuals {res2} after one "
            "alternating step")
    return x, y2, res2


def recover_multiplier(instance, x, tol=None):
    """Find y with K* y = v(x) and y in dg(K x); error when none is found."""
    tol = tol or instance.tol
    v = instance.v_of(x)
    k = materialize(instance.k)
    y0, *_ = np.linalg.lstsq(k.T, v, rcond=None)
    y = rz.project_multiplier(instance.reg, instance.k.apply(x), y0, tol)
    res = kkt_residual(instance, x, y)
    scale = 1.0 + float(np.linalg.norm(instance.b))
    if max(res.values()) > 100 * tol.kkt * scale:
        # one more alternating pass before giving up
        corr, *_ = np.linalg.lstsq(k.T, v - k.T @ y, rcond=None)
        y = rz.project_multiplier(instance.reg, instance.k.apply(x), y + corr, tol)
        res = kkt_residual(instance, x, y)
        if max(res.values()) > 100 * tol.kkt * scale:
            raise CertificateError(
                f"no multiplier with K* y = v_bar within tolerance: residuals {res}")
    return y


# ---------------------------------------------------------------------------
# solution-map certificate


def _compose_solution_conclusion(cond_suf, cond_nes, qualified, qgc):
    if cond_nes.is_nontrivial:
        return Conclusion("not_isolated_calm", witness=cond_nes.witness,
                          reason="necessary condition fails: nonzero direction "
                                 "in Ker Phi meeting the restricted tangent cone")
    if cond_suf.is_trivial and qgc.primal_qgc:
        return Conclusion("isolated_calm",
                          reason="sufficient condition holds under the "
                                 "quadratic growth condition")
    if cond_suf.is_unknown:
        return Conclusion("inconclusive", reason=cond_suf.reason
                          or "sufficient condition undecided")
    if cond_suf.is_nontrivial and not qualified:
        return Conclusion("inconclusive",
                          reason="sufficient condition fails but no "
                                 "qualification closes the gap to necessity")
    if cond_nes.is_unknown:
        return Conclusion("inconclusive", reason=cond_nes.reason
                          or "necessary condition undecided")
    return Conclusion("inconclusive", reason="no decisive branch")


def certify_solution_map(instance, pair, seed=0):
    """Certificate for the optimal-solution mapping at (b, mu) for x_bar."""
    tol = instance.tol
    x, y, _ = _prepare_multiplier(instance, pair)
    v = instance.v_of(x)
    reg = instance.reg
    kx = instance.k.apply(x)
    face = rz.conj_subdiff_face(reg, y, tol)
    if not face.contains(kx, 10 * tol.member):
        dist = float(np.linalg.norm(kx - face.project(kx)))
        raise CertificateError(
            f"K x_bar is not in the conjugate face of y_used (distance {dist:.3g})")
    qgc = rz.qgc_flags(reg)
    kernel_phi = null_space(materialize(instance.phi), tol)

    tangent = face.tangent_at(kx, tol)
    cond_suf = trivial_intersection(kernel_phi, preimage(instance.k, tangent, tol),
                                    tol, seed=seed)
    restricted = tangent_with_range_restriction(face, kx, instance.k, tol)
    if restricted is None:
        cond_nes = TrivialityVerdict.unknown(
            "range-restricted tangent cone has no exact description for this face")
    else:
        cond_nes = trivial_intersection(
            kernel_phi, preimage(instance.k, restricted, tol), tol, seed=seed)

    qual_polyhedral = qgc.polyhedral_conjugate_face
    qual_ri = rz.ri_intersects_range(reg, y, instance.k, tol, x_bar=kx)
    qualified = qual_polyhedral or qual_ri == "yes"
    if qualified:
        if not cond_suf.is_unknown and not cond_nes.is_unknown \
                and cond_suf.outcome != cond_nes.outcome:
            raise InternalInconsistency(
                "qualification holds but the sufficient and necessary "
                f"verdicts disagree: {cond_suf.outcome} vs {cond_nes.outcome}")
        if cond_nes.is_unknown and not cond_suf.is_unknown:
            cond_nes = TrivialityVerdict(cond_suf.outcome, cond_suf.witness,
                                         "equal to the unrestricted condition "
                                         "under the qualification")
        if cond_suf.is_unknown and not cond_nes.is_unknown:
            cond_suf = TrivialityVerdict(cond_nes.outcome, cond_nes.witness,
                                         "equal to the restricted condition "
                                         "under the qualification")

    conclusion = _compose_solution_conclusion(cond_suf, cond_nes, qualified, qgc)
    return CertificateReport(
        v_bar=v, y_used=y,
        cond_suf=cond_suf, cond_nes=cond_nes,
        qual_polyhedral=qual_polyhedral, qual_ri=qual_ri,
        qgc=qgc, conclusion_solution_map=conclusion,
        notes={"face": face.describe(), "seed": int(seed)},
    )


# ---------------------------------------------------------------------------
# primal-dual certificate


def _combine(flag_a, flag_b):
    """Tri-state AND over {'yes','no','unknown'}."""
    if flag_a == "no" or flag_b == "no":
        return "no"
    if flag_a == "yes" and flag_b == "yes":
        return "yes"
    return "unknown"


def _verdict_flag(v):
    return {"trivial": "yes", "nontrivial": "no", "unknown": "unknown"}[v.outcome]


def certify_primal_dual(instance, pair, seed=0):
    """Certificate for the primal-dual solution mapping at (b, mu, 0)."""
    report = certify_solution_map(instance, pair, seed=seed)
    tol = instance.tol
    reg = instance.reg
    x = np.asarray(pair.x_bar, dtype=float)
    y = report.y_used
    kx = instance.k.apply(x)
    kernel_kt = null_space(materialize(instance.k).T, tol)

    tangent_sub = rz.tangent_subdiff(reg, kx, y, tol)
    if tangent_sub is None:
        srcq = TrivialityVerdict.unknown(
            "tangent cone to dg(K x_bar) not representable for this multiplier")
    else:
        srcq = trivial_intersection(kernel_kt, tangent_sub, tol, seed=seed)

    # condition (iii) first: Ker K* against the normal cone (polar of tangent)
    face = rz.conj_subdiff_face(reg, y, tol)
    polar = polar_cone(face.tangent_at(kx, tol), tol)
    if polar is None:
        cond_iii = "unknown"
    else:
        v3 = trivial_intersection(kernel_kt, polar, tol, seed=seed)
        cond_iii = _verdict_flag(v3)
    cond_i = _combine("yes" if report.qual_polyhedral else "no",
                      _verdict_flag(srcq))
    cond_ii = _combine(report.qual_ri, _verdict_flag(srcq))
    if cond_iii == "yes" and cond_ii == "unknown":
        cond_ii = "yes"

    qgc = report.qgc
    if srcq.is_nontrivial:
        pd = Conclusion("not_isolated_calm", witness=srcq.witness,
                        reason="adjoint-kernel condition fails: nonzero "
                               "multiplier direction in Ker K* meeting the "
                               "tangent cone to dg(K x_bar)")
    elif report.cond_suf.is_nontrivial:
        pd = Conclusion("not_isolated_calm", witness=report.cond_suf.witness,
                        reason="kernel condition fails: nonzero direction in "
                               "Ker Phi meeting the tangent cone preimage")
    elif srcq.is_trivial and report.cond_suf.is_trivial \
            and qgc.primal_qgc and qgc.dual_qgc:
        pd = Conclusion("isolated_calm",
                        reason="both kernel conditions hold under the "
                               "primal-dual quadratic growth condition")
    else:
        reasons = [v.reason for v in (srcq, report.cond_suf) if v.is_unknown]
        pd = Conclusion("inconclusive",
                        reason="; ".join(r for r in reasons if r)
                        or "kernel conditions undecided")

    report.srcq = srcq
    report.pd_conditions = {"i": cond_i, "ii": cond_ii, "iii": cond_iii}
    report.conclusion_primal_dual = pd
    return report


# ---------------------------------------------------------------------------
# strong-solution relabeling (K = identity)


def strong_solution_equivalence(instance, pair, seed=0):
    """Relabel the kernel-tangent verdict as a strong-solution statement."""
    if not instance.k.is_identity:
        raise ValueError("strong-solution equivalence requires K = identity")
    report = certify_solution_map(instance, pair, seed=seed)
    if not report.qgc.primal_qgc:
        raise ValueError("requires the primal quadratic growth condition")
    v = report.cond_suf
    if v.is_trivial:
        return {"strong_solution": True, "witness": None,
                "statement": "x_bar is a strong solution"}
    if v.is_nontrivial:
        return {"strong_solution": False,
                "witness": [float(w) for w in v.witness],
                "statement": "x_bar is not a strong solution"}
    return {"strong_solution": None, "witness": None,
            "statement": f"undecided: {v.reason}"}


# ---------------------------------------------------------------------------
# brute-force uniqueness oracle (analysis group Lasso)


def _strictly_positive_point(w_basis):
    """A coordinate-wise strictly positive point of a subspace, or None.

    w_basis: (k x d) matrix whose columns span the subspace of achievable
    margin vectors.  Tries the all-ones target first, then a micro-LP.
    """
    k, d = w_basis.shape
    if k == 0:
        return np.zeros(0)
    if d == 0:
        return None
    sol, *_ = np.linalg.lstsq(w_basis, np.ones(k), rcond=None)
    m = w_basis @ sol
    if np.all(m > 0.5) and float(np.linalg.norm(m - 1.0)) <= 1e-8:
        return m
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-w_basis, np.ones((k, 1))])
    res = scipy.optimize.linprog(c, A_ub=a_ub, b_ub=np.zeros(k),
                                 bounds=[(-1.0, 1.0)] * d + [(0.0, 1.0)],
                                 method="highs")
    if res.success and res.x[-1] > 1e-9:
        return w_basis @ res.x[:d]
    return None


def uniqueness_oracle(instance, pair):
    """Enumerate group support/sign patterns of the true solution set.

    The solution set of P(b, mu) is {x : Phi x = Phi x_bar} intersected with
    the set of points whose transform lies on the multiplier's face; its
    local structure at x_bar is enumerated over subsets of tight boundary
    groups, and every non-uniqueness claim is verified by re-checking the
    KKT residuals of an explicit alternate point.
    """
    reg = instance.reg
    if reg.kind != "group_lasso":
        raise ValueError("uniqueness oracle supports group lasso only")
    tol = instance.tol
    x = np.asarray(pair.x_bar, dtype=float)
    y = np.asarray(pair.y_bar, dtype=float)
    k = materialize(instance.k)
    phi = materialize(instance.phi)
    kx = k @ x
    w = reg.weight

    boundary, tight = [], []
    eq_rows = [phi]
    units = {}
    for gi, g in enumerate(reg.group_slices):
        ny = float(np.linalg.norm(y[g])) / w
        if abs(ny - 1.0) <= tol.member:
            u = y[g] / np.linalg.norm(y[g])
            units[gi] = u
            boundary.append(gi)
            # movement confined to the ray direction
            perp = np.eye(len(g)) - np.outer(u, u)
            eq_rows.append(perp @ k[g, :])
            if float(u @ kx[g]) <= 1e3 * tol.member * max(1.0, np.linalg.norm(kx)):
                tight.append(gi)
        else:
            eq_rows.append(k[g, :])
    u_sub = null_space(np.vstack(eq_rows), tol)
    detail = {"movement_dim": u_sub.dim, "tight_groups": list(tight)}
    if u_sub.dim == 0:
        return True, None, detail

    def margins_matrix(groups):
        if not groups:
            return np.zeros((0, k.shape[1]))
        rows = [units[gi] @ k[reg.group_slices[gi], :] for gi in groups]
        return np.asarray(rows)

    def verify(d):
        d = d / np.linalg.norm(d)
        slack = [float(units[gi] @ (k[reg.group_slices[gi], :] @ x)) /
                 max(abs(float(units[gi] @ (k[reg.group_slices[gi], :] @ d))), 1e-12)
                 for gi in boundary if gi not in tight]
        eps = min([1e-2] + [0.5 * s for s in slack if s > 0])
        cand = x + eps * d
        res = kkt_residual(instance, cand, y)
        scale = 1.0 + float(np.linalg.norm(instance.b))
        if max(res.values()) <= 1e3 * tol.kkt * scale:
            return cand
        return None

    m_tight = margins_matrix(tight)
    from itertools import combinations
    for size in range(0, len(tight) + 1):
        for combo in combinations(range(len(tight)), size):
            moving = list(combo)
            staying = [i for i in range(len(tight)) if i not in moving]
            if staying:
                stay_rows = m_tight[staying] @ u_sub.basis
                inner = null_space(stay_rows, tol)
                basis = u_sub.basis @ inner.basis
            else:
                basis = u_sub.basis
            if basis.shape[1] == 0:
                continue
            if not moving:
                alt = verify(basis[:, 0])
                if alt is None:
                    alt = verify(-basis[:, 0])
                if alt is not None:
                    return False, alt, detail
                continue
            move_rows = m_tight[moving] @ basis
            margins = _strictly_positive_point(move_rows)
            if margins is None:
                continue
            coeff, *_ = np.linalg.lstsq(move_rows, margins, rcond=None)
            alt = verify(basis @ coeff)
            if alt is not None:
                return False, alt, detail
    return True, None, detail


def uniqueness_equivalence_check(instance, pair, oracle_budget=8, seed=0):
    """Compare the certificate conclusion with the brute-force oracle."""
    if instance.reg.kind != "group_lasso":
        raise ValueError("uniqueness equivalence applies to group lasso only")
    if instance.dim_x > oracle_budget:
        raise ValueError(f"oracle budget exceeded: dim X = {instance.dim_x} "
                         f"> {oracle_budget}")
    unique, alternate, detail = uniqueness_oracle(instance, pair)
    report = certify_solution_map(instance, pair, seed=seed)
    status = report.conclusion_solution_map.status
    if status == "inconclusive":
        agrees = None
    else:
        agrees = (status == "isolated_calm") == unique
    return {"agrees": agrees,
            "oracle_unique": unique,
            "certificate": status,
            "alternate": None if alternate is None
            else [float(v) for v in alternate],
            "detail": detail}
