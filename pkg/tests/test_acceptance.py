"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
summary lines alongside the pytest verdicts.
"""

import json
import time

import numpy as np
import pytest

from calmcert import regularizers as rz
from calmcert.certificates import certify_solution_map, uniqueness_equivalence_check
from calmcert.cli import run as cli_run
from calmcert.cones import PolyhedralCone, preimage, tangent_with_range_restriction
from calmcert.empirics import (instability_probe, kernel_formula_check,
                               perturbation_sweep, zero_product_check)
from calmcert.gallery import curated_cases, instance_for, random_group_lasso_instance
from calmcert.linalg import Tolerances
from calmcert.model import LinearOp, group_lasso, l1, load_instance, nuclear, \
    polyhedral_indicator
from calmcert.solver import SolverConfig, solve

TOL = Tolerances()


def _report(name, detail):
    print(f"[acceptance] {name}: PASS ({detail})")


def test_criterion_1_uniqueness_equivalence_suite():
    """Certificate vs brute-force oracle on 200 random group-Lasso instances."""
    t0 = time.time()
    decisive = disagreements = 0
    unique_count = nonunique_count = 0
    total = 200
    for seed in range(total):
        inst = random_group_lasso_instance(seed, dim_max=6, max_groups=3,
                                           dim_e_choices=(1, 2, 3, 4))
        pair = solve(inst)
        out = uniqueness_equivalence_check(inst, pair, seed=seed)
        if out["agrees"] is None:
            continue
        decisive += 1
        if out["oracle_unique"]:
            unique_count += 1
        else:
            nonunique_count += 1
        if out["agrees"] is False:
            disagreements += 1
    elapsed = time.time() - t0
    assert disagreements == 0
    assert decisive >= 0.95 * total
    # the comparison must exercise both answers
    assert unique_count >= 20 and nonunique_count >= 20
    assert elapsed <= 60.0
    _report("criterion 1 (uniqueness equivalence)",
            f"{decisive}/{total} decisive ({unique_count} unique / "
            f"{nonunique_count} not), 0 disagreements, {elapsed:.1f}s")


def _kernel_cases():
    box = polyhedral_indicator(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4))
    wide = polyhedral_indicator(
        np.vstack([np.eye(4), -np.eye(4), np.ones((1, 4)) / 2.0]),
        np.concatenate([np.ones(8), [1.5]]))
    return [
        ("l1 dim4", l1(4), np.array([1.0, 0.0, -2.0, 0.0]),
         np.array([1.0, 0.5, -1.0, -1.0])),
        ("group lasso interior", group_lasso([[0, 1], [2, 3]], 4),
         np.array([0.6, 0.8, 0.0, 0.0]), np.array([0.6, 0.8, 0.3, 0.4])),
        ("group lasso boundary-zero", group_lasso([[0, 1], [2, 3]], 4),
         np.array([0.6, 0.8, 0.0, 0.0]), np.array([0.6, 0.8, 0.6, 0.8])),
        ("polyhedral facet", box, np.array([1.0, 0.0]), np.array([2.0, 0.0])),
        ("polyhedral vertex", box, np.array([1.0, 1.0]), np.array([1.0, 2.0])),
        ("polyhedral dim4", wide, np.array([1.0, 0.2, -0.3, 0.1]),
         np.array([3.0, 0.0, 0.0, 0.0])),
        ("nuclear 2x2 nondegenerate", nuclear(2, 2),
         np.diag([1.0, 0.0]).ravel(), np.diag([1.0, 0.5]).ravel()),
        ("nuclear 2x2 degenerate", nuclear(2, 2),
         np.diag([1.0, 0.0]).ravel(), np.eye(2).ravel()),
        ("nuclear 3x3 diagonal", nuclear(3, 3),
         np.diag([2.0, 1.0, 0.0]).ravel(),
         np.diag([1.0, 1.0, 0.3]).ravel()),
    ]


def test_criterion_2_kernel_formula_suite():
    """Second-subderivative classifier agrees with tangent-cone membership."""
    t0 = time.time()
    total = 0
    for idx, (name, reg, x, v) in enumerate(_kernel_cases()):
        assert rz.subdiff_contains(reg, x, v, TOL), name
        out = kernel_formula_check(reg, x, v, n_dirs=50, seed=200 + idx)
        assert out["disagreements"] == 0, \
            f"{name}: {out['disagreements']} disagreements"
        total += out["n"]
    elapsed = time.time() - t0
    assert elapsed <= 30.0
    _report("criterion 2 (kernel formula)",
            f"{total} directions across {len(_kernel_cases())} cases, "
            f"0 disagreements, {elapsed:.1f}s")


def test_criterion_3_zero_product_suite():
    """Positivity and the two-way zero-product implication on >= 1e4 samples."""
    box = polyhedral_indicator(np.vstack([np.eye(2), -np.eye(2)]), np.ones(4))
    cases = [
        (l1(1), np.array([0.0]), np.array([1.0])),
        (l1(1), np.array([1.0]), np.array([1.0])),
        (l1(3), np.array([1.0, 0.0, -0.5]), np.array([1.0, 0.3, -1.0])),
        (group_lasso([[0, 1], [2]], 3), np.array([0.6, 0.8, 0.0]),
         np.array([0.6, 0.8, 0.4])),
        (group_lasso([[0, 1]], 2), np.zeros(2), np.array([0.6, 0.8])),
        (box, np.array([1.0, 0.0]), np.array([2.0, 0.0])),
        (box, np.array([1.0, 1.0]), np.array([1.0, 1.0])),
        (nuclear(2, 2), np.diag([1.0, 0.0]).ravel(),
         np.diag([1.0, 0.5]).ravel()),
        (nuclear(2, 2), np.diag([1.0, 0.0]).ravel(), np.eye(2).ravel()),
    ]
    total = 0
    min_inner = np.inf
    for i, (reg, x, v) in enumerate(cases):
        out = zero_product_check(reg, x, v, n_samples=1200, seed=100 + i)
        assert out["available"], i
        assert out["positivity_violations"] == 0, i
        assert out["forward_violations"] == 0, i
        assert out["backward_violations"] == 0, i
        total += out["n"]
        min_inner = min(min_inner, out["min_inner"])
    assert total >= 10000
    assert min_inner >= -1e-8
    _report("criterion 3 (zero product)",
            f"{total} graph samples, min normalized inner {min_inner:.2e}, "
            "0 violations")


def test_criterion_4_instability_refutation():
    """Exact alternate solutions with b_t = b on the segment instance."""
    inst = instance_for("lasso_segment")
    pair = solve(inst)
    report = certify_solution_map(inst, pair)
    assert report.conclusion_solution_map.status == "not_isolated_calm"
    out = instability_probe(inst, pair, report.conclusion_solution_map.witness,
                            [1e-1, 1e-2, 1e-3])
    assert out["refuted"]
    for e in out["entries"]:
        assert e["b_dist"] == 0.0
        assert e["ratio"] is None
        assert max(e["stationarity"], e["graph"]) <= 1e-10
        assert e["x_dist"] > 0
    _report("criterion 4 (instability refutation)",
            "3 exact alternate solutions with b_t = b, residuals <= 1e-10")


def _certified_calm_instances(count):
    found = []
    seed = 1000
    while len(found) < count:
        inst = random_group_lasso_instance(seed)
        seed += 1
        try:
            pair = solve(inst)
        except Exception:
            continue
        # demand comfortable boundary classification margins
        margins_ok = all(abs(np.linalg.norm(pair.v_bar[g]) - 1.0) >= 0.05
                         for g in inst.reg.group_slices)
        if not margins_ok:
            continue
        report = certify_solution_map(inst, pair)
        if report.conclusion_solution_map.status == "isolated_calm":
            found.append((inst, pair))
    return found


def test_criterion_5_stability_corroboration():
    """Bounded kappa estimates across shrinking radii on calm instances."""
    radii = [1e-2, 1e-3, 1e-4]
    checked = 0
    for inst, pair in _certified_calm_instances(20):
        est = perturbation_sweep(inst, pair, radii, n_per_radius=8,
                                 seed=checked)
        assert not est.blowup_flag
        k_small, k_smaller = est.kappa_hat_per_radius[1], \
            est.kappa_hat_per_radius[2]
        assert k_small is not None and k_smaller is not None
        ratio = max(k_small, k_smaller) / max(min(k_small, k_smaller), 1e-30)
        assert ratio < 2.0, f"instance {checked}: kappa ratio {ratio}"
        checked += 1
    assert checked == 20
    _report("criterion 5 (stability corroboration)",
            "20 instances, kappa variation < 2x, no blowup flags")


def test_criterion_6_inverse_image_tangent_equivalence():
    """Membership equivalence for tangents of linear preimages, 100 cases."""
    rng = np.random.default_rng(606)
    cases = disagreements = 0
    while cases < 100:
        dx = int(rng.integers(1, 5))
        dy = int(rng.integers(1, 5))
        k = rng.standard_normal((dy, dx))
        m = int(rng.integers(1, 5))
        a = rng.standard_normal((m, dy))
        x0 = rng.standard_normal(dx)
        slack = rng.uniform(0.2, 1.0, size=m)
        active = rng.random(m) < 0.5
        slack[active] = 0.0
        c = a @ (k @ x0) + slack

        class Face:
            is_polyhedral = True
            dim = dy

            def contains(self, y, tol):
                if a.shape[0] == 0:
                    return True
                s = tol * max(1.0, float(np.linalg.norm(y)))
                return float(np.max(a @ y - c)) <= s

            def tangent_at(self, y, tol):
                scale = max(1.0, float(np.linalg.norm(y)))
                act = [i for i in range(m)
                       if a[i] @ y >= c[i] - 10 * tol.member * scale]
                rows = a[act] if act else np.zeros((0, dy))
                return PolyhedralCone(rows, None, ambient=dy)

            def polyhedral_system(self):
                return a, c, np.zeros((0, dy)), np.zeros(0)

        restricted = tangent_with_range_restriction(Face(), k @ x0,
                                                    LinearOp.dense(k), TOL)
        route = preimage(k, restricted, TOL)
        direct_rows = a[active] @ k if active.any() else np.zeros((0, dx))
        direct = PolyhedralCone(direct_rows, None, ambient=dx)
        for _ in range(30):
            w = rng.standard_normal(dx)
            if route.member(w, 1e-8) != direct.member(w, 1e-8):
                disagreements += 1
        cases += 1
    assert disagreements == 0
    _report("criterion 6 (inverse-image tangent)",
            "100 polyhedral cases, 3000 membership probes, 0 disagreements")


def test_criterion_7_closed_form_regression():
    """Scalar soft-threshold instance: solution, certificate, and sweep."""
    inst = instance_for("lasso_scalar")
    pair = solve(inst)
    assert abs(pair.x_bar[0] - 2.0) <= 1e-8
    assert abs(pair.y_bar[0] - 1.0) <= 1e-8
    report = certify_solution_map(inst, pair)
    assert report.conclusion_solution_map.status == "isolated_calm"
    est = perturbation_sweep(inst, pair, [1e-2, 1e-3, 1e-4],
                             n_per_radius=16, seed=7)
    for kappa in est.kappa_hat_per_radius:
        assert 0.9 <= kappa <= 1.1
    _report("criterion 7 (closed-form regression)",
            f"x=2, y=1, isolated_calm, kappa in {np.round(est.kappa_hat_per_radius, 3).tolist()}")


def test_criterion_8_nuclear_paths(tmp_path):
    """Nondegenerate tangent collapses to a subspace (exact verdict);
    the degenerate multiplier stays Unknown with exit code 2."""
    nh = instance_for("nuclear_nondegenerate")
    pair = solve(nh)
    report = certify_solution_map(nh, pair)
    assert report.conclusion_solution_map.status == "isolated_calm"
    assert not report.has_unknown
    assert report.cond_suf.is_trivial and report.cond_nes.is_trivial

    deg = instance_for("nuclear_degenerate")
    pair_deg = solve(deg)
    report_deg = certify_solution_map(deg, pair_deg)
    assert report_deg.cond_suf.is_unknown
    assert report_deg.conclusion_solution_map.status == "inconclusive"

    # exit codes through the CLI on the same two documents
    for case in curated_cases():
        if case["name"] in ("nuclear_nondegenerate", "nuclear_degenerate"):
            p = tmp_path / f"{case['name']}.json"
            p.write_text(json.dumps(case["instance"]))
            code = cli_run(["certify", str(p)])
            assert code == (2 if case["name"] == "nuclear_degenerate" else 0)

    # and the demo suite verifies both rows
    assert cli_run(["demo"]) == 0
    _report("criterion 8 (nuclear paths)",
            "nondegenerate exact isolated_calm, degenerate unknown + exit 2")
