import json

import numpy as np
import pytest

from calmcert import regularizers as rz
from calmcert.gallery import instance_for
from calmcert.model import load_instance, materialize
from calmcert.solver import (SolverConfig, SolverError, kkt_residual,
                             objective, solve, solve_perturbed)


def make(doc):
    return load_instance(json.dumps(doc))


def l1_doc(phi, b, mu=1.0, n=None):
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    n = n or phi.shape[1]
    return {"phi": {"kind": "dense", "rows": phi.shape[0], "cols": phi.shape[1],
                    "entries": [float(v) for v in phi.ravel()]},
            "b": list(np.atleast_1d(b).astype(float)), "mu": mu,
            "k": {"kind": "identity", "dim": n},
            "reg": {"kind": "group_lasso", "dim": n,
                    "groups": [[i] for i in range(n)], "weight": 1.0}}


def test_scalar_soft_threshold_closed_form():
    pair = solve(make(l1_doc([[1.0]], [3.0])))
    assert pair.x_bar[0] == pytest.approx(2.0, abs=1e-9)
    assert pair.y_bar[0] == pytest.approx(1.0, abs=1e-9)


def test_zero_data_zero_solution():
    pair = solve(make(l1_doc(np.eye(2), [0.0, 0.0])))
    assert np.allclose(pair.x_bar, 0.0, atol=1e-10)


def test_segment_instance_lands_on_solution_set():
    inst = make(l1_doc([[1.0, 1.0]], [2.0]))
    pair = solve(inst)
    x = pair.x_bar
    assert np.all(x >= -1e-9)
    assert x.sum() == pytest.approx(1.0, abs=1e-8)
    assert np.allclose(pair.y_bar, [1.0, 1.0], atol=1e-8)
    res = kkt_residual(inst, pair.x_bar, pair.y_bar)
    assert max(res.values()) <= 1e-9


def test_kkt_residual_detects_corruption():
    inst = make(l1_doc([[1.0]], [3.0]))
    good = kkt_residual(inst, np.array([2.0]), np.array([1.0]))
    assert max(good.values()) <= 1e-12
    bad = kkt_residual(inst, np.array([2.0]), np.array([1.5]))
    assert bad["graph"] >= 0.1
    zero = make(l1_doc([[1.0]], [0.0]))
    res = kkt_residual(zero, np.zeros(1), np.zeros(1))
    assert max(res.values()) == 0.0


def test_perturbed_identity_returns_warm():
    inst = make(l1_doc([[1.0]], [3.0]))
    pair = solve(inst)
    again = solve_perturbed(inst, np.zeros(1), 0.0, pair)
    assert again.iterations == 0
    assert np.array_equal(again.x_bar, pair.x_bar)


def test_perturbed_b_and_mu_closed_forms():
    inst = make(l1_doc([[1.0]], [3.0]))
    pair = solve(inst)
    up = solve_perturbed(inst, np.array([0.1]), 0.0, pair)
    assert up.x_bar[0] == pytest.approx(2.1, abs=1e-8)
    # stationarity (1/mu)(x - b) + sign(x) = 0 gives x = b - mu
    remu = solve_perturbed(inst, np.zeros(1), 1.0, pair)
    assert remu.x_bar[0] == pytest.approx(1.0, abs=1e-8)


def test_perturbed_rejects_nonpositive_mu():
    inst = make(l1_doc([[1.0]], [3.0]))
    pair = solve(inst)
    with pytest.raises(ValueError):
        solve_perturbed(inst, np.zeros(1), -1.0, pair)


def test_representation_invariance_identity_vs_dense():
    rng = np.random.default_rng(0)
    phi = rng.standard_normal((3, 4))
    b = rng.standard_normal(3)
    doc = l1_doc(phi, b)
    x_id = solve(make(doc)).x_bar
    doc_dense = dict(doc)
    doc_dense["k"] = {"kind": "dense", "rows": 4, "cols": 4,
                      "entries": [float(v) for v in np.eye(4).ravel()]}
    x_dense = solve(make(doc_dense)).x_bar
    assert np.linalg.norm(x_id - x_dense) <= 1e-8


def test_splitting_solves_analysis_problem():
    inst = instance_for("tv_grad1d")
    pair = solve(inst)
    assert np.allclose(pair.x_bar, [2.0, 2.0, 2.0], atol=1e-8)
    res = kkt_residual(inst, pair.x_bar, pair.y_bar)
    assert max(res.values()) <= 1e-9


def test_dual_feasibility_of_returned_multiplier():
    rng = np.random.default_rng(4)
    for _ in range(5):
        phi = rng.standard_normal((2, 3))
        b = rng.standard_normal(2)
        pair = solve(make(l1_doc(phi, b)))
        assert pair.residuals["dual_feas"] <= 1e-8


def test_multistart_agreement_on_certified_instance():
    from calmcert.certificates import certify_solution_map
    inst = make(l1_doc([[1.0, 0.2], [0.1, 1.0]], [2.0, -1.5]))
    pair = solve(inst)
    report = certify_solution_map(inst, pair)
    assert report.conclusion_solution_map.status == "isolated_calm"
    rng = np.random.default_rng(8)
    sols = [solve(inst, x0=3.0 * rng.standard_normal(2)).x_bar
            for _ in range(10)]
    spread = max(np.linalg.norm(s - pair.x_bar) for s in sols)
    assert spread <= 1e-6


def test_objective_close_to_high_accuracy_reference():
    inst = instance_for("tv_grad1d")
    rough = solve(inst, SolverConfig(tol_kkt=1e-8))
    tight = solve(inst, SolverConfig(tol_kkt=1e-13))
    obj_rough = objective(inst, rough.x_bar)
    obj_tight = objective(inst, tight.x_bar)
    assert obj_rough <= obj_tight + 1e-9 * (1.0 + abs(obj_tight))


def test_nonconvergence_carries_best_iterate():
    inst = instance_for("tv_grad1d")
    with pytest.raises(SolverError) as err:
        solve(inst, SolverConfig(max_iter=3, tol_kkt=1e-12, check_every=1))
    assert err.value.pair is not None
    assert err.value.pair.x_bar.shape == (3,)
    assert err.value.pair.residuals["stationarity"] >= 0.0


def test_nuclear_instance_solved_by_svt_path():
    inst = instance_for("nuclear_nondegenerate")
    pair = solve(inst)
    assert np.allclose(pair.x_bar.reshape(2, 2), np.diag([1.0, 0.0]), atol=1e-8)
    assert np.allclose(pair.y_bar.reshape(2, 2), np.diag([1.0, 0.5]), atol=1e-8)


def test_v_bar_recomputable():
    inst = instance_for("lasso_scalar")
    pair = solve(inst)
    assert np.allclose(pair.v_bar, inst.v_of(pair.x_bar), atol=1e-14)
