import numpy as np
import pytest

from calmcert import regularizers as rz
from calmcert.cones import PolyhedralCone, PsdCone, SubspaceCone, SubspacePlusRays
from calmcert.linalg import Tolerances
from calmcert.model import group_lasso, l1, nuclear, polyhedral_indicator

TOL = Tolerances()

GL = group_lasso([[0, 1], [2]], 3)
NUC = nuclear(2, 2)
BOX = polyhedral_indicator(np.vstack([np.eye(2), -np.eye(2)]),
                           np.ones(4))


def catalog():
    return [GL, l1(3), NUC, BOX]


def rand_point(reg, rng):
    return rng.standard_normal(reg.dim)


# ---------------------------------------------------------------------------
# values / prox


def test_value_group_lasso():
    # ||(3,4)|| = 5 by Pythagoras, plus |-2|
    assert rz.value(GL, np.array([3.0, 4.0, -2.0])) == pytest.approx(7.0)


def test_value_nuclear_identity():
    assert rz.value(NUC, np.eye(2).ravel()) == pytest.approx(2.0)


def test_value_polyhedral_infeasible():
    assert rz.value(BOX, np.array([2.0, 0.0])) == np.inf
    assert rz.value(BOX, np.array([0.5, -0.5])) == 0.0


def test_prox_soft_threshold():
    assert rz.prox(l1(1), 1.0, np.array([3.0]))[0] == pytest.approx(2.0)
    assert rz.prox(l1(1), 1.0, np.array([-0.5]))[0] == pytest.approx(0.0)


def test_prox_group_shrinkage():
    y = np.array([3.0, 4.0, 0.5])
    out = rz.prox(GL, 1.0, y)
    # group norm 5 shrinks by factor (1 - 1/5); singleton 0.5 collapses
    assert np.allclose(out[:2], 0.8 * y[:2])
    assert out[2] == 0.0


def test_prox_polyhedral_fixed_point():
    y = np.array([0.3, -0.7])
    assert np.allclose(rz.prox(BOX, 1.0, y), y)
    assert np.allclose(rz.prox(BOX, 1.0, np.array([2.0, 0.0])), [1.0, 0.0])


def test_prox_nuclear_svt():
    y = np.diag([3.0, 0.5]).ravel()
    out = rz.prox(NUC, 1.0, y).reshape(2, 2)
    assert np.allclose(out, np.diag([2.0, 0.0]), atol=1e-12)


def test_moreau_identity_direct_conjugates():
    rng = np.random.default_rng(0)
    for reg in (GL, l1(4), NUC):
        for _ in range(25):
            y = 3.0 * rand_point(reg, rng)
            lhs = rz.prox(reg, 1.0, y) + rz.prox_conjugate(reg, 1.0, y)
            assert np.linalg.norm(lhs - y) <= 1e-8


def test_firm_nonexpansiveness():
    rng = np.random.default_rng(1)
    for reg in catalog():
        for _ in range(20):
            y1, y2 = 2.0 * rand_point(reg, rng), 2.0 * rand_point(reg, rng)
            d = np.linalg.norm(rz.prox(reg, 1.0, y1) - rz.prox(reg, 1.0, y2))
            assert d <= np.linalg.norm(y1 - y2) + 1e-12


# ---------------------------------------------------------------------------
# subdifferential membership


def test_subdiff_l1_at_origin():
    assert rz.subdiff_contains(l1(1), np.zeros(1), np.array([0.5]), TOL)
    assert not rz.subdiff_contains(l1(1), np.zeros(1), np.array([1.5]), TOL)


def test_subdiff_active_group():
    x = np.array([0.6, 0.8])
    reg = group_lasso([[0, 1]], 2)
    assert rz.subdiff_contains(reg, x, np.array([0.6, 0.8]), TOL)
    assert not rz.subdiff_contains(reg, x, np.array([1.0, 0.0]), TOL)


def test_subdiff_polyhedral_normal_cone():
    x = np.array([1.0, 0.0])
    assert rz.subdiff_contains(BOX, x, np.array([2.0, 0.0]), TOL)
    assert not rz.subdiff_contains(BOX, x, np.array([0.0, 1.0]), TOL)
    # infeasible base point
    assert not rz.subdiff_contains(BOX, np.array([2.0, 0.0]), np.zeros(2), TOL)


def test_subdiff_nuclear_prox_route():
    x = np.diag([1.0, 0.0]).ravel()
    assert rz.subdiff_contains(NUC, x, np.diag([1.0, 0.5]).ravel(), TOL)
    assert not rz.subdiff_contains(NUC, x, np.diag([0.2, 0.5]).ravel(), TOL)


# ---------------------------------------------------------------------------
# conjugate faces and their tangents


def test_face_group_lasso_classification():
    face = rz.conj_subdiff_face(GL, np.array([0.6, 0.8, 0.5]), TOL)
    assert face.boundary == [0] and face.interior == [1]
    assert face.contains(np.array([0.6, 0.8, 0.0]), 1e-9)
    assert face.contains(np.zeros(3), 1e-9)
    assert not face.contains(np.array([0.0, 0.0, 0.5]), 1e-7)
    assert not face.contains(np.array([-0.6, -0.8, 0.0]), 1e-7)


def test_face_rejects_dual_bound_violation():
    with pytest.raises(ValueError, match="dual bound"):
        rz.conj_subdiff_face(GL, np.array([1.2, 0.9, 0.0]), TOL)


def test_face_nuclear_p1():
    face = rz.conj_subdiff_face(NUC, np.diag([1.0, 0.5]).ravel(), TOL)
    assert face.p == 1
    assert face.contains(np.diag([2.5, 0.0]).ravel(), 1e-9)
    assert not face.contains(np.diag([0.0, 1.0]).ravel(), 1e-7)
    assert not face.contains(np.diag([-1.0, 0.0]).ravel(), 1e-7)


def test_face_nuclear_degenerate_psd_block():
    face = rz.conj_subdiff_face(NUC, np.eye(2).ravel(), TOL)
    assert face.p == 2
    psd = np.array([[2.0, 1.0], [1.0, 1.0]])
    assert face.contains(psd.ravel(), 1e-9)
    assert not face.contains(np.array([[0.0, 0.0], [0.0, -1.0]]).ravel(), 1e-7)
    assert not face.contains(np.array([[0.0, 1.0], [0.0, 0.0]]).ravel(), 1e-7)


def test_tangent_conj_group_lasso_moving_point():
    cone = rz.tangent_conj_subdiff(GL, np.array([0.6, 0.8, 0.5]),
                                   np.array([0.6, 0.8, 0.0]), TOL)
    assert cone.member(np.array([0.6, 0.8, 0.0]), 1e-8)
    assert cone.member(np.array([-0.6, -0.8, 0.0]), 1e-8)      # span, not ray
    assert not cone.member(np.array([-0.8, 0.6, 0.0]), 1e-7)   # orthogonal
    assert not cone.member(np.array([0.0, 0.0, 1.0]), 1e-7)    # interior block


def test_tangent_conj_group_lasso_vertex():
    cone = rz.tangent_conj_subdiff(GL, np.array([0.6, 0.8, 0.5]),
                                   np.zeros(3), TOL)
    assert cone.member(np.array([0.6, 0.8, 0.0]), 1e-8)
    assert not cone.member(np.array([-0.6, -0.8, 0.0]), 1e-7)  # one-sided ray


def test_tangent_conj_rejects_nonmember():
    with pytest.raises(ValueError, match="distance"):
        rz.tangent_conj_subdiff(GL, np.array([0.6, 0.8, 0.5]),
                                np.array([0.0, 0.0, 1.0]), TOL)


def test_tangent_conj_nuclear_nondegenerate_is_subspace():
    cone = rz.tangent_conj_subdiff(NUC, np.diag([1.0, 0.5]).ravel(),
                                   np.diag([1.0, 0.0]).ravel(), TOL)
    assert isinstance(cone, SubspaceCone)
    assert cone.subspace.dim == 1
    assert cone.member(np.diag([-3.0, 0.0]).ravel(), 1e-8)
    assert not cone.member(np.diag([0.0, 1.0]).ravel(), 1e-7)


def test_tangent_conj_nuclear_degenerate_psd_cone():
    cone = rz.tangent_conj_subdiff(NUC, np.eye(2).ravel(),
                                   np.diag([1.0, 0.0]).ravel(), TOL)
    assert isinstance(cone, PsdCone)
    # kernel direction e2: sign of the (2,2) block decides membership
    assert cone.member(np.array([[0.0, 0.0], [0.0, 2.0]]).ravel(), 1e-8)
    assert cone.member(np.array([[-5.0, 0.0], [0.0, 1.0]]).ravel(), 1e-8)
    assert not cone.member(np.array([[0.0, 0.0], [0.0, -1.0]]).ravel(), 1e-7)
    assert not cone.member(np.array([[0.0, 1.0], [0.0, 0.0]]).ravel(), 1e-7)


def test_tangent_subdiff_group_lasso_cases():
    x = np.array([0.6, 0.8, 0.0])
    cone = rz.tangent_subdiff(GL, x, np.array([0.6, 0.8, 0.5]), TOL)
    assert cone.member(np.array([0.0, 0.0, 1.0]), 1e-8)
    assert cone.member(np.array([0.0, 0.0, -1.0]), 1e-8)
    assert not cone.member(np.array([1.0, 0.0, 0.0]), 1e-7)
    cone = rz.tangent_subdiff(GL, x, np.array([0.6, 0.8, 1.0]), TOL)
    assert cone.member(np.array([0.0, 0.0, -1.0]), 1e-8)       # half-space
    assert not cone.member(np.array([0.0, 0.0, 1.0]), 1e-7)


def test_tangent_subdiff_l1_active_is_zero():
    cone = rz.tangent_subdiff(l1(1), np.array([1.0]), np.array([1.0]), TOL)
    assert not cone.member(np.array([1.0]), 1e-7)
    assert not cone.member(np.array([-1.0]), 1e-7)
    assert cone.member(np.zeros(1), 1e-8)


def test_tangent_subdiff_polyhedral_is_cone_plus_line():
    cone = rz.tangent_subdiff(BOX, np.array([1.0, 0.0]),
                              np.array([2.0, 0.0]), TOL)
    assert isinstance(cone, SubspacePlusRays)
    assert cone.member(np.array([5.0, 0.0]), 1e-8)
    assert cone.member(np.array([-1.0, 0.0]), 1e-8)   # span of the multiplier
    assert not cone.member(np.array([0.0, 1.0]), 1e-7)


def test_tangent_subdiff_nuclear_interior_and_boundary():
    x = np.diag([1.0, 0.0]).ravel()
    interior = rz.tangent_subdiff(NUC, x, np.diag([1.0, 0.5]).ravel(), TOL)
    assert isinstance(interior, SubspaceCone)
    assert interior.member(np.array([[0.0, 0.0], [0.0, -3.0]]).ravel(), 1e-8)
    assert not interior.member(np.array([[1.0, 0.0], [0.0, 0.0]]).ravel(), 1e-7)
    boundary = rz.tangent_subdiff(NUC, x, np.eye(2).ravel(), TOL)
    assert isinstance(boundary, PolyhedralCone)
    assert boundary.member(np.array([[0.0, 0.0], [0.0, -1.0]]).ravel(), 1e-8)
    assert not boundary.member(np.array([[0.0, 0.0], [0.0, 1.0]]).ravel(), 1e-7)


def test_tangent_subdiff_nuclear_unsupported_returns_none():
    # two unit singular values in the residual block: no exact description
    reg = nuclear(3, 3)
    x = np.diag([1.0, 0.0, 0.0]).ravel()
    y = np.eye(3).ravel()
    assert rz.tangent_subdiff(reg, x, y, TOL) is None


# ---------------------------------------------------------------------------
# conjugate consistency and tangent realizability


def test_conjugate_consistency_group_lasso():
    pairs = [(np.array([0.6, 0.8, 0.0]), np.array([0.6, 0.8, 0.5]), True),
             (np.zeros(3), np.array([0.6, 0.8, 0.5]), True),
             (np.array([0.6, 0.8, 0.0]), np.array([1.0, 0.0, 0.5]), False),
             (np.array([0.0, 0.0, 1.0]), np.array([0.6, 0.8, 0.5]), False)]
    for x, v, expected in pairs:
        face = rz.conj_subdiff_face(GL, v, TOL)
        assert rz.subdiff_contains(GL, x, v, TOL) == expected
        assert face.contains(x, 1e-7) == expected


def test_conjugate_consistency_nuclear_diagonal():
    x = np.diag([1.0, 0.0]).ravel()
    for v, expected in [(np.diag([1.0, 0.5]).ravel(), True),
                        (np.diag([0.5, 0.5]).ravel(), False)]:
        face = rz.conj_subdiff_face(NUC, v, TOL)
        assert rz.subdiff_contains(NUC, x, v, TOL) == expected
        assert face.contains(x, 1e-7) == expected


def _tangent_generators(cone, rng, n):
    if isinstance(cone, SubspaceCone):
        return list(cone.subspace.basis.T)
    if isinstance(cone, SubspacePlusRays):
        gens = list(cone.span.basis.T) + list(cone.rays)
        return gens
    if isinstance(cone, PsdCone):
        dirs = []
        for _ in range(6):
            p = cone.project(rng.standard_normal(n))
            if np.linalg.norm(p) > 1e-9:
                dirs.append(p / np.linalg.norm(p))
        return dirs
    return []


@pytest.mark.parametrize("t", [1e-2, 1e-3, 1e-4])
def test_tangent_realizability(t):
    rng = np.random.default_rng(42)
    cases = [
        (GL, np.array([0.6, 0.8, 0.5]), np.array([1.2, 1.6, 0.0])),
        (GL, np.array([0.6, 0.8, 0.5]), np.zeros(3)),
        (NUC, np.diag([1.0, 0.5]).ravel(), np.diag([2.0, 0.0]).ravel()),
        (NUC, np.eye(2).ravel(), np.diag([1.0, 0.0]).ravel()),
    ]
    for reg, y, x in cases:
        face = rz.conj_subdiff_face(reg, y, TOL)
        cone = face.tangent_at(x, TOL)
        for d in _tangent_generators(cone, rng, reg.dim):
            step = x + t * np.asarray(d)
            dist = np.linalg.norm(step - face.project(step))
            assert dist <= 0.01 * t


@pytest.mark.parametrize("t", [1e-2, 1e-3, 1e-4])
def test_tangent_realizability_polyhedral(t):
    rng = np.random.default_rng(43)
    face = rz.conj_subdiff_face(BOX, np.array([1.0, 0.0]), TOL)
    for x in (np.array([1.0, 0.0]), np.array([1.0, 1.0])):
        cone = face.tangent_at(x, TOL)
        for _ in range(8):
            d = rng.standard_normal(2)
            from calmcert.empirics import _cone_project
            p = _cone_project(cone, d)
            if p is None or np.linalg.norm(p) < 1e-9:
                continue
            d = p / np.linalg.norm(p)
            step = x + t * d
            dist = np.linalg.norm(step - face.project(step))
            assert dist <= 0.01 * t


def test_group_lasso_conjugate_growth_inequality():
    # active-group geometry: <x_J, v_J - y_J> <= -kappa ||v_J - y_J||^2
    rng = np.random.default_rng(9)
    x = np.array([0.9, 1.2, 0.0])       # ||x_J|| = 1.5 on the active group
    y = np.array([0.6, 0.8, 0.3])
    kappa = 0.5 * 1.5
    for _ in range(200):
        v = rng.standard_normal(2)
        if np.linalg.norm(v) > 1.0:
            v = v / np.linalg.norm(v) * rng.uniform(0.0, 1.0)
        lhs = float(x[:2] @ (v - y[:2]))
        assert lhs <= -kappa * np.linalg.norm(v - y[:2]) ** 2 + 1e-12


# ---------------------------------------------------------------------------
# relative interior vs range


def test_ri_identity_always_yes():
    from calmcert.model import LinearOp
    assert rz.ri_intersects_range(GL, np.array([0.6, 0.8, 0.5]),
                                  LinearOp.identity(3), TOL) == "yes"


def test_ri_nuclear_nondegenerate_yes():
    from calmcert.model import LinearOp
    out = rz.ri_intersects_range(NUC, np.diag([1.0, 0.5]).ravel(),
                                 LinearOp.identity(4), TOL,
                                 x_bar=np.diag([1.0, 0.0]).ravel())
    assert out == "yes"


def test_ri_group_lasso_orthogonal_range_no():
    reg = group_lasso([[0, 1]], 2)
    k = np.array([[0.0], [1.0]])        # Im K orthogonal to the boundary ray
    assert rz.ri_intersects_range(reg, np.array([1.0, 0.0]), k, TOL) == "no"


def test_ri_group_lasso_aligned_range_yes():
    reg = group_lasso([[0, 1]], 2)
    k = np.array([[1.0], [0.0]])
    assert rz.ri_intersects_range(reg, np.array([1.0, 0.0]), k, TOL) == "yes"


def test_ri_polyhedral_paths():
    k = np.array([[1.0], [0.0]])
    # face of BOX exposed by (1, 0) is {1} x [-1, 1]; the x-axis hits its
    # relative interior at (1, 0)
    out = rz.ri_intersects_range(BOX, np.array([1.0, 0.0]), k, TOL)
    assert out == "yes"
    k2 = np.array([[0.0], [1.0]])       # Im K = y-axis misses {1} x [-1,1]
    out2 = rz.ri_intersects_range(BOX, np.array([1.0, 0.0]), k2, TOL)
    assert out2 == "no"


def test_ri_polyhedral_endpoint_is_not_relative_interior():
    # face is the segment [0,1] x {0}; the y-axis meets it only at the
    # endpoint (0,0), which lies on the relative boundary
    reg = polyhedral_indicator(np.array([[-1.0, 0.0], [1.0, 0.0],
                                         [0.0, 1.0], [0.0, -1.0]]),
                               np.array([0.0, 1.0, 0.0, 0.0]))
    k = np.array([[0.0], [1.0]])
    assert rz.ri_intersects_range(reg, np.array([0.0, 1.0]), k, TOL) == "no"
    k2 = np.array([[1.0], [0.0]])       # the x-axis passes through (1/2, 0)
    assert rz.ri_intersects_range(reg, np.array([0.0, 1.0]), k2, TOL) == "yes"


def test_qgc_flags_catalog():
    assert rz.qgc_flags(GL) == rz.QgcFlags(True, True, True)
    assert rz.qgc_flags(NUC) == rz.QgcFlags(True, True, False)
    assert rz.qgc_flags(BOX) == rz.QgcFlags(True, True, True)


# ---------------------------------------------------------------------------
# polyhedral faces


def test_polyhedral_face_and_tangent():
    face = rz.conj_subdiff_face(BOX, np.array([1.0, 0.0]), TOL)
    assert face.contains(np.array([1.0, 0.5]), 1e-9)
    assert not face.contains(np.array([0.5, 0.5]), 1e-7)
    cone = face.tangent_at(np.array([1.0, 0.0]), TOL)
    assert cone.member(np.array([0.0, 1.0]), 1e-8)
    assert cone.member(np.array([0.0, -1.0]), 1e-8)
    assert not cone.member(np.array([1.0, 0.0]), 1e-7)
    cone_corner = face.tangent_at(np.array([1.0, 1.0]), TOL)
    assert cone_corner.member(np.array([0.0, -1.0]), 1e-8)
    assert not cone_corner.member(np.array([0.0, 1.0]), 1e-7)


def test_polyhedral_unbounded_face_error():
    reg = polyhedral_indicator(np.eye(2), np.ones(2))   # {y <= 1}, unbounded
    with pytest.raises(ValueError, match="unbounded face"):
        rz.conj_subdiff_face(reg, np.array([-1.0, 0.0]), TOL)


def test_simultaneous_svd_repeated_values():
    u, v, dx, dy = rz.simultaneous_svd(np.diag([1.0, 0.0]), np.eye(2), TOL)
    assert np.allclose(dx, [1.0, 0.0])
    assert np.allclose(dy, [1.0, 1.0])
    assert np.allclose(u @ u.T, np.eye(2))
    with pytest.raises(ValueError):
        rz.simultaneous_svd(np.array([[1.0, 0.0], [0.0, 0.0]]),
                            np.array([[0.0, 1.0], [1.0, 0.0]]), TOL)
