import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lieobs import SE3, SO3, SingularityError, UsageError, group_by_name
from lieobs import groups
from lieobs.groups import expm_series, so3_left_jacobian, so3_left_jacobian_inv

coords3 = arrays(np.float64, 3, elements=st.floats(-3.0, 3.0))
coords6 = arrays(np.float64, 6, elements=st.floats(-3.0, 3.0))


def test_hat_vee_roundtrip(group, rng):
    for _ in range(50):
        v = rng.standard_normal(group.dim_algebra)
        assert np.allclose(group.vee(group.hat(v)), v, atol=0)


def test_so3_hat_is_cross_product(rng):
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    assert np.allclose(SO3.hat(a) @ b, np.cross(a, b), atol=1e-15)


def test_basis_is_hat_of_unit_vectors(group):
    for i, E in enumerate(group.basis()):
        assert np.array_equal(group.vee(E), np.eye(group.dim_algebra)[i])


@settings(max_examples=200, deadline=None)
@given(coords3)
def test_so3_exp_matches_series(w):
    assert np.abs(SO3.exp(w) - expm_series(SO3.hat(w))).max() <= 1e-10


@settings(max_examples=200, deadline=None)
@given(coords6)
def test_se3_exp_matches_series(v):
    assert np.abs(SE3.exp(v) - expm_series(SE3.hat(v))).max() <= 1e-10


@settings(max_examples=200, deadline=None)
@given(coords6)
def test_log_inverts_exp_below_pi(v):
    if np.linalg.norm(v[:3]) > 3.0:
        v = v.copy()
        v[:3] *= 3.0 / np.linalg.norm(v[:3])
    assert np.linalg.norm(SE3.log(SE3.exp(v)) - v) <= 1e-9
    assert np.linalg.norm(SO3.log(SO3.exp(v[:3])) - v[:3]) <= 1e-9


@pytest.mark.parametrize("scale", [0.0, 1e-12, 1e-8, 1e-6, 1e-4, 1e-2])
def test_small_angle_branches(scale, rng):
    w = scale * rng.standard_normal(3)
    assert np.abs(SO3.exp(w) - expm_series(SO3.hat(w))).max() <= 1e-15
    assert np.linalg.norm(SO3.log(SO3.exp(w)) - w) <= 1e-15
    J = so3_left_jacobian(w)
    assert np.abs(J @ so3_left_jacobian_inv(w) - np.eye(3)).max() <= 1e-13


def test_left_jacobian_inverse(rng):
    for _ in range(50):
        w = groups.random_coords(SO3, rng, 3.0)
        assert np.abs(so3_left_jacobian(w) @ so3_left_jacobian_inv(w) - np.eye(3)).max() <= 1e-10


def test_log_near_pi_raises():
    R = SO3.exp(np.array([0.0, 0.0, np.pi]))
    with pytest.raises(SingularityError):
        SO3.log(R)
    with pytest.raises(SingularityError):
        SE3.log(SE3.exp(np.array([np.pi, 0, 0, 1.0, 2.0, 3.0])))
    with pytest.raises(SingularityError):
        SO3.log(np.stack([np.eye(3), R]))


def test_log_just_inside_pi_is_accurate():
    w = np.array([0.0, 1.0, 0.0]) * (np.pi - 1e-3)
    assert np.linalg.norm(SO3.log(SO3.exp(w)) - w) <= 1e-9


def test_batch_matches_single(group, rng):
    V = np.array([groups.random_coords(group, rng, 3.0) for _ in range(40)])
    M = group.exp(V)
    for v, Mv in zip(V, M):
        single = group.exp(v)
        assert np.abs(Mv - single).max() <= 1e-15
        assert np.abs(group.log(Mv) - group.log(single)).max() <= 1e-14
    assert np.abs(group.Ad(M)[7] - group.Ad(M[7])).max() == 0.0
    assert np.abs(group.inverse(M)[3] - group.inverse(M[3])).max() == 0.0
    assert np.abs(group.ad(V)[5] - group.ad(V[5])).max() == 0.0
    assert np.allclose(group.residual(M), [group.residual(m) for m in M], atol=0)


def test_adjoint_conjugates(group, rng):
    X = groups.random_matrix(group, rng)
    v = rng.standard_normal(group.dim_algebra)
    lhs = group.hat(group.Ad(X) @ v)
    rhs = X @ group.hat(v) @ group.inverse(X)
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_ad_is_bracket(group, rng):
    a, b = rng.standard_normal(group.dim_algebra), rng.standard_normal(group.dim_algebra)
    A, B = group.hat(a), group.hat(b)
    assert np.abs(group.hat(group.ad(a) @ b) - (A @ B - B @ A)).max() <= 1e-13


def test_dexpinv_matches_generic(rng):
    for _ in range(20):
        s, x = 0.1 * rng.standard_normal(3), rng.standard_normal(3)
        fast = SO3.dexpinv(s, x)
        generic = groups.GroupDescriptor.dexpinv(SO3, s, x)
        assert np.abs(fast - generic).max() <= 1e-15


def test_project_restores_membership(group, rng):
    M = groups.random_matrix(group, rng) + 1e-6 * rng.standard_normal((group.matrix_size,) * 2)
    assert group.residual(M) > 1e-8
    assert group.residual(group.project(M)) <= 1e-14


def test_shape_errors(group):
    with pytest.raises(UsageError):
        group.check_coords(np.zeros(group.dim_algebra + 1))
    with pytest.raises(UsageError):
        group.check_matrix(np.eye(group.matrix_size + 1))


def test_group_by_name():
    assert group_by_name("SO3") is SO3
    assert group_by_name("SE3") is SE3
    with pytest.raises(UsageError):
        group_by_name("SL2")


def test_distance_is_zero_on_diagonal(group, rng):
    X = groups.random_matrix(group, rng)
    assert groups.distance(group, X, X) <= 1e-15
    Y = group.exp(0.3 * np.eye(group.dim_algebra)[0]) @ X
    assert groups.distance(group, Y, X) == pytest.approx(0.3, abs=1e-12)
