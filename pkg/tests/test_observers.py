import numpy as np
import pytest

from lieobs import (SE3, SO3, GroupElement, ObserverKind, TangentVector, UsageError, custom_observer,
                    error_flow_field, frobenius_metric, gradient_like_observer, gradient_observer, innovation_of,
                    make_observer, se3_pose_cost, so3_frobenius_cost, synchronous_observer)
from lieobs import groups
from lieobs.errors import ErrorConvention
from lieobs.lie_core import Frame
from lieobs.observers import predicted_error_rate

from helpers import matched_pairs, skewed_cost

KINDS = ["gradient", "gradient_like"]


@pytest.mark.parametrize("hand", ["left", "right"])
@pytest.mark.parametrize("kind", KINDS)
def test_innovation_vanishes_on_true_state(group, hand, kind, rng):
    cost, metric = matched_pairs()[hand][0 if group is SO3 else 1]
    obs = make_observer(f"{kind}_{hand}", group, hand, cost, metric)
    X = GroupElement(group, groups.random_matrix(group, rng))
    w = rng.standard_normal(group.dim_algebra)
    a = innovation_of(obs, X, X, w)
    assert np.abs(a.coords).max() <= 1e-12
    f = obs.field(X, X, w)
    expect = X.matrix @ group.hat(w) if hand == "left" else group.hat(w) @ X.matrix
    assert np.allclose(f.ambient, expect, atol=1e-12)


def test_error_side_follows_handedness():
    assert synchronous_observer(SO3, "left").error_side is ErrorConvention.RIGHT
    assert synchronous_observer(SO3, "right").error_side is ErrorConvention.LEFT


def test_gradient_like_error_rate_is_autonomous(group, rng):
    """With Y = X, w = u the right error moves by -grad_1 f(E_r, e) whatever X is."""
    cost, metric = skewed_cost(group), frobenius_metric(group, "right")
    obs = gradient_like_observer("left", cost, metric)
    E = GroupElement(group, groups.random_matrix(group, rng, 1.5))
    expect = error_flow_field(ErrorConvention.RIGHT, cost, metric, E).ambient
    for _ in range(5):
        X = groups.random_matrix(group, rng)
        Xh = E.matrix @ X
        u = rng.standard_normal(group.dim_algebra)
        dXh = Xh @ group.hat(obs.body(Xh, X, u, 0.0))
        dX = X @ group.hat(u)
        dE = dXh @ group.inverse(X) - Xh @ group.inverse(X) @ dX @ group.inverse(X)
        assert np.allclose(dE, expect, atol=1e-11)


def test_predicted_rate_without_noise_is_error_flow(rng):
    cost, metric = matched_pairs()["left"][1]
    obs = gradient_observer("left", cost, metric)
    X, Xh = groups.random_matrix(SE3, rng), groups.random_matrix(SE3, rng)
    pred = predicted_error_rate(obs, Xh, X, X, np.zeros(6))
    E = GroupElement(SE3, Xh @ SE3.inverse(X))
    assert np.allclose(pred, error_flow_field(ErrorConvention.RIGHT, cost, metric, E).ambient, atol=1e-11)


def test_custom_observer_rejects_non_tangent_output():
    with pytest.raises(UsageError):
        custom_observer(SO3, "left", lambda Xh, Y, w, t: Xh.matrix + 0.1)
    ok = custom_observer(SO3, "left", lambda Xh, Y, w, t: TangentVector(Xh, w, Frame.BODY))
    assert ok.kind is ObserverKind.CUSTOM


def test_missing_metric_or_cost():
    with pytest.raises(UsageError):
        gradient_observer("left", so3_frobenius_cost(), None)
    with pytest.raises(UsageError):
        gradient_like_observer("left", None, frobenius_metric(SO3, "bi"))
    with pytest.raises(UsageError):
        make_observer("gradient_left", SO3, "left")
    with pytest.raises(UsageError):
        make_observer("custom", SO3, "left")


def test_group_mismatch():
    with pytest.raises(UsageError):
        gradient_observer("left", se3_pose_cost(), frobenius_metric(SO3, "bi"))
    with pytest.raises(UsageError):
        make_observer("gradient_left", SO3, "left", se3_pose_cost(), frobenius_metric(SE3, "right"))


def test_batched_body_matches_single(rng):
    cost, metric = matched_pairs()["right"][1]
    for obs in (gradient_observer("right", cost, metric), gradient_like_observer("right", cost, metric)):
        Xh = np.array([groups.random_matrix(SE3, rng) for _ in range(6)])
        Y = np.array([groups.random_matrix(SE3, rng) for _ in range(6)])
        w = rng.standard_normal((6, 6))
        batch = obs.body(Xh, Y, w, 0.0)
        for i in range(6):
            assert np.allclose(batch[i], obs.body(Xh[i], Y[i], w[i], 0.0), atol=1e-13)
