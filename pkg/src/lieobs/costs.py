"""Cost functions on G x G and their first-argument gradients.

A cost carries an optional analytic *differential*: the covector
``d`` with ``d @ xi = d/ds f(Xhat exp(s xi), Y)`` at s = 0, i.e. in Body
coordinates.  Gradients for any metric are obtained from it by a frame
change and a solve with the gram, so one differential serves every metric.
Costs without one fall back to :func:`fd_grad1`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import UsageError
from .groups import SE3, SO3, GroupDescriptor, mv, skew_project, tr, vee_skew
from .lie_core import Frame, GroupElement, Invariance, Metric, TangentVector

DEFAULT_FD_EPS = 1e-5

RawCost = Callable[[np.ndarray, np.ndarray], float]
RawDifferential = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _raw(X):
    return X.matrix if isinstance(X, GroupElement) else np.asarray(X, dtype=float)


@dataclass(frozen=True, eq=False)
class CostFunction:
    """f(Xhat, Y) >= 0 with the diagonal as global minima.

    ``fn`` and ``differential`` take raw matrices.  ``invariance`` is a
    declaration, checked by the test-suite rather than at construction.
    """

    group: GroupDescriptor
    fn: RawCost
    invariance: Invariance = Invariance.NONE
    differential: Optional[RawDifferential] = None
    morse_bott_claimed: bool = False
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, Xhat, Y) -> float:
        return float(self.fn(_raw(Xhat), _raw(Y)))

    def evaluate(self, Xhat: GroupElement, Y: GroupElement) -> float:
        return self(Xhat, Y)

    def analytic_grad1(self, Xhat: GroupElement, Y: GroupElement, metric: Metric) -> Optional[TangentVector]:
        if self.differential is None:
            return None
        d = self.differential(Xhat.matrix, Y.matrix)
        return TangentVector(Xhat, _covector_to_grad(self.group, metric, Xhat.matrix, d), metric.frame)


def _covector_to_grad(g: GroupDescriptor, metric: Metric, X: np.ndarray, d_body: np.ndarray) -> np.ndarray:
    """Gradient coordinates, in the metric's frame, from a Body covector."""
    # gram_inv is symmetric, so d @ gram_inv also works on stacked covectors
    if metric.frame is Frame.BODY:
        return d_body @ metric.gram_inv
    d_spatial = mv(tr(g.Ad(g.inverse(X))), d_body)
    return d_spatial @ metric.gram_inv


def grad1_body(cost: CostFunction, metric: Metric, Xhat: np.ndarray, Y: np.ndarray,
               eps: float = DEFAULT_FD_EPS) -> np.ndarray:
    """Body coordinates of grad_1 f(Xhat, Y) on raw matrices (integrator fast path).

    ``Xhat`` may be a stack; ``Y`` a matching stack or a single matrix.
    """
    g = cost.group
    if cost.differential is None and Xhat.ndim > 2:
        Ys = np.broadcast_to(Y, Xhat.shape)
        return np.array([grad1_body(cost, metric, a, b, eps) for a, b in zip(Xhat, Ys)])
    if cost.differential is not None:
        d = cost.differential(Xhat, Y)
    else:
        d = _fd_covector(cost, metric.frame, Xhat, Y, eps)
        if metric.frame is Frame.SPATIAL:
            return g.Ad(g.inverse(Xhat)) @ (metric.gram_inv @ d)
        return metric.gram_inv @ d
    c = _covector_to_grad(g, metric, Xhat, d)
    if metric.frame is Frame.SPATIAL:
        return mv(g.Ad(g.inverse(Xhat)), c)
    return c


def grad1(cost: CostFunction, metric: Metric, Xhat: GroupElement, Y: GroupElement) -> TangentVector:
    """grad_1 f(Xhat, Y): analytic when available, otherwise finite differences."""
    t = cost.analytic_grad1(Xhat, Y, metric)
    return t if t is not None else fd_grad1(cost, metric, Xhat, Y)


def _fd_covector(cost: CostFunction, frame: Frame, X: np.ndarray, Y: np.ndarray, eps: float) -> np.ndarray:
    g = cost.group
    d = np.empty(g.dim_algebra)
    for i, e in enumerate(np.eye(g.dim_algebra)):
        Ep, Em = g.exp(eps * e), g.exp(-eps * e)
        if frame is Frame.BODY:
            fp, fm = cost.fn(X @ Ep, Y), cost.fn(X @ Em, Y)
        else:
            fp, fm = cost.fn(Ep @ X, Y), cost.fn(Em @ X, Y)
        d[i] = (fp - fm) / (2.0 * eps)
    return d


def fd_grad1(f: CostFunction, m: Metric, Xhat: GroupElement, Y: GroupElement,
             eps: float = DEFAULT_FD_EPS) -> TangentVector:
    """Central-difference gradient in the metric's natural chart.

    Body chart Xhat exp(eps e_i) for left/bi-invariant metrics, spatial
    chart exp(eps e_i) Xhat for right-invariant ones.
    """
    if not 1e-8 <= eps <= 1e-4:
        raise UsageError(f"eps must lie in [1e-8, 1e-4], got {eps:g}")
    d = _fd_covector(f, m.frame, Xhat.matrix, Y.matrix, eps)
    return TangentVector(Xhat, m.gram_inv @ d, m.frame)


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------

def lift_right_invariant(g_fn: Callable[[np.ndarray], float], group: GroupDescriptor,
                         g_differential: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                         morse_bott_claimed: bool = False, name: str = "lifted-right") -> CostFunction:
    """f(X, Y) = g(X Y^-1).  Right invariant by construction, and f(Y, e) = g(Y)."""
    inv = group.inverse

    def fn(X, Y):
        return g_fn(X @ inv(Y))

    diff = None
    if g_differential is not None:
        def diff(X, Y):
            # X exp(s xi) Y^-1 = (X Y^-1) exp(s Ad_Y xi)
            return mv(tr(group.Ad(Y)), g_differential(X @ inv(Y)))

    return CostFunction(group, fn, Invariance.RIGHT, diff, morse_bott_claimed, name)


def lift_left_invariant(g_fn: Callable[[np.ndarray], float], group: GroupDescriptor,
                        g_differential: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                        morse_bott_claimed: bool = False, name: str = "lifted-left") -> CostFunction:
    """f(X, Y) = g(Y^-1 X), the left-invariant counterpart of :func:`lift_right_invariant`."""
    inv = group.inverse

    def fn(X, Y):
        return g_fn(inv(Y) @ X)

    diff = None
    if g_differential is not None:
        def diff(X, Y):
            return g_differential(inv(Y) @ X)

    return CostFunction(group, fn, Invariance.LEFT, diff, morse_bott_claimed, name)


_MIRRORED = {Invariance.LEFT: Invariance.RIGHT, Invariance.RIGHT: Invariance.LEFT,
             Invariance.BI: Invariance.BI, Invariance.NONE: Invariance.NONE}


def mirror_invariance(f: CostFunction) -> CostFunction:
    """f~(X, Y) = f(X^-1, Y^-1), swapping left and right invariance."""
    g = f.group
    inv = g.inverse

    def fn(X, Y):
        return f.fn(inv(X), inv(Y))

    diff = None
    if f.differential is not None:
        def diff(X, Y):
            # X exp(s xi) inverts to exp(-s xi) X^-1 = X^-1 exp(-s Ad_X xi)
            return -mv(tr(g.Ad(X)), f.differential(inv(X), inv(Y)))

    return CostFunction(g, fn, _MIRRORED[f.invariance], diff, f.morse_bott_claimed,
                        f"mirror({f.name})", dict(f.params))


# --------------------------------------------------------------------------
# shipped costs
# --------------------------------------------------------------------------

def so3_frobenius_cost(k: float = 1.0) -> CostFunction:
    """k/2 ||Rhat - Y||_F^2 on SO(3); bi-invariant.

    With the Frobenius metric its gradient is -k Rhat P(Rhat^T Y).
    """
    if not k > 0:
        raise UsageError(f"gain k must be positive, got {k}")

    def fn(R, Y):
        D = R - Y
        return 0.5 * k * np.sum(D * D, axis=(-2, -1))

    def diff(R, Y):
        return 2.0 * k * vee_skew(tr(Y) @ R)

    return CostFunction(SO3, fn, Invariance.BI, diff, True, "so3_frobenius", {"k": float(k)})


def so3_frobenius_grad_ambient(k: float, Rhat: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """-k Rhat P(Rhat^T Y), the closed-form gradient under the Frobenius metric."""
    return -k * Rhat @ skew_project(Rhat.T @ Y)


def se3_pose_g(M: np.ndarray) -> float:
    """1/2 (||R - I||^2 + ||p||^2)."""
    D = M[..., :3, :3] - np.eye(3)
    p = M[..., :3, 3]
    return 0.5 * (np.sum(D * D, axis=(-2, -1)) + np.sum(p * p, axis=-1))


def se3_pose_g_differential(M: np.ndarray) -> np.ndarray:
    R, p = M[..., :3, :3], M[..., :3, 3]
    return np.concatenate([2.0 * vee_skew(R), mv(tr(R), p)], axis=-1)


def se3_pose_cost() -> CostFunction:
    """Right-invariant pose cost 1/2 (||Rhat - Y||^2 + ||phat - Rhat Y^T y||^2)."""

    def fn(Xh, Y):
        Rh, ph = Xh[..., :3, :3], Xh[..., :3, 3]
        RY, y = Y[..., :3, :3], Y[..., :3, 3]
        D = Rh - RY
        q = ph - mv(Rh @ tr(RY), y)
        return 0.5 * (np.sum(D * D, axis=(-2, -1)) + np.sum(q * q, axis=-1))

    def diff(Xh, Y):
        w, v = se3_pose_gradient_spatial(Xh, Y)
        # gram diag(2,2,2,1,1,1) applied, then pulled back to the body frame
        return mv(tr(SE3.Ad(Xh)), np.concatenate([2.0 * w, v], axis=-1))

    return CostFunction(SE3, fn, Invariance.RIGHT, diff, True, "se3_pose")


def se3_pose_gradient_spatial(Xh: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(vee P(Rhat Y^T), phat - Rhat Y^T y): right-translated gradient coordinates.

    Valid for the right-invariant metric tr(W1^T W2) + V1^T V2.
    """
    Rh, ph = Xh[..., :3, :3], Xh[..., :3, 3]
    RY, y = Y[..., :3, :3], Y[..., :3, 3]
    A = Rh @ tr(RY)
    return vee_skew(A), ph - mv(A, y)


def se3_pose_gradient_body(Xh: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Left-translated gradient: (P(Y^T Rhat), Rhat^T phat - Y^T y + Rhat^T P(Rhat Y^T) phat)."""
    Rh, ph = Xh[:3, :3], Xh[:3, 3]
    RY, y = Y[:3, :3], Y[:3, 3]
    PA = skew_project(Rh @ RY.T)
    return (vee_skew(RY.T @ Rh),
            Rh.T @ ph - RY.T @ y + Rh.T @ PA @ ph)


def se3_natural_cost() -> CostFunction:
    """1/2 (||R - Y||^2 + ||p - y||^2).  Left invariant, not right invariant."""

    def fn(Xh, Y):
        D = Xh[..., :3, :] - Y[..., :3, :]
        return 0.5 * np.sum(D * D, axis=(-2, -1))

    def diff(Xh, Y):
        Rh = Xh[..., :3, :3]
        return np.concatenate([2.0 * vee_skew(tr(Y[..., :3, :3]) @ Rh),
                               mv(tr(Rh), Xh[..., :3, 3] - Y[..., :3, 3])], axis=-1)

    return CostFunction(SE3, fn, Invariance.LEFT, diff, True, "se3_natural")


def weighted_frobenius_cost(group: GroupDescriptor, left_weight=None, right_weight=None,
                            invariance: Invariance = Invariance.NONE,
                            morse_bott_claimed: bool = False) -> CostFunction:
    """1/2 ||A (X - Y)||_F^2 + 1/2 ||(X - Y) B||_F^2 for constant matrices A, B.

    With generic diagonal weights this is neither left nor right invariant.
    """
    n = group.matrix_size
    A = np.zeros((n, n)) if left_weight is None else np.asarray(left_weight, dtype=float)
    B = np.zeros((n, n)) if right_weight is None else np.asarray(right_weight, dtype=float)
    if A.shape != (n, n) or B.shape != (n, n):
        raise UsageError(f"weights must be {n}x{n}")
    AtA, BBt = A.T @ A, B @ B.T
    basis = np.array(group.basis())

    def fn(X, Y):
        D = X - Y
        LA, RB = A @ D, D @ B
        return 0.5 * (np.sum(LA * LA, axis=(-2, -1)) + np.sum(RB * RB, axis=(-2, -1)))

    def diff(X, Y):
        D = X - Y
        M = tr(X) @ (AtA @ D + D @ BBt)
        return np.einsum("kij,...ij->...k", basis, M)

    return CostFunction(group, fn, invariance, diff, morse_bott_claimed, "weighted_frobenius",
                        {"left_weight": A.tolist(), "right_weight": B.tolist()})


def log_distance_cost(group: GroupDescriptor) -> CostFunction:
    """1/2 ||log(X Y^-1)||^2; right invariant, no analytic differential."""

    def fn(X, Y):
        v = group.log(X @ group.inverse(Y))
        return 0.5 * np.sum(v * v, axis=-1)

    return CostFunction(group, fn, Invariance.RIGHT, None, False, "log_distance")


COST_NAMES = ("so3_frobenius", "se3_pose", "se3_natural", "weighted_frobenius")


def _weight(w, n):
    if w is None:
        return None
    w = np.asarray(w, dtype=float)
    return np.diag(w) if w.ndim == 1 else w


def cost_by_name(name: str, group: Optional[GroupDescriptor] = None, **params) -> CostFunction:
    """Shipped costs by scenario name.

    ``so3_frobenius`` (k), ``se3_pose``, ``se3_natural`` and
    ``weighted_frobenius`` (left_weight / right_weight as matrices or
    diagonals; needs ``group``).
    """
    if name == "so3_frobenius":
        f = so3_frobenius_cost(float(params.get("k", 1.0)))
    elif name == "se3_pose":
        f = se3_pose_cost()
    elif name == "se3_natural":
        f = se3_natural_cost()
    elif name == "weighted_frobenius":
        if group is None:
            raise UsageError("weighted_frobenius needs a group")
        n = group.matrix_size
        f = weighted_frobenius_cost(group, _weight(params.get("left_weight"), n),
                                    _weight(params.get("right_weight"), n))
    else:
        raise UsageError(f"unknown cost {name!r}; expected one of {list(COST_NAMES)}")
    if group is not None and f.group is not group:
        raise UsageError(f"cost {name!r} lives on {f.group.name}, not {group.name}")
    return f
