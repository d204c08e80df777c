"""Observer catalog: synchronous term plus innovation.

Every observer is stored through a raw ``body`` map
(Xhat, Y, w, t) -> Body coordinates of Xhat' at Xhat, which is what the
integrators consume.  :meth:`Observer.field` wraps it in a
:class:`TangentVector` in the frame natural to the observer's handedness.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .costs import CostFunction, grad1_body
from .errors import ErrorConvention
from .exceptions import UsageError
from .groups import GroupDescriptor, mv
from .lie_core import Frame, GroupElement, Metric, TangentVector, tangency_residual, tangent_from_ambient
from .systems import Handedness

RawField = Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray]

TANGENCY_TOL = 1e-9


class ObserverKind(enum.Enum):
    GRADIENT_LEFT = "gradient_left"
    GRADIENT_RIGHT = "gradient_right"
    GRADIENT_LIKE_LEFT = "gradient_like_left"
    GRADIENT_LIKE_RIGHT = "gradient_like_right"
    SYNCHRONOUS_ONLY = "synchronous"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Observer:
    kind: ObserverKind
    group: GroupDescriptor
    handedness: Handedness
    body: RawField
    cost: Optional[CostFunction] = None
    metric: Optional[Metric] = None

    @property
    def error_side(self) -> ErrorConvention:
        """The canonical error with autonomous dynamics for this observer."""
        return ErrorConvention.RIGHT if self.handedness is Handedness.LEFT else ErrorConvention.LEFT

    def synchronous_body(self, Xhat: np.ndarray, w: np.ndarray) -> np.ndarray:
        if self.handedness is Handedness.LEFT:
            return np.asarray(w, dtype=float)
        g = self.group
        return mv(g.Ad(g.inverse(Xhat)), w)

    def field(self, Xhat: GroupElement, Y: GroupElement, w, t: float = 0.0) -> TangentVector:
        c = self.body(Xhat.matrix, Y.matrix, np.asarray(w, dtype=float), t)
        t_body = TangentVector(Xhat, c, Frame.BODY)
        if self.handedness is Handedness.RIGHT:
            return TangentVector(Xhat, t_body.in_frame(Frame.SPATIAL), Frame.SPATIAL)
        return t_body


def _need(cost, metric):
    if metric is None:
        raise UsageError("gradient observers need a metric")
    if cost is None:
        raise UsageError("gradient observers need a cost")
    if cost.group is not metric.group:
        raise UsageError(f"cost on {cost.group.name} but metric on {metric.group.name}")


def synchronous_observer(group: GroupDescriptor, handedness: Handedness | str) -> Observer:
    """Xhat' = Xhat w (left) or w Xhat (right): the internal model alone."""
    h = Handedness(handedness)
    if h is Handedness.LEFT:
        def body(Xh, Y, w, t):
            return w
    else:
        def body(Xh, Y, w, t):
            return mv(group.Ad(group.inverse(Xh)), w)
    return Observer(ObserverKind.SYNCHRONOUS_ONLY, group, h, body)


def gradient_observer(handedness: Handedness | str, cost: CostFunction, metric: Metric) -> Observer:
    """Xhat' = Xhat w - grad_1 f(Xhat, Y)   (left)
    Xhat' = w Xhat - grad_1 f(Xhat, Y)   (right)
    """
    _need(cost, metric)
    h = Handedness(handedness)
    g = cost.group
    if h is Handedness.LEFT:
        def body(Xh, Y, w, t):
            return w - grad1_body(cost, metric, Xh, Y)
        kind = ObserverKind.GRADIENT_LEFT
    else:
        def body(Xh, Y, w, t):
            return mv(g.Ad(g.inverse(Xh)), w) - grad1_body(cost, metric, Xh, Y)
        kind = ObserverKind.GRADIENT_RIGHT
    return Observer(kind, g, h, body, cost, metric)


def gradient_like_observer(handedness: Handedness | str, cost: CostFunction, metric: Metric) -> Observer:
    """Innovation built from grad_1 f(E, e), translated back to Xhat.

    left:  Xhat' = Xhat w - (grad_1 f(Xhat Y^-1, e)) Y
    right: Xhat' = w Xhat - Y (grad_1 f(Y^-1 Xhat, e))
    The translations are plain matrix products of the ambient gradient.
    """
    _need(cost, metric)
    h = Handedness(handedness)
    g = cost.group
    e = g.identity()
    if h is Handedness.LEFT:
        def body(Xh, Y, w, t):
            Yinv = g.inverse(Y)
            gb = grad1_body(cost, metric, Xh @ Yinv, e)
            # Xh^-1 (Xh Y^-1 hat(gb)) Y = hat(Ad_{Y^-1} gb)
            return w - mv(g.Ad(Yinv), gb)
        kind = ObserverKind.GRADIENT_LIKE_LEFT
    else:
        def body(Xh, Y, w, t):
            gb = grad1_body(cost, metric, g.inverse(Y) @ Xh, e)
            # Xh^-1 Y (Y^-1 Xh hat(gb)) = hat(gb)
            return mv(g.Ad(g.inverse(Xh)), w) - gb
        kind = ObserverKind.GRADIENT_LIKE_RIGHT
    return Observer(kind, g, h, body, cost, metric)


def custom_observer(group: GroupDescriptor, handedness: Handedness | str,
                    fn: Callable[[GroupElement, GroupElement, np.ndarray, float], object],
                    probes: int = 8, seed: int = 0) -> Observer:
    """Wrap a user field returning a TangentVector or an ambient matrix.

    Tangency of ambient outputs is probed at construction on random
    arguments; anything off the tangent space by more than 1e-9 is rejected.
    """
    h = Handedness(handedness)
    rng = np.random.default_rng(seed)
    for _ in range(probes):
        Xh = GroupElement.exp(group, rng.uniform(-1, 1, group.dim_algebra))
        Y = GroupElement.exp(group, rng.uniform(-1, 1, group.dim_algebra))
        out = fn(Xh, Y, rng.uniform(-1, 1, group.dim_algebra), float(rng.uniform(0, 10)))
        if not isinstance(out, TangentVector):
            r = tangency_residual(Xh, np.asarray(out, dtype=float))
            if r > TANGENCY_TOL:
                raise UsageError(f"custom observer field is not tangent (residual {r:.3e})")

    def body(Xh, Y, w, t):
        Xe = GroupElement(group, Xh)
        out = fn(Xe, GroupElement(group, Y), w, t)
        if isinstance(out, TangentVector):
            return out.in_frame(Frame.BODY)
        return tangent_from_ambient(Xe, np.asarray(out, dtype=float)).coords

    return Observer(ObserverKind.CUSTOM, group, h, body)


def innovation_of(obs: Observer, Xhat: GroupElement, Y: GroupElement, w, t: float = 0.0) -> TangentVector:
    """alpha = field - synchronous term, in the same frame as :meth:`Observer.field`."""
    w = np.asarray(w, dtype=float)
    c = obs.body(Xhat.matrix, Y.matrix, w, t) - obs.synchronous_body(Xhat.matrix, w)
    t_body = TangentVector(Xhat, c, Frame.BODY)
    if obs.handedness is Handedness.RIGHT:
        return TangentVector(Xhat, t_body.in_frame(Frame.SPATIAL), Frame.SPATIAL)
    return t_body


# --------------------------------------------------------------------------
# error-space fields used as oracles
# --------------------------------------------------------------------------

def error_flow_field(side: ErrorConvention, cost: CostFunction, metric: Metric, E: GroupElement) -> TangentVector:
    """-grad_1 f(E, e): the autonomous dynamics of the matched canonical error.

    ``side`` only documents which error is meant; the field is the same.
    """
    ErrorConvention(side)
    c = -grad1_body(cost, metric, E.matrix, E.group.identity())
    return TangentVector(E, c, Frame.BODY)


def skew_error_field(cost: CostFunction, metric: Metric, E: GroupElement, u,
                     side: ErrorConvention = ErrorConvention.LEFT) -> TangentVector:
    """Error dynamics of the *other* canonical error.

    LEFT  (left system, left observer):   E u - u E - grad_1 f(E, e)
    RIGHT (right system, right observer): v E - E v - grad_1 f(E, e)
    """
    g = E.group
    u = np.asarray(u, dtype=float)
    # body coordinates of E u - u E are u - Ad_{E^-1} u
    comm = u - mv(g.Ad(g.inverse(E.matrix)), u)
    if ErrorConvention(side) is ErrorConvention.RIGHT:
        comm = -comm
    return TangentVector(E, comm - grad1_body(cost, metric, E.matrix, g.identity()), Frame.BODY)


def commutator_term(E: GroupElement, u) -> TangentVector:
    """(T_e L_E - T_e R_E) u = E u - u E as a tangent vector at E."""
    g = E.group
    u = np.asarray(u, dtype=float)
    return TangentVector(E, u - mv(g.Ad(g.inverse(E.matrix)), u), Frame.BODY)


def predicted_error_rate(obs: Observer, Xhat: np.ndarray, X: np.ndarray, Y: np.ndarray,
                         delta: np.ndarray) -> Optional[np.ndarray]:
    """Ambient matrix of E' predicted from error-space quantities under noise.

    With measured input w = u + delta and state measurement Y, write the
    measurement error as M = Y X^-1 (left observers) or M = X^-1 Y (right).
    Then for the matched error E (E_r for left, E_l for right):

    gradient, left:        E' = (Ad_Xhat delta) E - grad_1 f(E, M)
    gradient-like, left:   E' = (Ad_Xhat delta) E - G(E M^-1) M
    gradient, right:       E' = E (Ad_Xhat^-1 delta) - grad_1 f(E, M)
    gradient-like, right:  E' = E (Ad_Xhat^-1 delta) - M G(M^-1 E)

    where G(Z) is the ambient representative of grad_1 f(Z, e).  The
    gradient forms rely on the cost and metric invariance; the predicted
    and realised rates only agree when that invariance actually holds.
    Returns ``None`` for custom observers.
    """
    g = obs.group
    if obs.kind is ObserverKind.CUSTOM:
        return None
    side = obs.error_side
    Xinv = g.inverse(X)
    hd = g.hat(delta)
    e = g.identity()
    if side is ErrorConvention.RIGHT:
        E = Xhat @ Xinv
        M = Y @ Xinv
        rate = Xhat @ hd @ g.inverse(Xhat) @ E
    else:
        E = Xinv @ Xhat
        M = Xinv @ Y
        rate = E @ g.inverse(Xhat) @ hd @ Xhat
    if obs.kind is ObserverKind.SYNCHRONOUS_ONLY:
        return rate

    def G(Z):
        return Z @ g.hat(grad1_body(obs.cost, obs.metric, Z, e))

    if obs.kind in (ObserverKind.GRADIENT_LEFT, ObserverKind.GRADIENT_RIGHT):
        return rate - E @ g.hat(grad1_body(obs.cost, obs.metric, E, M))
    if obs.kind is ObserverKind.GRADIENT_LIKE_LEFT:
        return rate - G(E @ g.inverse(M)) @ M
    return rate - M @ G(g.inverse(M) @ E)


def make_observer(kind: ObserverKind | str, group: GroupDescriptor, handedness: Handedness | str,
                  cost: Optional[CostFunction] = None, metric: Optional[Metric] = None) -> Observer:
    """Catalog lookup by kind; ``handedness`` is only used by the synchronous kind."""
    kind = ObserverKind(kind)
    if kind is ObserverKind.SYNCHRONOUS_ONLY:
        return synchronous_observer(group, handedness)
    if kind is ObserverKind.CUSTOM:
        raise UsageError("custom observers are built with custom_observer()")
    _need(cost, metric)
    if cost.group is not group:
        raise UsageError(f"cost is on {cost.group.name}, scenario group is {group.name}")
    h = Handedness.LEFT if kind.value.endswith("_left") else Handedness.RIGHT
    if kind in (ObserverKind.GRADIENT_LEFT, ObserverKind.GRADIENT_RIGHT):
        return gradient_observer(h, cost, metric)
    return gradient_like_observer(h, cost, metric)
