"""Lie-group integrators (Lie-Euler, RKMK4) and coupled plant/observer runs.

Both schemes advance X <- X exp(sigma) with sigma built from Body-frame
velocities, so every state is a group element up to the rounding of a
single matrix exponential.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .costs import CostFunction, log_distance_cost
from .errors import ErrorConvention, error_matrix, synchrony_defect
from .exceptions import DivergenceError, IntegrationError, UsageError
from .groups import GroupDescriptor, dexpinv_body, mv
from .lie_core import Frame, GroupElement, TangentVector
from .observers import Observer, predicted_error_rate
from .systems import Handedness, InvariantSystem

DIVERGENCE_GUARD = 1e6
MONOTONE_TOL = 1e-12

BodyField = Callable[[np.ndarray, float], np.ndarray]


class Scheme(enum.Enum):
    LIE_EULER = "lie_euler"
    RKMK4 = "rkmk4"


@dataclass(frozen=True)
class IntegratorConfig:
    scheme: Scheme = Scheme.RKMK4
    step: float = 1e-3
    reproject: bool = False

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.step > 0:
            raise UsageError(f"step must be positive, got {self.step}")


@dataclass(eq=False)
class Trajectory:
    """States sampled on a strictly increasing time grid.

    ``matrices`` is the (N+1, n, n) stack; :attr:`states` exposes typed
    elements.  ``signals`` holds optional co-recorded series.
    """

    group: GroupDescriptor
    times: np.ndarray
    matrices: np.ndarray
    signals: dict = field(default_factory=dict)

    @property
    def states(self) -> list[GroupElement]:
        return [GroupElement(self.group, M) for M in self.matrices]

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, k: int) -> GroupElement:
        return GroupElement(self.group, self.matrices[k])

    @property
    def final(self) -> GroupElement:
        return self[-1]


# --------------------------------------------------------------------------
# raw stepping on products of groups
# --------------------------------------------------------------------------

def _check(xis):
    for xi in xis:
        # inf - inf and nan both propagate to a non-finite sum
        with np.errstate(invalid="ignore"):
            total = float(xi.sum())
        if not math.isfinite(total):
            raise IntegrationError("vector field returned non-finite values")
    return xis


def _step_multi(gs: Sequence[GroupDescriptor], scheme: Scheme,
                fn: Callable[[list, float], list], Xs: list, t: float, h: float) -> list:
    """One step on G1 x ... x Gm; ``fn(Xs, t)`` returns Body coordinates per factor."""
    if scheme is Scheme.LIE_EULER:
        k1 = _check(fn(Xs, t))
        return [X @ g.exp(h * k) for g, X, k in zip(gs, Xs, k1)]

    k1 = _check(fn(Xs, t))
    s2 = [0.5 * h * k for k in k1]
    xi = _check(fn([X @ g.exp(s) for g, X, s in zip(gs, Xs, s2)], t + 0.5 * h))
    k2 = [dexpinv_body(g, s, x) for g, s, x in zip(gs, s2, xi)]
    s3 = [0.5 * h * k for k in k2]
    xi = _check(fn([X @ g.exp(s) for g, X, s in zip(gs, Xs, s3)], t + 0.5 * h))
    k3 = [dexpinv_body(g, s, x) for g, s, x in zip(gs, s3, xi)]
    s4 = [h * k for k in k3]
    xi = _check(fn([X @ g.exp(s) for g, X, s in zip(gs, Xs, s4)], t + h))
    k4 = [dexpinv_body(g, s, x) for g, s, x in zip(gs, s4, xi)]
    return [X @ g.exp((h / 6.0) * (a + 2.0 * b + 2.0 * c + d))
            for g, X, a, b, c, d in zip(gs, Xs, k1, k2, k3, k4)]


def step(scheme: Scheme | str, field: Callable[[GroupElement, float], TangentVector],
         X: GroupElement, t: float, h: float) -> GroupElement:
    """Advance ``X`` by one step of size ``h`` under ``field``."""
    if not h > 0:
        raise UsageError(f"step size must be positive, got {h}")
    g = X.group

    def fn(Xs, s):
        return [field(GroupElement(g, Xs[0]), s).in_frame(Frame.BODY)]

    return GroupElement(g, _step_multi([g], Scheme(scheme), fn, [X.matrix], t, h)[0])


def time_grid(horizon: float, h: float, breakpoints: Sequence[float] = (), t0: float = 0.0) -> np.ndarray:
    """Uniform grid t0, t0+h, ..., t0+horizon with breakpoints inserted exactly."""
    if horizon < 0:
        raise UsageError("horizon must be non-negative")
    if horizon == 0:
        return np.array([t0])
    n = int(np.floor(horizon / h + 1e-9))
    times = t0 + h * np.arange(n + 1)
    if t0 + horizon - times[-1] > 1e-12:
        times = np.append(times, t0 + horizon)
    else:
        times[-1] = t0 + horizon
    for b in breakpoints:
        if not t0 < b < t0 + horizon:
            continue
        j = int(np.argmin(np.abs(times - b)))
        if abs(times[j] - b) <= 1e-9 * h:
            times[j] = b
        else:
            times = np.insert(times, int(np.searchsorted(times, b)), b)
    return times


def integrate_body(group: GroupDescriptor, fn: BodyField, X0, cfg: IntegratorConfig,
                   horizon: float, breakpoints: Sequence[float] = ()) -> Trajectory:
    """Integrate X' = X hat(fn(X, t)) from ``X0`` (raw-matrix field)."""
    times = time_grid(horizon, cfg.step, breakpoints)
    X = X0.matrix if isinstance(X0, GroupElement) else np.asarray(X0, dtype=float)
    out = np.empty((len(times),) + X.shape)
    out[0] = X

    def multi(Xs, s):
        return [fn(Xs[0], s)]

    for k in range(len(times) - 1):
        X = _step_multi([group], cfg.scheme, multi, [X], times[k], times[k + 1] - times[k])[0]
        if cfg.reproject:
            X = group.project(X)
        out[k + 1] = X
    return Trajectory(group, times, out)


def integrate(field: Callable[[GroupElement, float], TangentVector], X0: GroupElement,
              cfg: IntegratorConfig, horizon: float) -> Trajectory:
    """Integrate a typed field (TangentVector-valued) from ``X0``."""
    g = X0.group

    def fn(X, t):
        return field(GroupElement(g, X), t).in_frame(Frame.BODY)

    return integrate_body(g, fn, X0, cfg, horizon)


# --------------------------------------------------------------------------
# coupled simulation
# --------------------------------------------------------------------------

@dataclass(eq=False)
class Diagnostics:
    times: np.ndarray
    error_side: ErrorConvention
    monitor: str
    cost: np.ndarray
    residual_x: np.ndarray
    residual_xhat: np.ndarray
    synchrony_defect: float
    monotonicity_violations: int
    max_membership_residual: float
    noise_active: bool = False
    noise_residual: Optional[float] = None
    noise_residual_series: Optional[np.ndarray] = None
    inputs: Optional[np.ndarray] = None
    measured_inputs: Optional[np.ndarray] = None


def count_increases(values: np.ndarray, tol: float = MONOTONE_TOL) -> int:
    """Number of consecutive increases larger than ``tol``."""
    return int(np.sum(np.diff(values) > tol))


def simulate_coupled(sys: InvariantSystem, obs: Observer, channel, X0: GroupElement, Xhat0: GroupElement,
                     cfg: IntegratorConfig = IntegratorConfig(), horizon: float = 10.0,
                     error_side: Optional[ErrorConvention] = None,
                     monitor: Optional[CostFunction] = None) -> tuple[Trajectory, Trajectory, Diagnostics]:
    """Integrate plant and observer together on one grid.

    At every stage the observer is fed ``(Y, w)`` from ``channel`` (see
    :mod:`lieobs.sim`); noise samples are held constant over each step.
    ``monitor`` defaults to the observer's cost (or 1/2 ||log E||^2 when it
    has none) and is evaluated as f(E, e) on the chosen error side.
    Raises :class:`DivergenceError` once the monitor exceeds 1e6.
    """
    g = sys.group
    if obs.group is not g or X0.group is not g or Xhat0.group is not g:
        raise UsageError("system, observer and initial states must share a group")
    if obs.handedness is not sys.handedness:
        raise UsageError(f"{obs.handedness.value} observer cannot observe a {sys.handedness.value} system")
    side = error_side or obs.error_side
    monitor = monitor or obs.cost or log_distance_cost(g)
    times = time_grid(horizon, cfg.step, sys.input.breakpoints)
    if channel is None:
        from .channels import MeasurementChannel
        channel = MeasurementChannel()
    channel.check_covers(times)

    N = len(times)
    n = g.matrix_size
    Xs = np.empty((N, n, n))
    Xhs = np.empty((N, n, n))
    Xs[0], Xhs[0] = X0.matrix, Xhat0.matrix
    e = g.identity()
    cost = np.empty(N)
    cost[0] = monitor.fn(error_matrix(g, side, Xhs[0], Xs[0]), e)
    noisy = channel.active
    dim = g.dim_algebra
    u_rec = np.empty((N, dim))
    w_rec = np.empty((N, dim))
    gs = [g, g]
    X, Xh = Xs[0], Xhs[0]

    for k in range(N - 1):
        t_k, h = times[k], times[k + 1] - times[k]
        N_k, side_k, delta = channel.sample(k)

        def fn(pair, s, t_k=t_k, N_k=N_k, side_k=side_k, delta=delta):
            Xm, Xhm = pair
            c = sys.input.on_interval(s, t_k)
            if sys.handedness is Handedness.LEFT:
                xi = c
            else:
                xi = mv(g.Ad(g.inverse(Xm)), c)
            if N_k is None:
                Y = Xm
            elif side_k == "left":
                Y = N_k @ Xm
            else:
                Y = Xm @ N_k
            w = c if delta is None else c + delta
            return [xi, obs.body(Xhm, Y, w, s)]

        u_rec[k] = sys.input.on_interval(t_k, t_k)
        w_rec[k] = u_rec[k] if delta is None else u_rec[k] + delta
        X, Xh = _step_multi(gs, cfg.scheme, fn, [X, Xh], t_k, h)
        if cfg.reproject:
            X, Xh = g.project(X), g.project(Xh)
        Xs[k + 1], Xhs[k + 1] = X, Xh
        f = monitor.fn(error_matrix(g, side, Xh, X), e)
        if not np.isfinite(f) or f > DIVERGENCE_GUARD:
            raise DivergenceError(f"observer cost {f:.3e} exceeded {DIVERGENCE_GUARD:g} at t={times[k + 1]:g}")
        cost[k + 1] = f
    u_rec[-1] = sys.input(times[-1])
    w_rec[-1] = u_rec[-1]

    res_x = np.atleast_1d(g.residual(Xs))
    res_xh = np.atleast_1d(g.residual(Xhs))
    traj_x = Trajectory(g, times, Xs, {"input": u_rec})
    traj_xh = Trajectory(g, times, Xhs, {"measured_input": w_rec})

    diag = Diagnostics(
        times=times, error_side=side, monitor=monitor.name, cost=cost,
        residual_x=res_x, residual_xhat=res_xh,
        synchrony_defect=synchrony_defect(side, Xhs, Xs, group=g),
        monotonicity_violations=count_increases(cost),
        max_membership_residual=float(max(res_x.max(), res_xh.max())),
        noise_active=noisy, inputs=u_rec, measured_inputs=w_rec,
    )
    if noisy and N > 1 and side is obs.error_side:
        series = noise_field_residuals(obs, channel, times, Xs, Xhs)
        if series is not None:
            diag.noise_residual_series = series
            diag.noise_residual = float(series.max())
    return traj_x, traj_xh, diag


def noise_field_residuals(obs: Observer, channel, times: np.ndarray, Xs: np.ndarray,
                          Xhs: np.ndarray) -> Optional[np.ndarray]:
    """Per-step ||(E_{k+1} - E_k)/h - predicted E'(t_k)||_F.

    The forward difference stays inside one zero-order-hold noise interval,
    so a correct prediction leaves an O(h) residual.
    """
    g = obs.group
    side = obs.error_side
    out = np.empty(len(times) - 1)
    for k in range(len(times) - 1):
        N_k, side_k, delta = channel.sample(k)
        X, Xh = Xs[k], Xhs[k]
        if N_k is None:
            Y = X
        elif side_k == "left":
            Y = N_k @ X
        else:
            Y = X @ N_k
        d = np.zeros(g.dim_algebra) if delta is None else delta
        pred = predicted_error_rate(obs, Xh, X, Y, d)
        if pred is None:
            return None
        h = times[k + 1] - times[k]
        fd = (error_matrix(g, side, Xhs[k + 1], Xs[k + 1]) - error_matrix(g, side, Xh, X)) / h
        out[k] = float(np.linalg.norm(fd - pred))
    return out


# --------------------------------------------------------------------------
# batched noise-free runs
# --------------------------------------------------------------------------

@dataclass(eq=False)
class BatchResult:
    """B coupled runs on one grid; arrays carry the run index first."""

    group: GroupDescriptor
    times: np.ndarray
    states: np.ndarray       # (B, N, n, n)
    estimates: np.ndarray    # (B, N, n, n)
    cost: np.ndarray         # (B, N)
    error_side: ErrorConvention

    def __len__(self) -> int:
        return self.states.shape[0]

    def trajectories(self, i: int) -> tuple[Trajectory, Trajectory]:
        return (Trajectory(self.group, self.times, self.states[i]),
                Trajectory(self.group, self.times, self.estimates[i]))

    def errors(self) -> np.ndarray:
        """(B, N, n, n) canonical errors on :attr:`error_side`."""
        return error_matrix(self.group, self.error_side, self.estimates, self.states)

    def monotonicity_violations(self, tol: float = MONOTONE_TOL) -> np.ndarray:
        return np.sum(np.diff(self.cost, axis=1) > tol, axis=1)

    def synchrony_defects(self) -> np.ndarray:
        return np.array([synchrony_defect(self.error_side, self.estimates[i], self.states[i], group=self.group)
                         for i in range(len(self))])

    def max_membership_residual(self) -> float:
        g = self.group
        return float(max(np.max(g.residual(self.states)), np.max(g.residual(self.estimates))))


def _stacked_cost(fn, B: int):
    def out(E, e):
        try:
            v = np.asarray(fn(E, e), dtype=float)
            if v.shape == (B,):
                return v
        except (ValueError, IndexError):
            pass
        return np.array([float(fn(A, e)) for A in E])
    return out


def simulate_batch(group: GroupDescriptor, handedness: Handedness | str, inputs, obs: Observer,
                   X0s, Xhat0s, cfg: IntegratorConfig = IntegratorConfig(), horizon: float = 10.0,
                   error_side: Optional[ErrorConvention] = None,
                   monitor: Optional[CostFunction] = None) -> BatchResult:
    """Run B noise-free (Y = X, w = u) plant/observer pairs in one vectorized loop.

    ``inputs`` is an :class:`~lieobs.systems.InputBatch` or a sequence of
    input signals, one per run.  Every run uses the same grid and scheme as
    :func:`simulate_coupled` would, so results agree with B separate calls
    up to rounding.
    """
    from .observers import ObserverKind
    from .systems import InputBatch

    g = group
    hand = Handedness(handedness)
    if obs.group is not g:
        raise UsageError("observer and system must share a group")
    if obs.handedness is not hand:
        raise UsageError(f"{obs.handedness.value} observer cannot observe a {hand.value} system")
    batch = inputs if isinstance(inputs, InputBatch) else InputBatch(inputs)
    if batch.dim != g.dim_algebra:
        raise UsageError(f"inputs have {batch.dim} coordinates, {g.name} needs {g.dim_algebra}")
    X = np.array([getattr(x, "matrix", x) for x in X0s], dtype=float)
    Xh = np.array([getattr(x, "matrix", x) for x in Xhat0s], dtype=float)
    B, n = len(batch), g.matrix_size
    if X.shape != (B, n, n) or Xh.shape != (B, n, n):
        raise UsageError(f"need {B} initial states and estimates of shape {n}x{n}")
    side = error_side or obs.error_side
    cost_fn = _stacked_cost((monitor or obs.cost or log_distance_cost(g)).fn, B)
    body = obs.body
    if obs.kind is ObserverKind.CUSTOM:
        single = obs.body

        def body(Xhm, Ym, w, s):
            return np.array([single(a, b, c, s) for a, b, c in zip(Xhm, Ym, w)])

    times = time_grid(horizon, cfg.step, batch.breakpoints)
    N = len(times)
    Xs = np.empty((B, N, n, n))
    Xhs = np.empty((B, N, n, n))
    cost = np.empty((B, N))
    Xs[:, 0], Xhs[:, 0] = X, Xh
    e = g.identity()
    cost[:, 0] = cost_fn(error_matrix(g, side, Xh, X), e)

    for k in range(N - 1):
        t_k, h = times[k], times[k + 1] - times[k]

        def fn(Zs, s, t_k=t_k):
            # plant and observer share one (2B) stack so each stage makes one group call
            Xm, Xhm = Zs[0][:B], Zs[0][B:]
            c = batch.on_interval(s, t_k)
            xi = c if hand is Handedness.LEFT else mv(g.Ad(g.inverse(Xm)), c)
            return [np.concatenate([xi, body(Xhm, Xm, c, s)])]

        Z = _step_multi([g], cfg.scheme, fn, [np.concatenate([X, Xh])], t_k, h)[0]
        X, Xh = Z[:B], Z[B:]
        if cfg.reproject:
            X, Xh = g.project(X), g.project(Xh)
        Xs[:, k + 1], Xhs[:, k + 1] = X, Xh
        f = cost_fn(error_matrix(g, side, Xh, X), e)
        if not np.all(np.isfinite(f)) or np.max(f) > DIVERGENCE_GUARD:
            raise DivergenceError(f"observer cost exceeded {DIVERGENCE_GUARD:g} at t={times[k + 1]:g}")
        cost[:, k + 1] = f
    return BatchResult(g, times, Xs, Xhs, cost, side)
