"""Fast invariant suites behind ``lieobs check``.

Each check is a small, seeded property test returning (passed, detail).
They are smoke-level versions of the full test-suite and finish in a few
seconds.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import costs, groups, observers
from .errors import ErrorConvention, canonical_error, synchrony_defect
from .groups import SE3, SO3
from .integrators import IntegratorConfig, integrate_body, simulate_coupled
from .lie_core import GroupElement, frobenius_metric, metric_inner
from .sim import MeasurementChannel, apply_channel, fit_exponential_rate
from .systems import Handedness, InputSignal, InvariantSystem

Check = Callable[[], tuple[bool, str]]


def _groups_roundtrip():
    rng = np.random.default_rng(1)
    worst = 0.0
    for g in (SO3, SE3):
        for _ in range(200):
            v = groups.random_coords(g, rng, 3.0)
            worst = max(worst, float(np.linalg.norm(g.log(g.exp(v)) - v)))
    return worst <= 1e-9, f"max |log(exp v) - v| = {worst:.2e}"


def _groups_axioms():
    rng = np.random.default_rng(2)
    worst = 0.0
    for g in (SO3, SE3):
        for _ in range(100):
            A, B, C = (groups.random_matrix(g, rng) for _ in range(3))
            worst = max(worst, float(np.abs((A @ B) @ C - A @ (B @ C)).max()),
                        float(np.abs(A @ g.inverse(A) - np.eye(g.matrix_size)).max()),
                        g.residual(A @ B))
    return worst <= 1e-10, f"max axiom residual = {worst:.2e}"


def _metric_bi():
    rng = np.random.default_rng(3)
    m = frobenius_metric(SO3, "bi")
    worst = 0.0
    for _ in range(100):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        Ad = SO3.Ad(groups.random_matrix(SO3, rng))
        worst = max(worst, abs(metric_inner(m, Ad @ a, Ad @ b) - metric_inner(m, a, b)))
    return worst <= 1e-10, f"max Ad-invariance defect = {worst:.2e}"


def _gradients():
    rng = np.random.default_rng(4)
    worst = 0.0
    for f, m in ((costs.so3_frobenius_cost(1.0), frobenius_metric(SO3, "bi")),
                 (costs.se3_pose_cost(), frobenius_metric(SE3, "right"))):
        g = f.group
        for _ in range(20):
            X = GroupElement(g, groups.random_matrix(g, rng, 2.0))
            Y = GroupElement(g, groups.random_matrix(g, rng, 2.0))
            a = f.analytic_grad1(X, Y, m).coords
            d = costs.fd_grad1(f, m, X, Y).coords
            worst = max(worst, float(np.linalg.norm(a - d) / max(np.linalg.norm(a), 1e-12)))
    return worst <= 1e-6, f"max relative gradient error = {worst:.2e}"


def _coincidence():
    rng = np.random.default_rng(5)
    f, m = costs.so3_frobenius_cost(1.0), frobenius_metric(SO3, "bi")
    a = observers.gradient_observer("left", f, m)
    b = observers.gradient_like_observer("left", f, m)
    worst = 0.0
    for _ in range(100):
        Xh, Y = groups.random_matrix(SO3, rng), groups.random_matrix(SO3, rng)
        w = rng.standard_normal(3)
        worst = max(worst, float(np.abs(a.body(Xh, Y, w, 0.0) - b.body(Xh, Y, w, 0.0)).max()))
    return worst <= 1e-9, f"max field difference = {worst:.2e}"


def _synchrony():
    sig = InputSignal.sinusoid_sum([[(1.0, 1.0, 0.0)], [(0.5, 2.0, 0.3)], [(0.7, 0.5, 1.0)]])
    sys = InvariantSystem(SO3, Handedness.LEFT, sig)
    obs = observers.synchronous_observer(SO3, "left")
    X0 = GroupElement.exp(SO3, [0.3, -0.2, 0.5])
    Xh0 = GroupElement.exp(SO3, [1.0, 0.4, -0.3])
    _, _, diag = simulate_coupled(sys, obs, None, X0, Xh0, IntegratorConfig(step=1e-2), 2.0)
    return diag.synchrony_defect <= 1e-8, f"right-error defect = {diag.synchrony_defect:.2e}"


def _integrator_order():
    def fn(X, t):
        return np.array([np.sin(t), 0.3, np.cos(t)])

    def final(h):
        return integrate_body(SO3, fn, np.eye(3), IntegratorConfig(step=h), 1.0).matrices[-1]

    ref = final(1e-3 / 4)
    errs = [float(np.linalg.norm(final(h) - ref)) for h in (2e-2, 1e-2)]
    order = float(np.log2(errs[0] / errs[1]))
    return order >= 3.7, f"observed RKMK4 order = {order:.2f}"


def _channel():
    X = GroupElement.exp(SO3, [0.1, 0.2, 0.3])
    ch = MeasurementChannel()
    Y, w = apply_channel(ch, 0.0, X, np.array([1.0, 2.0, 3.0]))
    ok = Y.matrix is X.matrix and np.array_equal(w, [1.0, 2.0, 3.0])
    return ok, "noise-free channel returns measurements exactly" if ok else "channel altered measurements"


def _rate():
    t = np.linspace(0.0, 5.0, 501)
    r = fit_exponential_rate(t, np.exp(-2.0 * t))
    ok = abs(r.rate - 2.0) <= 1e-6 and r.r_squared > 0.999999
    return ok, f"rate = {r.rate:.9f}, r2 = {r.r_squared:.9f}"


def _errors():
    rng = np.random.default_rng(6)
    X = GroupElement(SO3, groups.random_matrix(SO3, rng))
    Xh = GroupElement(SO3, groups.random_matrix(SO3, rng))
    Er = canonical_error(ErrorConvention.RIGHT, Xh, X)
    d = float(np.abs(Er.matrix @ X.matrix - Xh.matrix).max())
    return d <= 1e-12 and synchrony_defect(ErrorConvention.RIGHT, [Xh] * 3, [X] * 3) == 0.0, \
        f"E_r X - Xhat = {d:.2e}"


CHECKS: list[tuple[str, str, Check]] = [
    ("groups", "exp/log round trip", _groups_roundtrip),
    ("groups", "group axioms", _groups_axioms),
    ("lie_core", "bi-invariant metric", _metric_bi),
    ("errors", "canonical error identities", _errors),
    ("systems", "synchronous observer keeps E_r", _synchrony),
    ("costs", "analytic vs finite-difference gradient", _gradients),
    ("observers", "gradient-like equals gradient (bi-invariant)", _coincidence),
    ("integrators", "RKMK4 convergence order", _integrator_order),
    ("sim", "noise-free channel", _channel),
    ("sim", "exact exponential rate fit", _rate),
]


def run_checks() -> list[tuple[str, str, bool, str]]:
    out = []
    for module, name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:   # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((module, name, bool(ok), detail))
    return out
