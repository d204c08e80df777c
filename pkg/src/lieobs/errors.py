"""Canonical invariant errors and a sampled synchrony check."""

from __future__ import annotations

import enum
from typing import Sequence

import numpy as np

from .exceptions import SingularityError, UsageError
from .groups import GroupDescriptor
from .lie_core import Frame, GroupElement, TangentVector


class ErrorConvention(enum.Enum):
    RIGHT = "right"   # E_r = Xhat X^-1
    LEFT = "left"     # E_l = X^-1 Xhat


def error_matrix(g: GroupDescriptor, side: ErrorConvention, Xhat: np.ndarray, X: np.ndarray) -> np.ndarray:
    if side is ErrorConvention.RIGHT:
        return Xhat @ g.inverse(X)
    return g.inverse(X) @ Xhat


def canonical_error(side: ErrorConvention, Xhat: GroupElement, X: GroupElement) -> GroupElement:
    if Xhat.group is not X.group:
        raise UsageError(f"group mismatch: {Xhat.group.name} vs {X.group.name}")
    return GroupElement(X.group, error_matrix(X.group, side, Xhat.matrix, X.matrix))


def _as_stack(traj) -> np.ndarray:
    M = getattr(traj, "matrices", None)
    if M is not None:
        return np.asarray(M)
    states = getattr(traj, "states", traj)
    return np.array([s.matrix if isinstance(s, GroupElement) else np.asarray(s) for s in states], dtype=float)


def synchrony_defect(side: ErrorConvention, xhat_traj, x_traj, group: GroupDescriptor | None = None) -> float:
    """max_k ||log(E(t_k) E(t_0)^-1)|| along a pair of sampled trajectories.

    Accepts :class:`~lieobs.integrators.Trajectory` objects, (N, n, n)
    arrays, or sequences of :class:`GroupElement` / raw matrices (raw input
    needs ``group``).  Returns ``inf`` if the error wanders past the log's
    cut locus.
    """
    if group is None:
        group = getattr(x_traj, "group", None)
        if group is None:
            group = getattr(x_traj, "states", x_traj)[0].group
    A, B = _as_stack(xhat_traj), _as_stack(x_traj)
    if A.shape != B.shape:
        raise UsageError("trajectories must be sampled on a common grid")
    t_a, t_b = getattr(xhat_traj, "times", None), getattr(x_traj, "times", None)
    if t_a is not None and t_b is not None and not np.array_equal(t_a, t_b):
        raise UsageError("trajectories must be sampled on a common grid")
    E = error_matrix(group, side, A, B)
    try:
        v = group.log(E @ group.inverse(E[0]))
    except SingularityError:
        return float("inf")
    return float(np.max(np.linalg.norm(v, axis=-1)))


def left_synchronous_term(Xhat: GroupElement, X: GroupElement, u: Sequence[float]) -> TangentVector:
    """Xhat Ad_{Xhat^-1 X} u, the field keeping E_l constant for a left system.

    Analysis only: it needs the true state ``X`` and therefore cannot be
    part of an implementable observer.
    """
    g = X.group
    El_inv = g.inverse(error_matrix(g, ErrorConvention.LEFT, Xhat.matrix, X.matrix))
    return TangentVector(Xhat, g.Ad(El_inv) @ np.asarray(u, dtype=float), Frame.BODY)


def right_synchronous_term(Xhat: GroupElement, X: GroupElement, v: Sequence[float]) -> TangentVector:
    """(Ad_{Xhat X^-1} v) Xhat, the field keeping E_r constant for a right system (analysis only)."""
    g = X.group
    Er = error_matrix(g, ErrorConvention.RIGHT, Xhat.matrix, X.matrix)
    return TangentVector(Xhat, g.Ad(Er) @ np.asarray(v, dtype=float), Frame.SPATIAL)
