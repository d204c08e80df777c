"""Invariant kinematic systems X' = X u (left) and X' = v X (right)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .exceptions import UsageError
from .groups import GroupDescriptor, mv
from .lie_core import Frame, GroupElement, TangentVector


class Handedness(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def frame(self) -> Frame:
        return Frame.BODY if self is Handedness.LEFT else Frame.SPATIAL


class SignalKind(enum.Enum):
    CONSTANT = "constant"
    SINUSOID_SUM = "sinusoid_sum"
    PIECEWISE_CONSTANT = "piecewise_constant"
    CALLBACK = "callback"


@dataclass(frozen=True, eq=False)
class InputSignal:
    """An admissible input t -> algebra coordinates.

    Build with :meth:`constant`, :meth:`sinusoid_sum`,
    :meth:`piecewise_constant` or, for programmatic use only,
    :meth:`callback`.
    """

    kind: SignalKind
    dim: int
    params: dict = field(default_factory=dict)

    @classmethod
    def constant(cls, coords) -> "InputSignal":
        c = np.array(coords, dtype=float)
        c.flags.writeable = False
        return cls(SignalKind.CONSTANT, c.size, {"value": c})

    @classmethod
    def sinusoid_sum(cls, terms: Sequence[Sequence[Sequence[float]]], offset=None) -> "InputSignal":
        """``terms[i]`` lists (amplitude, angular frequency, phase) for coordinate i.

        u_i(t) = offset_i + sum_j a_ij sin(w_ij t + phi_ij)
        """
        dim = len(terms)
        off = np.zeros(dim) if offset is None else np.array(offset, dtype=float)
        if off.shape != (dim,):
            raise UsageError("offset length must match the number of coordinates")
        clean = tuple(tuple((float(a), float(w), float(p)) for a, w, p in row) for row in terms)
        off.flags.writeable = False
        return cls(SignalKind.SINUSOID_SUM, dim, {"terms": clean, "offset": off})

    @classmethod
    def piecewise_constant(cls, breakpoints: Sequence[tuple[float, Sequence[float]]]) -> "InputSignal":
        """Right-continuous steps; before the first breakpoint the first value holds."""
        if not breakpoints:
            raise UsageError("piecewise_constant needs at least one breakpoint")
        times = np.array([float(t) for t, _ in breakpoints])
        if np.any(np.diff(times) <= 0):
            raise UsageError("breakpoint times must be strictly increasing")
        values = np.array([np.asarray(v, dtype=float) for _, v in breakpoints])
        times.flags.writeable = False
        values.flags.writeable = False
        return cls(SignalKind.PIECEWISE_CONSTANT, values.shape[1], {"times": times, "values": values})

    @classmethod
    def callback(cls, fn: Callable[[float], Sequence[float]], dim: int) -> "InputSignal":
        return cls(SignalKind.CALLBACK, dim, {"fn": fn})

    @property
    def breakpoints(self) -> np.ndarray:
        if self.kind is SignalKind.PIECEWISE_CONSTANT:
            return self.params["times"]
        return np.empty(0)

    def __call__(self, t: float) -> np.ndarray:
        return eval_input(self, t)

    def on_interval(self, t: float, t_start: float) -> np.ndarray:
        """Value used by an integrator stage at ``t`` inside the step starting at ``t_start``.

        Piecewise-constant signals are held at their step-start value so a
        stage landing exactly on the next breakpoint does not see the jump.
        """
        if self.kind is SignalKind.PIECEWISE_CONSTANT:
            return eval_input(self, t_start)
        return eval_input(self, t)

    def to_dict(self) -> dict:
        if self.kind is SignalKind.CONSTANT:
            return {"kind": "constant", "value": self.params["value"].tolist()}
        if self.kind is SignalKind.SINUSOID_SUM:
            return {"kind": "sinusoid_sum",
                    "offset": self.params["offset"].tolist(),
                    "terms": [[list(t) for t in row] for row in self.params["terms"]]}
        if self.kind is SignalKind.PIECEWISE_CONSTANT:
            return {"kind": "piecewise_constant",
                    "breakpoints": [[float(t), v.tolist()]
                                    for t, v in zip(self.params["times"], self.params["values"])]}
        raise UsageError("callback signals are not serializable")

    @classmethod
    def from_dict(cls, d: dict) -> "InputSignal":
        kind = d["kind"]
        if kind == "constant":
            return cls.constant(d["value"])
        if kind == "sinusoid_sum":
            return cls.sinusoid_sum(d["terms"], d.get("offset"))
        if kind == "piecewise_constant":
            return cls.piecewise_constant([(t, v) for t, v in d["breakpoints"]])
        raise UsageError(f"unknown input kind {kind!r}")


def eval_input(s: InputSignal, t: float) -> np.ndarray:
    p = s.params
    if s.kind is SignalKind.CONSTANT:
        return np.array(p["value"])
    if s.kind is SignalKind.SINUSOID_SUM:
        out = np.array(p["offset"])
        for i, row in enumerate(p["terms"]):
            for a, w, phi in row:
                out[i] += a * math.sin(w * t + phi)
        return out
    if s.kind is SignalKind.PIECEWISE_CONSTANT:
        k = int(np.searchsorted(p["times"], t, side="right")) - 1
        return np.array(p["values"][max(k, 0)])
    return np.asarray(p["fn"](t), dtype=float).reshape(s.dim)


@dataclass(frozen=True, eq=False)
class InvariantSystem:
    group: GroupDescriptor
    handedness: Handedness
    input: InputSignal

    def __post_init__(self):
        if self.input.dim != self.group.dim_algebra:
            raise UsageError(
                f"input has {self.input.dim} coordinates, {self.group.name} needs {self.group.dim_algebra}")

    def body_velocity(self, X: np.ndarray, t: float, t_start: float | None = None) -> np.ndarray:
        """Body-frame velocity at raw matrix ``X`` (integrator fast path)."""
        c = self.input(t) if t_start is None else self.input.on_interval(t, t_start)
        if self.handedness is Handedness.LEFT:
            return c
        return mv(self.group.Ad(self.group.inverse(X)), c)


def vector_field(sys: InvariantSystem, X: GroupElement, t: float) -> TangentVector:
    return TangentVector(X, eval_input(sys.input, t), sys.handedness.frame)


def convert_input(sys: InvariantSystem, X: GroupElement, t: float) -> np.ndarray:
    """Input of the equivalent representation with the opposite handedness.

    Left system: v = Ad_X u.  Right system: u = Ad_{X^-1} v.
    """
    c = eval_input(sys.input, t)
    Ad = sys.group.Ad(X.matrix)
    if sys.handedness is Handedness.LEFT:
        return Ad @ c
    return sys.group.Ad(sys.group.inverse(X.matrix)) @ c


class InputBatch:
    """Several signals of one dimension evaluated together, giving (B, dim) arrays.

    Constant and sinusoid-sum signals are evaluated in one vectorized
    expression; any other mix falls back to evaluating each signal.
    """

    def __init__(self, signals: Sequence[InputSignal]):
        signals = tuple(signals)
        if not signals:
            raise UsageError("InputBatch needs at least one signal")
        dims = {s.dim for s in signals}
        if len(dims) != 1:
            raise UsageError(f"signals in a batch must share a dimension, got {sorted(dims)}")
        self.signals = signals
        self.dim = dims.pop()
        self._vec = all(s.kind in (SignalKind.CONSTANT, SignalKind.SINUSOID_SUM) for s in signals)
        if self._vec:
            B, d = len(signals), self.dim
            T = max([len(row) for s in signals if s.kind is SignalKind.SINUSOID_SUM
                     for row in s.params["terms"]] + [0])
            self._off = np.zeros((B, d))
            self._amp = np.zeros((B, d, T))
            self._freq = np.zeros((B, d, T))
            self._phase = np.zeros((B, d, T))
            for b, s in enumerate(signals):
                if s.kind is SignalKind.CONSTANT:
                    self._off[b] = s.params["value"]
                    continue
                self._off[b] = s.params["offset"]
                for i, row in enumerate(s.params["terms"]):
                    for j, (a, w, p) in enumerate(row):
                        self._amp[b, i, j], self._freq[b, i, j], self._phase[b, i, j] = a, w, p

    def __len__(self) -> int:
        return len(self.signals)

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([s.breakpoints for s in self.signals]))

    def __call__(self, t: float) -> np.ndarray:
        return self.on_interval(t, t)

    def on_interval(self, t: float, t_start: float) -> np.ndarray:
        if self._vec:
            return self._off + np.sum(self._amp * np.sin(self._freq * t + self._phase), axis=-1)
        return np.array([s.on_interval(t, t_start) for s in self.signals])
