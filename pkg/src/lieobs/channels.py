"""Measurement channels with replayable noise traces.

Noise is generated by a documented, platform-independent generator so a
seed reproduces the same trace everywhere:

* SplitMix64 produces 64-bit words; the top 53 bits give a uniform in [0, 1).
* Standard normals come from the Marsaglia polar method, both variates of
  each accepted pair are used in order.
* A noise vector is ``amplitude * z / 3`` for a standard normal vector z,
  radially clipped to norm ``amplitude``, so every sample is bounded.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import ChannelError, UsageError
from .groups import GroupDescriptor
from .lie_core import GroupElement

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK
        self._spare: Optional[float] = None

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        while True:
            u = 2.0 * self.uniform() - 1.0
            v = 2.0 * self.uniform() - 1.0
            s = u * u + v * v
            if 0.0 < s < 1.0:
                m = math.sqrt(-2.0 * math.log(s) / s)
                self._spare = v * m
                return u * m


def bounded_noise_trace(seed: int, length: int, dim: int, amplitude: float) -> np.ndarray:
    """(length, dim) array of noise vectors with norm <= amplitude."""
    if amplitude < 0:
        raise UsageError("noise amplitude must be non-negative")
    rng = SplitMix64(seed)
    out = np.empty((length, dim))
    for k in range(length):
        v = np.array([rng.normal() for _ in range(dim)]) * (amplitude / 3.0)
        n = float(np.linalg.norm(v))
        if n > amplitude:
            v *= amplitude / n
        out[k] = v
    return out


class StateNoise(enum.Enum):
    NONE = "none"
    LEFT_MULTIPLICATIVE = "left"     # Y = N X
    RIGHT_MULTIPLICATIVE = "right"   # Y = X N


class InputNoise(enum.Enum):
    NONE = "none"
    ADDITIVE = "additive"            # w = u + delta


@dataclass(frozen=True, eq=False)
class MeasurementChannel:
    """Turns (X, u) into measurements (Y, w).

    Traces hold one sample per grid point; during the step [t_k, t_{k+1})
    sample k is held.  State noise samples are group elements, given either
    as matrices or as algebra coordinates (then N_k = exp(coords)).
    """

    state_noise: StateNoise = StateNoise.NONE
    state_trace: Optional[np.ndarray] = None
    input_noise: InputNoise = InputNoise.NONE
    input_trace: Optional[np.ndarray] = None
    group: Optional[GroupDescriptor] = None
    times: Optional[np.ndarray] = None
    state_coords: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "state_noise", StateNoise(self.state_noise))
        object.__setattr__(self, "input_noise", InputNoise(self.input_noise))
        if self.state_noise is not StateNoise.NONE:
            if self.state_trace is None or self.group is None:
                raise UsageError("state noise needs a trace and a group")
            T = np.asarray(self.state_trace, dtype=float)
            if T.ndim == 2:
                object.__setattr__(self, "state_coords", T)
                T = np.array([self.group.exp(self.group.check_coords(c)) for c in T])
            n = self.group.matrix_size
            if T.ndim != 3 or T.shape[1:] != (n, n):
                raise UsageError("state trace must be coordinates (K, dim) or matrices (K, n, n)")
            for M in T:
                GroupElement(self.group, M)
            object.__setattr__(self, "state_trace", T)
        if self.input_noise is not InputNoise.NONE:
            if self.input_trace is None:
                raise UsageError("additive input noise needs a trace")
            object.__setattr__(self, "input_trace", np.asarray(self.input_trace, dtype=float))

    @classmethod
    def from_seed(cls, group: GroupDescriptor, times: np.ndarray,
                  state_noise: StateNoise | str = "none", state_amplitude: float = 0.0, state_seed: int = 0,
                  input_noise: InputNoise | str = "none", input_amplitude: float = 0.0,
                  input_seed: int = 1) -> "MeasurementChannel":
        K, dim = len(times), group.dim_algebra
        sn, inn = StateNoise(state_noise), InputNoise(input_noise)
        st = bounded_noise_trace(state_seed, K, dim, state_amplitude) if sn is not StateNoise.NONE else None
        it = bounded_noise_trace(input_seed, K, dim, input_amplitude) if inn is not InputNoise.NONE else None
        return cls(sn, st, inn, it, group, np.asarray(times, dtype=float))

    @property
    def active(self) -> bool:
        return self.state_noise is not StateNoise.NONE or self.input_noise is not InputNoise.NONE

    def __len__(self) -> int:
        lens = [len(t) for t in (self.state_trace, self.input_trace) if t is not None]
        return min(lens) if lens else 0

    def check_covers(self, times: np.ndarray) -> None:
        if self.active and len(self) < len(times):
            raise ChannelError(f"noise trace has {len(self)} samples, grid has {len(times)} points")

    def sample(self, k: int):
        """(N_k or None, 'left'/'right', delta_k or None) for step ``k``."""
        N = delta = None
        if self.state_noise is not StateNoise.NONE:
            if k >= len(self.state_trace):
                raise ChannelError(f"state noise trace exhausted at sample {k}")
            N = self.state_trace[k]
        if self.input_noise is not InputNoise.NONE:
            if k >= len(self.input_trace):
                raise ChannelError(f"input noise trace exhausted at sample {k}")
            delta = self.input_trace[k]
        return N, self.state_noise.value, delta

    def index_at(self, t: float) -> int:
        if self.times is None:
            raise ChannelError("channel has no time grid")
        k = int(np.searchsorted(self.times, t + 1e-12 * max(1.0, abs(t)), side="right")) - 1
        if k < 0:
            raise ChannelError(f"t={t} precedes the noise trace")
        return k


def apply_channel(ch: MeasurementChannel, t: float, X: GroupElement, u) -> tuple[GroupElement, np.ndarray]:
    """Measurements at grid time ``t``: Y = N X, X N or X;  w = u + delta or u."""
    u = np.asarray(u, dtype=float)
    if not ch.active:
        return X, u
    N, side, delta = ch.sample(ch.index_at(t))
    Y = X
    if N is not None:
        Y = GroupElement(X.group, N @ X.matrix if side == "left" else X.matrix @ N)
    return Y, (u if delta is None else u + delta)
