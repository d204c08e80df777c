"""Typed values on matrix Lie groups: elements, tangent vectors and metrics.

All values are immutable.  Arrays held by them are made read-only.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .exceptions import MembershipError, UsageError
from .groups import SE3, SO3, GroupDescriptor, group_by_name

MEMBERSHIP_TOL = 1e-9
REPROJECT_TOL = 1e-12


class Frame(enum.Enum):
    BODY = "body"          # ambient matrix base @ hat(coords)
    SPATIAL = "spatial"    # ambient matrix hat(coords) @ base


class Invariance(enum.Enum):
    NONE = "none"
    LEFT = "left"
    RIGHT = "right"
    BI = "bi"

    @property
    def is_left(self) -> bool:
        return self in (Invariance.LEFT, Invariance.BI)

    @property
    def is_right(self) -> bool:
        return self in (Invariance.RIGHT, Invariance.BI)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GroupElement:
    """A group element stored as its matrix representation.

    Matrices within ``MEMBERSHIP_TOL`` of the group are accepted; those
    with residual above ``REPROJECT_TOL`` are silently reprojected first.
    """

    group: GroupDescriptor
    matrix: np.ndarray

    def __post_init__(self):
        M = self.group.check_matrix(self.matrix)
        if not np.all(np.isfinite(M)):
            raise MembershipError(f"{self.group.name} matrix has non-finite entries")
        r = self.group.residual(M)
        if r > MEMBERSHIP_TOL:
            raise MembershipError(
                f"matrix is not in {self.group.name}: membership residual {r:.3e} > {MEMBERSHIP_TOL:g}")
        if r > REPROJECT_TOL:
            M = self.group.project(M)
        object.__setattr__(self, "matrix", _frozen(M))

    @classmethod
    def identity(cls, group: GroupDescriptor) -> "GroupElement":
        return cls(group, group.identity())

    @classmethod
    def exp(cls, group: GroupDescriptor, coords) -> "GroupElement":
        return cls(group, group.exp(group.check_coords(coords)))

    def log(self) -> np.ndarray:
        return self.group.log(self.matrix)

    def inv(self) -> "GroupElement":
        return invert(self)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return compose(self, other)

    def residual(self) -> float:
        return self.group.residual(self.matrix)

    def allclose(self, other: "GroupElement", atol: float = 1e-12) -> bool:
        return self.group is other.group and np.allclose(self.matrix, other.matrix, rtol=0, atol=atol)

    def __repr__(self) -> str:
        return f"GroupElement({self.group.name}, {self.matrix.tolist()})"


def _same_group(a: GroupElement, b: GroupElement) -> GroupDescriptor:
    if a.group is not b.group:
        raise UsageError(f"group mismatch: {a.group.name} vs {b.group.name}")
    return a.group


def compose(a: GroupElement, b: GroupElement) -> GroupElement:
    g = _same_group(a, b)
    return GroupElement(g, a.matrix @ b.matrix)


def invert(a: GroupElement) -> GroupElement:
    return GroupElement(a.group, a.group.inverse(a.matrix))


def adjoint(X: GroupElement, v) -> np.ndarray:
    """Coordinates of Ad_X v, i.e. vee(X hat(v) X^-1)."""
    g = X.group
    return g.Ad(X.matrix) @ g.check_coords(v)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector at ``base`` given by algebra coordinates in a frame."""

    base: GroupElement
    coords: np.ndarray
    frame: Frame = Frame.BODY

    def __post_init__(self):
        c = self.base.group.check_coords(self.coords)
        if not np.all(np.isfinite(c)):
            raise UsageError("tangent coordinates must be finite")
        object.__setattr__(self, "coords", _frozen(c))

    @property
    def group(self) -> GroupDescriptor:
        return self.base.group

    @property
    def ambient(self) -> np.ndarray:
        """The tangent vector as an n x n matrix in the embedding space."""
        H = self.group.hat(self.coords)
        if self.frame is Frame.BODY:
            return self.base.matrix @ H
        return H @ self.base.matrix

    def in_frame(self, frame: Frame) -> np.ndarray:
        """Coordinates of this vector in ``frame`` (no object allocated)."""
        if frame is self.frame:
            return np.array(self.coords)
        g = self.group
        if frame is Frame.SPATIAL:
            return g.Ad(self.base.matrix) @ self.coords
        return g.Ad(g.inverse(self.base.matrix)) @ self.coords

    def __neg__(self) -> "TangentVector":
        return TangentVector(self.base, -self.coords, self.frame)

    def __add__(self, other: "TangentVector") -> "TangentVector":
        if other.base is not self.base and not other.base.allclose(self.base):
            raise UsageError("cannot add tangent vectors at different base points")
        return TangentVector(self.base, self.coords + other.in_frame(self.frame), self.frame)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return self + (-other)


def to_frame(t: TangentVector, target: Frame) -> TangentVector:
    if target is t.frame:
        return t
    return TangentVector(t.base, t.in_frame(target), target)


def tangent_from_ambient(base: GroupElement, A: np.ndarray, frame: Frame = Frame.BODY) -> TangentVector:
    """Read a tangent vector off its ambient matrix representative."""
    g = base.group
    Xinv = g.inverse(base.matrix)
    H = Xinv @ A if frame is Frame.BODY else A @ Xinv
    return TangentVector(base, g.vee(H), frame)


def tangency_residual(base: GroupElement, A: np.ndarray) -> float:
    """Distance of ``A`` from the tangent space at ``base`` (Frobenius)."""
    g = base.group
    H = g.inverse(base.matrix) @ A
    return float(np.linalg.norm(H - g.hat(g.vee(H))))


@dataclass(frozen=True, eq=False)
class Metric:
    """Inner product on the algebra, transported to every tangent space.

    ``gram`` acts on Body coordinates for a left-invariant metric and on
    Spatial coordinates for a right-invariant one.  A bi-invariant gram
    must be Ad-invariant; this is verified on construction.
    """

    gram: np.ndarray
    invariance: Invariance
    name: str = field(default="custom")
    gram_inv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        G = np.array(self.gram, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise UsageError(f"gram must be square, got shape {G.shape}")
        if np.max(np.abs(G - G.T)) > 1e-12:
            raise UsageError("gram must be symmetric")
        if np.min(np.linalg.eigvalsh(G)) <= 0.0:
            raise UsageError("gram must be positive definite")
        if self.invariance is Invariance.NONE:
            raise UsageError("metrics are left, right or bi-invariant")
        object.__setattr__(self, "gram", _frozen(G))
        object.__setattr__(self, "gram_inv", _frozen(np.linalg.inv(G)))
        if self.invariance is Invariance.BI:
            g = self.group
            rng = np.random.default_rng(0)
            for _ in range(8):
                Ad = g.Ad(g.exp(rng.uniform(-2, 2, g.dim_algebra)))
                if np.max(np.abs(Ad.T @ G @ Ad - G)) > 1e-10:
                    raise UsageError(f"gram is not Ad-invariant on {g.name}; cannot be bi-invariant")

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @property
    def group(self) -> GroupDescriptor:
        return {3: SO3, 6: SE3}[self.dim]

    @property
    def frame(self) -> Frame:
        """Frame whose coordinates the gram acts on."""
        return Frame.SPATIAL if self.invariance is Invariance.RIGHT else Frame.BODY


def metric_inner(m: Metric, v, w) -> float:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape != (m.dim,) or w.shape != (m.dim,):
        raise UsageError(f"metric of dimension {m.dim} got vectors of shapes {v.shape}, {w.shape}")
    return float(v @ m.gram @ w)


def tangent_inner(m: Metric, a: TangentVector, b: TangentVector) -> float:
    """Riemannian inner product of two tangent vectors at the same point."""
    return metric_inner(m, a.in_frame(m.frame), b.in_frame(m.frame))


def frobenius_gram(g: GroupDescriptor) -> np.ndarray:
    """Gram of the hat basis under tr(A^T B): 2I on so(3), diag(2,2,2,1,1,1) on se(3)."""
    B = g.basis()
    return np.array([[np.sum(a * b) for b in B] for a in B])


def frobenius_metric(g: GroupDescriptor | str, invariance: Invariance | str) -> Metric:
    if isinstance(g, str):
        g = group_by_name(g)
    if isinstance(invariance, str):
        invariance = Invariance(invariance)
    return Metric(frobenius_gram(g), invariance, name=f"frobenius-{invariance.value}")
