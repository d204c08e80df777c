"""Concrete matrix groups SO(3) and SE(3).

Everything here works on plain ``numpy`` arrays so it can sit in the
integrator's inner loop.  The typed wrappers live in :mod:`lieobs.lie_core`.

Coordinate conventions
----------------------
so(3):  v = (w1, w2, w3),  hat(v) = [[0, -w3, w2], [w3, 0, -w1], [-w2, w1, 0]]
se(3):  v = (w; V) with the rotational part first, hat(v) = [[hat(w), V], [0, 0]]
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import SingularityError, UsageError

# series/closed-form switch for the exp/log coefficient functions
SMALL_ANGLE = 1e-6
# log is rejected once 1 + tr(R) drops below this (rotation angle near pi)
LOG_TRACE_MARGIN = 1e-9

_I3 = np.eye(3)
_BOTTOM = np.array([0.0, 0.0, 0.0, 1.0])


def skew_project(Z: np.ndarray) -> np.ndarray:
    """Frobenius-orthogonal projection onto skew-symmetric matrices, (Z - Z^T)/2."""
    Z = np.asarray(Z, dtype=float)
    if Z.ndim < 2 or Z.shape[-1] != Z.shape[-2]:
        raise UsageError(f"skew_project expects a square matrix, got shape {Z.shape}")
    return 0.5 * (Z - np.swapaxes(Z, -1, -2))


def tr(A: np.ndarray) -> np.ndarray:
    """Transpose of the trailing two axes (works on stacks)."""
    return A.T if A.ndim == 2 else np.swapaxes(A, -1, -2)


def mv(A: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Matrix-vector product broadcasting over leading axes."""
    if A.ndim == 2 and v.ndim == 1:
        return A @ v
    return (A @ v[..., None])[..., 0]


# --------------------------------------------------------------------------
# SO(3) kernels
#
# All kernels accept a single vector/matrix or a stack with leading batch
# axes.  The single case takes a scalar fast path because it sits in the
# integrator's inner loop.
# --------------------------------------------------------------------------

def so3_hat(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        x, y, z = w
        return np.array([[0.0, -z, y],
                         [z, 0.0, -x],
                         [-y, x, 0.0]])
    out = np.zeros(w.shape[:-1] + (3, 3))
    x, y, z = w[..., 0], w[..., 1], w[..., 2]
    out[..., 0, 1], out[..., 0, 2] = -z, y
    out[..., 1, 0], out[..., 1, 2] = z, -x
    out[..., 2, 0], out[..., 2, 1] = -y, x
    return out


def so3_vee(S: np.ndarray) -> np.ndarray:
    if S.ndim == 2:
        return np.array([S[2, 1], S[0, 2], S[1, 0]])
    return np.stack([S[..., 2, 1], S[..., 0, 2], S[..., 1, 0]], axis=-1)


def vee_skew(A: np.ndarray) -> np.ndarray:
    """vee(P(A)) for a 3x3 block, without forming the projection."""
    if A.ndim == 2:
        return 0.5 * np.array([A[2, 1] - A[1, 2], A[0, 2] - A[2, 0], A[1, 0] - A[0, 1]])
    return 0.5 * np.stack([A[..., 2, 1] - A[..., 1, 2],
                           A[..., 0, 2] - A[..., 2, 0],
                           A[..., 1, 0] - A[..., 0, 1]], axis=-1)


# Coefficient functions of the angle t, for a float (math) or an array
# (numpy).  Each switches to its Taylor series below ``cut``.  The
# cancelling closed forms lose about eps/t^2, so those switch late (0.2)
# and carry series long enough to stay at machine precision there.
SERIES_CUT = 0.2


def _switch(t, series, closed, closed_np, cut=SMALL_ANGLE):
    if isinstance(t, float):
        return series(t) if t < cut else closed(t)
    small = t < cut
    ts = np.where(small, 1.0, t)
    return np.where(small, series(t), closed_np(ts))


def _c_sinc(t):            # sin t / t
    return _switch(t, lambda t: 1.0 - t * t / 6.0 + t**4 / 120.0,
                   lambda t: math.sin(t) / t, lambda t: np.sin(t) / t)


def _c_cos2(t):            # (1 - cos t) / t^2 = sinc(t/2)^2 / 2, which does not cancel
    return _switch(t, lambda t: 0.5 - t * t / 24.0 + t**4 / 720.0,
                   lambda t: 0.5 * (math.sin(0.5 * t) / (0.5 * t)) ** 2,
                   lambda t: 0.5 * (np.sin(0.5 * t) / (0.5 * t)) ** 2)


def _c_sin3(t):            # (t - sin t) / t^3
    return _switch(t, lambda t: (1.0 / 6.0 - t * t / 120.0 + t**4 / 5040.0 - t**6 / 362880.0
                                 + t**8 / 39916800.0),
                   lambda t: (t - math.sin(t)) / t**3, lambda t: (t - np.sin(t)) / t**3, SERIES_CUT)


def _c_jinv(t):            # (1 - t sin t / (2 (1 - cos t))) / t^2
    return _switch(t, lambda t: (1.0 / 12.0 + t * t / 720.0 + t**4 / 30240.0 + t**6 / 1209600.0
                                 + t**8 / 47900160.0),
                   lambda t: (1.0 - t * math.sin(t) / (2.0 * (1.0 - math.cos(t)))) / (t * t),
                   lambda t: (1.0 - t * np.sin(t) / (2.0 * (1.0 - np.cos(t)))) / (t * t), SERIES_CUT)


def _rodrigues(x: float, y: float, z: float, a: float, b: float) -> np.ndarray:
    # I + a K + b K^2 with K = hat(x, y, z), using K^2 = w w^T - |w|^2 I
    xy, xz, yz = x * y, x * z, y * z
    xx, yy, zz = x * x, y * y, z * z
    return np.array([[1.0 - b * (yy + zz), b * xy - a * z, b * xz + a * y],
                     [b * xy + a * z, 1.0 - b * (xx + zz), b * yz - a * x],
                     [b * xz - a * y, b * yz + a * x, 1.0 - b * (xx + yy)]])


def _poly(w, fa, fb) -> np.ndarray:
    """I + fa(|w|) hat(w) + fb(|w|) hat(w)^2, single or stacked."""
    w = np.asarray(w, dtype=float)
    if w.ndim == 1:
        x, y, z = float(w[0]), float(w[1]), float(w[2])
        t = math.sqrt(x * x + y * y + z * z)
        a = fa(t) if callable(fa) else fa
        return _rodrigues(x, y, z, a, fb(t))
    w = w[..., :3]
    t = np.sqrt(np.sum(w * w, axis=-1))
    a = fa(t) if callable(fa) else np.full(t.shape, fa)
    b = fb(t)
    K = so3_hat(w)
    return _I3 + a[..., None, None] * K + b[..., None, None] * (K @ K)


def so3_exp(w) -> np.ndarray:
    return _poly(w, _c_sinc, _c_cos2)


def so3_left_jacobian(w) -> np.ndarray:
    return _poly(w, _c_cos2, _c_sin3)


def so3_left_jacobian_inv(w) -> np.ndarray:
    return _poly(w, -0.5, _c_jinv)


def _so3_log1(R: np.ndarray) -> np.ndarray:
    tr_ = R[0, 0] + R[1, 1] + R[2, 2]
    if tr_ <= -1.0 + LOG_TRACE_MARGIN:
        raise SingularityError(
            f"SO(3) log undefined near rotation angle pi (trace {tr_:.17g})")
    # atan2 keeps the angle well conditioned over the whole admissible range
    s = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    sin_t = math.sqrt(float(s @ s))
    cos_t = 0.5 * (tr_ - 1.0)
    theta = math.atan2(sin_t, cos_t)
    if theta < SMALL_ANGLE:
        return (1.0 + theta * theta / 6.0) * s
    return (theta / sin_t) * s


def so3_log(R: np.ndarray) -> np.ndarray:
    if R.ndim == 2:
        return _so3_log1(R)
    tr_ = R[..., 0, 0] + R[..., 1, 1] + R[..., 2, 2]
    bad = tr_ <= -1.0 + LOG_TRACE_MARGIN
    if np.any(bad):
        raise SingularityError(
            f"SO(3) log undefined near rotation angle pi (trace {float(tr_[bad].flat[0]):.17g})")
    s = vee_skew(R)
    sin_t = np.sqrt(np.sum(s * s, axis=-1))
    theta = np.arctan2(sin_t, 0.5 * (tr_ - 1.0))
    small = theta < SMALL_ANGLE
    factor = np.where(small, 1.0 + theta * theta / 6.0, theta / np.where(small, 1.0, sin_t))
    return factor[..., None] * s


def so3_residual(M: np.ndarray):
    """||M^T M - I||_F + |det M - 1| (an array for stacks)."""
    r = np.linalg.norm(tr(M) @ M - _I3, axis=(-2, -1)) + np.abs(np.linalg.det(M) - 1.0)
    return float(r) if M.ndim == 2 else r


def so3_project(M: np.ndarray) -> np.ndarray:
    """Closest rotation in Frobenius norm (orthogonal polar factor)."""
    U, _, Vt = np.linalg.svd(M)
    d = np.sign(np.linalg.det(U @ Vt))
    U = U.copy()
    U[..., :, 2] *= d[..., None] if np.ndim(d) else d
    return U @ Vt


# --------------------------------------------------------------------------
# group descriptors
# --------------------------------------------------------------------------

class GroupDescriptor:
    """A concrete matrix Lie group with closed-form exp/log.

    Subclasses supply the raw array kernels; instances are singletons
    (:data:`SO3`, :data:`SE3`) and compare by identity.
    """

    name: str
    dim_algebra: int
    matrix_size: int

    def __repr__(self) -> str:
        return self.name

    def __reduce__(self):
        return (group_by_name, (self.name,))

    def identity(self) -> np.ndarray:
        return np.eye(self.matrix_size)

    def basis(self) -> list[np.ndarray]:
        return [self.hat(e) for e in np.eye(self.dim_algebra)]

    def check_coords(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim_algebra,):
            raise UsageError(
                f"{self.name} algebra vector must have length {self.dim_algebra}, got shape {v.shape}")
        return v

    def check_matrix(self, M) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        n = self.matrix_size
        if M.shape != (n, n):
            raise UsageError(f"{self.name} matrix must be {n}x{n}, got shape {M.shape}")
        return M

    def inverse(self, M: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hat(self, v) -> np.ndarray:
        raise NotImplementedError

    def vee(self, M: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def exp(self, v) -> np.ndarray:
        raise NotImplementedError

    def log(self, M: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def Ad(self, M: np.ndarray) -> np.ndarray:
        """Matrix of Ad_M acting on algebra coordinates."""
        raise NotImplementedError

    def ad(self, v) -> np.ndarray:
        """Matrix of ad_v = [v, .] acting on algebra coordinates."""
        raise NotImplementedError

    def residual(self, M: np.ndarray) -> float:
        raise NotImplementedError

    def dexpinv(self, sigma: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """sigma' = xi + [sigma, xi]/2 + [sigma, [sigma, xi]]/12 (see :func:`dexpinv_body`)."""
        a = self.ad(sigma)
        axi = mv(a, xi)
        return xi + 0.5 * axi + mv(a, axi) / 12.0

    def project(self, M: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _SO3(GroupDescriptor):
    name = "SO3"
    dim_algebra = 3
    matrix_size = 3

    def inverse(self, M):
        return tr(M)

    def hat(self, v):
        return so3_hat(v)

    def vee(self, M):
        return so3_vee(M)

    def exp(self, v):
        return so3_exp(v)

    def log(self, M):
        return so3_log(M)

    def Ad(self, M):
        return M

    def ad(self, v):
        return so3_hat(v)

    def dexpinv(self, sigma, xi):
        if sigma.ndim > 1 or xi.ndim > 1:
            return GroupDescriptor.dexpinv(self, sigma, xi)
        # [a, b] is the cross product on so(3)
        a1, a2, a3 = float(sigma[0]), float(sigma[1]), float(sigma[2])
        x1, x2, x3 = float(xi[0]), float(xi[1]), float(xi[2])
        c1, c2, c3 = a2 * x3 - a3 * x2, a3 * x1 - a1 * x3, a1 * x2 - a2 * x1
        d1, d2, d3 = a2 * c3 - a3 * c2, a3 * c1 - a1 * c3, a1 * c2 - a2 * c1
        return np.array([x1 + 0.5 * c1 + d1 / 12.0, x2 + 0.5 * c2 + d2 / 12.0, x3 + 0.5 * c3 + d3 / 12.0])

    def residual(self, M):
        return so3_residual(M)

    def project(self, M):
        return so3_project(M)


class _SE3(GroupDescriptor):
    name = "SE3"
    dim_algebra = 6
    matrix_size = 4

    def inverse(self, M):
        Rt = tr(M[..., :3, :3])
        out = np.empty(M.shape)
        out[..., :3, :3] = Rt
        out[..., :3, 3] = -mv(Rt, M[..., :3, 3])
        out[..., 3, :] = _BOTTOM
        return out

    def hat(self, v):
        v = np.asarray(v, dtype=float)
        out = np.zeros(v.shape[:-1] + (4, 4))
        out[..., :3, :3] = so3_hat(v[..., :3])
        out[..., :3, 3] = v[..., 3:]
        return out

    def vee(self, M):
        return np.concatenate([so3_vee(M[..., :3, :3]), M[..., :3, 3]], axis=-1)

    def exp(self, v):
        v = np.asarray(v, dtype=float)
        out = np.empty(v.shape[:-1] + (4, 4))
        if v.ndim == 1:
            out[:3, :3] = so3_exp(v)
            out[:3, 3] = so3_left_jacobian(v) @ v[3:]
        else:
            # one hat and one norm serve both the rotation and the left Jacobian
            w = v[..., :3]
            t = np.sqrt(np.sum(w * w, axis=-1))
            K = so3_hat(w)
            K2 = K @ K
            out[..., :3, :3] = _I3 + _c_sinc(t)[..., None, None] * K + _c_cos2(t)[..., None, None] * K2
            J = _I3 + _c_cos2(t)[..., None, None] * K + _c_sin3(t)[..., None, None] * K2
            out[..., :3, 3] = mv(J, v[..., 3:])
        out[..., 3, :] = _BOTTOM
        return out

    def log(self, M):
        w = so3_log(M[..., :3, :3])
        return np.concatenate([w, mv(so3_left_jacobian_inv(w), M[..., :3, 3])], axis=-1)

    def Ad(self, M):
        R = M[..., :3, :3]
        out = np.empty(M.shape[:-2] + (6, 6))
        out[..., :3, :3] = R
        out[..., :3, 3:] = 0.0
        out[..., 3:, 3:] = R
        out[..., 3:, :3] = so3_hat(M[..., :3, 3]) @ R
        return out

    def ad(self, v):
        v = np.asarray(v, dtype=float)
        W = so3_hat(v[..., :3])
        out = np.zeros(v.shape[:-1] + (6, 6))
        out[..., :3, :3] = W
        out[..., 3:, 3:] = W
        out[..., 3:, :3] = so3_hat(v[..., 3:])
        return out

    def residual(self, M):
        bottom = np.linalg.norm(M[..., 3, :] - _BOTTOM, axis=-1)
        r = so3_residual(M[..., :3, :3]) + bottom
        return float(r) if M.ndim == 2 else r

    def project(self, M):
        out = np.array(M, dtype=float)
        out[..., :3, :3] = so3_project(M[..., :3, :3])
        out[..., 3, :] = _BOTTOM
        return out


SO3 = _SO3()
SE3 = _SE3()
GROUPS = {"SO3": SO3, "SE3": SE3}


def group_by_name(name: str) -> GroupDescriptor:
    try:
        return GROUPS[name]
    except KeyError:
        raise UsageError(f"unknown group {name!r}; expected one of {sorted(GROUPS)}") from None


# --------------------------------------------------------------------------
# module-level API
# --------------------------------------------------------------------------

def hat(g: GroupDescriptor, v) -> np.ndarray:
    return g.hat(g.check_coords(v))


def vee(g: GroupDescriptor, M) -> np.ndarray:
    return g.vee(g.check_matrix(M))


def exp_group(g: GroupDescriptor, v) -> np.ndarray:
    """Closed-form exponential, returned as a raw matrix."""
    return g.exp(g.check_coords(v))


def log_group(g: GroupDescriptor, M) -> np.ndarray:
    """Principal logarithm.  Raises :class:`SingularityError` near angle pi."""
    return g.log(g.check_matrix(M))


def membership_residual(g: GroupDescriptor, M) -> float:
    return g.residual(g.check_matrix(M))


def dexpinv_body(g: GroupDescriptor, sigma: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Chart velocity for X = X0 exp(sigma) driven by body velocity ``xi``.

    Truncated after the second-order Bernoulli term, enough for RKMK order 4:
    sigma' = xi + [sigma, xi]/2 + [sigma, [sigma, xi]]/12.
    """
    return g.dexpinv(sigma, xi)


def expm_series(A: np.ndarray, terms: int = 30) -> np.ndarray:
    """Truncated power series of the matrix exponential (test oracle)."""
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms):
        term = term @ A / k
        out = out + term
    return out


def random_coords(g: GroupDescriptor, rng: np.random.Generator, max_norm: float = 3.0) -> np.ndarray:
    """Algebra vector with uniformly random direction and norm in [0, max_norm)."""
    v = rng.standard_normal(g.dim_algebra)
    v /= np.linalg.norm(v)
    return v * max_norm * rng.uniform()


def random_matrix(g: GroupDescriptor, rng: np.random.Generator, max_norm: float = 3.0) -> np.ndarray:
    return g.exp(random_coords(g, rng, max_norm))


def distance(g: GroupDescriptor, A: np.ndarray, B: np.ndarray) -> float:
    """||log(A B^-1)||, the group distance used throughout the checks (stacks give an array)."""
    d = np.linalg.norm(g.log(A @ g.inverse(B)), axis=-1)
    return float(d) if np.ndim(d) == 0 else d
