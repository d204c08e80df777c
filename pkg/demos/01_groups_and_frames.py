"""
Matrix groups, coordinates and frames
=====================================

exp/log on SO(3) and SE(3), the adjoint, and the two ways of writing a
tangent vector at X (Body: X hat(c), Spatial: hat(c) X).
"""

# %%
import numpy as np

from lieobs import SE3, SO3, Frame, GroupElement, TangentVector, frobenius_metric, to_frame
from lieobs.groups import expm_series

rng = np.random.default_rng(0)

# %% exp and log are inverse below angle pi
w = np.array([0.3, -1.2, 2.0])
R = SO3.exp(w)
print("rotation angle      :", np.linalg.norm(w))
print("log(exp(w)) - w     :", np.abs(SO3.log(R) - w).max())
print("Rodrigues vs series :", np.abs(R - expm_series(SO3.hat(w))).max())

v = np.concatenate([w, [1.0, 2.0, 3.0]])
X = SE3.exp(v)
print("SE3 round trip      :", np.abs(SE3.log(X) - v).max())

# %% every kernel also takes a stack
V = rng.uniform(-1, 1, (1000, 6))
Ms = SE3.exp(V)
print("stack of", Ms.shape[0], "poses, max round-trip error", np.abs(SE3.log(Ms) - V).max())

# %% the adjoint moves algebra elements between frames
Xe = GroupElement(SE3, X)
body = TangentVector(Xe, rng.standard_normal(6), Frame.BODY)
spatial = to_frame(body, Frame.SPATIAL)
print("Ad_X c == spatial coords :", np.allclose(SE3.Ad(X) @ body.coords, spatial.coords))
print("same ambient matrix      :", np.allclose(body.ambient, spatial.ambient))

# %% Frobenius metrics: bi-invariant on SO(3), one-sided on SE(3)
print("SO(3) gram:", np.diag(frobenius_metric(SO3, "bi").gram))
print("SE(3) gram:", np.diag(frobenius_metric(SE3, "right").gram))
try:
    frobenius_metric(SE3, "bi")
except Exception as exc:
    print("SE(3) bi-invariant Frobenius metric rejected:", exc)
