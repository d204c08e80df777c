"""
Pose observers on SE(3)
=======================

Gradient observer with the right-invariant pose cost, and a gradient-like
observer built from a cost with no invariance at all.  In both cases the
right error obeys E' = -grad_1 f(E, e), whatever the input.
"""

# %%
import numpy as np

from lieobs import (SE3, GroupElement, Handedness, IntegratorConfig, InvariantSystem, frobenius_metric,
                    gradient_like_observer, gradient_observer, se3_pose_cost, simulate_coupled,
                    weighted_frobenius_cost)
from lieobs.costs import grad1_body
from lieobs.groups import distance
from lieobs.integrators import integrate_body
from lieobs.systems import InputSignal

u = InputSignal.sinusoid_sum([[(0.5, 1.0, 0.0)], [(0.4, 0.6, 1.0)], [(0.3, 1.3, 2.0)],
                              [(1.0, 0.5, 0.0)], [(0.5, 0.9, 0.3)], [(0.2, 2.0, 0.0)]])
system = InvariantSystem(SE3, Handedness.LEFT, u)
X0 = GroupElement.exp(SE3, [0.2, 0.1, -0.3, 1.0, 0.0, 0.5])
Xhat0 = GroupElement.exp(SE3, [1.5, -0.5, 0.8, -2.0, 1.0, 0.0])
cfg = IntegratorConfig(step=1e-2)

pose = se3_pose_cost()
skewed = weighted_frobenius_cost(SE3, np.diag([1.0, 0.8, 0.6, 0.5]), np.diag([0.5, 0.7, 0.9, 1.0]))
metric = frobenius_metric(SE3, "right")

for label, cost, obs in [("gradient / pose cost", pose, gradient_observer("left", pose, metric)),
                         ("gradient-like / skewed cost", skewed, gradient_like_observer("left", skewed, metric))]:
    tx, txh, diag = simulate_coupled(system, obs, None, X0, Xhat0, cfg, 20.0)
    E = txh.matrices @ SE3.inverse(tx.matrices)

    # integrate the error flow directly from E(0) and compare
    e = SE3.identity()
    ref = integrate_body(SE3, lambda M, t: -grad1_body(cost, metric, M, e), E[0], cfg, 20.0).matrices
    print(label)
    print(f"  f: {diag.cost[0]:.3f} -> {diag.cost[-1]:.2e}, increases {diag.monotonicity_violations}")
    print(f"  max distance to the autonomous error flow: {np.max(distance(SE3, E, ref)):.2e}")
