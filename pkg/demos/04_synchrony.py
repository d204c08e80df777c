"""
Synchronous observers
=====================

For X' = X u the copy Xhat' = Xhat u keeps the right error Xhat X^-1
constant for every input and every initial condition.  The spatial copy
Xhat' = u Xhat does not.
"""

# %%
import numpy as np

from lieobs import (SO3, ErrorConvention, GroupElement, Handedness, IntegratorConfig, InputSignal,
                    InvariantSystem, custom_observer, simulate_batch, synchronous_observer)
from lieobs.groups import random_matrix

rng = np.random.default_rng(3)
inputs = [InputSignal.sinusoid_sum([[(rng.uniform(0.2, 1), rng.uniform(0.3, 2), rng.uniform(0, 6))]
                                    for _ in range(3)]) for _ in range(10)]
X0 = [random_matrix(SO3, rng, 2.0) for _ in range(10)]
Xh0 = [random_matrix(SO3, rng, 2.0) for _ in range(10)]
cfg = IntegratorConfig(step=1e-2)

# %% ten random runs at once
good = simulate_batch(SO3, "left", inputs, synchronous_observer(SO3, "left"), X0, Xh0, cfg, 10.0,
                      error_side=ErrorConvention.RIGHT)
print("Xhat' = Xhat u : max right-error drift", good.synchrony_defects().max())

wrong = custom_observer(SO3, "left", lambda Xh, Y, w, t: SO3.hat(w) @ Xh.matrix)
bad = simulate_batch(SO3, "left", inputs, wrong, X0, Xh0, cfg, 10.0, error_side=ErrorConvention.RIGHT)
print("Xhat' = u Xhat : max right-error drift", bad.synchrony_defects().max())
