"""Shared builders for the test-suite."""

import numpy as np

from lieobs import SE3, SO3, InputSignal, frobenius_metric, mirror_invariance, se3_pose_cost, so3_frobenius_cost
from lieobs.costs import weighted_frobenius_cost

ACCEPTANCE_LINES: list[str] = []


def matched_pairs():
    """(cost, metric) pairs whose invariance suits left observers, then right observers."""
    return {
        "left": [(so3_frobenius_cost(1.0), frobenius_metric(SO3, "bi")),
                 (se3_pose_cost(), frobenius_metric(SE3, "right"))],
        "right": [(so3_frobenius_cost(1.0), frobenius_metric(SO3, "bi")),
                  (mirror_invariance(se3_pose_cost()), frobenius_metric(SE3, "left"))],
    }


def skewed_cost(g):
    """A cost with no left or right invariance (diagonal, non-scalar weights)."""
    if g is SO3:
        return weighted_frobenius_cost(SO3, np.diag([1.0, 0.8, 0.6]), np.diag([0.5, 0.7, 0.9]))
    return weighted_frobenius_cost(SE3, np.diag([1.0, 0.8, 0.6, 0.5]), np.diag([0.5, 0.7, 0.9, 1.0]))


def random_sinusoid(rng, dim, amp=1.0):
    terms = [[(float(rng.uniform(0.2, amp)), float(rng.uniform(0.3, 2.0)), float(rng.uniform(0, 6.28)))
              for _ in range(2)] for _ in range(dim)]
    return InputSignal.sinusoid_sum(terms, rng.uniform(-0.3, 0.3, dim))
