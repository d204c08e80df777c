"""Gradient and gradient-like observers for invariant systems on SO(3) and SE(3)."""

from .channels import InputNoise, MeasurementChannel, StateNoise, apply_channel, bounded_noise_trace
from .costs import (CostFunction, cost_by_name, fd_grad1, grad1, lift_left_invariant, lift_right_invariant,
                    log_distance_cost, mirror_invariance, se3_natural_cost, se3_pose_cost, so3_frobenius_cost,
                    weighted_frobenius_cost)
from .errors import ErrorConvention, canonical_error, synchrony_defect
from .exceptions import (ChannelError, DivergenceError, IntegrationError, LieObsError, MembershipError,
                         SingularityError, UsageError)
from .groups import SE3, SO3, GroupDescriptor, exp_group, group_by_name, hat, log_group, membership_residual, vee
from .integrators import (BatchResult, Diagnostics, IntegratorConfig, Scheme, Trajectory, integrate,
                          simulate_batch, simulate_coupled, step)
from .lie_core import (Frame, GroupElement, Invariance, Metric, TangentVector, adjoint, compose,
                       frobenius_metric, invert, metric_inner, to_frame)
from .observers import (Observer, ObserverKind, custom_observer, error_flow_field, gradient_like_observer,
                        gradient_observer, innovation_of, make_observer, skew_error_field, synchronous_observer)
from .sim import RateReport, Scenario, ScenarioError, fit_exponential_rate, load_scenario, run_scenario
from .systems import Handedness, InputBatch, InputSignal, InvariantSystem, vector_field

__version__ = "0.1.0"
