"""veloshield: safe-velocity filtering with tracking-aware certificates.

Synthesizes provably safe velocities from configuration-space barrier
functions on reduced-order models, tracks them with velocity controllers
on full manipulator-equation dynamics, and verifies the resulting safety
certificates numerically along simulated trajectories.
"""
from ._kernels import available_backends, default_backend_name, get_backend
from .barriers import (BarrierFunction, Obstacle, closest_obstacle_cbf,
                       distance_cbf, halfspace_cbf, heading_cbf,
                       heading_gradient_bound)
from .certificates import (ConditionReport, SetMembershipReport,
                           TrackingCertificate, certificate, comparison_bound,
                           comparison_bound_exact, condition_check,
                           lambda_from_gains, membership)
from .dynamics import (ArmParams, MechanicalSystem, SegwayParams, SpatialSegway,
                       Workspace, accel, clamp_input, double_integrator_system,
                       inertia_eigen_range, lyapunov_norm_bounds, planar_segway,
                       spatial_segway, two_link_arm)
from .errors import (DivergenceError, InfeasibleFilterError, InvalidGainsError,
                     NumericalSingularityError, ScenarioError,
                     SingularGradientError, UnsupportedSystemError,
                     VeloshieldError)
from .filters import (ConstantLaw, FilterWeights, ProportionalLaw,
                      UnicycleGoalLaw, desired_velocity,
                      desired_velocity_jacobian, filter_single_integrator,
                      filter_weighted, safe_velocity_jacobian)
from .reduced import (ReducedOrderModel, reduced_safe_condition, single_axis,
                      single_integrator, unicycle)
from .scenario import (Scenario, load_scenario, resolve_scenario_path,
                       save_scenario, scenario_from_dict, scenario_to_dict)
from .sim import (SafetyMetrics, TrajectoryLog, barrier_object,
                  build_certificate, desired_law_object, reduced_object,
                  safety_metrics, simulate, system_object, write_csv)
from .tracking import (SegwayGains, computed_torque_controller, d_controller,
                       d_gravity_controller, fit_decay_envelope,
                       lyapunov_rate_analytic, lyapunov_value,
                       segway_planar_controller, segway_spatial_controller)

__version__ = "0.1.0"
