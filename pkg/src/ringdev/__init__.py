"""Large deviations of message delay on a ring of servers with shortest-workload routing."""
from .distributions import MessageLengthModel, hat_lambda, legendre, mgf, mgf_prime, parse_model, theta_plus
from .errors import (DimensionError, DomainError, InfeasibleError, InsufficientHits, NoRootError,
                     RingDevError, StabilityError)
from .ldp_rates import (Configuration, NetworkParams, OverheatProfile, ScenarioReport, balanced_set_rate,
                        configuration_rate, optimal_profile, rate_J, scenario, solve_theta_l, solve_theta_star)
from .critical_rates import (CriticalRateTable, PhaseDiagram, critical_table, lambda_l2l1, lambda_lower,
                             lambda_star_kl, lambda_upper, phase_sweep)
from .routing import (LoadConfiguration, SplitFractions, is_balanced, is_ring_balanced, maximal_balanced_sets,
                      solve_O1, solve_O2)
from .simulator import (NetworkState, SimConfig, SimulationResult, estimate_overload, event_log,
                        overheat_census, run_replicas)

__version__ = "0.1.0"
