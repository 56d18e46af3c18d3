"""Solvers for optimal-visiting hybrid control.

The suite computes value functions of bitmask-labeled dynamic programming
systems with switching, synthesizes feedback trajectories, pushes crowd
densities through the resulting flow with sinks and sources, and couples
the two through a congestion cost to a mean-field fixed point.

Numerical kernels run on a compiled extension when available; set
VISITSOLVE_BACKEND=reference|fast|auto to pick explicitly, and
VISITSOLVE_THREADS to cap solver parallelism.
"""

from ._kernels import available_backends, backend_name
from .costs import CostModel, Target
from .errors import NumericFailure, ScenarioError
from .grid import Grid
from .hjb import (ValueSolution, backward_solve, default_control_bound,
                  extract_stopping_set, minimize_hamiltonian,
                  solve_single_state, switching_value, switching_value_field,
                  verify_invariants)
from .mfg import MfgResult, congestion_running_cost, fixed_point_solve
from .scenario import (Scenario, load_scenario, scenario_from_dict,
                       scenario_hash)
from .statespace import DiscreteState, StateSpace
from .trajectory import SwitchEvent, Trajectory, chord_deviation, synthesize
from .transport import (DensityEnsemble, LedgerRow, MassLedger,
                        advect_density, arrival_time_solve,
                        discrete_characteristic, field_mass,
                        initialize_density, push_forward_step, run_prescribed,
                        run_transport, terminal_pass)

__version__ = "0.1.0"

__all__ = [
    "available_backends", "backend_name",
    "CostModel", "Target",
    "NumericFailure", "ScenarioError",
    "Grid",
    "ValueSolution", "backward_solve", "default_control_bound",
    "extract_stopping_set", "minimize_hamiltonian", "solve_single_state",
    "switching_value", "switching_value_field", "verify_invariants",
    "MfgResult", "congestion_running_cost", "fixed_point_solve",
    "Scenario", "load_scenario", "scenario_from_dict", "scenario_hash",
    "DiscreteState", "StateSpace",
    "SwitchEvent", "Trajectory", "chord_deviation", "synthesize",
    "DensityEnsemble", "LedgerRow", "MassLedger", "advect_density",
    "arrival_time_solve", "discrete_characteristic", "field_mass",
    "initialize_density", "push_forward_step", "run_prescribed",
    "run_transport", "terminal_pass",
    "__version__",
]
