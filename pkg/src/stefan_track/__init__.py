"""Planning, simulation, and safe tracking control of a melting front.

The toolkit plans boundary heat-flux inputs for a one-phase melting
problem whose interface carries second-order (thermally inert) dynamics,
simulates the plant on a front-fixed grid, closes the loop with an
energy-shaping tracking controller, and verifies safety and convergence
claims numerically.
"""

from .controller import (
    ControllerConfig,
    EnergyWindowReport,
    SafetyFlags,
    check_energy_window,
    control_flux,
    safety_monitor,
)
from .diagnostics import (
    TrajectoryRecord,
    energy_decay_residual,
    fit_decay_rate,
    parse_plan,
    parse_records,
    tracking_functional,
    write_field,
    write_plan,
    write_records,
)
from .errors import (
    DomainViolation,
    InitialDataError,
    ParameterError,
    SeriesDivergenceError,
)
from .jets import Jet, jet_add, jet_derivative, jet_mul, jet_truncate
from .planner import (
    PhysicalParams,
    PlanSignals,
    SeriesPlan,
    SeriesPlanner,
    check_coefficient_bounds,
    check_convergence,
    check_reference_temperature,
    feedforward_flux,
    reference_energy,
    reference_gradient,
    reference_temperature,
    series_F,
)
from .reference import (
    GevreyCertificate,
    ReferenceParams,
    ReferenceTrajectory,
    amplitude,
    check_admissibility,
    estimate_gevrey,
)
from .solver import RunResult, SimState, SolverConfig, energy, initialize, run, step

__version__ = "0.1.0"
