"""1D compressible two-fluid model with algebraic pressure closure, solved in
Lagrangian mass coordinates, with diagnostics for its long-time behavior."""

from .closure import (
    ClosureResult,
    ClosureTolerances,
    GammaLaw,
    closure_bracket,
    dp_dtau,
    dZ_dtau,
    dZ_partials,
    pressure_decomposition,
    solve_closure,
)
from .config import RunConfig, parse_config, serialize_config
from .diagnostics import (
    DecayFit,
    DiagnosticsRecord,
    StabilityReport,
    density_bounds,
    energy,
    fit_decay,
    lyapunov_full,
    lyapunov_G,
    record_state,
    representation_residual,
    stability_ratio,
    total_mass,
)
from .equilibrium import SteadyState, solve_equilibrium, tau_inf_profile
from .harness import (
    run_convergence,
    run_reduction_check,
    run_simulation,
    run_stability,
    steady_info,
)
from .scenarios import SCENARIOS, make_initial_data
from .solver import (
    Grid,
    InitialData,
    LagrangianState,
    SchemeConfig,
    compute_dt,
    eulerian_to_lagrangian,
    init_state,
    lagrangian_to_eulerian,
    run,
    step,
)

__version__ = "0.1.0"
