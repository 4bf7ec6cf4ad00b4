"""Energy-stable time stepping for the time-fractional Allen-Cahn equation.

Caputo derivatives are discretized with the L1, L1-CN and L1+-CN formulas on
graded meshes, the nonlinearity through a scalar auxiliary variable, and space
with Fourier or cosine spectral bases.
"""

from .energy import EnergyReport, bilinear_form, bilinear_positivity_check, modified_energy, original_energy
from .experiments import (
    ExperimentError,
    RunConfig,
    RunStats,
    caputo_power,
    exact_solution,
    integrate,
    manufactured_source,
    optimal_grading,
    read_snapshot,
    run_circle,
    run_coarsening,
    run_convergence,
    run_energy_study,
    write_snapshot,
)
from .history import DirectHistory, SOEApprox, SOEFitError, SOEHistory, fit_soe, make_history
from .scheme import (
    SchemeConfig,
    SchemeError,
    SchemeState,
    init_state,
    residual,
    step,
    step_l1,
    step_l1cn,
    step_l1plus,
)
from .spectral import SpatialGrid, make_grid, neumann_grid, periodic_grid
from .timegrid import (
    TimeMesh,
    build_composite_mesh,
    build_mesh,
    l1_weights,
    l1cn_weights,
    l1plus_weights,
    quad_weights,
)

__version__ = "0.1.0"
