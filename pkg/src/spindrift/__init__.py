"""spindrift: a numerical laboratory for a spin-1/2 particle whose spin is
unselectively measured along a spatially structured axis field."""

from .config import RunConfig, parse_config
from .diagnostics import (
    ConservationMonitor,
    diffusion_study,
    flux_source_check,
    force_balance,
    free_spreading,
    position_variance,
    rate_fit,
    spin_separation,
    transverse_decay,
)
from .errors import ConfigError, GaugeSingularityError, NumericsError
from .fields import PAULI, AxisField, SpinGeometry, bloch_spinor, spin_geometry
from .io import read_csv, read_json, write_csv, write_json
from .gauge import (
    EffectiveSectorSolver,
    GaugeStudy,
    coherence_norm,
    convergence_study,
    sector_amplitude,
    sector_kernels,
    sector_weights,
)
from .grid import SpatialGrid
from .lindblad import DensityMatrix, LindbladSolver
from .runner import execute_run
from .semiclassical import PhaseSpaceState, SemiclassicalSolver, momentum_grid
from .trajectories import (
    EnsembleResult,
    MixedSpinInitial,
    TrajectorySeries,
    ensemble_average,
    evolve_trajectory,
    free_flight,
    pure_state_spinor,
    trajectory_rng,
)

__version__ = "0.1.0"

__all__ = [
    "AxisField",
    "ConfigError",
    "ConservationMonitor",
    "DensityMatrix",
    "EffectiveSectorSolver",
    "EnsembleResult",
    "GaugeSingularityError",
    "GaugeStudy",
    "LindbladSolver",
    "MixedSpinInitial",
    "NumericsError",
    "PAULI",
    "PhaseSpaceState",
    "RunConfig",
    "SemiclassicalSolver",
    "SpatialGrid",
    "SpinGeometry",
    "TrajectorySeries",
    "bloch_spinor",
    "coherence_norm",
    "convergence_study",
    "diffusion_study",
    "ensemble_average",
    "evolve_trajectory",
    "execute_run",
    "flux_source_check",
    "force_balance",
    "free_flight",
    "free_spreading",
    "momentum_grid",
    "parse_config",
    "position_variance",
    "pure_state_spinor",
    "rate_fit",
    "read_csv",
    "read_json",
    "sector_amplitude",
    "sector_kernels",
    "sector_weights",
    "spin_geometry",
    "spin_separation",
    "trajectory_rng",
    "transverse_decay",
    "write_csv",
    "write_json",
    "__version__",
]
