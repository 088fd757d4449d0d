"""Near-field RIS cascaded-channel estimation under electromagnetic interference.

Builds spatial correlation matrices for a RIS panel from spherical- or
plane-wave scattering models, forms LMMSE and reduced-subspace LS channel
estimators, optimizes the pilot phase schedule by alternating
optimization, and runs reproducible Monte Carlo NMSE experiments.
"""
from ._kernels import get_backend
from .channel import (
    ColoringFactor,
    ScenarioModel,
    TrainingRealization,
    color_factor,
    complex_normal,
    hadamard_cov,
    realize_training,
    trial_rng,
)
from .errors import ConfigError, InfeasibleError, NumericalError
from .estimators import (
    LinearEstimator,
    PhaseSchedule,
    analytic_mse,
    lmmse_matrix,
    observation_cov,
    rsls_basis,
    rsls_matrix,
)
from .geometry import (
    ArrayGeometry,
    ElementGrid,
    build_grid,
    ff_response,
    fraunhofer_distance,
    nf_response,
    wave_vector,
)
from .spatial import (
    CorrelationMatrix,
    NodePlacement,
    ScatteringProfile,
    derive_spreads,
    ff_correlation,
    load_matrix,
    nf_correlation,
    numerical_rank,
    place_node,
    psd_project,
    save_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayGeometry",
    "ColoringFactor",
    "ConfigError",
    "CorrelationMatrix",
    "ElementGrid",
    "InfeasibleError",
    "LinearEstimator",
    "NodePlacement",
    "NumericalError",
    "PhaseSchedule",
    "ScatteringProfile",
    "ScenarioModel",
    "TrainingRealization",
    "analytic_mse",
    "build_grid",
    "color_factor",
    "complex_normal",
    "derive_spreads",
    "ff_correlation",
    "ff_response",
    "fraunhofer_distance",
    "get_backend",
    "hadamard_cov",
    "lmmse_matrix",
    "load_matrix",
    "nf_correlation",
    "nf_response",
    "numerical_rank",
    "observation_cov",
    "place_node",
    "psd_project",
    "realize_training",
    "rsls_basis",
    "rsls_matrix",
    "save_matrix",
    "trial_rng",
    "wave_vector",
    "__version__",
]
