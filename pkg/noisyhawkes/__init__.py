from .config import ExperimentConfig, load_config
from .events import EventSeries, superpose
from .exceptions import (
    ConfigError,
    FitError,
    NonIdentifiableSupportWarning,
    NumericalError,
    SpectralEvaluationError,
)
from .experiments import (
    get_experiment,
    list_available_experiments,
    register_experiment,
    run_bivariate_scenarios,
    run_compensation_study,
    run_experiment,
    run_spike_slab_study,
    run_univariate_sweep,
)
from .identifiability import (
    TauRange,
    biv_equivalent_diag,
    biv_equivalent_row,
    biv_tau_range_diag,
    biv_tau_range_row,
    classify_support,
    injectivity_probe,
    row_constants,
    uni_equivalent,
    uni_tau_range,
)
from .logger import set_verbosity
from .params import NoisyHawkesParams, hawkes_mean_intensity, mean_intensity
from .simulation import (
    SimulationConfig,
    simulate_hawkes,
    simulate_noisy_hawkes,
    simulate_poisson,
)
from .spectral import (
    Periodogram,
    RectParams,
    SpectralMatrix,
    average_periodogram,
    periodogram,
    rect_kernel_ft,
    rect_shape_function,
    rect_taylor,
    spectral_density_biv,
    spectral_density_general,
    spectral_density_rect,
    spectral_density_uni,
    taylor_coefficients,
)
from .support import (
    SupportConfig,
    SupportReport,
    detect_support,
    partition,
    three_step_fit,
)
from .utils import check_random_state
from .whittle import (
    FitConfig,
    FitResult,
    ModelSpec,
    fit,
    frequency_count,
    full_model,
    spectral_loglik,
    support_model,
    univariate_model,
)

__version__ = "0.1.0"

__all__ = [
    "EventSeries",
    "NoisyHawkesParams",
    "SimulationConfig",
    "simulate_hawkes",
    "simulate_poisson",
    "simulate_noisy_hawkes",
    "superpose",
    "hawkes_mean_intensity",
    "mean_intensity",
    "SpectralMatrix",
    "Periodogram",
    "RectParams",
    "spectral_density_uni",
    "spectral_density_biv",
    "spectral_density_general",
    "spectral_density_rect",
    "rect_kernel_ft",
    "rect_taylor",
    "rect_shape_function",
    "taylor_coefficients",
    "periodogram",
    "average_periodogram",
    "ModelSpec",
    "FitConfig",
    "FitResult",
    "full_model",
    "univariate_model",
    "support_model",
    "frequency_count",
    "spectral_loglik",
    "fit",
    "TauRange",
    "uni_tau_range",
    "uni_equivalent",
    "biv_tau_range_diag",
    "biv_equivalent_diag",
    "biv_tau_range_row",
    "biv_equivalent_row",
    "row_constants",
    "classify_support",
    "injectivity_probe",
    "SupportConfig",
    "SupportReport",
    "partition",
    "detect_support",
    "three_step_fit",
    "ExperimentConfig",
    "load_config",
    "register_experiment",
    "get_experiment",
    "list_available_experiments",
    "run_experiment",
    "run_univariate_sweep",
    "run_compensation_study",
    "run_bivariate_scenarios",
    "run_spike_slab_study",
    "ConfigError",
    "NumericalError",
    "SpectralEvaluationError",
    "FitError",
    "NonIdentifiableSupportWarning",
    "check_random_state",
    "set_verbosity",
]
