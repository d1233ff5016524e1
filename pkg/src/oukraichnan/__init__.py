"""Ornstein-Uhlenbeck velocity fields, passive scalar transport and their white-noise limit."""

from .harness import (
    Rule,
    Schedule,
    SweepConfig,
    SweepReport,
    TransportSettings,
    load_config,
    report_emit,
    run_sweep,
    validate_schedule,
)
from .kraichnan_field import advect, drift_correction, dispersion_run, limit_modeset, sample_increment
from .oracle import (
    NPointState,
    generator_diffuse,
    mean_scalar_exact,
    pair_dispersion_curve,
    single_dispersion_slope,
)
from .ou_field import (
    FieldState,
    advance,
    eval_divergence,
    eval_velocity,
    init_stationary,
    make_rng,
    structure_function,
)
from .spectra import (
    CovarianceTable,
    ExponentChoice,
    IllPosedLimitError,
    ModeSet,
    SpectrumParams,
    build_modeset,
    covariance,
    effective_diffusivity,
    limit_spectrum,
    spectral_density,
)
from .transport import (
    Observable,
    ScalarGrid,
    backward_flow,
    energy,
    feynman_kac,
    weak_observable,
)

__version__ = "0.1.0"
