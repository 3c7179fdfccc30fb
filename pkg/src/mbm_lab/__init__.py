"""mbm-lab: simulation and statistical verification laboratory for
multifractional Brownian motion and its local times.

The package synthesizes paths of Gaussian processes whose local regularity
is driven by a time-varying Hurst function, builds local times from
occupation measures, and checks the asymptotic laws that govern them
(moduli of continuity, small-ball liminf and iterated-logarithm limsup
statistics, pointwise Hoelder exponents, local asymptotic self-similarity,
and occupation-functional limit theorems) with seeded Monte Carlo ensembles
and deterministic oracles.
"""
from .errors import (
    ConfigError,
    DomainError,
    GridRangeError,
    MbmLabError,
    SynthesisError,
)
from .grids import TimeGrid, XGrid
from .hurst import HurstFunction, check_condition_beta
from .synth import (
    HarmonizablePathGenerator,
    HarmonizableSpectrum,
    KernelPathGenerator,
    KernelQuadrature,
    SamplePath,
    gen_fbm,
    gen_mbm_harmonizable,
    gen_mbm_moving_average,
    gen_mbm_riemann_liouville,
    increment_variance_exact,
    kernel_increment_cov,
    subsample_path,
    verify_variance_bounds,
)
from .localtime import (
    Ensemble,
    LocalTimeField,
    PiecewiseConstant,
    XGrid as LevelGrid,
    default_dx,
    dirichlet_integral,
    local_time_field,
    local_time_moment,
    occupation_integral,
    occupation_series,
)
from .regularity import (
    FittedConstant,
    HolderEstimate,
    ModulusCurve,
    RangeCheck,
    chung_statistic,
    delta_ladder,
    fitted_constant,
    holder_exponent_estimate,
    lil_statistic,
    local_modulus_statistic,
    range_inequality_check,
    space_modulus_statistic,
    uniform_modulus_statistic,
    v_constant,
)
from .lass import (
    ConvergenceReport,
    FddResult,
    PROFILE_LIBRARY,
    RescaledFamily,
    ScalingPair,
    YCurve,
    fdd_distance,
    gaussian_profile,
    indicator_profile,
    occupation_functional,
    rescale_ensemble,
    rescale_path,
    rescale_slice,
    rescaled_local_time,
    triangle_profile,
    verify_lass_localtime,
    weighted_occupation_functional,
)
from .config import (
    ExperimentConfig,
    StatisticSpec,
    Thresholds,
    parse_config,
)
from .harness import (
    ExperimentReport,
    StatResult,
    mc_ensemble,
    replica_seeds,
    run_experiment,
    run_statistic,
)
from .report import (
    render_report_figures,
    write_csv,
    write_json,
    write_report,
)

__version__ = "0.1.0"
