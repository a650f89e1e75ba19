"""Simulation laboratory for extremal indices of series schemes.

A *series scheme* is a triangular array: at stage n a series holds a random
number nu_n of terms and M_n is the running maximum of the terms that count.
The laboratory estimates the limiting curve psi(s) = lim P(M_n <= u_n(s))
along normalizing thresholds calibrated so that E F_n(u_n(s))^{nu_n} = s,
extracts the associated extremal indices from the curve, and checks both
against closed-form limit models.
"""

from .sampling import (
    RandomStream,
    Uniform01,
    Exponential,
    Gamma,
    PositiveStable,
    SymmetricStable,
    Logarithmic,
    Zipf,
    Pareto,
    Geometric1,
    TwoPoint,
    Degenerate,
    validate_sampler,
)
from .copulas import (
    IndependenceGenerator,
    ClaytonGenerator,
    FrankGenerator,
    GumbelHougaardGenerator,
    TiltedGenerator,
    diag_cdf,
    diag_inverse,
    sample_exchangeable,
    psi_archimedean,
    psi_tilted,
    partial_indices_archimedean,
)
from .systems import (
    ConfigError,
    SeriesSystem,
    ExchangeableCopulaSystem,
    DuplicatedIidSystem,
    MixtureSpikeSystem,
    GeometricThresholdSystem,
    RandomThresholdSystem,
    StableSizeGumbelSystem,
    BranchingHereditySystem,
    PowerLawGraphSystem,
    MonotoneTransformSystem,
    SizeJitterSystem,
    PowerTransform,
    Calibrator,
    build_calibration_pool,
    build_system,
    mean_F_pow_nu,
    sample_replicate,
)
from .normalizer import SolverError, SolvedPoint, NormalizingCurve, solve_u, solve_curve
from .estimator import (
    PsiEstimate,
    estimate_psi,
    mean_log_slope,
    partial_indices,
    tail_indices,
    Def2Fit,
    def2_fit,
    isotonic_fit,
    IndexReport,
    index_report,
)
from .reference import reference_for, psi_reference, mixed_max_stable_cdf

__version__ = "0.1.0"
