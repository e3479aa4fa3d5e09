"""Optical time-delay sensing via frequency-resolved two-photon interference.

Simulator, estimators, and precision bounds for the delay between two
independent photons interfering on a balanced beam splitter, with and
without frequency-resolving detection.
"""

from .detector import (
    DEFAULT_EPSILON,
    BinnedDetectorSpec,
    TofSpec,
    assign_bin,
    binned_prob,
    binned_prob_all,
    kernel,
    max_unambiguous_delay,
    tof_to_d_omega,
)
from .errors import (
    ConfigError,
    CoverageError,
    DomainError,
    EmptySampleError,
    HomdelayError,
    InsufficientDataError,
    QuadratureError,
    RangeError,
)
from .estimators import (
    FLOOR_PROB,
    DelayGrid,
    EstimateResult,
    estimate_nonresolved,
    estimate_resolved,
    estimate_resolved_binned,
    loglik_resolved,
)
from .fisher import (
    METHOD_BINNED,
    METHOD_IDEAL,
    METHOD_NR,
    CrbReport,
    FisherCurve,
    build_fisher_curve,
    crb,
    fisher_nonresolved,
    fisher_resolved_binned,
    fisher_resolved_binned_per_bin,
    fisher_resolved_ideal,
    qfi,
)
from .harness import (
    EtaTable,
    MicroShiftReport,
    SweepConfig,
    SweepPoint,
    SweepReport,
    allan_variance,
    micro_shift_experiment,
    run_sweep,
)
from .model import (
    DEFAULT_OMEGA0,
    DetectionRecord,
    Outcome,
    PhotonPairModel,
    Records,
    joint_spectral_density,
    mean_freq_density,
    prob_freq_resolved,
    prob_joint_full,
    prob_nonresolved,
)
from .quadrature import adaptive_quad
from .sampling import (
    PHYSICAL,
    POST_SELECTED,
    DropStats,
    JsiGrid,
    JsiHistogram,
    SamplerConfig,
    draw_records,
    empirical_jsi,
)

__version__ = "0.1.0"
