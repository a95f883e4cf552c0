"""stationlab: a stationary-process laboratory.

Construct causal linear, semi-linear, and Holder-of-semi-linear processes
over iid coordinates; decide the classical projective summability conditions
from analytic tail models; build the truncated Gordin martingale increment;
and verify martingale-approximation, CLT, invariance-principle, and quenched
claims at desk scale with exact oracles cross-checked by Monte Carlo.
"""

from .sequences import (
    CONVERGES,
    DIVERGES,
    UNKNOWN,
    CoefficientSequence,
    ConditionVerdict,
    SequenceError,
    check_gl,
    check_h,
    check_mw,
    counterexample_sequence,
    custom,
    dyadic_spikes,
    finite,
    geometric,
    lemma_series_lhs,
    log_power,
    power_law,
    rio_integral,
    tail_l2,
)
from .models import (
    CausalLinearModel,
    DiscreteSpace,
    HolderModel,
    ModelError,
    PastConfig,
    SamplerSpace,
    SemiLinearModel,
    abs_power,
    conditional_expectation_S,
    draw_pasts,
    exact_variance,
    linear_as_semilinear,
    max_conditional_drift,
    model_from_json,
    normal_space,
    p0_projection,
    rademacher_space,
    soft_clip,
    uniform_space,
    variance_error_bound,
)
from .simulate import PartialSumTrajectory, ReplicateBatch, make_rng, replicate_batch, sample_path
from .martingale import (
    ApproximationEntry,
    MartingaleApproximant,
    cpcond_statistic,
    criterion3_statistic,
    estimate_gordin_norm2,
    gordin_increment,
    limit_increment,
    ma_error_exact,
    ma_error_mc,
)
from .stats import (
    DegenerateVarianceError,
    DivergentReferenceError,
    GoodnessOfFitResult,
    TiesError,
    bm_sup_reference,
    boundedness_diagnostic,
    clt_test,
    kolmogorov_sf,
    ks_test,
    normal_reference,
    wip_sup_test,
)

__version__ = "0.1.0"
