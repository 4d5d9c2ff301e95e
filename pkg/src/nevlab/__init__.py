"""Numerical laboratory for value distribution under linear operators.

Builds meromorphic function handles with divisor oracles, applies linear
operators (derivatives, shifts, q-scalings and weighted sums), counts
zeros and poles by certified argument-principle subdivision, computes
Nevanlinna's m/N/T and Jensen residuals, and evaluates second-main-
theorem inequalities, deficiencies and Picard-type exceptionality checks
at desk scale.
"""

from .divisors import (
    EngineOptions,
    count_in_disc,
    counting_from_divisor,
    counting_integral_form,
    guarded_radius,
    integrate_counting,
    joint_count,
)
from .errors import (
    BoundaryDegeneracyError,
    DegenerateTargetsError,
    InsufficientSamplesError,
    InvalidCombinationError,
    InvalidCompositionError,
    InvalidFamilyError,
    InvalidModelError,
    InvalidTargetError,
    InvalidWindowError,
    NevlabError,
    ScenarioError,
    UncertifiedDivisorError,
    UncertifiedResultError,
    UnsupportedDerivativeError,
)
from .functions import (
    FunctionHandle,
    GrowthMeta,
    as_small,
    combine,
    compose_affine,
    ilc,
    make_constant,
    make_exp_poly,
    make_jacobi_sn,
    make_rational,
)
from .nevanlinna import (
    CharacteristicSample,
    CharacteristicTable,
    DivisorContext,
    JensenReport,
    RadiusSchedule,
    characteristic,
    counting,
    jensen_check,
    mean_log_abs,
    proximity,
)
from .operators import (
    Derivative,
    Identity,
    KernelBasis,
    OperatorExpr,
    QScale,
    ResidualReport,
    SampleSpec,
    Shift,
    WeightedSum,
    apply_operator,
    compose,
    derivative,
    derivative_order,
    forward_difference,
    identity,
    kernel_check,
    linearity_probe,
    logderiv_proximity,
    mcmillan_gammas,
    mcmillan_residual,
    q_scale,
    shift,
    weighted_sum,
)
from .quadrature import CircleIntegral, QuadratureConfig, circle_mean
from .regions import Divisor, DivisorPoint, Region
from .smt import (
    DeficiencyEstimate,
    DeficiencySum,
    LinearSMTResult,
    PicardReport,
    RemainderBreakdown,
    SMTReport,
    SyntheticDivisorModel,
    ValironCheck,
    deficiencies,
    deficiency_sum,
    picard_check,
    pointwise_proof_inequality,
    remainder,
    synthetic_valiron,
    verify_linear_smt,
    verify_thm21,
)

__version__ = "0.1.0"
