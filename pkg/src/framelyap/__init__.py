"""Constructive Lyapunov-type selection for continuous frames and POVMs.

Given a frame over a non-atomic measure space and a weight tau: X -> [0,1],
construct a measurable set E whose partial frame operator approximates the
weighted frame operator in operator norm, with explicit error and measure
budgets.
"""

from .errors import (
    AtomNotSplittable,
    DimensionMismatch,
    EpsilonNonpositive,
    FractionOutOfRange,
    GuaranteeViolation,
    InfiniteTotalMeasure,
    KeptMeasureOutOfRange,
    NonHermitianInput,
    TauOutOfOpenInterval,
    TooManyCells,
    TooManyVectors,
    UnknownCell,
    UnknownStrategy,
    ValidationError,
    WeightOutOfRange,
)
from .frame_core import (
    GenFrame,
    PCFrame,
    QuantizeCertificate,
    WeightFn,
    frame_bounds,
    frame_operator,
    full_selection,
    quantize,
    to_discrete_sequence,
    weighted_frame_operator,
    weighted_quantization_errors,
)
from .measure_space import (
    Cell,
    IntervalLayout,
    MeasureSpace,
    canonicalize_to_interval,
    refine_uniform,
    split_cell,
)
from .operators import HermitianOp, loewner_leq, min_eigenvalue, operator_norm
from .povm import (
    OperatorDensity,
    density_quantize,
    povm_evaluate,
    povm_select,
    rademacher_probe,
    weighted_density_operator,
)
from .selection import (
    Selection,
    SelectionReport,
    aw_subset_exhaustive,
    aw_subset_heuristic,
    budget_select,
    dyadic_bisect,
    halving_gap_exhaustive,
    interleaved_halving_error,
    lyapunov_select,
    proportional_select,
)

__version__ = "0.1.0"
