"""Extended placement delivery arrays for multi-antenna coded caching."""

from .array import (
    STAR, DeliveryArray, SchemeMetrics, SubArray, VerificationReport,
    emit_array, metrics, parse_array, subarray, verify_epda, verify_pda,
)
from .constructions import (
    SchemeParams, construction_one, construction_two, lae_epda, man_pda, row_concat,
    scheme_theorem_a, scheme_theorem_b,
)
from .errors import (
    DecodeFailure, DegenerateChannel, EpdaError, FormatError, InvalidEpda, MalformedArray,
    ParameterInfeasible, ShapeMismatch, UnknownInteger,
)

__version__ = "0.1.0"
