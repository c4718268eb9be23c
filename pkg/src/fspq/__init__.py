"""Forward-secure signatures built from one-time signatures by sum and product composition."""

from .frog import FrogSigner, frog_serialized_sizes, frog_verify
from .frog_star import StarSigner, star_serialized_sizes, star_verify
from .hashing import HashSuite
from .scheme import CostCounters, Exhausted, OneTimeKeyReuse, PeriodPassed, SchemeError
from .store import CorruptState, RollbackDetected, UnknownScheme, VersionMismatch, load_state, save_state
from .wots import WotsParams, WotsScheme, make_base_scheme

__version__ = "0.1.0"

__all__ = [
    "CorruptState",
    "CostCounters",
    "Exhausted",
    "FrogSigner",
    "HashSuite",
    "OneTimeKeyReuse",
    "PeriodPassed",
    "RollbackDetected",
    "SchemeError",
    "StarSigner",
    "UnknownScheme",
    "VersionMismatch",
    "WotsParams",
    "WotsScheme",
    "frog_serialized_sizes",
    "frog_verify",
    "load_state",
    "make_base_scheme",
    "save_state",
    "star_serialized_sizes",
    "star_verify",
]
