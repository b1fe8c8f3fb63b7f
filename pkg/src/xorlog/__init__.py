"""Linearizable concurrent log built without compare-and-swap."""

from ._accel import BACKEND
from .casbaseline import CasLog, make_log
from .errors import (CapacityExhausted, ConfigError, ConfigTooLarge, ItemTooLarge,
                     TooManyHandles, XorLogError)
from .logcore import AppendOutcome, Handle, Log, ScanResult
from .slotcodec import (EMPTY, INVALID, Params, Valid, apply_dec, apply_xor, classify,
                        derive_params, encode)

__all__ = [
    "BACKEND", "Log", "CasLog", "make_log", "Handle", "AppendOutcome", "ScanResult",
    "Params", "derive_params", "encode", "classify", "apply_xor", "apply_dec",
    "Valid", "EMPTY", "INVALID", "XorLogError", "ConfigError", "ConfigTooLarge",
    "ItemTooLarge", "CapacityExhausted", "TooManyHandles",
]
