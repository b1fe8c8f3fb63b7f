"""Compare-and-swap control implementation with the same interface as Log.

Only the two slot-mutating primitives differ: recording is CAS 0 -> encoding
and sealing is CAS 0 -> -1.  Encoding, counter, read guard and readers are
shared with :class:`xorlog.logcore.Log`, so a benchmark between the two
isolates the instruction choice.
"""

from __future__ import annotations

from . import kernels as K
from .errors import ConfigError
from .logcore import Log
from .slotcodec import Params


class CasLog(Log):
    impl = "cas"

    def __init__(self, params: Params):
        super().__init__(params)
        self.xor_mode = "cas"

    @property
    def kernel_impl(self) -> int:
        return K.IMPL_CAS

    def _append_kernel(self):
        return K.cas_append


def make_log(impl: str, params: Params, **kwargs) -> Log:
    """Construct the log named by ``impl`` (``"xordec"`` or ``"cas"``)."""
    if impl == "xordec":
        return Log(params, **kwargs)
    if impl == "cas":
        return CasLog(params)
    raise ConfigError(f"unknown impl {impl!r}")
