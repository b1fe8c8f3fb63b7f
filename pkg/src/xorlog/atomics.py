"""Single-word atomic instructions on int64 numpy arrays.

With numba enabled these lower to LLVM ``atomicrmw`` / ``load atomic`` /
``cmpxchg`` with sequentially consistent ordering, so inside jitted kernels
``xor`` and ``dec`` become ``lock xor`` and ``lock add`` on x86-64.  They can
only be called from jitted code.

With numba disabled they are plain functions that hold one process-wide lock
for the duration of each instruction, which is what a hardware atomic gives:
a single indivisible step on one word.

``xor`` and ``dec`` discard the prior value on purpose: when the result is
unused the x86 backend emits a native locked instruction, whereas a fetch-style
xor is lowered to a compare-and-swap loop.
"""

import threading

from ._accel import USE_NUMBA

__all__ = ["load", "store", "fetch_add", "xor", "fetch_xor", "dec", "cas"]

if USE_NUMBA:
    from numba import types
    from numba.core import cgutils
    from numba.extending import intrinsic

    _ORDER = "seq_cst"

    def _check(arr, idx):
        if not isinstance(arr, types.Array) or arr.dtype != types.int64 or arr.ndim != 1:
            raise TypeError("atomic ops need a 1-d int64 array")
        if not isinstance(idx, types.Integer):
            raise TypeError("atomic index must be an integer")

    def _item_ptr(context, builder, sig, args):
        arrty, idxty = sig.args[0], sig.args[1]
        ary = context.make_array(arrty)(context, builder, args[0])
        i = context.cast(builder, args[1], idxty, types.intp)
        return cgutils.get_item_pointer(context, builder, arrty, ary, [i], wraparound=False)

    def _value(context, builder, sig, args, k):
        return context.cast(builder, args[k], sig.args[k], types.int64)

    @intrinsic
    def load(typingctx, arr, idx):
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            return builder.load_atomic(ptr, _ORDER, 8)

        return types.int64(arr, idx), codegen

    @intrinsic
    def store(typingctx, arr, idx, val):
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            builder.store_atomic(_value(context, builder, sig, args, 2), ptr, _ORDER, 8)
            return context.get_dummy_value()

        return types.none(arr, idx, val), codegen

    @intrinsic
    def fetch_add(typingctx, arr, idx, val):
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            return builder.atomic_rmw("add", ptr, _value(context, builder, sig, args, 2), _ORDER)

        return types.int64(arr, idx, val), codegen

    @intrinsic
    def xor(typingctx, arr, idx, val):
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            builder.atomic_rmw("xor", ptr, _value(context, builder, sig, args, 2), _ORDER)
            return context.get_dummy_value()

        return types.none(arr, idx, val), codegen

    @intrinsic
    def fetch_xor(typingctx, arr, idx, val):
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            return builder.atomic_rmw("xor", ptr, _value(context, builder, sig, args, 2), _ORDER)

        return types.int64(arr, idx, val), codegen

    @intrinsic
    def dec(typingctx, arr, idx):
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            minus_one = context.get_constant(types.int64, -1)
            builder.atomic_rmw("add", ptr, minus_one, _ORDER)
            return context.get_dummy_value()

        return types.none(arr, idx), codegen

    @intrinsic
    def cas(typingctx, arr, idx, expected, new):
        """Compare-and-swap; returns the prior word (success iff it equals expected)."""
        _check(arr, idx)

        def codegen(context, builder, sig, args):
            ptr = _item_ptr(context, builder, sig, args)
            exp = _value(context, builder, sig, args, 2)
            new_ = _value(context, builder, sig, args, 3)
            pair = builder.cmpxchg(ptr, exp, new_, _ORDER, _ORDER)
            return builder.extract_value(pair, 0)

        return types.int64(arr, idx, expected, new), codegen

else:
    _LOCK = threading.Lock()
    _MASK = (1 << 64) - 1

    def _wrap(v):
        v &= _MASK
        return v - (1 << 64) if v >> 63 else v

    def load(arr, idx):
        with _LOCK:
            return int(arr[idx])

    def store(arr, idx, val):
        with _LOCK:
            arr[idx] = val

    def fetch_add(arr, idx, val):
        with _LOCK:
            old = int(arr[idx])
            arr[idx] = _wrap(old + val)
            return old

    def xor(arr, idx, val):
        with _LOCK:
            arr[idx] = int(arr[idx]) ^ val

    def fetch_xor(arr, idx, val):
        with _LOCK:
            old = int(arr[idx])
            arr[idx] = old ^ val
            return old

    def dec(arr, idx):
        with _LOCK:
            arr[idx] = _wrap(int(arr[idx]) - 1)

    def cas(arr, idx, expected, new):
        with _LOCK:
            old = int(arr[idx])
            if old == expected:
                arr[idx] = new
            return old
