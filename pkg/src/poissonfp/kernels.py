"""Kernel dispatch: compiled extension when importable, numpy fallback otherwise.

Set ``POISSONFP_PURE=1`` to force the fallback.
"""
import os

from . import _pykernels as pure

native = None
if os.environ.get("POISSONFP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as native
    except ImportError:  # extension not built
        native = None

_impl = native if native is not None else pure
BACKEND = "cython" if native is not None else "python"

rasterize = _impl.rasterize
fast_potential = _impl.fast_potential
bin_spans = _impl.bin_spans
longest_path = _impl.longest_path
reaches = _impl.reaches
