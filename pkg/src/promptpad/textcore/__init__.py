"""Text kernel: compiled extension when built, pure-Python twin otherwise.

Set PROMPTPAD_PURE=1 to force the fallback (used by the parity tests and
the benchmark).
"""

import os

from ._pure import BASE, Id, alloc_run, decode_run, encode_run
from ._pure import TextCore as PyTextCore

KERNEL = "pure"
TextCore = PyTextCore

if not os.environ.get("PROMPTPAD_PURE"):
    try:
        from ._speed import TextCore as _SpeedTextCore

        TextCore = _SpeedTextCore
        KERNEL = "compiled"
    except ImportError:
        pass

__all__ = [
    "BASE",
    "Id",
    "KERNEL",
    "PyTextCore",
    "TextCore",
    "alloc_run",
    "decode_run",
    "encode_run",
]
