"""Rectangle discrepancy and generalized discrepancy for small boolean tables.

The row-subset scan runs in a compiled kernel when the extension is built and
falls back to numpy otherwise; set ``QICSIM_BACKEND=numpy`` to force the
fallback. Both produce identical floating-point results.
"""

import os

from . import _fallback

BACKEND = "numpy"
scan = _fallback.scan
if os.environ.get("QICSIM_BACKEND", "").lower() != "numpy":
    try:
        from ._kernels import scan  # noqa: F811
    except ImportError:
        pass
    else:
        BACKEND = "cython"

from .core import (  # noqa: E402
    BooleanTable,
    DiscResult,
    GdmResult,
    GdmSearch,
    disc_fast,
    disc_oracle,
    gdm_delta,
    gdm_search,
    witness_sum,
)

__all__ = [
    "BACKEND",
    "BooleanTable",
    "DiscResult",
    "GdmResult",
    "GdmSearch",
    "disc_fast",
    "disc_oracle",
    "gdm_delta",
    "gdm_search",
    "witness_sum",
]
