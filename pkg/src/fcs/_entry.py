"""Console entry point.

Reads FCS_THREADS before numpy comes in so the BLAS/FFT thread pools pick it
up; 0 (or unset) keeps the library defaults.
"""

from __future__ import annotations

import os
import sys


def _cap_threads() -> None:
    raw = os.environ.get("FCS_THREADS", "").strip()
    if not raw:
        return
    try:
        n = int(raw)
    except ValueError:
        print(f"warning: ignoring non-integer FCS_THREADS={raw!r}", file=sys.stderr)
        return
    if n <= 0:
        return  # 0 = auto
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))


def main() -> None:
    _cap_threads()
    from .cli import main as cli_entry

    cli_entry()
