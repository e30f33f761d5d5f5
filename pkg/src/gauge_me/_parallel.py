from __future__ import annotations

import os

THREADS_ENV = "GAUGE_ME_THREADS"


def worker_count() -> int:
    """Parallelism bound from ``GAUGE_ME_THREADS``, else the CPU count."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            n = 0
        if n >= 1:
            return n
    return max(1, os.cpu_count() or 1)
