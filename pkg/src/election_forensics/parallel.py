"""Thread-count control.

``EF_THREADS`` caps worker threads for replicate-level parallelism.  Work
is always split into deterministic, index-seeded chunks and merged by
index, so results are identical for any thread count.
"""

from __future__ import annotations

import os


def worker_count() -> int:
    raw = os.environ.get("EF_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
