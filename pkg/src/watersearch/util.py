"""Small shared helpers."""

from __future__ import annotations

import os


def worker_count() -> int:
    """Worker pool size, bounded by the WATERSEARCH_THREADS env var.

    Defaults to 1 (sequential).  Parallel paths are written so results do
    not depend on this value.
    """
    raw = os.environ.get("WATERSEARCH_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)
