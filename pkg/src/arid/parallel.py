"""Optional thread fan-out for independent trials."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    """Worker threads requested through the ARID_THREADS environment variable."""
    raw = os.environ.get("ARID_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_by_key(fn, keys):
    """Apply ``fn`` to every key, returning results in key order.

    Fans out over a thread pool when ARID_THREADS > 1. Results are collected
    by position either way, so the output does not depend on scheduling.
    """
    keys = list(keys)
    workers = thread_count()
    if workers <= 1 or len(keys) <= 1:
        return [fn(key) for key in keys]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, keys))
