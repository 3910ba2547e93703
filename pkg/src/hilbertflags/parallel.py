"""Thread pool helper capped by the HILBERT_THREADS environment variable."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    raw = os.environ.get("HILBERT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def parallel_map(fn, items):
    """Ordered map over ``items``; serial when only one worker is allowed."""
    items = list(items)
    n = min(worker_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
