import os
from concurrent.futures import ProcessPoolExecutor

WORKERS_ENV = "LEARNCURVE_WORKERS"


def worker_count(requested=None) -> int:
    if requested is None:
        requested = os.environ.get(WORKERS_ENV, "1")
    try:
        value = int(requested)
    except (TypeError, ValueError):
        raise ValueError(f"worker count must be an integer, got {requested!r}") from None
    return max(1, value)


def ordered_map(func, items, workers=None):
    """``[func(x) for x in items]``, optionally spread over worker processes.

    Results come back in input order whatever the worker count.
    """
    items = list(items)
    workers = min(worker_count(workers), max(len(items), 1))
    if workers == 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))
