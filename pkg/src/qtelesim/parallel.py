"""Order-preserving fan-out of independent chunks to worker processes."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def map_ordered(fn, jobs, workers: int = 1) -> list:
    """``[fn(j) for j in jobs]``, optionally across ``workers`` processes.

    Results always come back in job order, whatever order the workers finish in.
    ``fn`` must be a module-level function so it can be pickled.
    """
    jobs = list(jobs)
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
