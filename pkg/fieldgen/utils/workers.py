"""Process-pool mapping that preserves input order."""

import logging
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")

logger = logging.getLogger("fieldgen")


def parallel_map(func: Callable[[T], R], items: Iterable[T], jobs: int = 1) -> List[R]:
    """
    Apply ``func`` to every item, in worker processes when ``jobs > 1``.

    Results are gathered as they complete and returned in input order, so the
    output never depends on scheduling.

    Args:
        func: Picklable (module-level) function
        items: Inputs
        jobs: Number of worker processes; 1 runs serially in-process

    Returns:
        ``[func(item) for item in items]``
    """
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    results: dict[int, R] = {}
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = {pool.submit(func, item): i for i, item in enumerate(items)}
        for done, future in enumerate(as_completed(futures), start=1):
            results[futures[future]] = future.result()
            if done % 50 == 0 or done == len(items):
                logger.info(f"Completed {done}/{len(items)} jobs")
    return [results[i] for i in range(len(items))]


def mapper(jobs: int) -> Callable[[Callable[[T], R], Iterable[T]], List[R]]:
    """``map``-compatible callable bound to ``jobs`` workers."""

    def _map(func: Callable[[T], R], items: Iterable[T]) -> List[R]:
        return parallel_map(func, items, jobs)

    return _map
