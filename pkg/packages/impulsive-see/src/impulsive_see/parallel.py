"""
Ordered parallel map used by the Monte-Carlo drivers.
"""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import TypeVar

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_THREADS = 1


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = DEFAULT_THREADS) -> list[R]:
    """
    Apply fn to every item and return results in input order.

    Args:
        fn: Pure function of one item
        items: Work items (usually path indices)
        threads: Worker count; 1 or less runs serially

    Returns:
        List of results, ordered like items regardless of scheduling
    """
    work = list(items)
    if threads <= 1 or len(work) <= 1:
        return [fn(item) for item in work]

    workers = min(threads, len(work))
    logger.debug("Mapping %d items over %d threads", len(work), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, work))
