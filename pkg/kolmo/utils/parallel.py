"""
Order-preserving thread pool map for sampling sweeps.
"""
# built-in imports
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

logger = logging.getLogger(__name__)

THREADS_ENV = "KOLMO_THREADS"
DEFAULT_THREADS = 1

T = TypeVar("T")
R = TypeVar("R")


def resolve_thread_count(requested: Optional[int] = None) -> int:
    """
    Thread count from the explicit request, then $KOLMO_THREADS, then the default.
    """
    if requested is not None:
        if requested < 1:
            raise ValueError(f"Thread count must be at least 1, got {requested}")
        return requested
    raw = os.environ.get(THREADS_ENV)
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from e
        if value < 1:
            raise ValueError(f"{THREADS_ENV} must be at least 1, got {value}")
        return value
    return DEFAULT_THREADS


def thread_map(fn: Callable[[T], R], items: Iterable[T],
               threads: Optional[int] = None) -> List[R]:
    """
    Apply ``fn`` to every item, results in input order. Exceptions propagate.
    """
    items = list(items)
    count = resolve_thread_count(threads)
    if count == 1 or len(items) < 2:
        return [fn(item) for item in items]
    logger.debug("Mapping %d items over %d threads", len(items), count)
    with ThreadPoolExecutor(max_workers=count) as pool:
        return list(pool.map(fn, items))
