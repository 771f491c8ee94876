"""
Ordered worker pool: results are placed by index, never by completion order
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, TypeVar

from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(func: Callable[[T], R], items: Sequence[T], workers: int = 1,
                progress: bool = False, desc: str = "") -> List[R]:
    """
    Apply func to every item, returning results in item order

    Args:
        func: Pure function of one item
        items: Work items
        workers: Thread count; 1 runs inline
        progress: Show a tqdm bar
        desc: Progress bar label

    Returns:
        List of results aligned with items
    """
    items = list(items)
    slots: List[R] = [None] * len(items)  # type: ignore[list-item]
    bar = tqdm(total=len(items), desc=desc, disable=not progress, leave=False)
    try:
        if workers <= 1 or len(items) <= 1:
            for index, item in enumerate(items):
                slots[index] = func(item)
                bar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(func, item) for item in items]
                for index, future in enumerate(futures):
                    slots[index] = future.result()
                    bar.update(1)
    finally:
        bar.close()
    logger.debug("ordered_map finished %d items with %d workers", len(items), workers)
    return slots
