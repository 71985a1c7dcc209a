"""Order-stable fan-out of independent evaluations over worker processes."""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]``, optionally spread over ``workers`` processes.

    ``fn`` must be picklable when ``workers > 1``. Results always come back in
    input order, and each item is evaluated by the same code path whatever the
    worker count, so outputs are identical for any ``workers``.
    """
    items = list(items)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, -(-len(items) // (4 * workers)))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
