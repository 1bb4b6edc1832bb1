"""Order-preserving map over independent per-frequency tasks."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence


def pmap(fn: Callable, items: Sequence, workers: int = 1) -> list:
    """Map ``fn`` over ``items``; results come back in input order.

    With ``workers > 1`` the tasks run in a process pool, so ``fn`` must be
    picklable (a module-level function or a :func:`functools.partial` of
    one).  Results are keyed by position, so the output does not depend on
    scheduling.
    """
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))

