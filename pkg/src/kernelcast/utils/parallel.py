import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Sequence

logger = logging.getLogger(__name__)


def worker_count(requested: Optional[int] = None) -> int:
    """Requested workers, capped by KERNELCAST_THREADS and the CPU count."""
    cap = os.getenv("KERNELCAST_THREADS")
    n = requested or (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(1, min(n, os.cpu_count() or 1))


def ordered_map(func: Callable[[Any], Any], items: Sequence[Any], n_workers: int = 1) -> List[Any]:
    """Apply ``func`` to every item; results come back in item order.

    ``func`` and the items must be picklable when ``n_workers > 1``.
    Exceptions from a task propagate to the caller.
    """
    if n_workers <= 1 or len(items) <= 1:
        return [func(item) for item in items]

    results: List[Any] = [None] * len(items)
    with ProcessPoolExecutor(max_workers=min(n_workers, len(items))) as executor:
        future_to_idx = {executor.submit(func, item): i for i, item in enumerate(items)}
        for future in as_completed(future_to_idx):
            idx = future_to_idx[future]
            results[idx] = future.result()
            logger.debug(f"Task {idx + 1}/{len(items)} finished")
    return results
