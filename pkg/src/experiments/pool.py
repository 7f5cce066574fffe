import concurrent.futures as cf
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from src.dynamics.state import SimulationConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunTask:
    """One (config, seed) unit of work; `labels` are copied into every row it produces."""

    config_id: str
    seed: int
    cfg: SimulationConfig
    labels: dict[str, Any] = field(default_factory=dict)
    params: dict[str, Any] = field(default_factory=dict)


Worker = Callable[[RunTask], list[dict[str, Any]]]


def _sort_key(row: dict[str, Any]):
    return row["config_id"], row["seed"]


def execute(tasks: list[RunTask], worker: Worker, threads: int = 1) -> list[dict[str, Any]]:
    """Run every task and return their rows sorted by (config id, seed).

    With threads > 1 the tasks go to a process pool; each task owns its random
    substreams, so the merged rows do not depend on the worker count.
    """
    rows: list[dict[str, Any]] = []
    if threads <= 1 or len(tasks) <= 1:
        for k, task in enumerate(tasks, start=1):
            rows.extend(worker(task))
            logger.info("[%d/%d] %s seed=%d done", k, len(tasks), task.config_id, task.seed)
        return sorted(rows, key=_sort_key)

    logger.info("Dispatching %d run(s) to %d worker process(es)", len(tasks), threads)
    with cf.ProcessPoolExecutor(max_workers=threads) as ex:
        futures = {ex.submit(worker, task): task for task in tasks}
        for k, future in enumerate(cf.as_completed(futures), start=1):
            task = futures[future]
            try:
                rows.extend(future.result())
            except Exception:
                logger.error("Run %s seed=%d failed", task.config_id, task.seed, exc_info=True)
                for pending in futures:
                    pending.cancel()
                raise
            logger.info("[%d/%d] %s seed=%d done", k, len(tasks), task.config_id, task.seed)
    return sorted(rows, key=_sort_key)
