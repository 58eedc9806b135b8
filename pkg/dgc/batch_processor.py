"""
Batch processing module.
Runs independent tasks (realizations, benchmark samples) serially or on a
worker pool and returns their results in submission order.
"""

import time
import logging
import json
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional

import psutil

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ItemFailure:
    """Placeholder stored at the index of an item whose processing raised"""
    index: int
    error: BaseException

    @property
    def message(self) -> str:
        return f"{type(self.error).__name__}: {self.error}"


def default_worker_count() -> int:
    """Number of physical cores, falling back to 1 when unknown"""
    return psutil.cpu_count(logical=False) or 1


class BatchProcessor:
    """
    Processes items in batches, in parallel when more than one worker is
    configured. Results keep the order of the input items whatever the
    completion order of the workers, so reductions over them are deterministic.
    """

    def __init__(
        self,
        batch_size: Optional[int] = None,
        max_workers: Optional[int] = 1,
        use_processes: bool = False
    ):
        """
        Initialize the processor

        Args:
            batch_size: Items per batch; None processes everything as one batch
            max_workers: Worker count; None uses the number of physical cores
            use_processes: Use a process pool instead of threads. The callable
                and its arguments must then be picklable
        """
        self.batch_size = batch_size
        self.max_workers = max_workers if max_workers is not None else default_worker_count()
        self.use_processes = use_processes
        self.stats: Dict[str, Any] = {}
        self._reset_stats(0)

        logger.debug(f"BatchProcessor initialized: batch_size={batch_size}, "
                     f"max_workers={self.max_workers}, processes={use_processes}")

    def _reset_stats(self, total: int) -> None:
        self.stats = {
            "total_items": total,
            "successful_items": 0,
            "failed_items": 0,
            "total_batches": 0,
            "total_processing_time": 0.0,
            "start_time": time.time(),
            "end_time": None,
            "batch_times": []
        }

    def process_items(
        self,
        items: List[Any],
        processor_func: Callable[..., Any],
        processor_kwargs: Optional[Dict[str, Any]] = None,
        on_batch: Optional[Callable[[List[Any]], None]] = None
    ) -> List[Any]:
        """
        Process items, each through processor_func(item, **processor_kwargs)

        Args:
            items: Items to process
            processor_func: Module-level callable applied to every item
            processor_kwargs: Keyword arguments passed to every call
            on_batch: Called with all results collected so far after each batch
                completes, e.g. to flush partial output

        Returns:
            Results in input order; failed items are represented by ItemFailure
        """
        if not items:
            logger.warning("Empty item list, nothing processed")
            return []
        processor_kwargs = processor_kwargs or {}
        self._reset_stats(len(items))

        batch_size = self.batch_size or len(items)
        batches = [list(range(i, min(i + batch_size, len(items)))) for i in range(0, len(items), batch_size)]
        self.stats["total_batches"] = len(batches)

        results: List[Any] = []
        for batch_idx, indices in enumerate(batches):
            batch_start_time = time.time()
            if self.max_workers > 1 and len(indices) > 1:
                batch_results = self._process_batch_parallel(items, indices, processor_func, processor_kwargs)
            else:
                batch_results = [
                    self._process_single_item(idx, items[idx], processor_func, processor_kwargs)
                    for idx in indices
                ]
            results.extend(batch_results)

            batch_duration = time.time() - batch_start_time
            self.stats["batch_times"].append(batch_duration)
            logger.debug(f"Batch {batch_idx+1}/{len(batches)} finished: {len(indices)} items, {batch_duration:.2f} s")

            if on_batch is not None:
                on_batch(results)

        self.stats["end_time"] = time.time()
        self.stats["total_processing_time"] = self.stats["end_time"] - self.stats["start_time"]
        self.stats["failed_items"] = sum(isinstance(r, ItemFailure) for r in results)
        self.stats["successful_items"] = len(results) - self.stats["failed_items"]

        logger.info(f"Processed {self.stats['total_items']} items: {self.stats['successful_items']} ok, "
                    f"{self.stats['failed_items']} failed, {self.stats['total_processing_time']:.2f} s")
        return results

    def _make_executor(self, n_items: int) -> Executor:
        workers = min(self.max_workers, n_items)
        if self.use_processes:
            return ProcessPoolExecutor(max_workers=workers)
        return ThreadPoolExecutor(max_workers=workers)

    def _process_batch_parallel(
        self,
        items: List[Any],
        indices: List[int],
        processor_func: Callable[..., Any],
        processor_kwargs: Dict[str, Any]
    ) -> List[Any]:
        """Process one batch on the pool, placing results by index"""
        results: List[Any] = [None] * len(indices)

        with self._make_executor(len(indices)) as executor:
            future_to_pos = {
                executor.submit(processor_func, items[idx], **processor_kwargs): pos
                for pos, idx in enumerate(indices)
            }
            for future in as_completed(future_to_pos):
                pos = future_to_pos[future]
                try:
                    results[pos] = future.result()
                except Exception as e:
                    logger.error(f"Item {indices[pos]} failed: {e}")
                    results[pos] = ItemFailure(indices[pos], e)

        return results

    def _process_single_item(
        self,
        index: int,
        item: Any,
        processor_func: Callable[..., Any],
        processor_kwargs: Dict[str, Any]
    ) -> Any:
        try:
            return processor_func(item, **processor_kwargs)
        except Exception as e:
            logger.error(f"Item {index} failed: {e}")
            return ItemFailure(index, e)

    def get_stats(self) -> Dict[str, Any]:
        """Return processing statistics of the last call"""
        return self.stats

    def get_stats_formatted(self) -> str:
        """Return processing statistics as JSON text"""
        stats = dict(self.stats)
        if stats["batch_times"]:
            stats["avg_batch_time"] = sum(stats["batch_times"]) / len(stats["batch_times"])
        return json.dumps(stats, indent=2)
