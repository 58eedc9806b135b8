import threading
import time

import pytest

from dgc.batch_processor import BatchProcessor, ItemFailure, default_worker_count


def _square(item, offset=0):
    return item * item + offset


def _slow_first(item):
    # earlier items finish later
    time.sleep(0.01 * (5 - item))
    return item


def _fail_on_three(item):
    if item == 3:
        raise ValueError("three")
    return item


def test_serial_order():
    assert BatchProcessor().process_items([1, 2, 3], _square, {"offset": 1}) == [2, 5, 10]


def test_parallel_keeps_input_order():
    processor = BatchProcessor(max_workers=4)
    assert processor.process_items(list(range(5)), _slow_first) == [0, 1, 2, 3, 4]


@pytest.mark.parametrize("workers", [1, 3])
def test_failures_are_placeholders(workers):
    results = BatchProcessor(max_workers=workers).process_items(list(range(5)), _fail_on_three)
    assert results[:3] == [0, 1, 2] and results[4] == 4
    assert isinstance(results[3], ItemFailure)
    assert results[3].index == 3
    assert results[3].message == "ValueError: three"


def test_batches_and_callback():
    seen = []
    processor = BatchProcessor(batch_size=2, max_workers=2)
    results = processor.process_items(list(range(5)), _square, on_batch=lambda r: seen.append(len(r)))
    assert results == [0, 1, 4, 9, 16]
    assert seen == [2, 4, 5]
    stats = processor.get_stats()
    assert stats["total_batches"] == 3
    assert stats["successful_items"] == 5 and stats["failed_items"] == 0
    assert "avg_batch_time" in processor.get_stats_formatted()


def test_threads_are_used():
    names = set()
    lock = threading.Lock()

    def record(item):
        with lock:
            names.add(threading.current_thread().name)
        time.sleep(0.02)
        return item

    BatchProcessor(max_workers=3).process_items(list(range(6)), record)
    assert len(names) > 1


def test_processes():
    assert BatchProcessor(max_workers=2, use_processes=True).process_items([2, 3], _square) == [4, 9]


def test_empty():
    assert BatchProcessor().process_items([], _square) == []


def test_default_worker_count():
    assert default_worker_count() >= 1
    assert BatchProcessor(max_workers=None).max_workers >= 1
