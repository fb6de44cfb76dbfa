import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies

from System.Workers import map_chunks
from Physics.Random import trajectory_generator, check_seed, chunk_ranges, RECORD_STREAM, JUMP_STREAM


@settings(max_examples=30, deadline=None)
@given(strategies.integers(min_value=0, max_value=500), strategies.integers(min_value=1, max_value=100))
def test_chunk_ranges_cover_all_items(n_items, chunk_size):
    ranges = chunk_ranges(n_items, chunk_size)
    covered = [i for start, stop in ranges for i in range(start, stop)]
    assert covered == list(range(n_items))
    assert all(stop - start <= chunk_size for start, stop in ranges)


def test_chunk_size_is_fixed():
    assert chunk_ranges(130) == [(0, 64), (64, 128), (128, 130)]


@settings(max_examples=20, deadline=None)
@given(strategies.integers(min_value=0, max_value=2 ** 64 - 1), strategies.integers(min_value=0, max_value=10 ** 6))
def test_trajectory_streams_are_reproducible(seed, index):
    first = trajectory_generator(seed, index).standard_normal(8)
    second = trajectory_generator(seed, index).standard_normal(8)
    other = trajectory_generator(seed, index, JUMP_STREAM).standard_normal(8)
    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_neighbouring_indices_differ():
    a = trajectory_generator(7, 0, RECORD_STREAM).standard_normal(4)
    b = trajectory_generator(7, 1, RECORD_STREAM).standard_normal(4)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("seed", [-1, 2 ** 64, 1.5, None])
def test_invalid_seeds_are_rejected(seed):
    with pytest.raises(ValueError):
        check_seed(seed)


@pytest.mark.parametrize("workers", [1, 2, 5])
def test_map_chunks_keeps_chunk_order(workers):
    chunks = [list(range(start, stop)) for start, stop in chunk_ranges(50, 7)]
    assert map_chunks(sum, chunks, workers) == [sum(chunk) for chunk in chunks]


def test_map_chunks_retries_failed_chunks():
    attempts = []
    lock = threading.Lock()

    def flaky(chunk):
        with lock:
            attempts.append(chunk[0])
            first_try = attempts.count(chunk[0]) == 1
        if chunk[0] == 3 and first_try:
            raise OSError("transient")
        return chunk[0]

    assert map_chunks(flaky, [[i] for i in range(6)], workers=3) == list(range(6))
    assert attempts.count(3) == 2


def test_map_chunks_reports_persistent_failure():
    def broken(chunk):
        if chunk[0] == 2:
            raise ValueError("always")
        return chunk[0]

    with pytest.raises(RuntimeError):
        map_chunks(broken, [[i] for i in range(4)], workers=2, max_retries=2)


def test_map_chunks_does_not_retry_deterministic_errors():
    attempts = []
    lock = threading.Lock()

    def broken(chunk):
        with lock:
            attempts.append(chunk[0])
        if chunk[0] == 1:
            raise ValueError("same result every time")
        return chunk[0]

    with pytest.raises(RuntimeError):
        map_chunks(broken, [[i] for i in range(4)], workers=2)
    assert attempts.count(1) == 1


def test_map_chunks_stops_its_workers():
    before = threading.active_count()
    for _ in range(50):
        assert map_chunks(len, [[1], [2], [3], [4]], workers=4) == [1, 1, 1, 1]
    assert threading.active_count() == before


def test_failed_map_chunks_stops_its_workers():
    before = threading.active_count()
    with pytest.raises(RuntimeError):
        map_chunks(lambda chunk: 1 / 0, [[1], [2], [3]], workers=3)
    assert threading.active_count() == before
