import numpy as np
import pytest

from causal_bounds.parallel import THREADS_ENV, map_ordered, replicate_rng, worker_count


def _square(v):
    return v * v


def test_streams_keyed_by_seed_and_index():
    a = replicate_rng(5, 3).random(4)
    assert np.array_equal(a, replicate_rng(5, 3).random(4))
    assert not np.array_equal(a, replicate_rng(5, 4).random(4))
    assert not np.array_equal(a, replicate_rng(6, 3).random(4))


def test_worker_count(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert worker_count() == 1
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    assert worker_count(2) == 2
    monkeypatch.setenv(THREADS_ENV, "lots")
    with pytest.raises(ValueError):
        worker_count()


def test_map_keeps_order():
    jobs = list(range(23))
    assert map_ordered(_square, jobs, 3) == [j * j for j in jobs]
    assert map_ordered(_square, [], 3) == []
