"""
Test per l'esecuzione parallela dei campioni.
"""

import threading

import pytest

from src.config import ConfigError
from src.pool import parallel_map


class TestParallelMap:
    def test_order_preserved(self):
        items = list(range(20))
        assert parallel_map(lambda x: x * x, items, threads=4) == [x * x for x in items]

    def test_inline_with_one_thread(self):
        seen = []
        parallel_map(lambda x: seen.append(threading.current_thread()), [1, 2, 3], threads=1)
        assert all(t is threading.main_thread() for t in seen)

    def test_empty(self):
        assert parallel_map(lambda x: x, [], threads=4) == []

    def test_threads_from_env(self, monkeypatch):
        monkeypatch.setenv("KFP_THREADS", "3")
        assert parallel_map(lambda x: -x, [1, 2], threads=None) == [-1, -2]
        monkeypatch.setenv("KFP_THREADS", "zero")
        with pytest.raises(ConfigError):
            parallel_map(lambda x: x, [1])

    def test_exception_propagates(self):
        def fail(x):
            if x == 2:
                raise ValueError("campione non valido")
            return x

        with pytest.raises(ValueError):
            parallel_map(fail, [1, 2, 3], threads=2)
