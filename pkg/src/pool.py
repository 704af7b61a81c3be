# src/pool.py
"""
Esecuzione data-parallel di campioni indipendenti (ξ, λ, ε, y, tempi).
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

from .config import threads_from_env

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(
    fn: Callable[[T], R],
    items: Iterable[T],
    threads: Optional[int] = None
) -> List[R]:
    """
    Applica ``fn`` a ogni elemento, preservando l'ordine di input.

    Con un solo thread (o un solo elemento) esegue inline. Le riduzioni
    restano a carico del chiamante, sull'ordine restituito.

    Args:
        fn: Funzione pura da applicare
        items: Campioni indipendenti
        threads: Numero di thread (None = ``KFP_THREADS``)

    Returns:
        List: Risultati nello stesso ordine degli input
    """
    items = list(items)
    if threads is None:
        threads = threads_from_env()
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(fn, items))
