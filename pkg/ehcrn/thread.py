# -*- coding: Utf-8 -*

from threading import Thread
from concurrent.futures import ProcessPoolExecutor
from functools import wraps
from typing import Callable, Iterable, Optional, Sequence, TypeVar
import psutil

_Item = TypeVar("_Item")
_Result = TypeVar("_Result")

def threaded_function(function):

    @wraps(function)
    def wrapper(*args, **kwargs) -> Thread:
        thread = Thread(target=function, args=args, kwargs=kwargs, daemon=True)
        thread.start()
        return thread

    return wrapper

def default_workers() -> int:
    return max(int(psutil.cpu_count(logical=False) or 1), 1)

def split_in_chunks(size: int, nb_chunks: int) -> list[range]:
    nb_chunks = max(1, min(int(nb_chunks), size))
    quotient, remainder = divmod(size, nb_chunks)
    chunks = list()
    start = 0
    for i in range(nb_chunks):
        stop = start + quotient + (1 if i < remainder else 0)
        chunks.append(range(start, stop))
        start = stop
    return chunks

def parallel_map(function: Callable[[_Item], _Result], items: Iterable[_Item], workers: Optional[int] = None,
                 processes: bool = False) -> list[_Result]:
    """Apply function on every item, spreading contiguous chunks over threads or processes.

    Results come back in input order whatever the schedule. The exception
    raised for the lowest failing index is re-raised in the caller.
    With processes=True, function and items must be picklable (a module level
    function or a functools.partial of one).
    """
    items: Sequence[_Item] = list(items)
    if workers is None:
        workers = default_workers()
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    if processes:
        return _process_map(function, items, workers)
    results: list[Optional[_Result]] = [None] * len(items)
    errors: list[tuple[int, BaseException]] = list()

    @threaded_function
    def run_chunk(chunk: range) -> None:
        for index in chunk:
            try:
                results[index] = function(items[index])
            except BaseException as e:  # pylint: disable=broad-except
                errors.append((index, e))
                return

    threads = [run_chunk(chunk) for chunk in split_in_chunks(len(items), workers)]
    for thread in threads:
        thread.join()
    if errors:
        raise min(errors, key=lambda error: error[0])[1]
    return results

def _process_map(function: Callable[[_Item], _Result], items: Sequence[_Item], workers: int) -> list[_Result]:
    workers = min(workers, len(items))
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        # map() yields in input order, so the first error seen has the lowest index
        return list(executor.map(function, items, chunksize=chunksize))
