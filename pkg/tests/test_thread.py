# -*- coding: Utf-8 -*

import os
import threading
import time
import pytest
from ehcrn import parallel_map, threaded_function, Clock, resolve_input_file, ensure_parent_directory
from ehcrn.thread import split_in_chunks, default_workers

def test_split_in_chunks_covers_range():
    chunks = split_in_chunks(10, 3)
    assert [list(chunk) for chunk in chunks] == [[0, 1, 2, 3], [4, 5, 6], [7, 8, 9]]
    assert split_in_chunks(2, 8) == [range(0, 1), range(1, 2)]
    assert split_in_chunks(5, 0) == [range(0, 5)]

def test_default_workers_is_positive():
    assert default_workers() >= 1

@pytest.mark.parametrize("workers", [1, 2, 5, 64])
def test_parallel_map_keeps_input_order(workers):
    assert parallel_map(lambda value: value * value, range(50), workers) == [value * value for value in range(50)]

def test_parallel_map_uses_threads():
    names = parallel_map(lambda _: threading.current_thread().name, range(4), 4)
    assert threading.current_thread().name not in names

def test_parallel_map_raises_first_failure():
    def check(value: int) -> int:
        if value in (7, 30):
            raise ValueError(f"bad item {value}")
        return value

    with pytest.raises(ValueError, match="bad item 7"):
        parallel_map(check, range(40), 4)

def _square(value: int) -> int:
    return value * value

def _pid(_: int) -> int:
    return os.getpid()

def _fail_on_seven_and_thirty(value: int) -> int:
    if value in (7, 30):
        raise ValueError(f"bad item {value}")
    return value

def test_parallel_map_with_processes_keeps_input_order():
    assert parallel_map(_square, range(50), 3, processes=True) == [value * value for value in range(50)]

def test_parallel_map_with_processes_leaves_the_caller_process():
    assert os.getpid() not in parallel_map(_pid, range(4), 2, processes=True)

def test_parallel_map_with_processes_raises_first_failure():
    with pytest.raises(ValueError, match="bad item 7"):
        parallel_map(_fail_on_seven_and_thirty, range(40), 4, processes=True)

def test_threaded_function_returns_started_thread():
    results = list()

    @threaded_function
    def work(value: int) -> None:
        results.append(value)

    thread = work(3)
    thread.join()
    assert results == [3]

def test_clock():
    clock = Clock()
    assert not clock.running
    assert clock.get_elapsed_time() == 0.0
    clock.start()
    time.sleep(0.01)
    elapsed = clock.stop()
    assert elapsed > 0
    assert clock.get_elapsed_time() == elapsed

def test_resolve_input_file(tmp_path, monkeypatch):
    existing = tmp_path / "run.cfg"
    existing.write_text("", encoding="utf-8")
    assert resolve_input_file(str(existing)) == str(existing)
    monkeypatch.chdir(os.path.dirname(__file__))
    monkeypatch.setattr("sys.argv", [str(tmp_path / "ehcrn")])
    assert resolve_input_file("run.cfg") == os.path.join(str(tmp_path), "run.cfg")
    assert resolve_input_file("nothing.cfg") == "nothing.cfg"

def test_ensure_parent_directory(tmp_path):
    target = tmp_path / "a" / "b" / "out.csv"
    assert ensure_parent_directory(str(target)) == str(target)
    assert (tmp_path / "a" / "b").is_dir()
