# -*- coding: Utf-8 -*

import time

class Clock:

    __slots__ = ("__elapsed", "__start")

    def __init__(self, start=False):
        self.__elapsed = 0.0
        self.__start = None
        if start:
            self.start()

    @property
    def running(self) -> bool:
        return self.__start is not None

    def start(self) -> None:
        if self.__start is None:
            self.__start = time.perf_counter()

    def stop(self) -> float:
        self.__elapsed = self.get_elapsed_time()
        self.__start = None
        return self.__elapsed

    def get_elapsed_time(self) -> float:
        if self.__start is None:
            return self.__elapsed
        return self.__elapsed + time.perf_counter() - self.__start
