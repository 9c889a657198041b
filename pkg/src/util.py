"""入力の読み込み口、反復ソルバーの進捗通知、経過時間の計測。"""

import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from dataclasses import dataclass
from io import BytesIO, StringIO
from pathlib import Path
from typing import IO, Protocol


# テーブル・曲線・多角形の JSON
class TextDataSource(Protocol):
    def open_stream(self) -> IO[str]: ...


@dataclass(frozen=True)
class TextFileDataSource:
    path: Path

    def open_stream(self) -> IO[str]:
        return self.path.open("r", encoding="utf-8")


@dataclass(frozen=True)
class TextInMemoryDataSource:
    content: str

    def open_stream(self) -> IO[str]:
        return StringIO(self.content)


# 設定の TOML (tomllib はバイナリで読む)
class BinaryDataSource(Protocol):
    def open_stream(self) -> IO[bytes]: ...


@dataclass(frozen=True)
class BinaryFileDataSource:
    path: Path

    def open_stream(self) -> IO[bytes]:
        return self.path.open("rb")


@dataclass(frozen=True)
class BinaryInMemoryDataSource:
    content: bytes

    def open_stream(self) -> IO[bytes]:
        return BytesIO(self.content)


@dataclass(frozen=True)
class IterationEvent:
    # solver は "periodic", "shoot", "monodromy3", "parallel" のいずれか
    solver: str
    iteration: int
    residual: float


IterationListener = Callable[[IterationEvent], None]


class IterationDispatcher:
    """Newton 型ソルバーが各反復の残差を購読者に配る。"""

    def __init__(self) -> None:
        self._listeners: list[IterationListener] = []

    def subscribe(self, listener: IterationListener) -> None:
        self._listeners.append(listener)

    def unsubscribe(self, listener: IterationListener) -> None:
        if listener in self._listeners:
            self._listeners.remove(listener)

    @contextmanager
    def listening(self, listener: IterationListener) -> Iterator[None]:
        self.subscribe(listener)
        try:
            yield
        finally:
            self.unsubscribe(listener)

    def notify(self, event: IterationEvent) -> None:
        for listener in self._listeners:
            listener(event)


on_solver_iteration = IterationDispatcher()


class Timer:
    """with ブロックの経過秒数。ブロック内では途中経過、抜けた後は確定値を返す。"""

    _start: float
    _end: float | None

    def __enter__(self) -> Callable[[], float]:
        self._start = time.perf_counter()
        self._end = None
        return self.elapsed

    def __exit__(self, exc_type, exc_value, traceback) -> None:
        self._end = time.perf_counter()

    def elapsed(self) -> float:
        return (self._end or time.perf_counter()) - self._start
