#  TomoUnfold
#
#  Unfolded sparse recovery for differential SAR tomography
#  Copyright (C) 2024ff TomoUnfold Authors
#
#  This program is free software: you can redistribute it and/or modify
#  it under the terms of the GNU General Public License as published by
#  the Free Software Foundation, either version 3 of the License, or
#  (at your option) any later version.
#
#  This program is distributed in the hope that it will be useful,
#  but WITHOUT ANY WARRANTY; without even the implied warranty of
#  MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#  GNU General Public License for more details.
#
#  You should have received a copy of the GNU General Public License
#  along with this program.  If not, see <https://www.gnu.org/licenses/>.
import logging
from typing import Any, Callable, Sequence, TypeVar

from PySide6.QtCore import QRunnable, QThreadPool

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class Task(QRunnable):
    """one work item; result or exception kept for the collector"""

    def __init__(self, func: Callable[[Any], Any], item: Any) -> None:
        super().__init__()
        self.setAutoDelete(False)
        self.func = func
        self.item = item
        self.result: Any = None
        self.error: BaseException | None = None

    def run(self) -> None:
        try:
            self.result = self.func(self.item)
        except BaseException as exc:  # pylint: disable=broad-except
            self.error = exc


def run_parallel(
    func: Callable[[T], R], items: Sequence[T], threads: int = 1
) -> list[R]:
    """map func over items, results in item order

    The first exception (in item order) is re-raised after all tasks
    finished.
    """
    if threads < 1:
        raise ValueError(f"Illegal thread count: {threads}")
    if threads == 1 or len(items) < 2:
        return [func(item) for item in items]

    pool = QThreadPool()
    pool.setMaxThreadCount(threads)
    tasks = [Task(func, item) for item in items]
    logger.debug("%d tasks on %d threads", len(tasks), threads)
    for task in tasks:
        pool.start(task)
    pool.waitForDone()
    for task in tasks:
        if task.error is not None:
            raise task.error
    return [task.result for task in tasks]
