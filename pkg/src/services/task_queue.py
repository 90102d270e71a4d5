"""
Check queue for running verification checks.
Implements worker pool pattern with priority queue; each check runs in a
worker thread so long lattice studies do not block the event loop.
"""

import asyncio
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Dict, List, Optional

from src.config import config
from src.middlewares.logging import LoggingMiddleware
from src.services.checks import CATALOGUE, CheckRecord, RunOptions, run_check
from src.services.model_file import ModelFile
from src.utils.reliability import CheckTimeoutError, with_timeout

logger = logging.getLogger(__name__)


class Priority(IntEnum):
    """Exact checks are cheap and go first; lattice studies go last."""
    HIGH = 1
    NORMAL = 2
    LOW = 3


@dataclass(order=True)
class CheckTask:
    priority: int
    sequence: int
    check_id: str = field(compare=False)
    model: ModelFile = field(compare=False)
    options: RunOptions = field(compare=False)
    callback: Optional[Callable] = field(compare=False, default=None)


class CheckQueue:
    """
    Parallel check processing with a worker pool.

    Features:
    - Configurable worker count (CHECK_WORKERS)
    - Priority queue (HIGH > NORMAL > LOW)
    - Per-check timeout (CHECK_TIMEOUT)
    - Completion callbacks
    - Graceful shutdown
    """

    _instance: Optional['CheckQueue'] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if hasattr(self, '_initialized'):
            return
        self._initialized = True

        self._num_workers = config.CHECK_WORKERS
        self._queue: asyncio.PriorityQueue = asyncio.PriorityQueue()
        self._workers: list = []
        self._running = False
        self._sequence = 0
        self._results: Dict[str, CheckRecord] = {}
        self._errors: Dict[str, BaseException] = {}
        self._lock = asyncio.Lock()
        self._middleware = LoggingMiddleware()

    @property
    def running(self) -> bool:
        return self._running

    async def start(self, workers: Optional[int] = None):
        """Start worker pool. Queue and lock are rebuilt for the current event loop."""
        if self._running:
            return

        self._running = True
        self._num_workers = max(1, workers or config.CHECK_WORKERS)
        self._queue = asyncio.PriorityQueue()
        self._lock = asyncio.Lock()
        self._results.clear()
        self._errors.clear()

        for i in range(self._num_workers):
            worker = asyncio.create_task(self._worker(i))
            self._workers.append(worker)

        logger.info(f"Check queue started with {self._num_workers} workers")

    async def stop(self):
        """Stop worker pool gracefully."""
        self._running = False

        # Poison pills sort after every real task
        for i, _ in enumerate(self._workers):
            await self._queue.put((Priority.LOW + 1, i, None))

        if self._workers:
            await asyncio.gather(*self._workers, return_exceptions=True)
            self._workers.clear()

        logger.info("Check queue stopped")

    async def _execute(self, task: CheckTask) -> CheckRecord:
        @with_timeout(config.CHECK_TIMEOUT, f"check {task.check_id}")
        async def run(check_id: str, data: dict) -> CheckRecord:
            return await asyncio.to_thread(run_check, data["model"], check_id, data["options"])

        try:
            return await self._middleware(run, task.check_id, {"model": task.model, "options": task.options})
        except CheckTimeoutError:
            # to_thread cannot cancel the thread; it finishes in the background
            logger.warning(f"Check {task.check_id} timed out, its worker thread runs until the check returns")
            raise

    async def _worker(self, worker_id: int):
        logger.debug(f"Worker {worker_id} started")

        while True:
            try:
                item = await self._queue.get()
            except asyncio.CancelledError:
                break

            task: Optional[CheckTask] = item[2]
            if task is None:
                self._queue.task_done()
                break

            try:
                logger.debug(f"Worker {worker_id} processing {task.check_id}")
                record = await self._execute(task)
                async with self._lock:
                    self._results[task.check_id] = record

                if task.callback:
                    try:
                        if asyncio.iscoroutinefunction(task.callback):
                            await task.callback(task.check_id, record)
                        else:
                            task.callback(task.check_id, record)
                    except Exception as e:
                        logger.error(f"Callback error for {task.check_id}: {e}")

            except Exception as e:
                logger.error(f"Check {task.check_id} aborted: {e}")
                async with self._lock:
                    self._errors[task.check_id] = e

            finally:
                self._queue.task_done()

        logger.debug(f"Worker {worker_id} stopped")

    async def submit(
        self,
        check_id: str,
        model: ModelFile,
        options: RunOptions = None,
        priority: Priority = Priority.NORMAL,
        callback: Optional[Callable] = None
    ) -> str:
        """
        Submit a check to the queue.

        Args:
            check_id: Catalogue id of the check
            model: Loaded model file the check reads its inputs from
            options: Command-line overrides
            priority: Task priority level
            callback: Optional callback(check_id, record) on completion

        Returns:
            check_id for tracking
        """
        self._sequence += 1
        task = CheckTask(priority.value, self._sequence, check_id, model, options or RunOptions(), callback)
        await self._queue.put((task.priority, task.sequence, task))
        logger.debug(f"Check {check_id} submitted with priority {priority.name}")
        return check_id

    async def join(self):
        await self._queue.join()

    async def run_all(self, model: ModelFile, check_ids: List[str], options: RunOptions = None,
                      callback: Optional[Callable] = None) -> List[CheckRecord]:
        """
        Run checks to completion and return their records in catalogue order,
        whatever order the workers finished in. The first check that raised
        re-raises here.
        """
        for check_id in check_ids:
            priority = Priority.LOW if check_id in CATALOGUE["lattice"] else Priority.HIGH
            await self.submit(check_id, model, options, priority, callback)
        await self.join()

        for check_id in check_ids:
            if check_id in self._errors:
                raise self._errors[check_id]
        return [self._results[check_id] for check_id in check_ids]

    def get_result(self, check_id: str) -> Optional[CheckRecord]:
        return self._results.get(check_id)

    def get_queue_size(self) -> int:
        return self._queue.qsize()


def get_check_queue() -> CheckQueue:
    """Get the singleton check queue instance."""
    return CheckQueue()


async def run_checks(model: ModelFile, check_ids: List[str], options: RunOptions = None,
                     workers: Optional[int] = None) -> List[CheckRecord]:
    """Start the queue, run ``check_ids`` and always stop it again."""
    queue = get_check_queue()
    await queue.start(workers)
    try:
        return await queue.run_all(model, check_ids, options)
    finally:
        await queue.stop()
