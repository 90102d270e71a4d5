from typing import Callable, Dict, Any, Awaitable
import logging
import time

logger = logging.getLogger(__name__)


class LoggingMiddleware:
    """Wraps one check run: logs start and outcome, stamps wall time on the record."""

    async def __call__(
        self,
        handler: Callable[[str, Dict[str, Any]], Awaitable[Any]],
        check_id: str,
        data: Dict[str, Any]
    ) -> Any:
        model = data.get("model")
        name = model.name if model is not None else "unknown"
        logger.info(f"Check: {check_id} | Model: {name}")

        started = time.perf_counter()
        record = await handler(check_id, data)
        elapsed = (time.perf_counter() - started) * 1000.0
        record.runtime_ms = elapsed

        level = logging.INFO if record.passed else logging.WARNING
        logger.log(level, f"Check: {check_id} | {record.status} | residual {record.max_residual} | {elapsed:.0f} ms")
        return record
