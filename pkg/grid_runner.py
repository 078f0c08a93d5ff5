import asyncio
import logging

logger = logging.getLogger(__name__)


class GridRunner:
    """Evaluates a function over a parameter grid with bounded concurrency.

    Results come back in grid order whatever the completion order was.
    """

    def __init__(self, func, max_concurrency=10, progress_callback=None):
        if max_concurrency < 1:
            raise ValueError(f"max_concurrency must be at least 1, got {max_concurrency}")
        self.func = func
        self.max_concurrency = max_concurrency
        self.progress_callback = progress_callback
        self.completed = 0

    async def _run_point(self, semaphore, index, point, total):
        async with semaphore:
            try:
                result = await asyncio.to_thread(self.func, point)
            except Exception as e:
                logger.error(f"Grid point {index} failed: {e}")
                raise
            self.completed += 1
            logger.debug(f"Grid point {index} done ({self.completed}/{total})")
            if self.progress_callback:
                self.progress_callback(self.completed, total)
            return result

    async def run_async(self, points):
        points = list(points)
        semaphore = asyncio.Semaphore(self.max_concurrency)
        self.completed = 0

        tasks = [
            self._run_point(semaphore, index, point, len(points))
            for index, point in enumerate(points)
        ]
        return list(await asyncio.gather(*tasks))

    def run(self, points):
        return asyncio.run(self.run_async(points))
