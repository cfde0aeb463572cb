# Copyright 2025 John Brosnihan
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Job pool for independent solves.

Jobs are dispatched to a process pool and results are returned in submission
order, so outputs never depend on the worker count or completion order. With a
single worker, jobs run inline in the calling process.
"""

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from typing import Any, TypeVar

from homogenization_lab.config import settings
from homogenization_lab.logging import get_logger

logger = get_logger(__name__)

JobT = TypeVar("JobT")
ResultT = TypeVar("ResultT")


def run_jobs(
    func: Callable[[JobT], ResultT],
    jobs: Sequence[JobT],
    workers: int | None = None,
    return_exceptions: bool = False,
    label: str = "jobs",
) -> list[Any]:
    """
    Run ``func`` over ``jobs``.

    Args:
        func: Picklable top-level function
        jobs: Picklable job descriptions
        workers: Worker processes (defaults to settings.effective_workers)
        return_exceptions: Return raised exceptions in place of results instead
            of re-raising the first one
        label: Name used in log events

    Returns:
        Results (or exceptions) in job order

    Raises:
        Exception: The first failing job's exception, annotated with its index,
            unless ``return_exceptions`` is set
    """
    count = len(jobs)
    width = max(1, min(workers or settings.effective_workers, count or 1))
    logger.info("jobs_started", label=label, jobs=count, workers=width)

    outcomes: list[Any] = []
    if width == 1:
        for index, job in enumerate(jobs):
            try:
                outcomes.append(func(job))
            except Exception as e:
                if not return_exceptions:
                    e.add_note(f"{label} job {index} failed")
                    raise
                outcomes.append(e)
    else:
        with ProcessPoolExecutor(max_workers=width) as pool:
            futures = [pool.submit(func, job) for job in jobs]
            for index, future in enumerate(futures):
                try:
                    outcomes.append(future.result())
                except Exception as e:
                    if not return_exceptions:
                        for pending in futures[index + 1 :]:
                            pending.cancel()
                        e.add_note(f"{label} job {index} failed")
                        raise
                    outcomes.append(e)

    failures = sum(isinstance(o, Exception) for o in outcomes)
    logger.info("jobs_finished", label=label, jobs=count, failures=failures)
    return outcomes
