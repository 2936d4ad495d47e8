"""Asynchronous scheduling of independent measurement runs."""

from __future__ import annotations

import asyncio
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import TYPE_CHECKING, ParamSpec, TypeVar

from .analysis import (
    BoundSeries,
    SweepResult,
    assemble_sweep,
    sweep_row,
    zeno_bound_series,
)
from .const import LOGGER, RUN_LEAK_THRESHOLD
from .exceptions import SweepError
from .measurement import DetectionRecord, MeasurementSchedule, run_measurement

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable
    from typing import Self

    from .distributions import TimeDistribution
    from .grid import SpatialGrid, WaveFunction
    from .packets import FreeState

_P = ParamSpec("_P")
_T = TypeVar("_T")


@dataclass
class ZenoHarness:
    """Main class for running sweeps of measurement runs.

    Runs are submitted to ``executor``. Without one, the harness creates a
    process pool of ``workers`` processes on first use (a single worker
    thread when ``workers`` is 1) and shuts it down on ``close``.
    """

    executor: Executor | None = None
    workers: int = 1
    leak_threshold: float = RUN_LEAK_THRESHOLD
    _close_executor: bool = False

    def __post_init__(self) -> None:
        """Validate the worker count."""
        if self.workers < 1:
            msg = f"Invalid worker count {self.workers}! Must be at least 1."
            raise SweepError(msg)

    def _get_executor(self) -> Executor:
        if self.executor is None:
            if self.workers > 1:
                self.executor = ProcessPoolExecutor(max_workers=self.workers)
            else:
                self.executor = ThreadPoolExecutor(max_workers=1)
            self._close_executor = True
            LOGGER.debug("Started executor with %d worker(s)", self.workers)
        return self.executor

    async def _submit(
        self,
        func: Callable[_P, _T],
        *args: _P.args,
        **kwargs: _P.kwargs,
    ) -> _T:
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(
            self._get_executor(),
            partial(func, *args, **kwargs),
        )

    async def run(
        self,
        psi0: WaveFunction,
        schedule: MeasurementSchedule,
    ) -> DetectionRecord:
        """Run a single measurement on the executor."""
        return await self._submit(
            run_measurement,
            psi0,
            schedule,
            leak_threshold=self.leak_threshold,
        )

    # pylint: disable-next=too-many-arguments
    async def delay_sweep(  # noqa: PLR0913
        self,
        state: FreeState,
        grid: SpatialGrid,
        base: MeasurementSchedule,
        ladder: Iterable[float],
        t_start: float,
        zeno: TimeDistribution,
    ) -> SweepResult:
        """Run every coupling of ``ladder`` concurrently and fit the delay line."""
        abscissae = sorted(set(ladder))
        if len(abscissae) < 4:
            msg = f"A sweep needs at least 4 distinct couplings, got {len(abscissae)}."
            raise SweepError(msg)
        LOGGER.debug(
            "Sweeping %d %s couplings on %d worker(s)",
            len(abscissae),
            base.model.value,
            self.workers,
        )
        rows = await asyncio.gather(
            *(
                self._submit(
                    sweep_row,
                    state,
                    grid,
                    base,
                    abscissa,
                    t_start,
                    zeno,
                    self.leak_threshold,
                )
                for abscissa in abscissae
            ),
        )
        return assemble_sweep(base.model, rows, zeno)

    # pylint: disable-next=too-many-arguments
    async def bound_ladder(  # noqa: PLR0913
        self,
        state: FreeState,
        grid: SpatialGrid,
        couplings: Iterable[float],
        sample_dt: float,
        t_start: float,
        t_end: float,
    ) -> list[BoundSeries]:
        """Return one bound series per coupling, ordered by increasing V0."""
        return list(
            await asyncio.gather(
                *(
                    self._submit(
                        zeno_bound_series,
                        state,
                        grid,
                        v0,
                        sample_dt,
                        t_start,
                        t_end,
                        self.leak_threshold,
                    )
                    for v0 in sorted(couplings)
                ),
            ),
        )

    async def close(self) -> None:
        """Shut down an executor created by the harness."""
        if self.executor and self._close_executor:
            self.executor.shutdown(wait=True)
            self.executor = None
            self._close_executor = False

    async def __aenter__(self) -> Self:
        """Async enter.

        Returns
        -------
            The ZenoHarness object.

        """
        return self

    async def __aexit__(self, *_exc_info: object) -> None:
        """Async exit.

        Args:
        ----
            _exc_info: Exec type.

        """
        await self.close()
