"""
==============================================================================
PARALLEL THETA SWEEP - Fibre Entropy Across the Rotated Family
==============================================================================

PURPOSE:
    Estimate h^{fib} of 𝒯_θ for every t of a θ-grid (θ = e^{2πit}) using
    several CPU cores. Each grid point is an independent task: it samples
    its own path from derive_seed(master_seed, index) and runs one
    estimator, so results do not depend on the worker count.

ARCHITECTURE:
    ┌───────────────────────────────────────────────┐
    │            Main Process (Coordinator)          │
    │  - builds one task per t                      │
    │  - collects results in task order             │
    │  - aggregates statistics                      │
    └─────┬─────────────────────────────────────────┘
          ├──> Worker 1 ──> [t_0, t_1, …]
          ├──> Worker 2 ──> [t_4, t_5, …]
          └──> Worker N ──> […]

    Workers are module-level functions returning plain dicts, so they
    pickle cleanly. A failing point is returned as {"success": False, ...}
    and never stops the sweep.

USAGE:
    >>> sweep = ParallelThetaSweep(num_workers=8)
    >>> outcomes = sweep.process_batch(table, driving, theta_grid(128), seed=1, n_steps=10_000)
    >>> sweep.print_summary()
"""

from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import dataclass
from datetime import datetime
from multiprocessing import Pool
from typing import Dict, List, Optional

from loguru import logger
from rich.console import Console
from rich.table import Table
from tqdm import tqdm

from src.cocycle import DrivingSystem, MapTable, derive_seed
from src.domain.protocols import BlaschkeError


# ==============================================================================
# SWEEP STATISTICS
# ==============================================================================

@dataclass
class SweepStats:
    """
    Timing and outcome counts for one sweep.

    Example:
        >>> stats = SweepStats(total_points=128, successful=0, failed=0, start_time=datetime.now())
        >>> stats.end_time = datetime.now()
        >>> stats.update_final()
    """

    total_points: int
    successful: int
    failed: int
    start_time: datetime

    end_time: Optional[datetime] = None
    processing_time_seconds: float = 0.0
    points_per_second: float = 0.0
    worker_count: int = 0

    def update_final(self) -> None:
        if self.end_time:
            self.processing_time_seconds = (self.end_time - self.start_time).total_seconds()
            if self.processing_time_seconds > 0:
                self.points_per_second = self.successful / self.processing_time_seconds


# ==============================================================================
# WORKER FUNCTION
# ==============================================================================

def _worker_estimate_fibre_entropy(args):
    """
    Estimate fibre entropy at one grid point.

    Args:
        args: (index, t, table, driving, master_seed, estimator, options)

    Returns:
        (index, result dict)
    """
    from src.entropy import estimate_fibre_entropy

    index, t, table, driving, master_seed, estimator, options = args
    seed = derive_seed(master_seed, index)
    started = time.perf_counter()
    try:
        value = estimate_fibre_entropy(table, driving, t, seed, estimator=estimator, **options)
        return index, {
            "success": True,
            "t": t,
            "seed": seed,
            "h_fib": value,
            "elapsed": time.perf_counter() - started,
        }
    except (BlaschkeError, ValueError, FloatingPointError) as e:
        logger.error(f"Worker error at t={t}: {e}")
        return index, {
            "success": False,
            "t": t,
            "seed": seed,
            "error": f"{type(e).__name__}: {e}",
            "elapsed": time.perf_counter() - started,
        }


# ==============================================================================
# PARALLEL SWEEP
# ==============================================================================

class ParallelThetaSweep:
    """
    Distributes θ-grid points over a process pool.

    With one worker the tasks run in-process, which keeps tracebacks and
    debugging simple.
    """

    def __init__(self, num_workers: Optional[int] = None, chunk_size: int = 4):
        self.num_workers = num_workers or mp.cpu_count()
        self.chunk_size = max(1, chunk_size)
        self.results: List[Dict] = []
        self.stats: Optional[SweepStats] = None
        logger.debug(f"Initialized ParallelThetaSweep with {self.num_workers} workers")

    def process_batch(
        self,
        table: MapTable,
        driving: DrivingSystem,
        t_grid: List[float],
        seed: int,
        estimator: str = "orbit",
        show_progress: bool = True,
        **options,
    ) -> List[Dict]:
        """
        Run every grid point and return the result dicts in grid order.

        Extra keyword options go to estimate_fibre_entropy (n_steps,
        burn_in, n_fibres, grid_size, max_backward_steps).
        """
        self.stats = SweepStats(
            total_points=len(t_grid),
            successful=0,
            failed=0,
            start_time=datetime.now(),
            worker_count=self.num_workers,
        )
        self.results = [None] * len(t_grid)
        tasks = [
            (index, float(t), table, driving, int(seed), estimator, options)
            for index, t in enumerate(t_grid)
        ]
        logger.info(f"Sweeping {len(tasks)} θ-points with {self.num_workers} worker(s), estimator={estimator}")

        progress = dict(total=len(tasks), desc="θ-sweep", unit="pt", disable=not show_progress)
        if self.num_workers == 1:
            for task in tqdm(tasks, **progress):
                self._process_result(*_worker_estimate_fibre_entropy(task))
        else:
            with Pool(processes=self.num_workers) as pool:
                outcomes = pool.imap(_worker_estimate_fibre_entropy, tasks, chunksize=self.chunk_size)
                for index, result in tqdm(outcomes, **progress):
                    self._process_result(index, result)

        self.stats.end_time = datetime.now()
        self.stats.update_final()
        logger.success(
            f"Sweep complete: {self.stats.successful}/{self.stats.total_points} points "
            f"in {self.stats.processing_time_seconds:.2f}s"
        )
        return list(self.results)

    def _process_result(self, index: int, result: Dict) -> None:
        self.results[index] = result
        if result["success"]:
            self.stats.successful += 1
        else:
            self.stats.failed += 1
            logger.warning(f"θ-point t={result['t']} failed: {result['error']}")

    def print_summary(self) -> None:
        if not self.stats:
            logger.warning("No stats available - run a sweep first")
            return

        table = Table(title="θ-sweep summary")
        table.add_column("Metric", style="cyan")
        table.add_column("Value", style="green")
        table.add_row("Points", f"{self.stats.total_points:,}")
        table.add_row("Successful", f"{self.stats.successful:,}")
        table.add_row("Failed", f"{self.stats.failed:,}")
        table.add_row("Workers", str(self.stats.worker_count))
        table.add_row("Time", f"{self.stats.processing_time_seconds:.2f}s")
        table.add_row("Throughput", f"{self.stats.points_per_second:.2f} points/s")
        Console(stderr=True).print(table)
