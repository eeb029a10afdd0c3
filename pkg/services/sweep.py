"""
Sweep Manager

Trains one model per (grid value, seed) cell on a bounded worker pool and
extracts the Pareto frontier and lower convex hull of the results.
"""
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from models.config import Objective, SweepSpec, TrainConfig
from models.errors import DivergedLoss
from models.reports import BoundsReport, DiagonalLine, Frontier, RDPoint
from models.toy_process import ToyProcess
from services import objectives
from services.trainer import train

DOMINANCE_TOLERANCE = 1e-9
COLLINEAR_TOLERANCE = 1e-12

CellKey = Tuple[float, int]


class CellStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    CONVERGED = "converged"
    DIVERGED = "diverged"


@dataclass
class SweepCell:
    """State of one (grid value, seed) training run"""
    grid_value: float
    seed: int
    status: CellStatus = CellStatus.PENDING
    point: Optional[RDPoint] = None
    error: str = ""


class SweepManager:
    """Runs sweep cells in parallel and reports per-cell status"""

    def __init__(self, status_callback: Optional[Callable[[CellKey, CellStatus, str], None]] = None):
        """
        Initialize Sweep Manager

        Args:
            status_callback: Function called when a cell changes status.
                            Signature: callback((grid_value, seed), status, error_message)
        """
        self.cells: Dict[CellKey, SweepCell] = {}
        self.status_callback = status_callback
        self._lock = threading.Lock()
        self.logger = logging.getLogger("SweepManager")

    def _notify_status(self, key: CellKey, status: CellStatus, error: str = ""):
        """Record and report a status change"""
        with self._lock:
            cell = self.cells[key]
            cell.status = status
            cell.error = error
        if self.status_callback:
            self.status_callback(key, status, error)

    @staticmethod
    def cell_config(spec: SweepSpec, grid_value: float, seed: int) -> TrainConfig:
        return spec.base.with_(objective=Objective(spec.kind, float(grid_value)), seed=seed)

    def _run_cell(self, spec: SweepSpec, tp: ToyProcess, key: CellKey) -> RDPoint:
        grid_value, seed = key
        cfg = self.cell_config(spec, grid_value, seed)
        self._notify_status(key, CellStatus.RUNNING)
        try:
            report = train(cfg, tp).final_report
            point = RDPoint(
                objective=cfg.objective,
                seed=seed,
                report=report,
                feasibility=objectives.feasibility(report),
            )
            status, error = CellStatus.CONVERGED, ""
        except DivergedLoss as e:
            self.logger.warning(f"Cell {cfg.objective.tag} seed {seed} diverged: {e}")
            point = RDPoint(
                objective=cfg.objective,
                seed=seed,
                report=BoundsReport.missing(),
                converged=False,
                error=str(e),
            )
            status, error = CellStatus.DIVERGED, str(e)

        with self._lock:
            self.cells[key].point = point
        self._notify_status(key, status, error)
        return point

    def run(self, spec: SweepSpec, tp: ToyProcess) -> List[RDPoint]:
        """Train every cell; results come back in (grid value, seed) order"""
        spec.validate()
        keys = spec.cells()
        with self._lock:
            self.cells = {key: SweepCell(grid_value=key[0], seed=key[1]) for key in keys}

        self.logger.info(f"Sweeping {spec.kind.value} over {len(spec.grid)} values x {spec.seeds} seeds with {spec.jobs} workers")
        with ThreadPoolExecutor(max_workers=spec.jobs, thread_name_prefix="sweep") as pool:
            futures = [pool.submit(self._run_cell, spec, tp, key) for key in keys]
            for future in futures:
                future.result()

        diverged = sum(1 for key in keys if self.cells[key].status == CellStatus.DIVERGED)
        if diverged:
            self.logger.warning(f"{diverged} of {len(keys)} cells diverged")
        return [self.cells[key].point for key in keys]


def run_sweep(
    spec: SweepSpec,
    tp: ToyProcess,
    status_callback: Optional[Callable[[CellKey, CellStatus, str], None]] = None,
) -> List[RDPoint]:
    return SweepManager(status_callback).run(spec, tp)


def _cross(o: RDPoint, a: RDPoint, b: RDPoint) -> float:
    return (a.R - o.R) * (b.D - o.D) - (a.D - o.D) * (b.R - o.R)


def pareto_frontier(points: Sequence[RDPoint], tol: float = DOMINANCE_TOLERANCE) -> Frontier:
    """Stepwise frontier (rate ascending, strictly falling distortion) and its lower hull.

    Diverged or non-finite points are left out.
    """
    finite = sorted((p for p in points if p.is_finite()), key=lambda p: (p.R, p.D))
    if not finite:
        raise ValueError("pareto_frontier needs at least one finite point")

    pareto: List[RDPoint] = []
    best = float("inf")
    for point in finite:
        if point.D < best - tol:
            pareto.append(point)
            best = point.D

    hull: List[RDPoint] = []
    for point in pareto:
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) <= COLLINEAR_TOLERANCE:
            hull.pop()
        hull.append(point)

    return Frontier(points=tuple(points), pareto=tuple(pareto), hull=tuple(hull))


def diagonal_reference(H: float) -> DiagonalLine:
    """D = H - R overlay from (0, H) to (H, 0)"""
    if H <= 0:
        raise ValueError(f"H must be > 0, got {H}")
    return DiagonalLine(H=H)
