"""
Table layouts and row builders for the command-line outputs.

Column lists are part of the file formats; tests pin them against a golden file.
"""
from typing import List, Optional, Sequence

from models.config import Objective
from models.reports import BoundsReport, DiagonalLine, Feasibility, Frontier, RDPoint, TrainTrace
from services.sweep import CellKey, CellStatus

BOUNDS_COLUMNS = (
    "objective", "beta_or_sigma", "seed",
    "H", "D", "R", "elbo", "I_rep", "E", "G", "I_gen", "U", "S",
    "feasibility",
)
TRACE_COLUMNS = ("step", "loss", "R", "D", "elbo", "anneal_w")
SWEEP_COLUMNS = BOUNDS_COLUMNS + ("grid_value", "converged")
FRONTIER_COLUMNS = ("kind", "R", "D", "objective", "grid_value", "seed")
CSV_SCHEMA = "rd-csv-v1"
REFERENCE_LABEL = "optimal-reference"


def bounds_row(objective: Optional[Objective], seed: Optional[int], report: BoundsReport,
               feasibility: Optional[Feasibility] = None) -> List:
    """One BoundsReport row; an untrained reference model gets a label and blank value and seed"""
    return [
        objective.kind.value if objective else REFERENCE_LABEL,
        float(objective.value) if objective else "",
        "" if seed is None else seed,
        report.H, report.D, report.R, report.elbo,
        report.I_rep, report.E, report.G, report.I_gen, report.U, report.S,
        feasibility.value if feasibility else "",
    ]


def trace_rows(trace: TrainTrace) -> List[List]:
    return [[r.step, r.loss, r.R, r.D, r.elbo, r.anneal_w] for r in trace.records]


def sweep_rows(points: Sequence[RDPoint]) -> List[List]:
    return [
        bounds_row(p.objective, p.seed, p.report, p.feasibility) + [float(p.grid_value), int(p.converged)]
        for p in points
    ]


def frontier_rows(frontier: Frontier, diagonal: Optional[DiagonalLine] = None) -> List[List]:
    """Pareto and hull vertices, then the two endpoints of the D = H - R line"""
    rows = []
    for kind, points in (("pareto", frontier.pareto), ("hull", frontier.hull)):
        for p in points:
            rows.append([kind, p.R, p.D, p.objective.kind.value, float(p.grid_value), p.seed])
    if diagonal is not None:
        for rate, distortion in diagonal.endpoints:
            rows.append(["diagonal", rate, distortion, "", "", ""])
    return rows


STATUS_SYMBOLS = {
    CellStatus.PENDING: ".",
    CellStatus.RUNNING: ">",
    CellStatus.CONVERGED: "ok",
    CellStatus.DIVERGED: "!!",
}


def status_line(key: CellKey, status: CellStatus, error: str = "") -> str:
    """One-line progress message for a sweep cell"""
    grid_value, seed = key
    line = f"[{STATUS_SYMBOLS[status]:>2}] value={grid_value:g} seed={seed} {status.value}"
    return f"{line}: {error}" if error else line
