import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from models.config import TrainConfig
from models.errors import SchemaMismatch
from models.params import MODELPARAMS_SCHEMA, Model, ModelParams
from models.reports import FIG2_SCHEMA, Fig2Report
from models.toy_process import TOYPROCESS_SCHEMA, CalibrationReport, ToyProcess
from services import toygen

MANIFEST_SCHEMA = "manifest-v1"
JOINT_TOLERANCE = 1e-12

PathLike = Union[str, Path]


def format_float(value: float) -> str:
    """17 significant digits; inf, -inf and nan spelled out"""
    value = float(value)
    if np.isnan(value):
        return "nan"
    if np.isinf(value):
        return "inf" if value > 0 else "-inf"
    return format(value, ".17g")


class StorageService:
    """Handles persistence of processes, checkpoints and result tables.

    Every file is written to a temporary sibling first and moved into place,
    so a reader never sees a half-written output.
    """

    def __init__(self, base_dir: Optional[PathLike] = None):
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self.logger = logging.getLogger("Storage")

    def resolve(self, path: PathLike) -> Path:
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path

    def _write_text(self, path: PathLike, text: str) -> Path:
        target = self.resolve(path)
        target.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, target)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        self.logger.info(f"Wrote {target}")
        return target

    def write_json(self, path: PathLike, data: dict) -> Path:
        return self._write_text(path, json.dumps(data, indent=2) + "\n")

    def read_json(self, path: PathLike, schema: Optional[str] = None) -> dict:
        """Load a JSON document, checking its schema field when one is expected"""
        source = self.resolve(path)
        try:
            with open(source, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaMismatch(f"{source} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise SchemaMismatch(f"{source} does not hold a JSON object")
        if schema is not None and data.get("schema") != schema:
            raise SchemaMismatch(f"{source} has schema {data.get('schema')!r}, expected {schema!r}")
        return data

    def write_csv(self, path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
        return self._write_text(path, buffer.getvalue())

    def read_csv(self, path: PathLike) -> Tuple[List[str], List[List[str]]]:
        with open(self.resolve(path), "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        if not rows:
            raise SchemaMismatch(f"{path} is empty")
        return rows[0], rows[1:]

    def write_matrix(self, path: PathLike, matrix: np.ndarray, row_label: str, col_label: str) -> Path:
        """Dense matrix with a labelled index column"""
        matrix = np.asarray(matrix)
        header = [f"{row_label}\\{col_label}"] + [str(j) for j in range(matrix.shape[1])]
        rows = ([i] + [float(v) for v in matrix[i]] for i in range(matrix.shape[0]))
        return self.write_csv(path, header, rows)

    # Toy process

    def save_process(self, path: PathLike, tp: ToyProcess, calibration: Optional[CalibrationReport] = None) -> Path:
        data = tp.to_dict()
        data["calibration"] = calibration.to_dict() if calibration else None
        return self.write_json(path, data)

    def load_process(self, path: PathLike) -> Tuple[ToyProcess, Optional[CalibrationReport]]:
        """Load a process and check its stored joint against a rebuild from the geometry"""
        data = self.read_json(path, TOYPROCESS_SCHEMA)
        try:
            tp = ToyProcess.from_dict(data)
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaMismatch(f"{path} is not a valid toy process: {e}") from e

        rebuilt = toygen.build_toy_process(
            p1=tp.p1,
            mu=tp.mu,
            sigma=tp.sigma,
            bin_count=tp.bin_count,
            bin_span=(float(tp.bin_edges[0]), float(tp.bin_edges[-1])),
        )
        drift = float(np.max(np.abs(rebuilt.joint.table - tp.joint.table)))
        if drift > JOINT_TOLERANCE:
            raise SchemaMismatch(f"{path}: stored joint differs from its geometry by {drift:.3g}")
        return tp, CalibrationReport.from_dict(data.get("calibration"))

    # Checkpoints

    def save_params(self, path: PathLike, params: ModelParams, config: TrainConfig) -> Path:
        return self.write_json(path, {
            "schema": MODELPARAMS_SCHEMA,
            "seed": config.seed,
            "objective": config.objective.tag,
            "features": params.features.value,
            "config": config.to_dict(),
            "params": params.to_dict(),
        })

    def load_params(self, path: PathLike) -> Tuple[ModelParams, TrainConfig]:
        data = self.read_json(path, MODELPARAMS_SCHEMA)
        try:
            return ModelParams.from_dict(data["params"]), TrainConfig.from_dict(data["config"])
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaMismatch(f"{path} is not a valid checkpoint: {e}") from e

    # Diagnostics

    def save_fig2(self, path: PathLike, report: Fig2Report, model: Model, extra: Optional[dict] = None) -> List[Path]:
        """Fig2Report JSON plus encoder, decoder and transfer CSVs next to it"""
        target = self.resolve(path)
        data = report.to_dict()
        if extra:
            data.update(extra)
        stem = target.with_suffix("")
        return [
            self.write_json(target, data),
            self.write_matrix(f"{stem}.encoder.csv", model.encoder.rows, "x", "z"),
            self.write_matrix(f"{stem}.decoder.csv", model.decoder.rows, "z", "x"),
            self.write_matrix(f"{stem}.xfer.csv", report.xfer.rows, "x", "x'"),
        ]

    def load_fig2(self, path: PathLike) -> dict:
        return self.read_json(path, FIG2_SCHEMA)

    # Manifests

    def write_manifest(self, path: PathLike, manifest: dict) -> Path:
        return self.write_json(path, {"schema": MANIFEST_SCHEMA, **manifest})

    def load_manifest(self, path: PathLike) -> dict:
        return self.read_json(path, MANIFEST_SCHEMA)
