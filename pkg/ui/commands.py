"""
Command-line surface: calibrate, train, sweep, eval, oracle and rerun.

Every command writes its outputs atomically and leaves a run manifest next
to its primary output. Exit codes: 0 success, 1 usage, 2 calibration,
3 divergence, 4 schema, 5 invariant violation.
"""
import argparse
import json
import logging
import os
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy

from models.config import AnnealSchedule, Objective, ObjectiveKind, QxMode, SweepSpec, TrainConfig
from models.distributions import FiniteDist
from models.errors import DivergedLoss, InvariantViolation, RDLensError, SchemaMismatch
from models.params import MODELPARAMS_SCHEMA, Features, Model
from models.reports import FIG2_SCHEMA
from models.toy_process import TOYPROCESS_SCHEMA, ToyProcess
from services import analysis, model_family, objectives, prob_core, sweep, toygen, trainer
from services.logger import setup_logger
from services.storage import MANIFEST_SCHEMA, StorageService
from ui.components import (
    BOUNDS_COLUMNS,
    CSV_SCHEMA,
    FRONTIER_COLUMNS,
    SWEEP_COLUMNS,
    TRACE_COLUMNS,
    bounds_row,
    frontier_rows,
    status_line,
    sweep_rows,
    trace_rows,
)

EXIT_OK = 0
EXIT_USAGE = 1

SEED_ENV = "RD_LENS_SEED"
DEFAULT_BETA_GRID = (0.1, 0.3, 1.0, 3.0, 10.0)
SAMPLE_COLUMNS = ("index", "x_bin", "x_center", "class")

logger = logging.getLogger("CLI")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _objective(text: str) -> Objective:
    try:
        return Objective.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _anneal(text: str) -> AnnealSchedule:
    """START:END ramps the rate weight from 0 to 1 between the two steps"""
    start, sep, end = text.partition(":")
    try:
        if not sep:
            raise ValueError
        return AnnealSchedule(w_start=0.0, w_end=1.0, start_step=int(start), end_step=int(end))
    except ValueError:
        raise argparse.ArgumentTypeError(f"anneal must look like START:END, got {text!r}")


def _grid(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated numbers, got {text!r}")


def _add_process_flag(p: argparse.ArgumentParser):
    p.add_argument("--process", default="process.json", help="toyprocess-v1 JSON from calibrate")


def _add_training_flags(p: argparse.ArgumentParser):
    defaults = TrainConfig()
    p.add_argument("--seed", type=int, default=os.environ.get(SEED_ENV, "0"),
                   help=f"random seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--steps", type=int, default=defaults.steps)
    p.add_argument("--lr", type=float, default=defaults.learning_rate)
    decay = p.add_mutually_exclusive_group()
    decay.add_argument("--lr-decay-start", type=int, default=defaults.lr_decay_start,
                       help="decay the learning rate linearly to zero from this step (default: %(default)s)")
    decay.add_argument("--constant-lr", action="store_true", help="hold the learning rate fixed")
    p.add_argument("--init-scale", type=float, default=defaults.init_scale)
    p.add_argument("--latent-size", type=int, default=defaults.latent_size)
    p.add_argument("--log-every", type=int, default=defaults.log_every)
    p.add_argument("--features", choices=[f.value for f in Features], default=None,
                   help="feature map (default: one-hot for beta, bin-center for targets)")
    p.add_argument("--qx-mode", choices=[m.value for m in QxMode], default=defaults.qx_mode.value)
    p.add_argument("--anneal", type=_anneal, default=None, metavar="START:END")
    p.add_argument("--normalize-gradients", action="store_true")


def _add_model_source(p: argparse.ArgumentParser):
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--checkpoint", help="modelparams-v1 JSON from train")
    source.add_argument("--optimal-reference", action="store_true",
                        help="use the closed-form model built from the true posteriors")
    p.add_argument("--latent-size", type=int, default=model_family.DEFAULT_LATENT_SIZE,
                   help="latent alphabet of the optimal reference")
    p.add_argument("--dataset-size", type=int, default=None,
                   help="also report the finite-sample target H - ln N for S")


def build_parser() -> CliParser:
    parser = CliParser(prog="rd-lens", description="Exact rate-distortion analysis of a discrete toy latent-variable model")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="build the toy process with a target I(x; z*)")
    p.add_argument("--target-mi", type=float, default=toygen.DEFAULT_TARGET_MI)
    p.add_argument("--bins", type=int, default=toygen.DEFAULT_BIN_COUNT)
    p.add_argument("--p1", type=float, default=toygen.DEFAULT_P1)
    p.add_argument("--mu0", type=float, default=toygen.DEFAULT_MU[0])
    p.add_argument("--mu1", type=float, default=toygen.DEFAULT_MU[1])
    p.add_argument("--span", type=float, nargs=2, default=None, metavar=("LO", "HI"),
                   help="bin range (default: three guessed-maximum deviations beyond the means)")
    p.add_argument("--tolerance", type=float, default=toygen.CALIBRATION_TOLERANCE)
    p.add_argument("--out", default="process.json")
    p.add_argument("--sample-out", default=None, help="also write a sample CSV")
    p.add_argument("--sample-size", type=int, default=1000)
    p.add_argument("--seed", type=int, default=os.environ.get(SEED_ENV, "0"))

    p = sub.add_parser("train", help="train one model")
    _add_process_flag(p)
    p.add_argument("--objective", type=_objective, default=Objective.beta(1.0),
                   metavar="KIND:VALUE", help="beta:<b>, target-rate:<s> or target-distortion:<d>")
    _add_training_flags(p)
    p.add_argument("--out", default="model.json")

    p = sub.add_parser("sweep", help="train over a grid of objective values and seeds")
    _add_process_flag(p)
    p.add_argument("--kind", choices=[k.value for k in ObjectiveKind], default=ObjectiveKind.BETA.value)
    p.add_argument("--grid", type=_grid, default=DEFAULT_BETA_GRID, metavar="V1,V2,...")
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    _add_training_flags(p)
    p.add_argument("--out", default="sweep.csv")

    p = sub.add_parser("eval", help="data, latent and transfer distributions of a model")
    _add_process_flag(p)
    _add_model_source(p)
    p.add_argument("--out", default="fig2.json")

    p = sub.add_parser("oracle", help="recompute and audit every bound of a model")
    _add_process_flag(p)
    _add_model_source(p)
    p.add_argument("--out", default="oracle.csv")

    p = sub.add_parser("rerun", help="re-execute a command from its manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="write the primary output here instead of the recorded path")

    return parser


def manifest_path(output: Path) -> Path:
    return output.with_name(f"{output.stem}.manifest.json")


def toolchain_fingerprint() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


@dataclass
class CommandResult:
    """What a command read, wrote and resolved, for its manifest"""
    primary: Path
    config: dict
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: List[Path] = field(default_factory=list)
    failure: Optional[RDLensError] = None


class CommandRunner:
    """Executes parsed commands against a storage root"""

    def __init__(self, storage: Optional[StorageService] = None):
        self.storage = storage or StorageService()

    def dispatch(self, args: argparse.Namespace, argv: Sequence[str]) -> int:
        handler = getattr(self, f"cmd_{args.command}")
        if args.command == "rerun":
            return handler(args)

        started = time.perf_counter()
        result: CommandResult = handler(args)
        self.storage.write_manifest(manifest_path(result.primary), {
            "command": args.command,
            "argv": list(argv),
            "seed": getattr(args, "seed", None),
            "cwd": str(self.storage.base_dir.resolve()),
            "config": result.config,
            "inputs": result.inputs,
            "outputs": [str(p) for p in result.outputs],
            "schemas": {
                "toyprocess": TOYPROCESS_SCHEMA,
                "modelparams": MODELPARAMS_SCHEMA,
                "fig2": FIG2_SCHEMA,
                "csv": CSV_SCHEMA,
                "manifest": MANIFEST_SCHEMA,
            },
            "wall_time": time.perf_counter() - started,
            "toolchain": toolchain_fingerprint(),
        })
        if result.failure is not None:
            raise result.failure
        return EXIT_OK

    # Helpers

    def _load_process(self, args) -> ToyProcess:
        tp, _ = self.storage.load_process(args.process)
        return tp

    def _train_config(self, args, objective: Objective) -> TrainConfig:
        return TrainConfig(
            objective=objective,
            steps=args.steps,
            learning_rate=args.lr,
            anneal=args.anneal,
            seed=args.seed,
            init_scale=args.init_scale,
            log_every=args.log_every,
            latent_size=args.latent_size,
            features=Features(args.features) if args.features else None,
            qx_mode=QxMode(args.qx_mode),
            normalize_gradients=args.normalize_gradients,
            lr_decay_start=None if args.constant_lr else args.lr_decay_start,
        ).validate()

    def _load_model(self, args, tp: ToyProcess) -> Tuple[Model, Optional[FiniteDist], Optional[TrainConfig]]:
        if args.optimal_reference:
            return model_family.optimal_reference(tp, args.latent_size), None, None
        params, config = self.storage.load_params(args.checkpoint)
        model = model_family.realize(params, tp.bin_centers)
        q_x = model_family.learned_qx(params) if params.qx_logits is not None else None
        return model, q_x, config

    def _model_inputs(self, args) -> Dict[str, str]:
        inputs = {"process": str(self.storage.resolve(args.process))}
        if args.checkpoint:
            inputs["checkpoint"] = str(self.storage.resolve(args.checkpoint))
        return inputs

    def _on_cell_status(self, key, status, error: str):
        logger.info(status_line(key, status, error))

    # Commands

    def cmd_calibrate(self, args) -> CommandResult:
        mu = (args.mu0, args.mu1)
        span = tuple(args.span) if args.span else None
        report, tp = toygen.calibrate_noise(
            target_mi=args.target_mi,
            p1=args.p1,
            mu=mu,
            bin_count=args.bins,
            bin_span=span,
            tolerance=args.tolerance,
        )
        out = self.storage.save_process(args.out, tp, report)
        outputs = [out]

        if args.sample_out:
            xs, zs = toygen.sample(tp, args.sample_size, args.seed)
            centers = tp.bin_centers
            rows = ([i, int(x), float(centers[x]), int(z)] for i, (x, z) in enumerate(zip(xs, zs)))
            outputs.append(self.storage.write_csv(args.sample_out, SAMPLE_COLUMNS, rows))

        print(json.dumps(report.to_dict()))
        config = {
            "target_mi": args.target_mi,
            "bins": args.bins,
            "p1": args.p1,
            "mu": list(mu),
            "bin_span": [float(tp.bin_edges[0]), float(tp.bin_edges[-1])],
            "tolerance": args.tolerance,
            "sample_size": args.sample_size if args.sample_out else None,
            "seed": args.seed,
        }
        return CommandResult(primary=out, config=config, outputs=outputs)

    def cmd_train(self, args) -> CommandResult:
        tp = self._load_process(args)
        cfg = self._train_config(args, args.objective)
        trace = trainer.train(cfg, tp)
        report = trace.final_report

        out = self.storage.save_params(args.out, trace.final_params, cfg)
        stem = out.with_suffix("")
        outputs = [
            out,
            self.storage.write_csv(f"{stem}.trace.csv", TRACE_COLUMNS, trace_rows(trace)),
            self.storage.write_csv(f"{stem}.bounds.csv", BOUNDS_COLUMNS, [
                bounds_row(cfg.objective, cfg.seed, report, objectives.feasibility(report)),
            ]),
        ]
        print(f"R={report.R!r} D={report.D!r} elbo={report.elbo!r}")
        return CommandResult(
            primary=out,
            config=cfg.to_dict(),
            inputs={"process": str(self.storage.resolve(args.process))},
            outputs=outputs,
        )

    def cmd_sweep(self, args) -> CommandResult:
        tp = self._load_process(args)
        kind = ObjectiveKind(args.kind)
        if not args.grid:
            raise ValueError("sweep grid is empty")
        base = self._train_config(args, Objective(kind, args.grid[0]))
        spec = SweepSpec(kind=kind, grid=args.grid, seeds=args.seeds, base=base, jobs=args.jobs).validate()

        points = sweep.run_sweep(spec, tp, status_callback=self._on_cell_status)
        out = self.storage.write_csv(args.out, SWEEP_COLUMNS, sweep_rows(points))
        outputs = [out]

        failure = None
        if any(p.is_finite() for p in points):
            frontier = sweep.pareto_frontier(points)
            diagonal = sweep.diagonal_reference(prob_core.entropy(tp.px))
            outputs.append(self.storage.write_csv(
                f"{out.with_suffix('')}.frontier.csv", FRONTIER_COLUMNS, frontier_rows(frontier, diagonal)))
        else:
            failure = DivergedLoss("every sweep cell diverged")

        return CommandResult(
            primary=out,
            config=spec.to_dict(),
            inputs={"process": str(self.storage.resolve(args.process))},
            outputs=outputs,
            failure=failure,
        )

    def cmd_eval(self, args) -> CommandResult:
        tp = self._load_process(args)
        model, q_x, cfg = self._load_model(args, tp)
        report = analysis.fig2(tp, model, q_x)

        extra = {"source": "optimal-reference" if args.optimal_reference else "checkpoint"}
        if args.dataset_size:
            extra["s_target_estimate"] = objectives.s_target_estimate(prob_core.entropy(tp.px), args.dataset_size)
        outputs = self.storage.save_fig2(args.out, report, model, extra)

        return CommandResult(
            primary=outputs[0],
            config={
                "optimal_reference": args.optimal_reference,
                "latent_size": model.latent_size,
                "dataset_size": args.dataset_size,
                "train_config": cfg.to_dict() if cfg else None,
            },
            inputs=self._model_inputs(args),
            outputs=outputs,
        )

    def cmd_oracle(self, args) -> CommandResult:
        tp = self._load_process(args)
        model, q_x, cfg = self._load_model(args, tp)
        report = objectives.bounds_report(tp.px, model, q_x)
        violations = objectives.audit(report)
        place = objectives.feasibility(report)

        out = self.storage.write_csv(args.out, BOUNDS_COLUMNS, [
            bounds_row(cfg.objective if cfg else None, cfg.seed if cfg else None, report, place),
        ])
        audit = {
            "bounds": report.to_dict(),
            "feasibility": place.value,
            "process_mi": toygen.process_mi(tp),
            "violations": violations,
        }
        if args.dataset_size:
            audit["s_target_estimate"] = objectives.s_target_estimate(report.H, args.dataset_size)
        audit_path = self.storage.write_json(f"{out.with_suffix('')}.audit.json", audit)

        failure = None
        if violations:
            failure = InvariantViolation("; ".join(violations))
        else:
            print(f"H={report.H!r} I_rep={report.I_rep!r} I_gen={report.I_gen!r}: all bounds hold")

        return CommandResult(
            primary=out,
            config={
                "optimal_reference": args.optimal_reference,
                "latent_size": model.latent_size,
                "dataset_size": args.dataset_size,
                "train_config": cfg.to_dict() if cfg else None,
            },
            inputs=self._model_inputs(args),
            outputs=[out, audit_path],
            failure=failure,
        )

    def cmd_rerun(self, args) -> int:
        """Replay the recorded argv against the recorded working directory"""
        manifest = self.storage.load_manifest(args.manifest)
        try:
            argv = list(manifest["argv"])
            cwd = str(manifest["cwd"])
            if args.out:
                argv += ["--out", args.out]
            rerun_args = build_parser().parse_args(argv)
        except (KeyError, TypeError, SystemExit) as e:
            raise SchemaMismatch(f"{args.manifest} does not record a runnable command line") from e
        if rerun_args.command == "rerun":
            raise ValueError("a manifest cannot replay another rerun")
        if manifest.get("seed") is not None:
            rerun_args.seed = int(manifest["seed"])
        logger.info(f"Replaying {' '.join(argv)} in {cwd}")
        runner = CommandRunner(StorageService(cwd))
        return runner.dispatch(rerun_args, argv)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logger(level)

    try:
        return CommandRunner().dispatch(args, argv)
    except RDLensError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_USAGE
