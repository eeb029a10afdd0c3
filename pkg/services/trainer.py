"""
Full-batch gradient training of ModelParams on the exact p*(x).
"""
import logging
import time
from typing import Optional

import numpy as np

from models.config import AnnealSchedule, QxMode, TrainConfig
from models.errors import DivergedLoss, InvalidDistribution, NonFiniteLoss
from models.params import ModelParams
from models.reports import TraceRecord, TrainTrace
from models.toy_process import ToyProcess
from services import grad_engine, model_family, objectives
from services.optimizer import Adam


def anneal_weight(schedule: Optional[AnnealSchedule], step: int) -> float:
    """Rate-term weight at a step; 1 without a schedule"""
    if schedule is None:
        return 1.0
    if step <= schedule.start_step:
        return schedule.w_start
    if step >= schedule.end_step:
        return schedule.w_end
    frac = (step - schedule.start_step) / (schedule.end_step - schedule.start_step)
    return schedule.w_start + frac * (schedule.w_end - schedule.w_start)


def learning_rate_at(cfg: TrainConfig, step: int) -> float:
    """Constant rate, then linear decay to zero from lr_decay_start"""
    if cfg.lr_decay_start is None or step < cfg.lr_decay_start:
        return cfg.learning_rate
    return cfg.learning_rate * (cfg.steps - step) / (cfg.steps - cfg.lr_decay_start)


def final_report(params: ModelParams, tp: ToyProcess, qx_mode: QxMode):
    model = model_family.realize(params, tp.bin_centers)
    q_x = model_family.learned_qx(params) if qx_mode == QxMode.LEARNED else None
    return model, objectives.bounds_report(tp.px, model, q_x)


def train(cfg: TrainConfig, tp: ToyProcess, init: Optional[ModelParams] = None) -> TrainTrace:
    """Run cfg.steps adaptive-moment updates; deterministic given the config"""
    cfg.validate()
    logger = logging.getLogger(f"Trainer.{cfg.objective.tag}")
    px, xvals = tp.px, tp.bin_centers

    if init is not None:
        params = init.copy()
    else:
        params = model_family.init_params(cfg.seed, cfg.init_scale, xvals, cfg.latent_size, cfg.feature_map)
    if cfg.qx_mode == QxMode.LEARNED and params.qx_logits is None:
        params.qx_logits = np.zeros(tp.bin_count)

    optimizer = Adam(cfg.learning_rate, cfg.adam, normalize=cfg.normalize_gradients)
    blocks = params.arrays()
    trace = TrainTrace(config=cfg)

    logger.info(f"Training {cfg.steps} steps (seed {cfg.seed}, {cfg.feature_map.value} features, K={cfg.latent_size})")
    started = time.perf_counter()

    for step in range(cfg.steps):
        weight = anneal_weight(cfg.anneal, step)
        try:
            result = grad_engine.evaluate(cfg.objective, params, px, xvals, cfg.qx_mode, weight)
        except NonFiniteLoss as e:
            logger.error(f"Loss diverged at step {step}: {e}")
            raise DivergedLoss(f"non-finite loss at step {step}: {e}", step=step) from e

        if step % cfg.log_every == 0 or step == cfg.steps - 1:
            trace.records.append(TraceRecord(
                step=step,
                loss=result.loss,
                R=result.R,
                D=result.D,
                elbo=objectives.elbo(result.D, result.R),
                anneal_w=weight,
            ))
            logger.debug(f"step {step}: loss={result.loss:.6f} R={result.R:.6f} D={result.D:.6f}")

        optimizer.step(blocks, result.grad.arrays(), lr=learning_rate_at(cfg, step))
        if not params.is_finite():
            logger.error(f"Parameters overflowed at step {step}")
            raise DivergedLoss(f"non-finite parameters after step {step}", step=step)

    try:
        _, report = final_report(params, tp, cfg.qx_mode)
    except InvalidDistribution as e:
        raise DivergedLoss(f"final parameters do not realize a model: {e}", step=cfg.steps) from e

    trace.final_params = params
    trace.final_report = report
    trace.wall_time = time.perf_counter() - started
    logger.info(f"Finished in {trace.wall_time:.2f}s: R={report.R:.6f} D={report.D:.6f} ELBO={report.elbo:.6f}")
    return trace
