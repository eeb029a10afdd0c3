"""Multi-seed replications of the two headline toy-model runs.

Each case trains ten full-length models, so these are deselected by default;
run them with `pytest -m slow`.
"""
import pytest

from models.config import Objective, TrainConfig
from services import analysis, model_family, trainer

SEEDS = range(10)
REQUIRED_RUNS = 8

pytestmark = pytest.mark.slow


def _final(process, cfg: TrainConfig):
    trace = trainer.train(cfg, process)
    model = model_family.realize(trace.final_params, process.bin_centers)
    return trace.final_report, analysis.fig2(process, model)


class TestElboCollapse:
    """At beta = 1 the default one-hot decoder models p* alone and the latent goes unused"""

    def test_rate_collapses(self, process):
        hits = 0
        for seed in SEEDS:
            cfg = TrainConfig(objective=Objective.beta(1.0), seed=seed, log_every=5000)
            report, fig = _final(process, cfg)
            if report.R < 0.01 and fig.kl_p_g < 1e-2:
                hits += 1
        assert hits >= REQUIRED_RUNS


class TestTargetRate:
    """Pinning the rate at 0.5 nats recovers the two generating clusters"""

    def test_recovers_clusters(self, process):
        hits = 0
        for seed in SEEDS:
            cfg = TrainConfig(objective=Objective.target_rate(0.5), seed=seed, log_every=5000)
            report, fig = _final(process, cfg)
            if abs(report.R - 0.5) < 0.02 and analysis.recovers_process(fig, process.class_prior):
                hits += 1
        assert hits >= REQUIRED_RUNS
