import math

import numpy as np
import pytest

from models.config import AnnealSchedule, Objective, QxMode, TrainConfig
from models.errors import DivergedLoss
from models.params import Features
from services import model_family, objectives, trainer
from services.optimizer import Adam


def _config(**changes) -> TrainConfig:
    return TrainConfig(steps=300, log_every=100).with_(**changes)


class TestAnnealWeight:
    def test_without_schedule(self):
        assert trainer.anneal_weight(None, 0) == 1.0
        assert trainer.anneal_weight(None, 10_000) == 1.0

    def test_linear_ramp(self):
        schedule = AnnealSchedule(w_start=0.0, w_end=1.0, start_step=100, end_step=300)
        assert trainer.anneal_weight(schedule, 0) == 0.0
        assert trainer.anneal_weight(schedule, 100) == 0.0
        assert trainer.anneal_weight(schedule, 200) == pytest.approx(0.5)
        assert trainer.anneal_weight(schedule, 300) == 1.0
        assert trainer.anneal_weight(schedule, 5000) == 1.0

    def test_schedule_must_fit_run(self):
        with pytest.raises(ValueError):
            _config(anneal=AnnealSchedule(end_step=1000)).validate()


class TestLearningRate:
    def test_decays_over_whole_run_by_default(self):
        cfg = _config(learning_rate=0.01, steps=200)
        assert cfg.lr_decay_start == 0
        assert trainer.learning_rate_at(cfg, 0) == pytest.approx(0.01)
        assert trainer.learning_rate_at(cfg, 100) == pytest.approx(0.005)
        assert trainer.learning_rate_at(cfg, 199) == pytest.approx(0.00005)

    def test_constant_when_decay_is_off(self):
        cfg = _config(learning_rate=0.01, lr_decay_start=None)
        assert trainer.learning_rate_at(cfg, 0) == 0.01
        assert trainer.learning_rate_at(cfg, 299) == 0.01

    def test_linear_decay_to_zero(self):
        cfg = _config(learning_rate=0.01, steps=200, lr_decay_start=100)
        assert trainer.learning_rate_at(cfg, 99) == 0.01
        assert trainer.learning_rate_at(cfg, 100) == pytest.approx(0.01)
        assert trainer.learning_rate_at(cfg, 150) == pytest.approx(0.005)
        assert trainer.learning_rate_at(cfg, 199) == pytest.approx(0.0001)


class TestAdam:
    def test_first_step_moves_by_learning_rate(self):
        params = {"w": np.array([1.0, -2.0])}
        Adam(0.1).step(params, {"w": np.array([3.0, -0.5])})
        np.testing.assert_allclose(params["w"], [0.9, -1.9], atol=1e-8)

    def test_minimizes_a_quadratic(self):
        params = {"w": np.array([5.0, -3.0])}
        opt = Adam(0.05)
        for _ in range(2000):
            opt.step(params, {"w": 2.0 * params["w"]})
        np.testing.assert_allclose(params["w"], 0.0, atol=1e-2)

    def test_normalized_gradients_ignore_scale(self):
        a, b = {"w": np.array([1.0])}, {"w": np.array([1.0])}
        opt_a, opt_b = Adam(0.1, normalize=True), Adam(0.1, normalize=True)
        for _ in range(5):
            opt_a.step(a, {"w": np.array([1e-6])})
            opt_b.step(b, {"w": np.array([1e6])})
        np.testing.assert_allclose(a["w"], b["w"], atol=1e-12)


class TestTrain:
    def test_deterministic(self, process):
        first = trainer.train(_config(seed=3), process)
        second = trainer.train(_config(seed=3), process)
        np.testing.assert_array_equal(first.final_params.flatten(), second.final_params.flatten())
        assert [r.loss for r in first.records] == [r.loss for r in second.records]

    def test_trace_steps(self, process):
        trace = trainer.train(_config(steps=250), process)
        assert [r.step for r in trace.records] == [0, 100, 200, 249]
        assert len(trainer.train(_config(steps=1), process).records) == 1

    def test_loss_decreases(self, process):
        trace = trainer.train(_config(steps=400), process)
        assert trace.records[-1].loss < trace.records[0].loss

    def test_final_report_is_exact(self, process):
        trace = trainer.train(_config(steps=50), process)
        m = model_family.realize(trace.final_params, process.bin_centers)
        expected = objectives.bounds_report(process.px, m)
        assert trace.final_report.R == pytest.approx(expected.R, abs=1e-15)
        assert trace.final_report.elbo == -(trace.final_report.D + trace.final_report.R)
        assert trace.wall_time > 0.0

    def test_init_is_not_modified(self, process):
        init = model_family.init_params(0, 0.1, process.bin_centers)
        before = init.flatten().copy()
        trainer.train(_config(steps=20), process, init=init)
        np.testing.assert_array_equal(init.flatten(), before)

    def test_annealed_run_records_weight(self, process):
        cfg = _config(steps=200, log_every=50, anneal=AnnealSchedule(start_step=0, end_step=100))
        trace = trainer.train(cfg, process)
        assert [r.anneal_w for r in trace.records] == [0.0, 0.5, 1.0, 1.0, 1.0]

    def test_target_rate_moves_toward_target(self, process):
        cfg = _config(objective=Objective.target_rate(0.5), steps=600)
        trace = trainer.train(cfg, process)
        assert abs(trace.final_report.R - 0.5) < abs(trace.records[0].R - 0.5)

    def test_learned_data_marginal_reduces_s(self, process):
        cfg = _config(qx_mode=QxMode.LEARNED, steps=500)
        trace = trainer.train(cfg, process)
        assert trace.final_params.qx_logits is not None
        uniform_s = math.log(30) - trace.final_report.H
        assert trace.final_report.S < uniform_s

    def test_one_hot_run(self, process):
        trace = trainer.train(_config(features=Features.ONE_HOT, latent_size=8, steps=100), process)
        assert trace.final_params.enc_w.shape == (8, 30)
        assert objectives.audit(trace.final_report) == []

    def test_overflow_raises_diverged(self, process):
        init = model_family.init_params(0, 0.1, process.bin_centers)
        init.enc_b[:] = 1e200
        with pytest.raises(DivergedLoss) as excinfo:
            trainer.train(_config(steps=10), process, init=init)
        assert excinfo.value.step == 0
        assert excinfo.value.exit_code == 3

    def test_logged_loss_matches_objective(self, process):
        cfg = _config(objective=Objective.target_rate(0.5), steps=200, log_every=10,
                      anneal=AnnealSchedule(start_step=0, end_step=100))
        trace = trainer.train(cfg, process)
        for r in trace.records:
            expected = objectives.objective_loss(cfg.objective, r.D, r.R, r.anneal_w)
            assert r.loss == pytest.approx(expected, abs=1e-9)

    def test_first_record_matches_initial_model(self, process):
        cfg = _config(seed=4, steps=1)
        trace = trainer.train(cfg, process)
        init = model_family.init_params(4, cfg.init_scale, process.bin_centers, cfg.latent_size, cfg.feature_map)
        report = objectives.bounds_report(process.px, model_family.realize(init, process.bin_centers))
        assert trace.records[0].R == pytest.approx(report.R, abs=1e-9)
        assert trace.records[0].D == pytest.approx(report.D, abs=1e-9)

    @pytest.mark.parametrize("objective", [Objective.beta(1.0), Objective.beta(0.2), Objective.target_rate(0.5)])
    def test_logged_points_respect_the_entropy_bound(self, process, objective):
        trace = trainer.train(_config(objective=objective, steps=400, log_every=10), process)
        H = trace.final_report.H
        for r in trace.records:
            assert r.R + r.D >= H - 1e-6

    def test_late_losses_below_early_losses(self, process):
        trace = trainer.train(_config(steps=1000, log_every=10), process)
        losses = [r.loss for r in trace.records]
        tenth = len(losses) // 10
        assert np.mean(losses[:tenth]) >= np.mean(losses[-tenth:])


class TestFeatureMap:
    def test_beta_defaults_to_one_hot(self):
        assert TrainConfig().feature_map == Features.ONE_HOT

    @pytest.mark.parametrize("objective", [Objective.target_rate(0.5), Objective.target_distortion(2.0)])
    def test_targets_default_to_bin_center(self, objective):
        assert TrainConfig(objective=objective).feature_map == Features.BIN_CENTER

    def test_explicit_features_win(self):
        assert TrainConfig(features=Features.BIN_CENTER).feature_map == Features.BIN_CENTER

    def test_default_run_trains_one_hot_tables(self, process):
        trace = trainer.train(_config(steps=2, latent_size=6), process)
        assert trace.final_params.features == Features.ONE_HOT
        assert trace.final_params.dec_w.shape == (6, 30)

    def test_serialized_config_records_resolved_map(self):
        data = TrainConfig(objective=Objective.target_rate(0.5)).to_dict()
        assert data["features"] == "bin-center"
        assert TrainConfig.from_dict(data).feature_map == Features.BIN_CENTER
