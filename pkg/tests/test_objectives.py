import math

import numpy as np
import pytest

from models.config import Objective
from models.distributions import Axis, CondDist, FiniteDist
from models.errors import DimensionMismatch
from models.params import Features, Model
from models.reports import BoundsReport, Feasibility
from services import model_family, objectives, prob_core

GAP = 1e-9


def _exact_posterior_decoder(px: FiniteDist, m: Model) -> Model:
    joint = prob_core.compose_joint(px, m.encoder)
    return Model(
        encoder=m.encoder,
        decoder=prob_core.posterior(joint, given=Axis.COLUMN),
        marginal=m.marginal,
    )


class TestSandwichBounds:
    """H - D <= I_rep <= R and E <= I_gen <= G on random models of the calibrated process"""

    def test_random_parametric_models(self, process):
        rng = np.random.default_rng(2024)
        px = process.px
        for i in range(1000):
            features = Features.ONE_HOT if i % 2 else Features.BIN_CENTER
            scale = float(np.exp(rng.uniform(np.log(0.05), np.log(1.5))))
            params = model_family.init_params(i, scale, process.bin_centers, int(rng.integers(2, 31)), features)
            params.marg_logits = rng.normal(0.0, 2.0, size=params.latent_size)
            if features == Features.ONE_HOT:
                params.dec_w = params.dec_w + rng.uniform(-scale, scale, size=params.dec_w.shape)
            m = model_family.realize(params, process.bin_centers)
            r = objectives.bounds_report(px, m)
            assert r.H - r.D <= r.I_rep + GAP
            assert r.I_rep <= r.R + GAP
            assert r.E <= r.I_gen + GAP
            assert r.I_gen <= r.G + GAP
            assert r.R + r.D >= r.H - GAP

    def test_audit_is_clean_on_random_models(self, process, make_model):
        rng = np.random.default_rng(7)
        for _ in range(50):
            m = make_model(rng, process.bin_count, 8)
            assert objectives.audit(objectives.bounds_report(process.px, m)) == []

    def test_audit_reports_each_broken_statement(self):
        bad = BoundsReport(H=1.0, D=0.2, R=0.5, I_rep=0.6, E=0.4, G=0.3, I_gen=0.35, U=0.0, S=0.0, elbo=0.0)
        violations = objectives.audit(bad)
        assert any("exceeds R" in v for v in violations)
        assert any("exceeds G" in v for v in violations)
        assert any("H - D" in v for v in violations)
        assert any("elbo" in v for v in violations)


class TestOptimality:
    """The induced marginal minimizes R and the exact posterior decoder minimizes D"""

    def test_induced_marginal_minimizes_rate(self, process, make_model):
        rng = np.random.default_rng(5)
        px = process.px
        for _ in range(100):
            m = make_model(rng, process.bin_count, 10)
            e_z = objectives.induced_marginal(px, m)
            best = Model(encoder=m.encoder, decoder=m.decoder, marginal=e_z)
            r_best = objectives.rate(px, best)
            assert r_best == pytest.approx(objectives.representational_mi(px, m), abs=1e-12)
            for _ in range(20):
                tilted = e_z.probs * np.exp(0.3 * rng.standard_normal(10))
                other = Model(encoder=m.encoder, decoder=m.decoder, marginal=FiniteDist(tilted / tilted.sum()))
                assert objectives.rate(px, other) >= r_best - 1e-12

    def test_posterior_decoder_minimizes_distortion(self, process, make_model):
        rng = np.random.default_rng(6)
        px = process.px
        H = prob_core.entropy(px)
        for _ in range(100):
            m = make_model(rng, process.bin_count, 10)
            best = _exact_posterior_decoder(px, m)
            d_best = objectives.distortion(px, best)
            assert d_best == pytest.approx(H - objectives.representational_mi(px, m), abs=1e-12)
            for _ in range(20):
                tilted = best.decoder.rows * np.exp(0.3 * rng.standard_normal(best.decoder.rows.shape))
                other = Model(
                    encoder=m.encoder,
                    decoder=CondDist(tilted / tilted.sum(axis=1, keepdims=True)),
                    marginal=m.marginal,
                )
                assert objectives.distortion(px, other) >= d_best - 1e-12


class TestIdentities:
    def test_elbo_is_exactly_minus_rate_plus_distortion(self, process, make_model):
        rng = np.random.default_rng(8)
        for _ in range(100):
            r = objectives.bounds_report(process.px, make_model(rng, 30, 5))
            assert r.elbo == -(r.D + r.R)

    def test_reparameterized_pair(self, process, make_model):
        """U - S = H - D for any data marginal approximation"""
        rng = np.random.default_rng(9)
        for _ in range(100):
            m = make_model(rng, 30, 7)
            q_x = FiniteDist(rng.dirichlet(np.ones(30)))
            r = objectives.bounds_report(process.px, m, q_x)
            assert abs((r.U - r.S) - (r.H - r.D)) <= 1e-9

    def test_g_is_tight_at_generative_marginal(self, process, make_model):
        rng = np.random.default_rng(10)
        for _ in range(100):
            m = make_model(rng, 30, 6)
            E, I_gen, G = objectives.generative_bounds(m, objectives.generative_marginal(m))
            assert abs(G - I_gen) <= 1e-12

    def test_s_is_zero_for_exact_data_marginal(self, process, make_model):
        m = make_model(np.random.default_rng(0), 30, 4)
        _, S = objectives.reparam_bounds(process.px, m, process.px)
        assert S == pytest.approx(0.0, abs=1e-12)


class TestLimits:
    def test_auto_decoding_edge(self, process):
        px = process.px
        m = Model(
            encoder=CondDist.constant(30, FiniteDist.uniform(3)),
            decoder=CondDist.constant(3, px),
            marginal=FiniteDist.uniform(3),
        )
        r = objectives.bounds_report(px, m)
        assert r.R == pytest.approx(0.0, abs=1e-15)
        assert r.D == pytest.approx(r.H, abs=1e-12)
        assert objectives.feasibility(r) == Feasibility.AUTO_DECODING_EDGE

    def test_auto_encoding_edge(self, process):
        px = process.px
        m = Model(encoder=CondDist.identity(30), decoder=CondDist.identity(30), marginal=px)
        r = objectives.bounds_report(px, m)
        assert r.D == 0.0
        assert r.R == pytest.approx(r.H, abs=1e-12)
        assert objectives.feasibility(r) == Feasibility.AUTO_ENCODING_EDGE

    def test_optimal_reference_sits_on_diagonal(self, process):
        r = objectives.bounds_report(process.px, model_family.optimal_reference(process))
        assert abs(r.R + r.D - r.H) <= 1e-9
        assert objectives.feasibility(r) == Feasibility.DIAGONAL
        assert r.R == pytest.approx(0.5, abs=1e-6)

    def test_support_failure_is_infinite(self, process):
        decoder = np.full((2, 30), 1.0 / 29)
        decoder[:, 0] = 0.0
        m = Model(
            encoder=CondDist.constant(30, FiniteDist.uniform(2)),
            decoder=CondDist(decoder),
            marginal=FiniteDist.uniform(2),
        )
        assert objectives.distortion(process.px, m) == math.inf
        assert objectives.kl_to_generative(process.px, m) == math.inf

    def test_infeasible_point(self):
        r = BoundsReport(H=2.0, D=0.5, R=0.5, I_rep=0.5, E=0, G=0, I_gen=0, U=0, S=0, elbo=-1.0)
        assert objectives.feasibility(r) == Feasibility.INFEASIBLE

    def test_interior_point(self):
        r = BoundsReport(H=2.0, D=1.5, R=1.0, I_rep=0.5, E=0, G=0, I_gen=0, U=0, S=0, elbo=-2.5)
        assert objectives.feasibility(r) == Feasibility.INTERIOR

    def test_dimension_mismatch(self, process, make_model):
        m = make_model(np.random.default_rng(0), 10, 3)
        with pytest.raises(DimensionMismatch):
            objectives.distortion(process.px, m)


class TestLosses:
    def test_beta_loss(self):
        assert objectives.beta_loss(2.0, 0.5, 1.0) == 2.5
        assert objectives.beta_loss(2.0, 0.5, 0.0) == 2.0
        with pytest.raises(ValueError):
            objectives.beta_loss(2.0, 0.5, -1.0)

    def test_target_rate_loss(self):
        assert objectives.target_rate_loss(2.0, 0.3, 0.5) == pytest.approx(2.2)
        assert objectives.target_rate_loss(2.0, 0.5, 0.5) == 2.0

    def test_target_distortion_loss(self):
        assert objectives.target_distortion_loss(2.0, 0.3, 1.5) == pytest.approx(0.8)

    def test_annealing_scales_rate_side(self):
        beta = Objective.beta(2.0)
        assert objectives.objective_loss(beta, 1.0, 0.5, weight=0.5) == 1.5
        rate = Objective.target_rate(0.5)
        assert objectives.objective_loss(rate, 1.0, 0.25, weight=0.0) == 1.0

    def test_kink_contributes_no_slope(self):
        assert objectives.objective_coefficients(Objective.target_rate(0.5), 1.0, 0.5) == (1.0, 0.0)
        assert objectives.objective_coefficients(Objective.target_rate(0.5), 1.0, 0.7) == (1.0, 1.0)
        assert objectives.objective_coefficients(Objective.target_distortion(1.0), 0.5, 0.2) == (-1.0, 1.0)

    def test_s_target_estimate(self):
        assert objectives.s_target_estimate(3.0, 1) == 3.0
        assert objectives.s_target_estimate(3.0, 100) == pytest.approx(3.0 - math.log(100))
        with pytest.raises(ValueError):
            objectives.s_target_estimate(3.0, 0)
