import math

import numpy as np
import pytest

from models.errors import BracketFailure, InvalidGeometry
from models.toy_process import CalibrationReport, ToyProcess
from services import prob_core, toygen


class TestBuildToyProcess:
    """Exact discretization of the two-class Gaussian mixture"""

    def test_joint_is_normalized_with_class_prior(self):
        tp = toygen.build_toy_process(sigma=1.0)
        assert tp.joint.shape == (30, 2)
        assert abs(tp.joint.table.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(tp.class_prior.probs, [0.7, 0.3], atol=1e-12)

    def test_bins_are_equal_width_over_span(self):
        tp = toygen.build_toy_process(sigma=1.0, bin_count=10, bin_span=(-5.0, 5.0))
        np.testing.assert_allclose(np.diff(tp.bin_edges), 1.0, atol=1e-12)
        np.testing.assert_allclose(tp.bin_centers[0], -4.5)

    def test_per_class_sigma(self):
        tp = toygen.build_toy_process(sigma=(0.5, 2.0))
        assert tp.sigma == (0.5, 2.0)

    def test_mi_falls_as_noise_grows(self):
        sigmas = [0.2, 0.5, 1.0, 2.0, 4.0]
        mis = [toygen.process_mi(toygen.build_toy_process(sigma=s)) for s in sigmas]
        assert all(a > b for a, b in zip(mis, mis[1:]))
        assert mis[0] <= prob_core.entropy(toygen.build_toy_process(sigma=0.2).class_prior) + 1e-12

    def test_rejects_bad_class_probability(self):
        with pytest.raises(ValueError):
            toygen.build_toy_process(p1=1.0)

    def test_rejects_means_outside_span(self):
        with pytest.raises(InvalidGeometry):
            toygen.build_toy_process(mu=(-1.0, 9.0), bin_span=(-7.0, 7.0))

    def test_rejects_too_few_bins(self):
        with pytest.raises(InvalidGeometry):
            toygen.build_toy_process(bin_count=1)

    def test_dict_round_trip_is_exact(self):
        tp = toygen.build_toy_process(sigma=0.8)
        again = ToyProcess.from_dict(tp.to_dict())
        np.testing.assert_array_equal(again.joint.table, tp.joint.table)
        np.testing.assert_array_equal(again.bin_edges, tp.bin_edges)
        assert again.mu == tp.mu and again.sigma == tp.sigma

    def test_shifting_means_and_bins_together_changes_nothing(self):
        base = toygen.build_toy_process(sigma=0.6)
        lo, hi = toygen.default_span()
        shifted = toygen.build_toy_process(mu=(2.0, 4.0), sigma=0.6, bin_span=(lo + 3.0, hi + 3.0))
        np.testing.assert_allclose(shifted.joint.table, base.joint.table, atol=1e-12)
        np.testing.assert_allclose(shifted.bin_edges, base.bin_edges + 3.0, atol=1e-12)

    def test_overwhelming_noise_hides_the_class(self):
        lo, hi = toygen.default_span()
        tp = toygen.build_toy_process(sigma=1e6 * (hi - lo))
        assert toygen.process_mi(tp) == pytest.approx(0.0, abs=1e-6)
        z_given_x, _, _ = toygen.true_posteriors(tp)
        np.testing.assert_allclose(z_given_x.rows, np.tile([0.7, 0.3], (30, 1)), atol=1e-6)

    def test_separated_means_expose_the_class(self):
        tp = toygen.build_toy_process(sigma=0.1)
        expected = -(0.7 * math.log(0.7) + 0.3 * math.log(0.3))
        assert toygen.process_mi(tp) == pytest.approx(expected, abs=1e-3)
        assert expected == pytest.approx(0.610864, abs=1e-6)
        z_given_x, _, px = toygen.true_posteriors(tp)
        occupied = px.probs > 1e-12
        np.testing.assert_allclose(z_given_x.rows[occupied].max(axis=1), 1.0, atol=1e-9)


class TestCalibrateNoise:
    def test_hits_half_a_nat(self, calibrated):
        report, tp = calibrated
        assert report.converged
        assert abs(toygen.process_mi(tp) - 0.5) <= 1e-6
        assert report.achieved_mi == pytest.approx(toygen.process_mi(tp), abs=1e-15)
        assert tp.sigma == (report.sigma, report.sigma)

    def test_other_targets(self):
        for target in (0.1, 0.3, 0.6):
            report, tp = toygen.calibrate_noise(target)
            assert abs(toygen.process_mi(tp) - target) <= 1e-6

    def test_lower_target_needs_more_noise(self, calibrated):
        quarter, _ = toygen.calibrate_noise(0.25)
        assert quarter.sigma > calibrated[0].sigma

    def test_target_above_class_entropy_fails(self):
        with pytest.raises(BracketFailure) as excinfo:
            toygen.calibrate_noise(0.7)
        err = excinfo.value
        assert err.exit_code == 2
        assert err.high_mi <= -(0.7 * math.log(0.7) + 0.3 * math.log(0.3)) + 1e-9
        assert err.low_mi < err.high_mi

    def test_report_round_trip(self, calibrated):
        report, _ = calibrated
        assert CalibrationReport.from_dict(report.to_dict()) == report


class TestTruePosteriors:
    def test_bayes_inversion(self, process):
        z_given_x, x_given_z, px = toygen.true_posteriors(process)
        assert z_given_x.rows.shape == (30, 2)
        assert x_given_z.rows.shape == (2, 30)
        np.testing.assert_allclose(px.probs[:, None] * z_given_x.rows, process.joint.table, atol=1e-15)
        np.testing.assert_allclose(
            (process.class_prior.probs[:, None] * x_given_z.rows).T, process.joint.table, atol=1e-15)


class TestSample:
    def test_reproducible_and_in_range(self, process):
        xs, zs = toygen.sample(process, 500, seed=3)
        xs2, zs2 = toygen.sample(process, 500, seed=3)
        np.testing.assert_array_equal(xs, xs2)
        np.testing.assert_array_equal(zs, zs2)
        assert xs.min() >= 0 and xs.max() < process.bin_count
        assert set(np.unique(zs)) <= {0, 1}

    def test_class_frequency(self, process):
        _, zs = toygen.sample(process, 20000, seed=0)
        assert abs(zs.mean() - 0.3) < 0.02
