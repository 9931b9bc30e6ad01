"""Quantisation constants, message length parts, and the BIC gap."""

import math
import warnings

import numpy as np
import pytest

from mmlestim.codelength import (
    CodelengthReport,
    bic_gap_profile,
    kappa_const,
    kappa_is_exact,
    message_length,
    optimal_cell_volume,
)
from mmlestim.errors import DomainError, ImproperPriorWarning
from mmlestim.estimators import fit_mle, fit_wf
from mmlestim.models import EXPONENTIAL, WEIBULL, DataSet, ParamPoint
from mmlestim.numerics import RngStream
from mmlestim.priors import get_prior


class TestKappaConst:
    def test_exact_values(self):
        # interval, hexagonal, and body-centred cubic lattice constants
        assert kappa_const(1) == 1.0 / 12.0
        assert kappa_const(2) == 5.0 / (36.0 * math.sqrt(3.0))
        assert kappa_const(3) == 19.0 / (192.0 * 2.0 ** (1.0 / 3.0))
        np.testing.assert_allclose(kappa_const(2), 0.0801875373874480, rtol=1e-14)
        np.testing.assert_allclose(kappa_const(3), 0.0785432812171765, rtol=1e-14)

    def test_strictly_decreasing_over_exact_range(self):
        assert kappa_const(1) > kappa_const(2) > kappa_const(3)

    def test_exactness_flags(self):
        assert [kappa_is_exact(d) for d in (1, 2, 3, 4, 12)] == [
            True,
            True,
            True,
            False,
            False,
        ]

    def test_large_d_approximation(self):
        # (d pi)^(1/d) exp(-2 gamma / d) / (2 pi e) at d = 4, evaluated to 15
        # digits independently
        np.testing.assert_allclose(kappa_const(4), 0.0826013844980735, rtol=1e-9)

    def test_one_dimensional_assertion_constant(self):
        # the d = 1 additive constant (1/2)(log kappa_1 + 1)
        np.testing.assert_allclose(
            0.5 * (math.log(kappa_const(1)) + 1.0), -0.742453324894000, rtol=1e-12
        )

    def test_rejects_nonpositive_dimension(self):
        with pytest.raises(DomainError):
            kappa_const(0)
        with pytest.raises(DomainError):
            kappa_const(-2)


class TestOptimalCellVolume:
    def test_values(self):
        np.testing.assert_allclose(optimal_cell_volume(1), math.sqrt(12.0), rtol=1e-12)
        np.testing.assert_allclose(optimal_cell_volume(2), 12.470765814495916, rtol=1e-12)

    def test_consistent_with_assertion_constant(self):
        # -log Vol must be the same constant message_length adds, to 1e-12
        for d in (1, 2, 3):
            assert abs(
                -math.log(optimal_cell_volume(d)) - 0.5 * d * math.log(kappa_const(d))
            ) <= 1e-12

    def test_rejects_dimension_without_exact_constant(self):
        with pytest.raises(DomainError):
            optimal_cell_volume(4)


class TestMessageLength:
    def small_data(self):
        return DataSet(np.array([0.5, 1.0, 2.0, 0.25]))

    def test_exponential_hand_formula(self):
        data = self.small_data()
        theta = 1.2
        with pytest.warns(ImproperPriorWarning):
            report = message_length(
                EXPONENTIAL, get_prior("flat", EXPONENTIAL), data, np.array([theta])
            )
        loglik = 4.0 * math.log(theta) - theta * float(np.sum(data.observations))
        assertion = 0.5 * (math.log(4.0) - 2.0 * math.log(theta)) + 0.5 * math.log(
            1.0 / 12.0
        )
        np.testing.assert_allclose(report.assertion_part, assertion, rtol=1e-12)
        np.testing.assert_allclose(report.detail_part, -loglik + 0.5, rtol=1e-12)
        np.testing.assert_allclose(
            report.bic_form, -loglik + 0.5 * math.log(4.0), rtol=1e-12
        )

    def test_parts_and_gap_identities_exact(self):
        data = self.small_data()
        report = message_length(
            EXPONENTIAL, get_prior("half_cauchy_product", EXPONENTIAL), data, [0.9]
        )
        assert report.total == report.assertion_part + report.detail_part
        assert report.gap == report.total - report.bic_form
        assert report.units == "nats"

    def test_accepts_param_point(self):
        data = self.small_data()
        prior = get_prior("half_cauchy_product", EXPONENTIAL)
        by_point = message_length(EXPONENTIAL, prior, data, ParamPoint([0.9], (True,)))
        by_array = message_length(EXPONENTIAL, prior, data, np.array([0.9]))
        assert by_point.total == by_array.total

    def test_bits_conversion(self):
        data = self.small_data()
        report = message_length(
            EXPONENTIAL, get_prior("half_cauchy_product", EXPONENTIAL), data, [0.9]
        )
        bits = report.in_bits()
        assert bits.units == "bits"
        np.testing.assert_allclose(bits.total, report.total / math.log(2.0), rtol=1e-15)
        np.testing.assert_allclose(bits.gap, report.gap / math.log(2.0), rtol=1e-15)
        assert bits.in_bits() is bits

    @pytest.mark.parametrize("kind", ["flat", "jeffreys", "fisher_squared"])
    def test_improper_prior_warns(self, kind):
        data = self.small_data()
        with pytest.warns(ImproperPriorWarning):
            report = message_length(EXPONENTIAL, get_prior(kind, EXPONENTIAL), data, [1.0])
        assert report.improper is True

    def test_proper_prior_does_not_warn(self):
        data = self.small_data()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            report = message_length(
                EXPONENTIAL, get_prior("half_cauchy_product", EXPONENTIAL), data, [1.0]
            )
        assert report.improper is False

    def test_penalised_fit_minimises_length_on_grid(self):
        # total length over a fine grid must bottom out within one grid step
        # of the penalised estimate: they minimise the same function up to the
        # theta-free detail constant
        prior = get_prior("half_cauchy_product", EXPONENTIAL)
        data = EXPONENTIAL.sample(np.array([1.0]), 400, RngStream(31, 0))
        fitted = fit_wf(EXPONENTIAL, prior, data)
        grid = np.linspace(0.5, 2.0, 301)
        totals = [
            message_length(EXPONENTIAL, prior, data, [g]).total for g in grid
        ]
        best = grid[int(np.argmin(totals))]
        assert abs(best - fitted.theta_hat.values[0]) <= 0.005 + 1e-12

    def test_penalised_point_never_longer_than_ml_point(self):
        prior = get_prior("half_cauchy_product", EXPONENTIAL)
        data = EXPONENTIAL.sample(np.array([1.0]), 400, RngStream(31, 0))
        at_wf = message_length(
            EXPONENTIAL, prior, data, fit_wf(EXPONENTIAL, prior, data).theta_hat
        )
        at_mle = message_length(
            EXPONENTIAL, prior, data, fit_mle(EXPONENTIAL, data).theta_hat
        )
        assert at_wf.total <= at_mle.total + 1e-12

    def test_weibull_report_finite(self):
        prior = get_prior("half_cauchy_product", WEIBULL)
        data = WEIBULL.sample(np.array([2.0, 1.0]), 100, RngStream(7, 0))
        report = message_length(WEIBULL, prior, data, [2.0, 1.0])
        assert math.isfinite(report.total)
        assert math.isfinite(report.gap)


class TestBicGapProfile:
    def test_gap_settles_on_growing_prefixes(self):
        # the gap depends on n only through the fitted point, so consecutive
        # differences over quadrupling prefixes shrink like the estimate
        # error. A single sample can buck that by chance, so the contraction
        # is asserted on the average over a fixed bank of streams (everything
        # here is deterministic given the stream ids); each individual
        # difference still has to stay small outright.
        prior = get_prior("flat", EXPONENTIAL)
        first_diffs = []
        second_diffs = []
        for stream in range(35, 51):
            data = EXPONENTIAL.sample(np.array([1.0]), 1600, RngStream(stream, 0))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ImproperPriorWarning)
                profile = bic_gap_profile(EXPONENTIAL, prior, data, (100, 400, 1600))
            assert [n for n, _ in profile] == [100, 400, 1600]
            gaps = [gap for _, gap in profile]
            assert all(math.isfinite(g) for g in gaps)
            first_diffs.append(abs(gaps[1] - gaps[0]))
            second_diffs.append(abs(gaps[2] - gaps[1]))
        assert max(first_diffs + second_diffs) < 0.5
        assert np.mean(second_diffs) < 0.75 * np.mean(first_diffs)

    def test_rejects_non_increasing_prefixes(self):
        data = EXPONENTIAL.sample(np.array([1.0]), 50, RngStream(35, 1))
        prior = get_prior("half_cauchy_product", EXPONENTIAL)
        with pytest.raises(DomainError):
            bic_gap_profile(EXPONENTIAL, prior, data, (30, 30))

    def test_rejects_prefix_beyond_sample(self):
        data = EXPONENTIAL.sample(np.array([1.0]), 50, RngStream(35, 2))
        prior = get_prior("half_cauchy_product", EXPONENTIAL)
        with pytest.raises(DomainError):
            bic_gap_profile(EXPONENTIAL, prior, data, (25, 60))


def test_report_identity_is_structural():
    report = CodelengthReport(
        total=3.5, assertion_part=1.25, detail_part=2.25, bic_form=3.0, gap=0.5
    )
    assert report.as_dict()["assertion"] == 1.25
    assert sorted(report.as_dict()) == [
        "assertion",
        "bic_form",
        "detail",
        "gap",
        "improper",
        "total",
        "units",
    ]
