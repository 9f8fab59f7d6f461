"""Tests for the photon-counting distribution after loss."""

import math

import numpy as np
import pytest

from entanglement.errors import SeriesDivergenceError, SpinDomainError
from entanglement.pdc_probability import (
    FockCount,
    ModelParams,
    block_counts,
    block_probability,
    captured_mass,
    joint_count_probability,
    mu_zero_closed_form,
    pair_marginal_probability,
    pair_tail_bound,
    photons_to_tau,
)
from entanglement.spin_algebra import BlockLabel


class TestModelParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"eta": -0.1, "tau": 0.5},
            {"eta": 1.1, "tau": 0.5},
            {"eta": 0.5, "tau": -1.0},
            {"eta": 0.5, "tau": 0.5, "series_eps": 0.0},
            {"eta": 0.5, "tau": 0.5, "alpha_max": -1},
            {"eta": 0.5, "tau": 0.5, "variant": "other"},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(SpinDomainError):
            ModelParams(**kwargs)

    def test_photon_numbers(self):
        params = ModelParams.from_photon_number(1.0, eta=0.4)
        assert params.photon_number == pytest.approx(1.0)
        assert params.photon_number_after_loss == pytest.approx(0.4)
        assert photons_to_tau(params.photon_number) == pytest.approx(params.tau)

    def test_xi(self):
        params = ModelParams(eta=0.25, tau=1.0)
        assert params.xi == pytest.approx(0.75 * math.tanh(1.0))

    def test_hashable(self):
        assert ModelParams(0.5, 1.0) == ModelParams(0.5, 1.0)
        assert len({ModelParams(0.5, 1.0), ModelParams(0.5, 1.0)}) == 1


class TestCounts:
    def test_block_counts_follow_product_basis(self):
        block = BlockLabel(2, 1)
        counts = list(block_counts(block))
        assert len(counts) == block.dim
        for position, count in enumerate(counts):
            assert count.block == block
            assert block.index(count.a_h, count.b_h) == position

    def test_negative_count(self):
        with pytest.raises(SpinDomainError):
            FockCount(-1, 0, 0, 0)


class TestJointProbability:
    def test_total_loss_leaves_vacuum(self):
        params = ModelParams(eta=0.0, tau=0.8)
        assert block_probability(0, 0, params) == pytest.approx(1.0, abs=1e-12)
        assert block_probability(1, 0, params) == 0.0

    @pytest.mark.parametrize("pairs", [0, 1, 2, 3])
    def test_no_loss_gives_pair_distribution(self, pairs):
        tau = 0.9
        params = ModelParams(eta=1.0, tau=tau)
        expected = (pairs + 1) * math.tanh(tau) ** (2 * pairs) / math.cosh(tau) ** 4
        assert block_probability(pairs, pairs, params) == pytest.approx(expected, rel=1e-12)
        assert block_probability(pairs + 1, pairs, params) == 0.0

    @pytest.mark.parametrize("eta, tau", [(0.3, 0.5), (0.6, 1.0), (0.9, 1.5), (0.05, 0.25)])
    @pytest.mark.parametrize("alpha, beta", [(0, 0), (1, 0), (1, 1), (2, 1), (3, 3), (0, 4)])
    def test_matches_pair_marginal(self, eta, tau, alpha, beta):
        params = ModelParams(eta=eta, tau=tau)
        assert block_probability(alpha, beta, params) == pytest.approx(
            pair_marginal_probability(alpha, beta, params), abs=1e-12, rel=1e-10
        )

    def test_swapping_sides(self):
        params = ModelParams(eta=0.4, tau=0.7)
        assert block_probability(1, 3, params) == pytest.approx(block_probability(3, 1, params), rel=1e-12)

    def test_typeset_variant_differs_by_loss_power(self):
        derived = ModelParams(eta=0.5, tau=0.8)
        typeset = ModelParams(eta=0.5, tau=0.8, variant="typeset")
        count = FockCount(1, 0, 1, 1)
        ratio = joint_count_probability(count, typeset) / joint_count_probability(count, derived)
        assert ratio == pytest.approx(0.5 ** (2 * 3), rel=1e-12)

    def test_divergent_series(self):
        # tanh rounds to one for large tau
        params = ModelParams(eta=0.0, tau=40.0)
        with pytest.raises(SeriesDivergenceError):
            joint_count_probability(FockCount(0, 0, 0, 0), params)


class TestNormalization:
    @pytest.mark.slow
    @pytest.mark.parametrize("eta", [0.3, 0.6, 1.0])
    @pytest.mark.parametrize("tau", [0.5, 1.0, 1.5])
    def test_marginals_sum_to_one(self, eta, tau):
        params = ModelParams(eta=eta, tau=tau)
        cutoff = 0
        while pair_tail_bound(tau, cutoff) > 1e-10:
            cutoff += 1
        mass = captured_mass(params, cutoff, cutoff)
        assert mass == pytest.approx(1.0, abs=1e-8)
        assert mass <= 1.0 + 1e-12

    @pytest.mark.slow
    def test_joint_probabilities_sum_to_one(self):
        params = ModelParams(eta=0.6, tau=0.5)
        cutoff = 15
        assert pair_tail_bound(params.tau, cutoff) < 1e-9
        total = math.fsum(
            block_probability(alpha, beta, params)
            for alpha in range(cutoff + 1)
            for beta in range(cutoff + 1)
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_captured_mass_grows_with_cutoff(self):
        params = ModelParams(eta=0.7, tau=1.0)
        masses = [captured_mass(params, k, k) for k in range(6)]
        assert np.all(np.diff(masses) > 0)
        assert masses[-1] >= 1.0 - pair_tail_bound(params.tau, 5) - 1e-12


class TestTailBound:
    @pytest.mark.parametrize("pairs", [0, 2, 5])
    def test_matches_direct_sum(self, pairs):
        tau = 0.7
        x = math.tanh(tau) ** 2
        direct = math.fsum((n + 1) * x**n for n in range(pairs + 1, 2000)) / math.cosh(tau) ** 4
        assert pair_tail_bound(tau, pairs) == pytest.approx(direct, rel=1e-12)

    def test_no_pairs_without_interaction(self):
        assert pair_tail_bound(0.0, 0) == 0.0


class TestClosedForm:
    def test_limits(self):
        assert mu_zero_closed_form(0.0) == 1.0
        assert mu_zero_closed_form(1.0) == pytest.approx(0.5)
        assert mu_zero_closed_form(0.999) > 0.5
