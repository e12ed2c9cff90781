"""Semigroup behavior: matrix level on exact data, sample level statistically."""

import numpy as np
import pytest

from distkoop.dmd import SnapshotMatrices, fit_dko
from distkoop.measures import EmpiricalMeasure, evolve_measure
from distkoop.rds import sde_model
from distkoop.seeding import spawn_seeds
from distkoop.stats import energy_distance_1d, energy_distance_test

TWO_PI = 2 * np.pi


def _unwrapped(start, width):
    start = start % TWO_PI
    if start + width <= TWO_PI:
        return [(start, width)]
    return [(start, TWO_PI - start), (0.0, start + width - TWO_PI)]


def circular_overlap(a, width_a, b, width_b):
    """Length of the intersection of two half-open circle arcs."""
    return sum(
        max(0.0, min(s + w, t + u) - max(s, t))
        for s, w in _unwrapped(a, width_a)
        for t, u in _unwrapped(b, width_b)
    )


def exact_arc_snapshots(n_bins, n_arcs, arc_width, shift):
    """Indicator-bank expectations of uniform arc measures, integrated exactly."""
    bin_width = TWO_PI / n_bins
    psi = np.empty((n_bins, n_arcs))
    phi = np.empty((n_bins, n_arcs))
    for j in range(n_arcs):
        a = j * TWO_PI / n_arcs
        for i in range(n_bins):
            lo = i * bin_width
            psi[i, j] = circular_overlap(a, arc_width, lo, bin_width) / arc_width
            phi[i, j] = circular_overlap(a + shift, arc_width, lo, bin_width) / arc_width
    return psi, phi


class TestMatrixSemigroupExact:
    def test_rotation_two_steps_equals_square(self):
        # noiseless rotation by 3 bins, arc measures integrated in closed form
        n_bins, n_arcs = 8, 16
        arc_width = 1.5 * (TWO_PI / n_bins)
        nu = 3 * (TWO_PI / n_bins)
        labels = tuple(f"bin{i}" for i in range(n_bins))
        psi, phi_1 = exact_arc_snapshots(n_bins, n_arcs, arc_width, nu)
        _, phi_2 = exact_arc_snapshots(n_bins, n_arcs, arc_width, 2 * nu)
        d1 = fit_dko(SnapshotMatrices(psi=psi, phi=phi_1, bank_labels=labels, dt=1.0)).d
        d2 = fit_dko(SnapshotMatrices(psi=psi, phi=phi_2, bank_labels=labels, dt=2.0)).d
        assert np.linalg.norm(d2 - d1 @ d1) <= 1e-8
        # the one-step operator is exactly the 3-bin cyclic shift
        assert np.allclose(d1, np.roll(np.eye(n_bins), 3, axis=0), atol=1e-10)


class TestMatrixSemigroupStochastic:
    def test_ou_monomials_within_monte_carlo_band(self):
        # conditional moments of the OU process are polynomial, so the span
        # {1, x, x^2} is invariant and the two-step matrix is the square of
        # the one-step matrix up to sampling noise
        from distkoop.observables import monomial_bank
        from distkoop.dmd import snapshots_from_pairs

        bank = monomial_bank([0, 1, 2])
        xs = np.linspace(-2.5, 2.5, 31)
        k_rep = 4000

        def fitted(dt_steps, seed):
            model = sde_model("ou", "sqrt2", snapshot_dt=0.1, dt_internal=0.01)
            meas = [EmpiricalMeasure(samples=np.full(k_rep, x)) for x in xs]
            pairs = []
            for j, pi in enumerate(meas):
                mu = evolve_measure(pi, model, 0.1 * dt_steps, seed=spawn_seeds(seed, len(xs), 0)[j])
                pairs.append((pi, mu))
            return fit_dko(snapshots_from_pairs(bank, pairs, 0.1 * dt_steps)).d

        d1 = fitted(1, seed=100)
        d2 = fitted(2, seed=200)
        assert np.linalg.norm(d2 - d1 @ d1) < 0.05


class TestStatisticalSemigroup:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_split_evolution_indistinguishable(self, seed):
        model = sde_model("ou", "sqrt2")
        mu = EmpiricalMeasure(samples=np.full(2000, 1.5))
        s_one, s_a, s_b = spawn_seeds(seed, 3, 9)
        one = evolve_measure(mu, model, 0.5, seed=s_one)
        two = evolve_measure(evolve_measure(mu, model, 0.2, seed=s_a), model, 0.3, seed=s_b)
        _, p = energy_distance_test(one.samples[:, 0], two.samples[:, 0], 100, seed=seed)
        assert p > 0.01

    def test_detects_genuinely_different_distributions(self):
        # power check: the same test rejects a shifted ensemble
        rng = np.random.default_rng(5)
        x = rng.normal(0.0, 1.0, 2000)
        y = rng.normal(0.6, 1.0, 2000)
        _, p = energy_distance_test(x, y, 100, seed=6)
        assert p <= 0.01


class TestEnergyDistance:
    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=37)
        y = rng.normal(0.5, 1.3, size=54)
        brute = (
            2 * np.mean(np.abs(x[:, None] - y[None, :]))
            - np.mean(np.abs(x[:, None] - x[None, :]))
            - np.mean(np.abs(y[:, None] - y[None, :]))
        )
        assert energy_distance_1d(x, y) == pytest.approx(brute, abs=1e-12)

    def test_zero_for_identical_samples(self):
        x = np.random.default_rng(8).normal(size=100)
        assert energy_distance_1d(x, x) == pytest.approx(0.0, abs=1e-12)

    def test_positive_for_disjoint_supports(self):
        assert energy_distance_1d([0.0, 0.1], [5.0, 5.1]) > 1.0
