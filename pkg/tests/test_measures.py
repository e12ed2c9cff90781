import numpy as np
import pytest

from distkoop.errors import DataFormatError, EvaluationError
from distkoop.measures import (
    EmpiricalMeasure,
    MeasureSampler,
    dirac,
    evolve_measure,
    expectation,
    load_measure_csv,
    mixture,
    pushforward,
    save_measure_csv,
    sub_arc_measures,
    variance_of,
)
from distkoop.rds import rotation_model, sde_model

TWO_PI = 2 * np.pi


def random_measure(seed, k=50, lo=-2.0, hi=2.0, weighted=False):
    rng = np.random.default_rng(seed)
    samples = rng.uniform(lo, hi, size=k)
    weights = None
    if weighted:
        w = rng.random(k)
        weights = w / w.sum()
    return EmpiricalMeasure(samples=samples, weights=weights)


class TestEmpiricalMeasure:
    def test_uniform_weights_default(self):
        mu = EmpiricalMeasure(samples=np.array([1.0, 2.0, 3.0]))
        assert np.allclose(mu.weights, 1 / 3)
        assert mu.samples.shape == (3, 1)

    def test_weight_validation(self):
        with pytest.raises(ValueError, match="sum"):
            EmpiricalMeasure(samples=np.array([1.0, 2.0]), weights=np.array([0.6, 0.6]))
        with pytest.raises(ValueError, match="nonnegative"):
            EmpiricalMeasure(samples=np.array([1.0, 2.0]), weights=np.array([1.5, -0.5]))
        with pytest.raises(ValueError):
            EmpiricalMeasure(samples=np.array([1.0, 2.0]), weights=np.array([1.0]))
        with pytest.raises(ValueError, match="finite"):
            EmpiricalMeasure(samples=np.array([1.0, np.inf]))

    def test_immutability(self):
        mu = random_measure(0)
        with pytest.raises(ValueError):
            mu.samples[0] = 99.0
        with pytest.raises(ValueError):
            mu.weights[0] = 99.0


class TestDirac:
    def test_point_mass(self):
        mu = dirac(0.0)
        assert mu.samples.tolist() == [[0.0]]
        assert mu.weights.tolist() == [1.0]

    def test_expectation_is_point_evaluation(self):
        for x in (-1.3, 0.0, 2.7):
            assert expectation(dirac(x), np.cos) == np.cos(x)

    def test_pushforward_commutes(self):
        f = lambda x: np.mod(x + 0.5, TWO_PI)
        left = pushforward(dirac(1.0), f)
        right = dirac(f(np.array(1.0)))
        assert np.array_equal(left.samples, right.samples)


class TestExpectation:
    def test_constant(self):
        mu = random_measure(1, weighted=True)
        assert expectation(mu, lambda x: np.full_like(x, 3.25)) == pytest.approx(3.25, abs=1e-12)

    def test_symmetry_two_points(self):
        mu = EmpiricalMeasure(samples=np.array([0.0, np.pi]))
        assert expectation(mu, np.cos) == pytest.approx(0.0, abs=1e-15)

    def test_monte_carlo_uniform_mean(self):
        # CLT band: exact mean 1/2, std 0.2887, 1000 draws
        rng = np.random.default_rng(42)
        mu = EmpiricalMeasure(samples=rng.uniform(0, 1, 1000))
        band = 3 * 0.2887 / np.sqrt(1000)
        assert abs(expectation(mu, lambda x: x) - 0.5) < band

    def test_linearity(self):
        mu = random_measure(7, weighted=True)
        f, g = np.cos, np.sin
        alpha, beta = 1.7, -0.4
        combined = expectation(mu, lambda x: alpha * f(x) + beta * g(x))
        split = alpha * expectation(mu, f) + beta * expectation(mu, g)
        assert combined == pytest.approx(split, abs=1e-12)

    def test_nonfinite_names_sample_index(self):
        mu = EmpiricalMeasure(samples=np.array([1.0, 0.0, 2.0]))
        with np.errstate(divide="ignore"), pytest.raises(EvaluationError, match="sample 1"):
            expectation(mu, lambda x: 1.0 / x)


class TestVariance:
    def test_dirac_variance_zero_exact(self):
        assert variance_of(dirac(1.234), lambda x: x) == 0.0
        assert variance_of(dirac(1.234), np.exp) == 0.0

    def test_pm_one(self):
        mu = EmpiricalMeasure(samples=np.array([-1.0, 1.0]))
        assert variance_of(mu, lambda x: x) == pytest.approx(1.0, abs=1e-15)

    def test_standard_normal_sample_variance(self):
        rng = np.random.default_rng(3)
        mu = EmpiricalMeasure(samples=rng.standard_normal(10_000))
        assert variance_of(mu, lambda x: x) == pytest.approx(1.0, abs=0.05)

    def test_nonnegative_on_random_measures(self):
        for seed in range(20):
            mu = random_measure(seed, weighted=seed % 2 == 0)
            assert variance_of(mu, np.cos) >= 0.0


class TestPushforward:
    def test_identity(self):
        mu = random_measure(5, weighted=True)
        out = pushforward(mu, lambda x: x)
        assert np.array_equal(out.samples, mu.samples)
        assert np.array_equal(out.weights, mu.weights)

    def test_circle_shift(self):
        mu = EmpiricalMeasure(samples=np.array([0.0, np.pi / 2]))
        out = pushforward(mu, lambda x: np.mod(x + np.pi / 2, TWO_PI))
        assert np.allclose(out.samples[:, 0], [np.pi / 2, np.pi])

    def test_composition(self):
        mu = random_measure(9)
        f = lambda x: x + 1.0
        g = np.sin
        two_step = pushforward(pushforward(mu, f), g)
        one_step = pushforward(mu, lambda x: g(f(x)))
        assert np.array_equal(two_step.samples, one_step.samples)

    def test_weight_preservation_exact(self):
        mu = random_measure(11, weighted=True)
        out = pushforward(mu, np.tanh)
        assert np.array_equal(out.weights, mu.weights)

    def test_nonfinite_names_index(self):
        mu = EmpiricalMeasure(samples=np.array([0.5, 3.0]))
        with np.errstate(invalid="ignore"), pytest.raises(EvaluationError, match="sample 1"):
            pushforward(mu, lambda x: np.log(1.0 - x))


class TestEvolveMeasure:
    def test_zero_time_identity(self):
        mu = random_measure(1)
        assert evolve_measure(mu, rotation_model(nu=0.5), 0.0, seed=1) is mu

    def test_noiseless_rotation_dirac(self):
        model = rotation_model(nu=0.7, half_width=0.0)
        out = evolve_measure(dirac(1.0), model, 1.0, seed=4)
        assert out.samples[0, 0] == pytest.approx(np.mod(1.7, TWO_PI), abs=1e-15)

    def test_ou_mean_closed_form(self):
        # E[X_1 | X_0 = 2] = 2/e for dX = -X dt + sqrt(2) dW
        model = sde_model("ou", "sqrt2", snapshot_dt=0.1, dt_internal=0.01)
        k = 10_000
        mu = EmpiricalMeasure(samples=np.full(k, 2.0))
        out = evolve_measure(mu, model, 1.0, seed=8)
        sigma_mc = np.sqrt(1 - np.exp(-2.0)) / np.sqrt(k)
        assert out.samples.mean() == pytest.approx(2 * np.exp(-1.0), abs=3.5 * sigma_mc + 0.01)

    def test_time_validation(self):
        mu = random_measure(2)
        model = rotation_model(nu=0.5)
        with pytest.raises(ValueError, match="nonnegative"):
            evolve_measure(mu, model, -1.0, seed=0)
        with pytest.raises(ValueError, match="multiple"):
            evolve_measure(mu, model, 0.5, seed=0)

    def test_deterministic_in_seed(self):
        mu = random_measure(3)
        model = sde_model("neg_sin", "gauss_bump")
        a = evolve_measure(mu, model, 0.3, seed=77)
        b = evolve_measure(mu, model, 0.3, seed=77)
        c = evolve_measure(mu, model, 0.3, seed=78)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)

    def test_weights_preserved(self):
        mu = random_measure(6, weighted=True)
        out = evolve_measure(mu, rotation_model(nu=0.5), 1.0, seed=5)
        assert np.array_equal(out.weights, mu.weights)


class TestMixture:
    def test_affine_on_expectations(self):
        mu1, mu2 = random_measure(21), random_measure(22, weighted=True)
        alpha = 0.3
        mix = mixture([mu1, mu2], [alpha, 1 - alpha])
        direct = alpha * expectation(mu1, np.cos) + (1 - alpha) * expectation(mu2, np.cos)
        assert expectation(mix, np.cos) == pytest.approx(direct, abs=1e-12)


class TestSamplers:
    def test_seed_reproducibility(self):
        sampler = MeasureSampler(kind="sub_arc_uniform", samples_per_measure=40, arc_count=8)
        a, b = sampler.sample(5), sampler.sample(5)
        assert np.array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, sampler.sample(6).samples)

    def test_sub_arc_range(self):
        sampler = MeasureSampler(kind="sub_arc_uniform", samples_per_measure=100, arc_count=10)
        for j in range(5):
            mu = sampler.sample_indexed(3, j)
            width = TWO_PI / 10
            arc = np.floor(mu.samples[0, 0] / width)
            assert np.all(np.floor(mu.samples[:, 0] / width) == arc)

    def test_gaussian_init(self):
        sampler = MeasureSampler(kind="gaussian_init", samples_per_measure=5000, mean=1.0, std=0.5)
        mu = sampler.sample(9)
        assert mu.samples.mean() == pytest.approx(1.0, abs=0.05)
        assert mu.samples.std() == pytest.approx(0.5, abs=0.05)

    def test_grid_bins_quadrature(self):
        sampler = MeasureSampler(kind="grid_bins", samples_per_measure=10, arc_count=4, lo=0.0, hi=4.0)
        mu = sampler.sample(2)
        # midpoint grid inside one unit-width bin
        assert np.all(np.diff(mu.samples[:, 0]) > 0)
        assert np.ptp(mu.samples[:, 0]) < 1.0

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            MeasureSampler(kind="bogus", samples_per_measure=10)

    def test_sub_arc_measures_cover_their_arcs(self):
        measures = sub_arc_measures(6, 64, seed=3)
        assert len(measures) == 6
        width = TWO_PI / 6
        for j, mu in enumerate(measures):
            assert np.all(mu.samples[:, 0] >= j * width - 1e-12)
            assert np.all(mu.samples[:, 0] < (j + 1) * width + 1e-12)

    def test_sub_arc_stratified(self):
        mu = sub_arc_measures(1, 100, seed=4, stratified=True)[0]
        # one sample per equal sub-interval spans the arc evenly
        counts, _ = np.histogram(mu.samples[:, 0], bins=100, range=(0.0, TWO_PI))
        assert counts.max() == 1


class TestMeasureCsv:
    def test_round_trip(self, tmp_path):
        mu = random_measure(13, weighted=True)
        path = tmp_path / "measure.csv"
        save_measure_csv(mu, path)
        back = load_measure_csv(path)
        assert np.array_equal(back.samples, mu.samples)
        assert np.allclose(back.weights, mu.weights, atol=1e-15)

    def test_header_format(self, tmp_path):
        path = tmp_path / "m.csv"
        save_measure_csv(dirac(1.5), path)
        assert path.read_text().splitlines()[0] == "weight,x1"

    def test_rejects_bad_weight_sum(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("weight,x1\n0.5,0.0\n0.6,1.0\n")
        with pytest.raises(DataFormatError, match="sum"):
            load_measure_csv(path)

    def test_renormalizes_tiny_drift(self, tmp_path):
        path = tmp_path / "drift.csv"
        path.write_text(f"weight,x1\n{0.5 + 2e-10!r},0.0\n0.5,1.0\n")
        mu = load_measure_csv(path)
        assert mu.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_ragged_rows(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text("weight,x1\n0.5,0.0\n0.5\n")
        with pytest.raises(DataFormatError, match="fields"):
            load_measure_csv(path)
