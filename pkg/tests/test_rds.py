import numpy as np
import pytest

from distkoop.errors import IntegrationError
from distkoop.measures import EmpiricalMeasure, dirac
from distkoop.rds import (
    DIFFUSIONS,
    DRIFTS,
    TrajectoryEnsemble,
    generate_pairs,
    generate_trajectory,
    register_diffusion,
    register_drift,
    rotation_kernel,
    rotation_model,
    sde_model,
    simulate_ensemble,
    step,
)
from distkoop.seeding import derived_rng

TWO_PI = 2 * np.pi


class TestModels:
    def test_rotation_validation(self):
        with pytest.raises(ValueError):
            rotation_model(nu=0.5, half_width=-0.1)
        with pytest.raises(ValueError):
            rotation_model(nu=0.5, extra_noise_sigma=-1.0)

    def test_sde_validation(self):
        with pytest.raises(ValueError, match="drift"):
            sde_model("nope", "sqrt2")
        with pytest.raises(ValueError, match="divide"):
            sde_model("ou", "sqrt2", snapshot_dt=0.1, dt_internal=0.03)

    def test_sde_substep_default(self):
        model = sde_model("ou", "sqrt2", snapshot_dt=0.2)
        assert model.substeps_per_snapshot == 10

    def test_builtin_coefficients(self):
        x = np.array([0.0, 1.0, 2.0])
        assert np.allclose(DRIFTS["ou"](x), -x)
        assert np.allclose(DRIFTS["neg_sin"](x), -np.sin(x))
        assert np.allclose(DIFFUSIONS["sqrt2"](x), np.sqrt(2.0))
        assert np.allclose(DIFFUSIONS["gauss_bump"](x), np.exp(-0.5 * (x - 1.0) ** 2))


class TestStep:
    def test_rotation_kernel_value(self):
        # x=6.0, nu=1/2, omega=0.3: wraps to 6.8 - 2*pi
        assert rotation_kernel(6.0, 0.5, 0.3) == pytest.approx(0.5168146928204136, abs=1e-12)

    def test_noiseless_rotation_deterministic(self):
        model = rotation_model(nu=1.1, half_width=0.0)
        rng = derived_rng(0)
        assert step(model, 2.0, rng) == np.mod(2.0 + 1.1, TWO_PI)

    def test_frozen_sde(self):
        model = sde_model("zero", "zero", snapshot_dt=0.5)
        rng = derived_rng(1)
        assert step(model, 1.7, rng) == 1.7

    def test_ou_ensemble_mean_one_snapshot(self):
        # E[X_0.1 | 2] = 2 e^{-0.1} with a CLT band for 1e5 members
        model = sde_model("ou", "sqrt2", snapshot_dt=0.1, dt_internal=0.01)
        x = model.evolve_samples(np.full(100_000, 2.0), 1, seed=9)
        assert x.mean() == pytest.approx(2 * np.exp(-0.1), abs=0.02)


class TestTrajectories:
    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            generate_trajectory(rotation_model(nu=0.5), 0.0, 0, seed=0)

    def test_single_step_shape(self):
        traj = generate_trajectory(rotation_model(nu=0.5), 0.0, 1, seed=0)
        assert traj.states.shape == (1, 2)

    def test_quarter_turns(self):
        model = rotation_model(nu=np.pi / 2, half_width=0.0)
        traj = generate_trajectory(model, 0.0, 4, seed=0)
        expected = [0.0, np.pi / 2, np.pi, 3 * np.pi / 2, 0.0]
        diffs = np.mod(traj.states[0] - expected + np.pi, TWO_PI) - np.pi
        assert np.allclose(diffs, 0.0, atol=1e-9)

    def test_determinism(self):
        model = rotation_model(nu=0.5)
        a = generate_trajectory(model, 0.0, 50, seed=11)
        b = generate_trajectory(model, 0.0, 50, seed=11)
        assert np.array_equal(a.states, b.states)

    def test_ensemble_shapes_and_columns(self):
        model = sde_model("ou", "sqrt2")
        traj = simulate_ensemble(model, np.zeros(10), 5, seed=2)
        assert traj.states.shape == (10, 6)
        assert np.allclose(traj.times(), np.arange(6) * 0.1)

    def test_validation(self):
        with pytest.raises(ValueError):
            TrajectoryEnsemble(states=np.zeros((3,)), snapshot_dt=1.0, seed=0)

    def test_integration_error_names_step(self):
        register_drift("blowup", lambda x: x**3 * 1e6)
        register_diffusion("none", lambda x: np.zeros_like(x))
        model = sde_model("blowup", "none", snapshot_dt=1.0, dt_internal=1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(IntegrationError, match="step"):
                simulate_ensemble(model, np.full(3, 10.0), 50, seed=0)


class TestPairs:
    def test_identity_dynamics_pairs(self):
        model = rotation_model(nu=0.0, half_width=0.0)
        measures = [dirac(0.3), EmpiricalMeasure(samples=np.array([0.1, 1.0]))]
        pairs = generate_pairs(model, measures, seed=3)
        for pi, mu in pairs:
            assert np.array_equal(pi.samples, mu.samples)

    def test_dirac_under_noiseless_rotation(self):
        model = rotation_model(nu=0.9, half_width=0.0)
        (pi, mu), = generate_pairs(model, [dirac(1.0)], seed=0)
        assert mu.samples[0, 0] == pytest.approx(1.9, abs=1e-15)

    def test_chain_mode_matches_definition(self):
        # feeding mu_j back as pi_{j+1} builds the chained snapshot sequence
        model = rotation_model(nu=0.5)
        start = dirac(0.0)
        chained = []
        current = start
        for j in range(4):
            (pi, mu), = generate_pairs(model, [current], seed=100 + j)
            chained.append((pi, mu))
            current = mu
        for (pi_a, mu_a), (pi_b, _) in zip(chained[:-1], chained[1:]):
            assert np.array_equal(mu_a.samples, pi_b.samples)

    def test_requires_measures(self):
        with pytest.raises(ValueError):
            generate_pairs(rotation_model(nu=0.5), [], seed=0)

    def test_independent_noise_per_pair(self):
        model = rotation_model(nu=0.0)
        pairs = generate_pairs(model, [dirac(1.0), dirac(1.0)], seed=5)
        assert pairs[0][1].samples[0, 0] != pairs[1][1].samples[0, 0]


class TestEulerMaruyamaWeakAccuracy:
    def test_refining_substep_does_not_hurt(self):
        # the coarse-step bias should stay within the Monte Carlo band of
        # the fine-step run; both target x0 e^{-t}
        x0, t, k = 2.0, 0.5, 40_000
        target = x0 * np.exp(-t)
        errs = {}
        for dt_internal in (0.01, 0.005):
            model = sde_model("ou", "sqrt2", snapshot_dt=0.1, dt_internal=dt_internal)
            x = model.evolve_samples(np.full(k, x0), 5, seed=21)
            errs[dt_internal] = abs(x.mean() - target)
        mc_band = 3 * np.sqrt(1 - np.exp(-2 * t)) / np.sqrt(k)
        assert errs[0.005] <= errs[0.01] + mc_band
