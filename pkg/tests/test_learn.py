"""Tests for NIG conjugacy, hyperparameter MH, particle Gibbs and chain artifacts."""

import json

import numpy as np
import pytest
from scipy import integrate

import hamgp.learn.gibbs as gibbs_module
from hamgp.basis import DomainBox, KernelHyperparams, build_expansion, eval_basis_jacobian
from hamgp.hamiltonian import NoiseSpec
from hamgp.learn import (
    KERNEL_NAMES,
    ChainSample,
    ChainWriter,
    Coordinate,
    GaussianHyperPrior,
    GibbsConfig,
    HyperPrior,
    NIGParams,
    NIGPriorFactory,
    ParticleGibbsSampler,
    RandomWalkProposal,
    SamplerSettings,
    SuffStats,
    accumulate_stats,
    kernel_log_target,
    log_marginal_likelihood,
    log_nig_density,
    log_normalizer,
    mh_step_kernel_hypers,
    mh_step_structural_hypers,
    posterior_update,
    read_chain,
    read_trajectories,
    retained_samples,
    run_particle_gibbs,
    sample_nig,
    structural_log_likelihood,
)
from hamgp.simulate import MultisineSignal, ScenarioConfig, generate_data, true_gradient
from hamgp.smc import LatentTrajectory
from hamgp.smc.csmc import ConditionalSMC
from hamgp.utils.exceptions import ArtifactError, ChainAbortedError, ConfigurationError, DegenerateSweepError


def stats_from_design(design, h):
    """Statistics of h ~ N(design a, sigma^2 I) for an explicit design matrix."""
    return SuffStats(design.T @ h, float(h @ h), design.T @ design, float(h.size))


def gaussian_log_likelihood(design, h, weights, noise_variance):
    residual = h - design @ weights
    return float(-0.5 * h.size * np.log(2 * np.pi * noise_variance) - residual @ residual / (2 * noise_variance))


@pytest.fixture
def simulated(truth):
    scenario = ScenarioConfig(horizon_steps=40, step_size_s=0.02, seed=3)
    return generate_data(scenario, truth, np.random.default_rng(scenario.seed))


@pytest.fixture
def true_trajectory(simulated):
    return LatentTrajectory(simulated.states, true_gradient(simulated.states))


@pytest.fixture
def gibbs_config(oscillator_structure, broad_hyper_prior):
    return GibbsConfig(
        expansion=build_expansion(DomainBox((8.0, 8.0)), 6),
        structure=oscillator_structure.with_hypers({"d": 0.5}),
        noise=NoiseSpec.isotropic(2, 1e-3, 1e-3, observed=(0, 1)),
        psi=100.0,
        nu=400.0,
        hyper_prior=broad_hyper_prior,
        kernel_hypers=KernelHyperparams(1.0, 1.5),
        sampler=SamplerSettings(iterations=3, burn_in=1, num_particles=5, trajectory_stride=2),
    )


class TestSufficientStatistics:
    def test_matches_explicit_sums(self, small_expansion, rng):
        trajectory = LatentTrajectory(rng.uniform(-3, 3, size=(9, 2)), rng.normal(size=(9, 2)))
        stats = accumulate_stats(trajectory, small_expansion)
        s1, r1 = np.zeros(6), np.zeros((6, 6))
        for x, h in zip(trajectory.states, trajectory.gradients):
            jac = eval_basis_jacobian(small_expansion, x)
            s1 += jac.T @ h
            r1 += jac.T @ jac
        np.testing.assert_allclose(stats.s1, s1)
        np.testing.assert_allclose(stats.r1, r1)
        assert stats.s2 == pytest.approx(np.sum(trajectory.gradients ** 2))
        assert stats.r2 == 18

    def test_additive_over_segments(self, small_expansion, rng):
        first = LatentTrajectory(rng.uniform(-3, 3, size=(5, 2)), rng.normal(size=(5, 2)))
        second = LatentTrajectory(rng.uniform(-3, 3, size=(7, 2)), rng.normal(size=(7, 2)))
        whole = accumulate_stats(first.concatenate(second), small_expansion)
        parts = accumulate_stats(first, small_expansion) + accumulate_stats(second, small_expansion)
        np.testing.assert_allclose(whole.s1, parts.s1)
        np.testing.assert_allclose(whole.r1, parts.r1)
        assert whole.s2 == pytest.approx(parts.s2)
        assert whole.r2 == parts.r2


class TestPosteriorUpdate:
    def test_hand_computed_example(self):
        prior = NIGParams(np.zeros(1), np.eye(1), psi=1.0, nu=1.0)
        stats = SuffStats(np.array([2.0]), 5.0, np.array([[1.0]]), 2.0)
        posterior = posterior_update(prior, stats)
        np.testing.assert_allclose(posterior.mean, [1.0])
        np.testing.assert_allclose(posterior.scale, [[0.5]])
        assert posterior.psi == pytest.approx(4.0)
        assert posterior.nu == pytest.approx(6.0)
        assert posterior.dof == pytest.approx(3.0)

    def test_empty_statistics_recover_prior(self, rng):
        A = rng.normal(size=(3, 3))
        prior = NIGParams(rng.normal(size=3), A @ A.T + np.eye(3), psi=2.5, nu=7.0)
        posterior = posterior_update(prior, SuffStats.zeros(3))
        np.testing.assert_allclose(posterior.mean, prior.mean)
        np.testing.assert_allclose(posterior.scale, prior.scale)
        assert posterior.psi == pytest.approx(prior.psi)
        assert posterior.nu == pytest.approx(prior.nu + 2 + 3)
        assert posterior.dof == pytest.approx(prior.dof)

    def test_sequential_updates_compose(self, rng):
        prior = NIGParams.zero_mean(np.diag([1.0, 0.5]), psi=1.0, nu=3.0)
        design, h = rng.normal(size=(10, 2)), rng.normal(size=10)
        first = stats_from_design(design[:4], h[:4])
        second = stats_from_design(design[4:], h[4:])
        once = posterior_update(prior, first + second)
        twice = posterior_update(posterior_update(prior, first), second)
        np.testing.assert_allclose(twice.mean, once.mean)
        np.testing.assert_allclose(twice.scale, once.scale)
        assert twice.psi == pytest.approx(once.psi)
        assert twice.dof == pytest.approx(once.dof)

    @pytest.mark.parametrize("seed", range(50))
    def test_conjugacy_identity(self, seed):
        rng = np.random.default_rng(seed)
        M, T = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        A = rng.normal(size=(M, M))
        prior = NIGParams(rng.normal(size=M), A @ A.T + 0.5 * np.eye(M), psi=rng.uniform(0.5, 3.0), nu=rng.uniform(1.0, 6.0))
        design, h = rng.normal(size=(T, M)), rng.normal(size=T)
        stats = stats_from_design(design, h)
        posterior = posterior_update(prior, stats)
        evidence = log_marginal_likelihood(prior, stats)

        for _ in range(5):
            weights, noise_variance = rng.normal(size=M), rng.uniform(0.2, 3.0)
            gap = (
                log_nig_density(posterior, weights, noise_variance)
                - log_nig_density(prior, weights, noise_variance)
                - gaussian_log_likelihood(design, h, weights, noise_variance)
            )
            assert gap == pytest.approx(-evidence, abs=1e-8)

    def test_dimension_mismatch(self):
        prior = NIGParams.zero_mean(np.eye(2), 1.0, 1.0)
        with pytest.raises(ValueError):
            posterior_update(prior, SuffStats.zeros(3))


class TestNormalizer:
    def test_hand_computed_values(self):
        assert log_normalizer(NIGParams(np.zeros(0), np.zeros((0, 0)), psi=2.0, nu=2.0)) == pytest.approx(0.0)
        one = NIGParams(np.zeros(1), np.eye(1), psi=2.0, nu=2.0)
        assert log_normalizer(one) == pytest.approx(-0.5 * np.log(2 * np.pi))

    def test_density_integrates_to_one(self):
        params = NIGParams(np.array([0.2]), np.array([[0.7]]), psi=3.0, nu=6.0)
        half_width = lambda s: 12.0 * np.sqrt(s * 0.7)
        total, _ = integrate.dblquad(
            lambda a, s: np.exp(log_nig_density(params, np.array([a]), s)),
            0.0, np.inf,
            lambda s: 0.2 - half_width(s), lambda s: 0.2 + half_width(s),
        )
        assert total == pytest.approx(1.0, rel=1e-4)

    def test_marginal_likelihood_by_quadrature(self, rng):
        prior = NIGParams(np.array([0.1]), np.array([[2.0]]), psi=3.0, nu=6.0)
        design, h = rng.normal(size=(4, 1)), rng.normal(size=4)
        stats = stats_from_design(design, h)
        posterior = posterior_update(prior, stats)
        center, spread = posterior.mean[0], posterior.scale[0, 0]
        expected = log_marginal_likelihood(prior, stats)

        def integrand(a, s):
            weights = np.array([a])
            return np.exp(
                log_nig_density(prior, weights, s) + gaussian_log_likelihood(design, h, weights, s) - expected
            )

        total, _ = integrate.dblquad(
            integrand, 0.0, np.inf,
            lambda s: center - 12.0 * np.sqrt(s * spread), lambda s: center + 12.0 * np.sqrt(s * spread),
        )
        assert total == pytest.approx(1.0, rel=1e-4)


class TestSampleNIG:
    def test_noise_variance_mean(self):
        rng = np.random.default_rng(42)
        params = NIGParams.zero_mean(np.eye(1), psi=100.0, nu=400.0)
        draws = np.array([sample_nig(params, rng).noise_variance for _ in range(20000)])
        standard_error = draws.std() / np.sqrt(draws.size)
        assert abs(draws.mean() - 50.0 / 199.0) < 4 * standard_error

    def test_weight_covariance_scales_with_noise(self):
        rng = np.random.default_rng(7)
        scale = np.array([[1.0, 0.3, 0.0], [0.3, 0.5, 0.1], [0.0, 0.1, 2.0]])
        params = NIGParams(np.array([1.0, -1.0, 0.5]), scale, psi=2.0, nu=10.0)
        draws = [sample_nig(params, rng) for _ in range(20000)]
        standardized = np.array([(d.weights - params.mean) / np.sqrt(d.noise_variance) for d in draws])
        empirical = np.cov(standardized.T)
        assert np.linalg.norm(empirical - scale) / np.linalg.norm(scale) < 0.05


class TestHyperPrior:
    def test_missing_entry(self, broad_hyper_prior):
        with pytest.raises(ConfigurationError, match="k"):
            broad_hyper_prior["k"]

    def test_log_coordinate_needs_positive_value(self):
        with pytest.raises(ConfigurationError):
            Coordinate.LOG.to_internal(-1.0)

    def test_round_trip(self, broad_hyper_prior):
        restored = HyperPrior.from_dict(broad_hyper_prior.to_dict())
        internal = {"d": np.log(0.2), "length_scale": 0.3}
        assert restored.log_density(internal) == pytest.approx(broad_hyper_prior.log_density(internal))

    def test_density_is_standard_normal_in_internal_coordinates(self):
        prior = GaussianHyperPrior(1.0, 2.0)
        assert prior.log_density(3.0) == pytest.approx(-0.5 - 0.5 * np.log(2 * np.pi) - np.log(2.0))


class TestRandomWalkProposal:
    def test_shrinks_after_low_acceptance(self):
        proposal = RandomWalkProposal(["a"], 1.0, window=50)
        for _ in range(50):
            proposal.record(False)
        assert proposal.scales["a"] == pytest.approx(0.7)

    def test_grows_after_high_acceptance(self):
        proposal = RandomWalkProposal(["a"], {"a": 2.0}, window=50)
        for _ in range(50):
            proposal.record(True)
        assert proposal.scales["a"] == pytest.approx(2.6)

    def test_frozen_scales_stay(self):
        proposal = RandomWalkProposal(["a"], 1.0, window=50)
        proposal.freeze()
        for _ in range(200):
            proposal.record(False)
        assert proposal.scales["a"] == 1.0

    def test_negative_scale(self):
        with pytest.raises(ConfigurationError):
            RandomWalkProposal(["a"], -1.0)


class TestKernelMH:
    def test_zero_scale_always_accepts(self, true_trajectory, broad_hyper_prior, rng):
        expansion = build_expansion(DomainBox((8.0, 8.0)), 8)
        factory = NIGPriorFactory(expansion, 100.0, 400.0)
        proposal = RandomWalkProposal(KERNEL_NAMES, 0.0, adapt=False)
        current = KernelHyperparams(1.0, 1.5)
        for _ in range(20):
            step = mh_step_kernel_hypers(current, true_trajectory, factory, broad_hyper_prior, proposal, rng)
            assert step.accepted
            assert step.value.to_dict() == pytest.approx(current.to_dict())

    def test_log_target_adds_hyper_prior(self, true_trajectory, broad_hyper_prior):
        expansion = build_expansion(DomainBox((8.0, 8.0)), 8)
        factory = NIGPriorFactory(expansion, 100.0, 400.0)
        stats = accumulate_stats(true_trajectory, expansion)
        internal = {"signal_variance": 0.2, "length_scale": -0.1}
        log_lik, log_target = kernel_log_target(internal, stats, factory, broad_hyper_prior)
        expected = log_marginal_likelihood(factory(KernelHyperparams(np.exp(0.2), np.exp(-0.1))), stats)
        assert log_lik == pytest.approx(expected)
        assert log_target == pytest.approx(expected + broad_hyper_prior.log_density(internal))

    def test_invalid_proposals_rejected(self, true_trajectory, rng):
        expansion = build_expansion(DomainBox((8.0, 8.0)), 8)
        factory = NIGPriorFactory(expansion, 100.0, 400.0)
        hyper_prior = HyperPrior({
            "signal_variance": GaussianHyperPrior(1.0, 1.0, Coordinate.LINEAR),
            "length_scale": GaussianHyperPrior(0.0, 3.0),
        })
        proposal = RandomWalkProposal(KERNEL_NAMES, {"signal_variance": 5.0, "length_scale": 0.0}, adapt=False)
        current = KernelHyperparams(1e-3, 1.5)
        rejected = 0
        for _ in range(50):
            step = mh_step_kernel_hypers(current, true_trajectory, factory, hyper_prior, proposal, rng)
            current = step.value
            rejected += not step.accepted
            assert current.signal_variance > 0
        assert rejected > 0

    @pytest.mark.slow
    def test_length_scale_chain_matches_grid_posterior(self, true_trajectory):
        rng = np.random.default_rng(11)
        expansion = build_expansion(DomainBox((8.0, 8.0)), 8)
        factory = NIGPriorFactory(expansion, 100.0, 400.0)
        stats = accumulate_stats(true_trajectory, expansion)
        hyper_prior = HyperPrior({
            "signal_variance": GaussianHyperPrior(0.0, 1.0),
            "length_scale": GaussianHyperPrior(0.0, 1.0),
        })

        theta = np.linspace(-6.0, 6.0, 4001)
        log_post = np.array([
            kernel_log_target({"signal_variance": 0.0, "length_scale": v}, stats, factory, hyper_prior)[1]
            for v in theta
        ])
        weights = np.exp(log_post - log_post.max())
        weights /= weights.sum()
        grid_mean = np.sum(weights * theta)
        grid_std = np.sqrt(np.sum(weights * (theta - grid_mean) ** 2))

        proposal = RandomWalkProposal(KERNEL_NAMES, {"signal_variance": 0.0, "length_scale": 0.5}, adapt=False)
        current, values = KernelHyperparams(1.0, 1.0), []
        for _ in range(4000):
            step = mh_step_kernel_hypers(current, true_trajectory, factory, hyper_prior, proposal, rng, stats=stats)
            current = step.value
            values.append(np.log(current.length_scale))

        assert current.signal_variance == pytest.approx(1.0)
        assert abs(np.mean(values[500:]) - grid_mean) < 0.25 * grid_std


class TestStructuralMH:
    def test_likelihood_is_euler_transition_product(self, true_trajectory, simulated, oscillator_structure):
        noise = NoiseSpec.isotropic(2, 1e-2, 1e-2, observed=(0, 1))
        x, h, u = true_trajectory.states, true_trajectory.gradients, simulated.inputs
        matrices = oscillator_structure.instantiate({"d": 0.3})
        total = 0.0
        for t in range(1, x.shape[0]):
            mean = x[t - 1] + 0.02 * ((matrices.J - matrices.R) @ h[t - 1] + matrices.G @ u[t - 1])
            residual = x[t] - mean
            total += -0.5 * residual @ residual / 1e-4 - np.log(2 * np.pi * 1e-4)
        value = structural_log_likelihood(oscillator_structure, {"d": 0.3}, true_trajectory, u, noise, 0.02)
        assert value == pytest.approx(total)

    def test_zero_scale_random_walk_accepts(self, true_trajectory, simulated, oscillator_structure, broad_hyper_prior, rng):
        noise = NoiseSpec.isotropic(2, 1e-2, 1e-2, observed=(0, 1))
        proposal = RandomWalkProposal(["d"], 0.0, adapt=False)
        for _ in range(10):
            step = mh_step_structural_hypers(
                {"d": 0.2}, true_trajectory, oscillator_structure, noise, build_expansion(DomainBox((8.0, 8.0)), 4),
                0.02, broad_hyper_prior, proposal, rng, simulated.inputs, laplace=False,
            )
            assert step.accepted
            assert step.value["d"] == pytest.approx(0.2)

    def test_inadmissible_damping_rejected(self, true_trajectory, simulated, oscillator_structure, rng):
        noise = NoiseSpec.isotropic(2, 1e-1, 1e-2, observed=(0, 1))
        hyper_prior = HyperPrior({"d": GaussianHyperPrior(0.1, 1.0, Coordinate.LINEAR)})
        proposal = RandomWalkProposal(["d"], 1.0, adapt=False)
        expansion = build_expansion(DomainBox((8.0, 8.0)), 4)
        current = {"d": 0.01}
        rejected = 0
        for _ in range(100):
            step = mh_step_structural_hypers(
                current, true_trajectory, oscillator_structure, noise, expansion, 0.02,
                hyper_prior, proposal, rng, simulated.inputs, laplace=False,
            )
            current = step.value
            rejected += not step.accepted
            assert current["d"] >= 0
        assert rejected > 0

    @pytest.mark.slow
    def test_laplace_chain_matches_grid_posterior(self, oscillator_structure, broad_hyper_prior):
        rng = np.random.default_rng(42)
        delta, T, std = 0.02, 300, 1e-3
        noise = NoiseSpec.isotropic(2, std, std, observed=(0, 1))
        matrices = oscillator_structure.instantiate({"d": 0.15})
        inputs = MultisineSignal()(np.arange(T + 1) * delta)[:, None]
        x = np.zeros((T + 1, 2))
        for t in range(1, T + 1):
            x[t] = x[t - 1] + delta * matrices.flow(true_gradient(x[t - 1]), inputs[t - 1]) + std * rng.standard_normal(2)
        trajectory = LatentTrajectory(x, true_gradient(x))

        theta = np.linspace(np.log(0.15) - 0.3, np.log(0.15) + 0.3, 2001)
        log_post = np.array([
            structural_log_likelihood(oscillator_structure, {"d": np.exp(v)}, trajectory, inputs, noise, delta)
            + broad_hyper_prior["d"].log_density(v)
            for v in theta
        ])
        weights = np.exp(log_post - log_post.max())
        weights /= weights.sum()
        grid_mean = np.sum(weights * np.exp(theta))
        grid_std = np.sqrt(np.sum(weights * (np.exp(theta) - grid_mean) ** 2))

        proposal = RandomWalkProposal(["d"], 0.05, adapt=False)
        expansion = build_expansion(DomainBox((8.0, 8.0)), 4)
        current, values, accepted = {"d": 0.15}, [], 0
        for _ in range(3000):
            step = mh_step_structural_hypers(
                current, trajectory, oscillator_structure, noise, expansion, delta,
                broad_hyper_prior, proposal, rng, inputs, laplace=True,
            )
            current = step.value
            accepted += step.accepted
            values.append(current["d"])

        assert accepted / 3000 > 0.5
        assert abs(np.mean(values) - grid_mean) < 0.25 * grid_std


class TestGibbsConfig:
    def test_missing_structural_prior(self, gibbs_config):
        gibbs_config.hyper_prior = HyperPrior({
            "signal_variance": GaussianHyperPrior(0.0, 1.0),
            "length_scale": GaussianHyperPrior(0.0, 1.0),
        })
        with pytest.raises(ConfigurationError, match="d"):
            gibbs_config.validate()

    def test_burn_in_must_precede_end(self):
        with pytest.raises(ConfigurationError):
            SamplerSettings(iterations=5, burn_in=5).validate()


class TestParticleGibbs:
    def test_single_iteration(self, gibbs_config, simulated):
        gibbs_config.sampler.iterations, gibbs_config.sampler.burn_in = 1, 0
        chain = run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0))
        assert len(chain) == 1
        sample = chain[0]
        assert sample.iteration == 1
        assert sample.params.noise_variance > 0
        assert sample.params.M == 6
        assert sample.trajectory is not None
        assert set(sample.accepted) == {"kernel", "structural"}

    def test_trajectory_kept_on_stride_and_last_iteration(self, gibbs_config, simulated):
        chain = run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0))
        assert [s.trajectory is not None for s in chain] == [False, True, True]

    def test_identical_seeds_identical_chains(self, gibbs_config, simulated):
        runs = [
            [s.to_record() for s in run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(9))]
            for _ in range(2)
        ]
        assert json.dumps(runs[0], sort_keys=True) == json.dumps(runs[1], sort_keys=True)

    def test_blocks_run_in_order_on_the_fresh_trajectory(self, gibbs_config, simulated, monkeypatch):
        calls, swept, seen_by_kernel = [], [], []

        def traced(name, fn, keep=None):
            def inner(*args, **kwargs):
                calls.append(name)
                if keep is not None:
                    keep.append(args[1])
                return fn(*args, **kwargs)
            return inner

        monkeypatch.setattr(gibbs_module, "accumulate_stats", traced("stats", gibbs_module.accumulate_stats))
        monkeypatch.setattr(
            gibbs_module, "mh_step_kernel_hypers",
            traced("kernel", gibbs_module.mh_step_kernel_hypers, seen_by_kernel),
        )
        monkeypatch.setattr(
            gibbs_module, "mh_step_structural_hypers", traced("structural", gibbs_module.mh_step_structural_hypers)
        )
        monkeypatch.setattr(gibbs_module, "posterior_update", traced("weights", gibbs_module.posterior_update))
        original_draw = ParticleGibbsSampler.draw_trajectory

        def draw(self, *args, **kwargs):
            result = original_draw(self, *args, **kwargs)
            calls.append("sweep")
            swept.append(result[0].trajectory)
            return result

        monkeypatch.setattr(ParticleGibbsSampler, "draw_trajectory", draw)
        gibbs_config.sampler.iterations = 2
        run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0))

        block = ["stats", "kernel", "structural", "weights"]
        assert calls == block + ["sweep"] + block + ["sweep"] + block
        assert all(kernel is sweep for kernel, sweep in zip(seen_by_kernel[1:], swept))

    def test_disabled_kernel_updates_keep_hypers(self, gibbs_config, simulated):
        gibbs_config.sampler.update_kernel_hypers = False
        chain = run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0))
        assert all(s.kernel_hypers == KernelHyperparams(1.0, 1.5) for s in chain)
        assert not any(s.accepted["kernel"] for s in chain)

    def test_degenerate_sweeps_inflate_then_abort(self, gibbs_config, simulated, monkeypatch):
        measurement_variances = []

        def degenerate(self, reference, rng):
            measurement_variances.append(self.model.noise.measurement_cov[0, 0])
            raise DegenerateSweepError(0)

        monkeypatch.setattr(ConditionalSMC, "sweep", degenerate)
        gibbs_config.sampler.degenerate_retries = 2
        with pytest.raises(ChainAbortedError, match="Iteration 1") as info:
            run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0))
        assert info.value.iteration == 1
        np.testing.assert_allclose(np.array(measurement_variances) / 1e-6, [1.0, 10.0, 100.0])

    def test_channel_mismatch(self, gibbs_config, simulated):
        gibbs_config.noise = NoiseSpec.isotropic(2, 1e-3, 1e-3, observed=(0,))
        with pytest.raises(ConfigurationError):
            ParticleGibbsSampler(gibbs_config, simulated.observed())


class TestArtifacts:
    def test_writer_and_reader(self, gibbs_config, simulated, tmp_path):
        with ChainWriter(tmp_path / "chain.jsonl", tmp_path / "trajectories.csv") as writer:
            chain = run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0), writer)
        assert writer.count == 3

        loaded = read_chain(tmp_path / "chain.jsonl")
        assert [s.to_record() for s in loaded] == [s.to_record() for s in chain]

        frame = read_trajectories(tmp_path / "trajectories.csv")
        assert list(frame.columns) == ["k", "t", "x0", "x1", "h0", "h1"]
        assert sorted(frame["k"].unique()) == [2, 3]
        assert len(frame) == 2 * (simulated.T + 1)

    def test_writer_outside_context(self, tmp_path, gibbs_config, simulated):
        writer = ChainWriter(tmp_path / "chain.jsonl")
        chain = run_particle_gibbs(gibbs_config, simulated.observed(), np.random.default_rng(0))
        with pytest.raises(ArtifactError):
            writer(chain[0])

    def test_invalid_record(self, tmp_path):
        path = tmp_path / "chain.jsonl"
        path.write_text('{"k": 1}\n')
        with pytest.raises(ArtifactError, match=":1"):
            read_chain(path)

    def test_retained_samples(self):
        chain = [
            ChainSample.from_record({
                "k": k,
                "weights": [0.0],
                "noise_variance": 1.0,
                "kernel_hypers": {"signal_variance": 1.0, "length_scale": 1.0},
            })
            for k in range(1, 8)
        ]
        assert [s.iteration for s in retained_samples(chain, burn_in=2, thinning=2)] == [3, 5, 7]
        with pytest.raises(ArtifactError):
            retained_samples(chain, burn_in=7)
