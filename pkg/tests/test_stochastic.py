import math

import numpy as np
import pytest
from scipy import integrate, stats

from conftest import db
from mrcmix.analytic import joint_ccdf_mixture, joint_ccdf_ppp, outage_mixture
from mrcmix.core import cdf_U, cdf_V, constant_B, constant_C
from mrcmix.errors import DomainError, InsufficientDataError
from mrcmix.params import MixtureConfig, SystemParams
from mrcmix.stochastic import (
    BLOCK_TRIALS,
    EstimateCI,
    SimConfig,
    draw_network,
    estimate_correlations,
    estimate_joint_ccdf,
    outage_grid,
    sample_ppp_interference,
    simulate_mrc_outage_mixture,
    simulate_mrc_outage_ppp,
    window_half_width,
)

BASE = SystemParams(lam=1e-4, alpha=4.0, d=10.0)


def square_integral(g, L):
    """Integral of a radial function g(r^2) over [-L, L]^2 using 8-fold symmetry."""
    val, _ = integrate.dblquad(
        lambda y, x: g(x * x + y * y), 0.0, L, 0.0, lambda x: x, epsabs=1e-12, epsrel=1e-10
    )
    return 8.0 * val


def window_outage_single(params, T, L):
    """Exact one-antenna outage for a Poisson field restricted to [-L, L]^2 (eps = 0)."""
    s = T * params.d**params.alpha
    g = lambda r2: s / (s + r2 ** (params.alpha / 2))  # noqa: E731
    return 1.0 - math.exp(-params.lambda_p * square_integral(g, L))


@pytest.fixture(scope="module")
def ppp_draws():
    return draw_network(BASE, 4, SimConfig(trials=60_000, seed=17), "ppp")


@pytest.fixture(scope="module")
def mixture_draws():
    return draw_network(BASE, 4, SimConfig(trials=60_000, seed=23), "mixture")


class TestConfig:
    def test_window_convention(self):
        L = window_half_width(1e-4, SimConfig())
        assert (2 * L) ** 2 * 1e-4 == pytest.approx(1000.0, rel=1e-12)
        assert window_half_width(1e-4, SimConfig(window=50.0)) == 50.0

    def test_invalid(self):
        with pytest.raises(DomainError):
            SimConfig(trials=0)
        with pytest.raises(DomainError):
            SimConfig(workers=0)
        with pytest.raises(DomainError):
            SimConfig(window=-1.0)
        with pytest.raises(DomainError):
            simulate_mrc_outage_ppp(BASE, 2, 0.0, SimConfig(trials=10))

    def test_estimate_ci(self):
        e = EstimateCI.from_samples([0, 1, 1, 0])
        assert e.mean == 0.5 and e.trials == 4
        assert e.stderr == pytest.approx(math.sqrt(1 / 3) / 2)
        assert e.within(0.5 + 2.9 * e.stderr) and not e.within(0.5 + 3.1 * e.stderr)


class TestReproducibility:
    @pytest.mark.parametrize("model", ["ppp", "mixture"])
    def test_worker_count_is_irrelevant(self, model):
        sim1 = SimConfig(trials=3 * BLOCK_TRIALS + 5, seed=99, workers=1)
        sim2 = SimConfig(trials=3 * BLOCK_TRIALS + 5, seed=99, workers=2)
        a, b = draw_network(BASE, 3, sim1, model), draw_network(BASE, 3, sim2, model)
        for name in ("h", "S", "Q", "I", "J", "u"):
            x, y = getattr(a, name), getattr(b, name)
            if x is not None:
                assert np.array_equal(x, y)

    def test_trial_prefix_is_stable(self):
        # the first trials do not depend on how many trials follow
        a = draw_network(BASE, 2, SimConfig(trials=1000, seed=3), "ppp")
        b = draw_network(BASE, 2, SimConfig(trials=BLOCK_TRIALS + 1, seed=3), "ppp")
        assert np.array_equal(a.I, b.I[:1000])

    def test_different_seeds_differ(self):
        a = draw_network(BASE, 2, SimConfig(trials=100, seed=1))
        b = draw_network(BASE, 2, SimConfig(trials=100, seed=2))
        assert not np.array_equal(a.I, b.I)


class TestPoissonField:
    def test_no_interferers(self):
        params = SystemParams(lam=0.0)
        draws = draw_network(params, 3, SimConfig(trials=500, seed=1))
        assert np.all(draws.I == 0)
        assert np.all(np.isinf(draws.branch_sir(params.d, params.alpha)))
        assert simulate_mrc_outage_ppp(params, 3, 1e6, SimConfig(trials=500)).mean == 0.0

    def test_single_realisation_shape(self):
        rng = np.random.default_rng(0)
        I = sample_ppp_interference(BASE, 5, rng, 100.0)
        assert I.shape == (5,) and np.all(I >= 0)

    @pytest.mark.parametrize("alpha", [3.0, 4.0])
    def test_campbell_mean(self, alpha):
        # finite mean requires a bounded path loss
        params = SystemParams.from_intensity(1e-2, alpha=alpha, epsilon=1.0)
        sim = SimConfig(trials=20_000, seed=5, window=30.0)
        draws = draw_network(params, 2, sim)
        want = params.lambda_p * square_integral(lambda r2: 1.0 / (1.0 + r2 ** (alpha / 2)), 30.0)
        # S is the fading-averaged interference; I adds exponential gains
        assert EstimateCI.from_samples(draws.S).within(want)
        assert EstimateCI.from_samples(draws.I[:, 0]).within(want)

    @pytest.mark.parametrize("T_db", [-10.0, 0.0, 10.0])
    def test_single_antenna_outage(self, T_db):
        T = db(T_db)
        est = simulate_mrc_outage_ppp(BASE, 1, T, SimConfig(trials=60_000, seed=8))
        L = window_half_width(BASE.lambda_p, SimConfig())
        window_exact = window_outage_single(BASE, T, L)
        plane = cdf_V(T * BASE.d**4, constant_C(BASE.lambda_p, 4), 4)
        assert est.within(window_exact)
        # truncation bias is far below sampling noise at this window
        assert abs(window_exact - plane) < 1e-4
        assert est.within(plane, floor=1e-3)

    def test_small_window_bias_matches_formula(self):
        # a deliberately small window: MC follows the window formula, not the plane
        T, L = 10.0, 30.0
        est = simulate_mrc_outage_ppp(BASE, 1, T, SimConfig(trials=60_000, seed=9, window=L))
        window_exact = window_outage_single(BASE, T, L)
        plane = cdf_V(T * 1e4, constant_C(1e-4, 4), 4)
        assert est.within(window_exact)
        assert plane - window_exact > 5 * est.stderr

    def test_joint_ccdf(self, ppp_draws):
        T = db(0.0)
        sir = ppp_draws.branch_sir(BASE.d, BASE.alpha)
        B = constant_B(BASE.lambda_p, BASE.d, T, 4)
        for n in range(1, 5):
            est = EstimateCI.from_samples(sir[:, :n].min(axis=1) > T)
            assert est.within(joint_ccdf_ppp(n, B, 4), floor=1e-3)

    def test_joint_ccdf_wrapper(self):
        T = [db(-3.0), db(3.0)]
        res = estimate_joint_ccdf(BASE, 3, T, SimConfig(trials=30_000, seed=4))
        for t, est in zip(T, res):
            assert est.within(joint_ccdf_ppp(3, constant_B(1e-4, 10, t, 4), 4), floor=1e-3)

    def test_branches_are_exchangeable(self, ppp_draws):
        sir = ppp_draws.branch_sir(BASE.d, BASE.alpha)
        want = cdf_V(1e4, constant_C(1e-4, 4), 4)
        for k in range(4):
            assert EstimateCI.from_samples(sir[:, k] < 1.0).within(want)

    def test_outage_limits(self, ppp_draws):
        grid = outage_grid(ppp_draws, BASE, [1e-8, 1e8])
        for n in range(1, 5):
            assert grid[n][0].mean == 0.0
            assert grid[n][1].mean == 1.0

    def test_outage_decreases_with_antennas(self, ppp_draws):
        grid = outage_grid(ppp_draws, BASE, [db(1.0)])
        vals = [grid[n][0].mean for n in range(1, 5)]
        assert np.all(np.diff(vals) < 0)

    def test_grid_rejects_bad_antenna_count(self, ppp_draws):
        with pytest.raises(DomainError):
            outage_grid(ppp_draws, BASE, [1.0], antennas=[5])


class TestMixtureModel:
    def test_full_correlation_matches_cdf_U(self, mixture_draws):
        T = db(2.0)
        grid = outage_grid(mixture_draws, BASE, [T], q=1.0)
        C = constant_C(1e-4, 4)
        for n in range(1, 5):
            assert grid[n][0].within(cdf_U(T * 1e4, n, C, 4), floor=1e-3)

    @pytest.mark.parametrize("q", [0.0, 0.6, 0.95])
    def test_prefix_draws_match_analytic(self, mixture_draws, q):
        T = db(0.0)
        grid = outage_grid(mixture_draws, BASE, [T], q=q)
        for n in range(1, 5):
            assert grid[n][0].within(outage_mixture(BASE, MixtureConfig(n, q), T), floor=1e-3)

    def test_joint_ccdf(self, mixture_draws):
        T = db(0.0)
        B = constant_B(1e-4, 10, T, 4)
        for q in (0.0, 0.5, 1.0):
            sir = mixture_draws.branch_sir(BASE.d, BASE.alpha, q)
            for n in (2, 4):
                est = EstimateCI.from_samples(sir[:, :n].min(axis=1) > T)
                assert est.within(joint_ccdf_mixture(n, q, B, 4), floor=1e-3)

    def test_marginals_match_poisson_field(self, ppp_draws, mixture_draws):
        a = ppp_draws.branch_sir(BASE.d, BASE.alpha)[:, 0]
        b = mixture_draws.branch_sir(BASE.d, BASE.alpha, 0.7)[:, 2]
        assert stats.ks_2samp(a, b).pvalue > 1e-3

    def test_wrapper_scalar_and_vector(self):
        cfg = MixtureConfig(2, 0.5)
        sim = SimConfig(trials=5000, seed=2)
        one = simulate_mrc_outage_mixture(BASE, cfg, 1.0, sim)
        many = simulate_mrc_outage_mixture(BASE, cfg, [1.0, 2.0], sim)
        assert isinstance(one, EstimateCI) and len(many) == 2
        assert many[0] == one

    def test_interference_needs_q(self, mixture_draws):
        with pytest.raises(ValueError):
            mixture_draws.interference()

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            draw_network(BASE, 2, SimConfig(trials=10), "lattice")


@pytest.fixture(scope="module")
def report():
    return estimate_correlations(SystemParams.from_intensity(1e-2), SimConfig(trials=20_000, seed=31))


class TestCorrelations:
    def test_interference_correlation(self, report):
        assert report.zeta.mean == pytest.approx(0.5, abs=0.02)
        assert report.excluded == 0

    def test_recomposition(self, report):
        se = math.hypot(report.sir_corr.stderr, report.sir_corr_recomposed.stderr)
        assert abs(report.sir_corr.mean - report.sir_corr_recomposed.mean) <= 3 * se
        assert report.recomposed_sir_corr() == pytest.approx(report.sir_corr_recomposed.mean, rel=1e-12)

    def test_report_dict(self, report):
        row = report.as_dict()
        assert row["model"] == "ppp" and row["trials"] == 20_000
        assert {"zeta_inv", "zeta_inv_stderr", "sir_corr_recomposed", "var_I_inv_1"} <= set(row)

    def test_mixture_conditional_zeta(self):
        rep = estimate_correlations(BASE, SimConfig(trials=20_000, seed=2), q=math.sqrt(0.3))
        assert rep.model == "mixture"
        assert rep.zeta.within(0.3, floor=0.01)

    def test_too_few_valid_trials(self):
        # a quarter interferer per window on average: most trials see none
        sim = SimConfig(trials=2000, seed=1, window=25.0)
        with pytest.raises(InsufficientDataError):
            estimate_correlations(BASE, sim)
