import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sint

from conftest import cosine_mu0, random_admissible, random_measure
from torusmf.errors import DivergentIntegral, NotPsh
from torusmf.functionals import (SolverParams, aubin_I, aubin_J, ding_G,
                                 duality_gap, energy_E, entropy_D,
                                 free_energy_F, functional_report,
                                 log_moment_L, ma_density, ma_measure,
                                 mabuchi_K, measure_energy,
                                 potential_of_measure)
from torusmf.grid import BackgroundForm, GridSpec, dirichlet, laplacian
from torusmf.mean_field import solve
from torusmf.measures import (from_density, from_weights, green_pole,
                              integrate, klt_measure, lebesgue)
from torusmf.alpha_mt import psh_probes

seeds = st.integers(0, 2**32 - 1)
GRID16 = GridSpec(16)
LEB16 = BackgroundForm.lebesgue(GRID16)


def discrete_eigenvalue(n):
    return -(2 - 2 * np.cos(2 * np.pi / n)) * n**2


class TestSolverParams:
    @pytest.mark.parametrize("kw", [{"tol_residual": 0}, {"tol_gap": -1}, {"max_iter": 0},
                                    {"damping": 0}, {"damping": 1.5}, {"method": "bfgs"}])
    def test_rejects_bad_values(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)


class TestMAMeasure:
    def test_zero_potential_gives_form(self, grid64):
        omega = BackgroundForm.cosine(grid64, 0.5)
        np.testing.assert_allclose(ma_measure(np.zeros(grid64.shape), omega).density,
                                   omega.rho, atol=1e-12)

    def test_cosine_potential(self, grid64, leb64):
        X, _ = grid64.coords
        a = 1 / np.pi
        u = a * np.cos(2 * np.pi * X)
        expected = 1 + a * discrete_eigenvalue(64) / (4 * np.pi) * np.cos(2 * np.pi * X)
        np.testing.assert_allclose(ma_measure(u, leb64).density, expected, atol=1e-10)

    def test_random_admissible_has_unit_mass(self, rng, grid64, bench64):
        for omega in (BackgroundForm.lebesgue(grid64), bench64):
            for _ in range(5):
                u = random_admissible(omega, rng)
                assert abs(ma_measure(u, omega).mass - 1) <= 1e-10

    def test_non_psh_rejected(self, grid64, leb64):
        X, _ = grid64.coords
        with pytest.raises(NotPsh):
            ma_measure(np.cos(2 * np.pi * X), leb64)

    def test_zero_not_admissible_for_sign_changing_form(self, grid64, bench64):
        with pytest.raises(NotPsh):
            ma_measure(np.zeros(grid64.shape), bench64)


class TestEnergy:
    def test_constant(self, leb64, grid64):
        assert energy_E(np.full(grid64.shape, 2.5), leb64) == pytest.approx(2.5, abs=1e-12)

    def test_cosine_energy_converges_at_second_order(self):
        # u = cos(2 pi x) / (4 pi) is admissible for Lebesgue; E = -(1/2)(pi/2)/(16 pi^2)
        exact = -np.pi / 4 / (16 * np.pi**2)
        errs = []
        for n in (16, 32, 64, 128):
            grid = GridSpec(n)
            X, _ = grid.coords
            u = np.cos(2 * np.pi * X) / (4 * np.pi)
            errs.append(abs(energy_E(u, BackgroundForm.lebesgue(grid)) - exact))
        rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(rates >= 1.9)

    def test_two_forms_of_energy_agree(self, rng, bench64):
        u = random_admissible(bench64, rng)
        half_sum = 0.5 * np.sum(u * (bench64.rho + ma_density(u, bench64))) * bench64.grid.cell_area
        assert energy_E(u, bench64) == pytest.approx(half_sum, rel=1e-10, abs=1e-12)

    def test_gradient_is_ma(self, rng, bench64):
        # central differences at t = 1e-5 against <MA(u), v>
        t = 1e-5
        for _ in range(20):
            u = random_admissible(bench64, rng, amp=1.0)
            v = rng.normal() * (random_admissible(bench64, rng, amp=1.0))
            exact = integrate(v, ma_measure(u, bench64))
            fd = (energy_E(u + t * v, bench64) - energy_E(u - t * v, bench64)) / (2 * t)
            assert abs(fd - exact) <= 1e-4 * (1 + abs(exact))

    def test_nondecreasing(self, rng, bench64):
        # w lifted above sup u, so every convex combination dominates u
        for s in (0.1, 0.5, 0.9):
            u = random_admissible(bench64, rng)
            w = random_admissible(bench64, rng)
            w = w + u.max() - w.min()
            v = (1 - s) * u + s * w
            assert np.all(u <= v)
            assert energy_E(u, bench64) <= energy_E(v, bench64)

    def test_concave_on_segments(self, rng, bench64):
        u0, u1 = random_admissible(bench64, rng), random_admissible(bench64, rng)
        for s in (0.25, 0.5, 0.75):
            mid = energy_E((1 - s) * u0 + s * u1, bench64)
            assert mid >= (1 - s) * energy_E(u0, bench64) + s * energy_E(u1, bench64) - 1e-12

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(-5, 5))
    def test_translation_rule(self, seed, c):
        u = random_admissible(LEB16, np.random.default_rng(seed))
        assert abs(energy_E(u + c, LEB16) - energy_E(u, LEB16) - c) <= 1e-10 * (1 + abs(c))


class TestAubin:
    def test_constant(self, leb64, grid64):
        u = np.full(grid64.shape, -3.0)
        assert aubin_I(u, leb64) == 0 and aubin_J(u, leb64) == 0

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(0, 1))
    def test_quadratic_scaling(self, seed, t):
        u = random_admissible(LEB16, np.random.default_rng(seed))
        J = aubin_J(u, LEB16)
        assert abs(aubin_J(t * u, LEB16) - t * t * J) <= 1e-12 * (1 + J)

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(-5, 5))
    def test_i_equals_two_j_and_translation(self, seed, c):
        u = random_admissible(LEB16, np.random.default_rng(seed))
        I, J = aubin_I(u, LEB16), aubin_J(u, LEB16)
        assert J >= 0
        # (1/n) J <= I - J <= n J is an equality at n = 1
        assert abs(I - 2 * J) <= 1e-10 * (1 + I)
        assert abs(aubin_J(u + c, LEB16) - J) <= 1e-10 * (1 + J)


class TestPotentialOfMeasure:
    def test_form_density_gives_zero(self, bench64):
        mu = from_density(1 + 0.5 * np.cos(2 * np.pi * bench64.grid.coords[0]))
        omega = BackgroundForm.from_density(mu.density)
        assert np.max(np.abs(potential_of_measure(mu, omega))) <= 1e-12

    def test_cosine_perturbation(self, grid64, leb64):
        X, _ = grid64.coords
        eps = 0.3
        mu = from_density(1 + eps * np.cos(2 * np.pi * X))
        u = potential_of_measure(mu, leb64)
        np.testing.assert_allclose(u, 4 * np.pi * eps / discrete_eigenvalue(64)
                                   * np.cos(2 * np.pi * X), atol=1e-12)
        assert np.max(np.abs(ma_measure(u, leb64).density - mu.density)) <= 1e-9

    def test_round_trip(self, rng, bench64):
        mu = random_measure(bench64.grid, rng)
        u = potential_of_measure(mu, bench64)
        assert np.max(np.abs(ma_measure(u, bench64).weights - mu.weights)) <= 1e-9 * np.max(mu.weights)

    def test_normalization_independent(self, rng, grid64, leb64):
        f = np.exp(rng.normal(size=grid64.shape) * 0.1)
        u1 = potential_of_measure(from_density(f), leb64)
        u2 = potential_of_measure(from_density(7.5 * f), leb64)
        assert np.max(np.abs(u1 - u2)) <= 1e-12


class TestMeasureEnergy:
    def test_form_density(self, grid64):
        omega = BackgroundForm.cosine(grid64, 0.5)
        assert abs(measure_energy(from_density(omega.rho), omega)) <= 1e-14

    def test_equals_j_of_potential(self, rng, bench64):
        for _ in range(5):
            u = random_admissible(bench64, rng)
            assert abs(measure_energy(ma_measure(u, bench64), bench64)
                       - aubin_J(u, bench64)) <= 1e-9

    def test_nonnegative_for_positive_form(self, rng, leb64):
        for _ in range(5):
            assert measure_energy(random_measure(leb64.grid, rng), leb64) >= 0

    def test_convexity(self, rng, bench64):
        for _ in range(5):
            m0, m1 = random_measure(bench64.grid, rng), random_measure(bench64.grid, rng)
            mid = from_weights(0.5 * m0.weights + 0.5 * m1.weights)
            assert measure_energy(mid, bench64) <= (0.5 * measure_energy(m0, bench64)
                                                    + 0.5 * measure_energy(m1, bench64)) + 1e-14

    def test_subgradient_inequality(self, rng, bench64):
        for _ in range(10):
            m0, m1 = random_measure(bench64.grid, rng), random_measure(bench64.grid, rng)
            u0 = potential_of_measure(m0, bench64)
            lin = -np.sum(u0 * (m1.weights - m0.weights))
            assert measure_energy(m1, bench64) >= measure_energy(m0, bench64) + lin - 1e-13


class TestEntropy:
    def test_equal_measures(self, rng, grid64):
        mu = random_measure(grid64, rng)
        assert abs(entropy_D(mu, mu)) <= 1e-14

    def test_half_indicator(self):
        errs = []
        for n in (32, 64, 128):
            grid = GridSpec(n)
            X, _ = grid.coords
            f = np.where(X < 0.5, 1.0, 0.0)
            D = entropy_D(from_density(f), lebesgue(grid))
            errs.append(abs(D - np.log(2)))
        assert errs[-1] <= 1.0 / 128

    def test_matches_quadrature_oracle(self, grid64):
        f = lambda x, y: np.exp(0.8 * np.cos(2 * np.pi * x) + 0.3 * np.sin(2 * np.pi * y))
        g = lambda x, y: 1 + 0.5 * np.sin(2 * np.pi * (x + y))
        opts = dict(epsabs=1e-13, epsrel=1e-12)
        Zf = sint.dblquad(lambda y, x: f(x, y), 0, 1, 0, 1, **opts)[0]
        Zg = sint.dblquad(lambda y, x: g(x, y), 0, 1, 0, 1, **opts)[0]
        oracle = sint.dblquad(lambda y, x: f(x, y) / Zf * np.log(f(x, y) / Zf * Zg / g(x, y)),
                              0, 1, 0, 1, **opts)[0]
        X, Y = grid64.coords
        D = entropy_D(from_density(f(X, Y)), from_density(g(X, Y)))
        assert abs(D - oracle) <= 1e-6

    def test_not_absolutely_continuous(self, grid64):
        w0 = np.ones(grid64.shape)
        w0[:, : 32] = 0
        assert entropy_D(lebesgue(grid64), from_weights(w0)) == np.inf

    @settings(max_examples=30, deadline=None)
    @given(seeds, seeds)
    def test_nonnegative(self, s1, s2):
        m1 = random_measure(GRID16, np.random.default_rng(s1))
        m2 = random_measure(GRID16, np.random.default_rng(s2))
        assert entropy_D(m1, m2) >= -1e-14

    def test_directional_derivative(self, rng, grid64):
        t = 1e-5
        for _ in range(10):
            mu0 = random_measure(grid64, rng)
            m0, m1 = random_measure(grid64, rng), random_measure(grid64, rng)
            nu = m1.weights - m0.weights
            seg = lambda s: from_weights(m0.weights + s * nu)
            fd = (entropy_D(seg(t), mu0) - entropy_D(seg(-t), mu0)) / (2 * t)
            exact = np.sum(np.log(m0.weights / mu0.weights) * nu)
            assert abs(fd - exact) <= 1e-4 * (1 + abs(exact))


class TestLogMoment:
    def test_constant(self, grid64, rng):
        mu0 = random_measure(grid64, rng)
        for beta in (-2.0, 0.5, 3.0):
            assert log_moment_L(np.full(grid64.shape, 1.7), beta, mu0) == pytest.approx(-1.7)

    def test_small_beta_limit(self, rng, grid64):
        mu0 = random_measure(grid64, rng)
        u = rng.normal(size=grid64.shape)
        beta = 1e-4
        assert abs(-log_moment_L(u, beta, mu0) - integrate(u, mu0)) <= 10 * beta

    def test_no_overflow(self, grid64):
        u = np.zeros(grid64.shape)
        u[3, 3] = 1e4
        assert np.isfinite(log_moment_L(u, 1.0, lebesgue(grid64)))

    def test_concavity_sign(self, rng, grid64):
        mu0 = random_measure(grid64, rng)
        u0, u1 = rng.normal(size=(2,) + grid64.shape)
        mid = 0.5 * (u0 + u1)
        for beta, sign in ((2.0, 1), (-2.0, -1)):
            avg = 0.5 * (log_moment_L(u0, beta, mu0) + log_moment_L(u1, beta, mu0))
            assert sign * (log_moment_L(mid, beta, mu0) - avg) >= -1e-13

    def test_klt_pole_boundary(self, grid64, leb64):
        # e^(beta t g) mu0 near the pole behaves like s^(-t - c) for beta = -1
        mu0 = klt_measure([(0.5, 0.5, 0.5)], grid64)
        g = green_pole((0.5, 0.5), leb64)
        assert np.isfinite(log_moment_L(g * 0.4, -1.0, mu0))
        with pytest.raises(DivergentIntegral):
            log_moment_L(g * 0.6, -1.0, mu0)


@pytest.fixture(scope="module")
def coercive_solution():
    grid = GridSpec(64)
    omega = BackgroundForm.lebesgue(grid)
    mu0 = cosine_mu0(grid)
    res = solve(-1.5, mu0, omega)
    assert res.converged
    return res, mu0, omega


@pytest.fixture(scope="module")
def positive_solution():
    grid = GridSpec(64)
    omega = BackgroundForm.cosine(grid, 0.5)
    mu0 = cosine_mu0(grid)
    res = solve(1.0, mu0, omega)
    assert res.converged
    return res, mu0, omega


class TestFreeEnergy:
    def test_zero_at_reference(self, grid64):
        omega = BackgroundForm.cosine(grid64, 0.5)
        mu = from_density(omega.rho)
        for beta in (-1.0, 2.0):
            assert abs(free_energy_F(mu, mu, beta, omega)) <= 1e-14

    def test_sentinels(self, grid64, leb64):
        w0 = np.ones(grid64.shape)
        w0[:, :32] = 0
        mu0 = from_weights(w0)
        assert free_energy_F(lebesgue(grid64), mu0, 1.0, leb64) == np.inf
        assert free_energy_F(lebesgue(grid64), mu0, -1.0, leb64) == -np.inf

    def test_minimized_by_solution(self, positive_solution, rng):
        res, mu0, omega = positive_solution
        F_star = free_energy_F(res.mu_star, mu0, 1.0, omega)
        for _ in range(50):
            assert free_energy_F(random_measure(omega.grid, rng), mu0, 1.0, omega) >= F_star - 1e-12

    def test_bounded_above_in_coercive_regime(self, coercive_solution):
        res, mu0, omega = coercive_solution
        F_star = free_energy_F(res.mu_star, mu0, -1.5, omega)
        for _, u in psh_probes(omega, count=50, seed=3):
            assert free_energy_F(ma_measure(u, omega), mu0, -1.5, omega) <= F_star + 1e-10


class TestDing:
    def test_zero(self, rng, grid64, leb64):
        mu0 = random_measure(grid64, rng)
        assert abs(ding_G(np.zeros(grid64.shape), mu0, 2.0, leb64)) <= 1e-14

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(-5, 5), st.sampled_from([-1.5, -0.5, 0.5, 2.0]))
    def test_translation_invariant(self, seed, c, beta):
        rng = np.random.default_rng(seed)
        u = random_admissible(LEB16, rng)
        mu0 = random_measure(GRID16, rng)
        assert abs(ding_G(u + c, mu0, beta, LEB16) - ding_G(u, mu0, beta, LEB16)) <= 1e-10

    def test_f_below_g_for_negative_beta(self, rng, grid64, bench64):
        mu0 = cosine_mu0(grid64)
        for _ in range(20):
            u = random_admissible(bench64, rng)
            F = free_energy_F(ma_measure(u, bench64), mu0, -1.0, bench64)
            assert F <= ding_G(u, mu0, -1.0, bench64) + 1e-12


class TestDualityGap:
    def test_nonsolution_has_positive_gap(self, grid64, leb64):
        mu0 = cosine_mu0(grid64)
        for beta in (-1.0, 1.0):
            assert duality_gap(np.zeros(grid64.shape), mu0, beta, leb64) > 1e-6

    def test_at_solution(self, positive_solution, coercive_solution):
        for res, mu0, omega in (positive_solution, coercive_solution):
            assert duality_gap(res.u_star, mu0, res.beta, omega) <= 1e-8

    @settings(max_examples=30, deadline=None)
    @given(seeds, st.floats(-5, 5), st.sampled_from([-1.0, 1.0, 3.0]))
    def test_nonnegative_and_translation_invariant(self, seed, c, beta):
        rng = np.random.default_rng(seed)
        u = random_admissible(LEB16, rng)
        mu0 = random_measure(GRID16, rng)
        g = duality_gap(u, mu0, beta, LEB16)
        assert g >= -1e-12
        assert abs(duality_gap(u + c, mu0, beta, LEB16) - g) <= 1e-10


class TestMabuchi:
    def test_zero_at_reference(self, grid64):
        omega = BackgroundForm.cosine(grid64, 0.5)
        mu0 = from_density(omega.rho)
        assert abs(mabuchi_K(np.zeros(grid64.shape), mu0, -1.0, omega)) <= 1e-14

    def test_translation(self, rng, bench64):
        u = random_admissible(bench64, rng)
        mu0 = cosine_mu0(bench64.grid)
        assert abs(mabuchi_K(u + 3, mu0, 2.0, bench64) - mabuchi_K(u, mu0, 2.0, bench64)) <= 1e-10

    def test_solution_minimizes(self, coercive_solution):
        res, mu0, omega = coercive_solution
        K_star = mabuchi_K(res.u_star, mu0, -1.5, omega)
        for _, u in psh_probes(omega, count=50, seed=5):
            assert K_star <= mabuchi_K(u, mu0, -1.5, omega) + 1e-10


class TestInvariants:
    def test_n1_identities(self, rng, bench64):
        cell = bench64.grid.cell_area
        for _ in range(10):
            u = random_admissible(bench64, rng)
            u = u - np.sum(u * bench64.rho) * cell
            ma = ma_measure(u, bench64)
            E_ma = measure_energy(ma, bench64)
            assert abs(-integrate(u, ma) - 2 * E_ma) <= 1e-9
            assert abs(energy_E(u, bench64) - (np.sum(u * bench64.rho) * cell
                                               - 0.5 * dirichlet(u, u))) <= 1e-12

    def test_entropy_duality(self, rng, grid64):
        gamma = 1.3
        for _ in range(10):
            mu0 = random_measure(grid64, rng)
            u = rng.normal(size=grid64.shape)
            Z = np.sum(np.exp(-gamma * u) * mu0.weights)
            mu = from_weights(np.exp(-gamma * u) * mu0.weights)
            L_minus = -np.log(Z) / gamma
            lhs = entropy_D(mu, mu0) / gamma
            rhs = L_minus - integrate(u, mu)
            assert abs(lhs - rhs) <= 1e-8 * max(1, abs(rhs))

    def test_report_consistency(self, rng, bench64):
        u = random_admissible(bench64, rng)
        mu0 = cosine_mu0(bench64.grid)
        r = functional_report(u, mu0, -1.0, bench64)
        assert r.G == pytest.approx(r.E + r.L, abs=1e-14)
        assert r.K == pytest.approx(-r.F, abs=1e-14)
        assert abs(r.I - 2 * r.J) <= 1e-8 * (1 + abs(r.I))
        assert r.J >= 0 and r.D >= 0
        assert set(r.as_dict()) == {"E", "I", "J", "D", "L", "F", "G", "K", "beta"}
