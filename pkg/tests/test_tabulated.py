"""Grid calculus: envelopes, Legendre transforms, convolution, equilibrium."""

import math

import numpy as np
import pytest

from jscthermo import (
    NEG_INF,
    BoundarySolution,
    ConcaveFunction,
    DegenerateFunction,
    EdgeDerivative,
    InvalidTemperature,
    TabulatedFunction,
    binary_entropy,
    clip_nonnegative,
    concave_envelope,
    derivative,
    inf_transform_table,
    legendre_inf,
    legendre_sup,
    solve_equilibrium,
    spin_dominant_energy,
    sup_transform_table,
    two_level_dominant_energy,
    weighted_sup_convolution,
)

G = 4097


def h2_table(size=G, lo=0.0, hi=1.0):
    grid = np.linspace(lo, hi, size)
    return ConcaveFunction(TabulatedFunction(lo, hi, binary_entropy(grid)))


class TestTabulatedFunction:
    def test_linear_interpolation(self):
        f = TabulatedFunction(0.0, 1.0, np.array([0.0, 1.0, 4.0]))
        assert f(0.25) == pytest.approx(0.5)
        assert f(0.75) == pytest.approx(2.5)
        assert f(0.5) == 1.0

    def test_neg_inf_neighbour_poisons_interval(self):
        f = TabulatedFunction(0.0, 1.0, np.array([NEG_INF, 1.0, 2.0]))
        assert f(0.25) == NEG_INF
        assert f(0.5) == 1.0          # exactly on the finite node
        assert f(0.75) == pytest.approx(1.5)

    def test_outside_domain_is_neg_inf(self):
        f = TabulatedFunction(0.0, 1.0, np.array([1.0, 1.0, 1.0]))
        assert f(-0.5) == NEG_INF
        assert f(1.5) == NEG_INF

    def test_values_are_immutable(self):
        f = TabulatedFunction(0.0, 1.0, np.array([0.0, 1.0, 0.0]))
        with pytest.raises(ValueError):
            f.values[0] = 3.0

    def test_rejects_nan_and_plus_inf(self):
        with pytest.raises(ValueError):
            TabulatedFunction(0.0, 1.0, np.array([0.0, np.nan, 0.0]))
        with pytest.raises(ValueError):
            TabulatedFunction(0.0, 1.0, np.array([0.0, np.inf, 0.0]))

    def test_concave_wrapper_rejects_gaps_and_bumps(self):
        with pytest.raises(ValueError):
            ConcaveFunction(TabulatedFunction(0.0, 1.0, np.array([0.0, NEG_INF, 0.0])))
        with pytest.raises(ValueError):
            ConcaveFunction(TabulatedFunction(0.0, 1.0, np.array([0.0, -1.0, 0.0])))


class TestConcaveEnvelope:
    def test_idempotent_on_concave_input(self):
        f = h2_table(257)
        hull = concave_envelope(f)
        np.testing.assert_allclose(hull.values, f.values, atol=1e-12)

    def test_chord_over_the_dip(self):
        pts = TabulatedFunction(0.0, 1.0, np.array([0.0, -1.0, 0.0]))
        hull = concave_envelope(pts)
        np.testing.assert_allclose(hull.values, [0.0, 0.0, 0.0], atol=1e-12)

    def test_recovers_jittered_concave_curve(self):
        rng = np.random.default_rng(7)
        size = 513
        grid = np.linspace(0.0, 1.0, size)
        jitter = 1e-3
        noisy = binary_entropy(grid) + rng.uniform(-jitter, jitter, size)
        hull = concave_envelope(TabulatedFunction(0.0, 1.0, noisy))
        assert np.max(np.abs(hull.values - binary_entropy(grid))) <= 2.0 * jitter

    def test_preserves_neg_inf_outside_support(self):
        vals = np.full(11, NEG_INF)
        vals[3:8] = 1.0 - (np.arange(5) - 2.0) ** 2 / 10.0
        hull = concave_envelope(TabulatedFunction(0.0, 1.0, vals))
        assert np.all(np.isneginf(hull.values[:3]))
        assert np.all(np.isneginf(hull.values[8:]))
        assert np.all(np.isfinite(hull.values[3:8]))

    def test_too_few_finite_points(self):
        vals = np.full(9, NEG_INF)
        vals[2:4] = 1.0
        with pytest.raises(DegenerateFunction):
            concave_envelope(TabulatedFunction(0.0, 1.0, vals))


class TestLegendreSup:
    def test_h2_at_beta_zero(self):
        res = legendre_sup(h2_table(), 0.0)
        assert res.value == pytest.approx(math.log(2.0), abs=1e-12)
        assert res.epsilon == pytest.approx(0.5, abs=1e-12)

    def test_h2_at_beta_one_closed_form(self):
        # stationarity of h2(e) - e: optimum at e = 1/(1+e^1)
        res = legendre_sup(h2_table(), 1.0)
        assert res.value == pytest.approx(math.log(1.0 + math.exp(-1.0)), abs=1e-7)
        assert res.epsilon == pytest.approx(1.0 / (1.0 + math.e), abs=2.0 / (G - 1))

    def test_constant_function(self):
        f = ConcaveFunction(TabulatedFunction(0.0, 1.0, np.full(5, 0.7)))
        res = legendre_sup(f, 0.0)
        assert res.value == 0.7
        assert res.epsilon == 0.0  # smallest-argument tie-breaking

    def test_nonincreasing_and_convex_in_beta(self):
        psi = sup_transform_table(h2_table(1025), -8.0, 8.0, 321)
        diffs = np.diff(psi.values)
        assert np.all(diffs <= 1e-12)  # nonincreasing... only for nonneg support
        second = np.diff(psi.values, 2)
        assert np.all(second >= -1e-9)


class TestLegendreInf:
    def test_round_trip_recovers_h2(self):
        f = h2_table()
        psi = sup_transform_table(f, -50.0, 50.0, G)
        for eps in np.linspace(0.05, 0.95, 19):
            tol = 2.0 * f.step * (1.0 + abs(math.log((1.0 - eps) / eps)))
            rec = legendre_inf(psi, eps).value
            assert abs(rec - binary_entropy(eps)) <= tol

    def test_known_psi_at_half(self):
        betas = np.linspace(0.0, 50.0, G)
        psi = TabulatedFunction(0.0, 50.0, np.log1p(np.exp(-betas)))
        res = legendre_inf(psi, 0.5)
        assert res.value == pytest.approx(math.log(2.0), abs=1e-9)
        assert res.beta == 0.0

    def test_zero_psi(self):
        psi = TabulatedFunction(0.0, 50.0, np.zeros(101))
        for eps in (0.0, 0.3, 2.0):
            res = legendre_inf(psi, eps)
            assert res.value == 0.0
            assert res.beta == 0.0

    def test_inf_transform_table_matches_pointwise(self):
        psi = sup_transform_table(h2_table(1025), -20.0, 20.0, 1025)
        table = inf_transform_table(psi, 0.1, 0.9, 33)
        for x, v in zip(table.grid, table.values):
            assert v == pytest.approx(legendre_inf(psi, x).value, abs=1e-12)


class TestDerivative:
    def test_linear_slope(self):
        grid = np.linspace(-1.0, 3.0, 41)
        f = TabulatedFunction(-1.0, 3.0, 2.5 * grid + 1.0)
        for x in (-0.6, 0.0, 1.234, 2.8):
            assert derivative(f, x) == pytest.approx(2.5, abs=1e-12)

    def test_h2_symmetry_point(self):
        assert derivative(h2_table(), 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_h2_quarter_point(self):
        assert derivative(h2_table(), 0.25) == pytest.approx(math.log(3.0), abs=1e-4)

    def test_edge_refusal(self):
        f = h2_table(129)
        for x in (0.0, 1.0, -0.2, 1.0 - 0.5 * f.step):
            with pytest.raises(EdgeDerivative):
                derivative(f, x)

    def test_derivative_duality(self):
        # beta(eps) and eps(beta) invert each other within 3 grid steps
        f = h2_table(1025)
        psi = sup_transform_table(f, -20.0, 20.0, 4097)
        for eps in np.linspace(0.1, 0.9, 9):
            beta = derivative(f, eps)
            eps_back = -derivative(psi, beta)
            assert abs(eps_back - eps) <= 3.0 * f.step


class TestWeightedSupConvolution:
    def test_flat_channel_term(self):
        flat = ConcaveFunction(TabulatedFunction(0.0, 2.0, np.zeros(65)))
        res = weighted_sup_convolution(h2_table(), flat, 1.0, 0.75)
        assert res.value == pytest.approx(0.5 * math.log(2.0), abs=1e-9)
        assert res.epsilon_source == pytest.approx(0.5, abs=1e-3)

    def test_matches_dense_brute_force(self):
        sigma = h2_table()
        grid = np.linspace(0.0, 1.0, G)
        phi = ConcaveFunction(TabulatedFunction(0.0, 1.0, binary_entropy(grid) - math.log(2.0)))
        eps = 0.5
        res = weighted_sup_convolution(sigma, phi, 1.0, eps)
        ep = np.linspace(0.0, 1.0, 10001)
        arg = 2.0 * eps - ep
        ok = (arg >= 0.0) & (arg <= 1.0)
        brute = np.max(np.where(
            ok, 0.5 * binary_entropy(ep)
            + 0.5 * (binary_entropy(np.clip(arg, 0.0, 1.0)) - math.log(2.0)),
            NEG_INF))
        assert res.value == pytest.approx(brute, abs=1e-6)

    def test_symmetric_argmax(self):
        sigma = h2_table()
        for eps in (0.2, 0.35, 0.5):
            res = weighted_sup_convolution(sigma, sigma, 1.0, eps)
            assert res.epsilon_source == pytest.approx(eps, abs=1e-3)

    def test_empty_feasible_set(self):
        vals = np.full(33, NEG_INF)
        vals[20:] = 1.0
        sigma = ConcaveFunction(TabulatedFunction(0.0, 1.0, vals))
        res = weighted_sup_convolution(sigma, h2_table(), 1.0, 0.1)
        assert res.value == NEG_INF
        assert math.isnan(res.epsilon_source)


class TestClipNonnegative:
    def test_nonnegative_unchanged(self):
        f = h2_table(65)
        np.testing.assert_array_equal(clip_nonnegative(f).values, f.values)

    def test_all_negative(self):
        f = TabulatedFunction(0.0, 1.0, np.array([-1.0, -0.2, -3.0]))
        assert np.all(np.isneginf(clip_nonnegative(f).values))

    def test_h2_minus_constant_boundary(self):
        # independent oracle: bisection on h2(x) = 0.4
        def bisect(lo, hi):
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if binary_entropy(mid) < 0.4:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        left = bisect(1e-12, 0.5)
        right = 1.0 - left
        assert left == pytest.approx(0.13728271818, abs=1e-9)
        grid = np.linspace(0.0, 1.0, G)
        clipped = clip_nonnegative(TabulatedFunction(0.0, 1.0, binary_entropy(grid) - 0.4))
        inside = (grid >= left + 1e-3) & (grid <= right - 1e-3)
        assert np.all(np.isfinite(clipped.values[inside]))
        assert np.all(np.isneginf(clipped.values[grid < left - 1e-3]))
        assert np.all(np.isneginf(clipped.values[grid > right + 1e-3]))
        np.testing.assert_allclose(clipped.values[inside],
                                   binary_entropy(grid[inside]) - 0.4, atol=1e-12)


def spin_curve(b_field, size=G):
    """Excited-fraction entropy of a spin in field B, ground state at 0."""
    grid = np.linspace(0.0, 2.0 * b_field, size)
    return ConcaveFunction(TabulatedFunction(0.0, 2.0 * b_field,
                                             binary_entropy(grid / (2.0 * b_field))))


def two_level_curve(e0, size=G):
    grid = np.linspace(0.0, e0, size)
    return ConcaveFunction(TabulatedFunction(0.0, e0, binary_entropy(grid / e0)))


class TestSolveEquilibrium:
    def test_equal_subsystems_split_equally(self):
        sigma = h2_table()
        sol = solve_equilibrium(sigma, sigma, 1.0, 0.3)
        assert sol.epsilon_star == pytest.approx(0.3, abs=1e-9)
        assert sol.epsilon_channel == pytest.approx(0.3, abs=1e-9)

    @pytest.mark.parametrize("b_field", [0.5, 1.0, 1.5])
    @pytest.mark.parametrize("e0", [0.6, 1.0, 1.4])
    def test_spin_two_level_closed_forms(self, b_field, e0):
        k_t, lam = 1.0, 1.0
        # dominant energies in the shifted (ground-state-zero) convention
        spin_mean = b_field - spin_dominant_energy(b_field, k_t)
        level_mean = two_level_dominant_energy(e0, k_t)
        eps0 = (spin_mean + lam * level_mean) / (1.0 + lam)
        sol = solve_equilibrium(spin_curve(b_field), two_level_curve(e0), lam, eps0)
        assert b_field - sol.epsilon_star == pytest.approx(
            spin_dominant_energy(b_field, k_t), abs=1e-6)
        assert sol.epsilon_channel == pytest.approx(level_mean, abs=1e-6)
        assert sol.beta == pytest.approx(1.0 / k_t, abs=1e-4)

    def test_slopes_agree_at_solution(self):
        sol = solve_equilibrium(spin_curve(1.0), two_level_curve(1.0), 2.0, 0.25)
        s1 = derivative(spin_curve(1.0), sol.epsilon_star)
        s2 = derivative(two_level_curve(1.0), sol.epsilon_channel)
        assert abs(s1 - s2) <= 1e-10

    def test_boundary_solution(self):
        # total energy so low that the slope equation has no interior root
        sigma = h2_table()
        with pytest.raises(BoundarySolution) as err:
            solve_equilibrium(sigma, sigma, 1.0, 1e-4)
        assert err.value.endpoint in ("lower", "upper")

    def test_beta_matches_convolution_slope(self):
        # the common slope equals the derivative of the combined entropy
        sigma1, sigma2 = h2_table(1025), h2_table(1025)
        lam, eps0 = 1.0, 0.3
        sol = solve_equilibrium(sigma1, sigma2, lam, eps0)
        eps_grid = np.linspace(0.05, 0.55, 1025)
        conv_vals = np.array([weighted_sup_convolution(sigma1, sigma2, lam, e).value
                              for e in eps_grid])
        conv = TabulatedFunction(0.05, 0.55, conv_vals)
        slope = derivative(conv, eps0)
        assert abs(slope - sol.beta) <= 3.0 * (1.0 / 1024)


class TestClosedFormDominantEnergies:
    def test_zero_field(self):
        assert spin_dominant_energy(0.0, 1.0) == 0.0

    def test_zero_excitation(self):
        assert two_level_dominant_energy(0.0, 1.0) == 0.0

    def test_field_equals_temperature(self):
        assert spin_dominant_energy(2.0, 2.0) == pytest.approx(2.0 * math.tanh(1.0))

    def test_invalid_temperature(self):
        with pytest.raises(InvalidTemperature):
            spin_dominant_energy(1.0, 0.0)
        with pytest.raises(InvalidTemperature):
            two_level_dominant_energy(1.0, -1.0)
