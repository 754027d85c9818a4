"""Combined entropy, phase classification and the mutual information rate."""

import math
from fractions import Fraction

import numpy as np
import pytest

from jscthermo import (
    NEG_INF,
    ChannelSpec,
    EnsembleSpec,
    Phase,
    PhaseMismatch,
    SourceSpec,
    SystemSpec,
    analyze,
    binary_convolution,
    binary_entropy,
    classify_phase,
    derivative,
    dominant_energy,
    energy_split,
    mi_rate_alternative,
    mutual_information_rate,
    solve_equilibrium,
    source_entropy_function,
    channel_phi,
    total_entropy,
)

LN2 = math.log(2.0)


def bsc_system(p, lam=1, m=0.5, source_energies=None, alphabet=2):
    """BSC with Hamming energies at the matching temperature."""
    beta = math.log((1.0 - p) / p)
    if source_energies is None:
        source_energies = np.zeros(alphabet)
    source = SourceSpec(np.asarray(source_energies, dtype=float), beta)
    channel = ChannelSpec(np.array([[0.0, 1.0], [1.0, 0.0]]), beta)
    return SystemSpec(source, channel, EnsembleSpec(np.array([1.0 - m, m])), Fraction(lam))


def matched_binary_system(q, p, lam=1, m=0.5):
    """Binary source with P(1)=q against BSC(p), sharing one temperature."""
    beta = math.log((1.0 - p) / p)
    e1 = math.log((1.0 - q) / q) / beta
    return bsc_system(p, lam=lam, m=m, source_energies=[0.0, e1])


GLASSY_SOURCE = [0.0, 0.0, 0.6, 1.1]   # two ground states: ln 2 matches the
                                        # fair-coin clip exactly at low T


class TestTotalEntropy:
    def test_matches_dense_brute_force(self):
        system = bsc_system(0.2, source_energies=[0.0, 1.0])
        sigma = total_entropy(system)
        fine = np.linspace(0.0, 1.0, 10001)
        for eps in np.linspace(0.15, 0.85, 8):
            arg = 2.0 * eps - fine
            ok = (arg >= 0.0) & (arg <= 1.0)
            brute = np.max(np.where(
                ok,
                0.5 * binary_entropy(fine)
                + 0.5 * (binary_entropy(np.clip(arg, 0.0, 1.0)) - LN2),
                NEG_INF))
            expected = brute if brute >= 0.0 else NEG_INF
            if math.isfinite(expected):
                assert sigma(eps) == pytest.approx(expected, abs=1e-6)
            else:
                assert sigma(eps) == NEG_INF

    def test_bounded_by_source_share(self):
        system = bsc_system(0.2, source_energies=[0.0, 1.0], lam=2)
        sigma = total_entropy(system)
        lam = 2.0
        bound = LN2 / (1.0 + lam)   # max Sigma_S, channel term <= 0
        finite = sigma.values[np.isfinite(sigma.values)]
        assert np.all(finite <= bound + 1e-12)

    def test_negative_regions_clipped(self):
        # reliable regime: combined entropy dips below zero near low energies
        system = matched_binary_system(0.05, 0.05, lam=2)
        sigma = total_entropy(system)
        assert np.isneginf(sigma.values).any()
        finite = sigma.values[np.isfinite(sigma.values)]
        assert np.all(finite >= 0.0)


class TestDominantEnergy:
    def test_beta_zero_is_argmax_of_sigma(self):
        system = bsc_system(0.2, source_energies=[0.0, 1.0])
        sigma = total_entropy(system)
        k = int(np.nanargmax(np.where(np.isfinite(sigma.values), sigma.values, NEG_INF)))
        res = dominant_energy(system, beta=1e-12, sigma=sigma)
        assert res.epsilon0 == pytest.approx(sigma.x_min + k * sigma.step, abs=sigma.step)

    def test_large_beta_hits_left_support_edge(self):
        system = bsc_system(0.2, source_energies=[0.0, 1.0])
        sigma = total_entropy(system)
        res = dominant_energy(system, beta=500.0, sigma=sigma)
        lo, _ = sigma.support_range()
        assert res.epsilon0 == pytest.approx(lo, abs=2 * sigma.step)

    def test_slope_at_argmax_equals_beta(self):
        system = bsc_system(0.2, source_energies=[0.0, 1.0])
        sigma = total_entropy(system)
        res = dominant_energy(system, sigma=sigma)
        slope = derivative(sigma, res.epsilon0)
        assert abs(slope - system.beta) <= 3.0 * sigma.step * 20.0


class TestClassifyPhase:
    def test_reliable_regime_is_ordered(self):
        q, p, lam = 0.1, 0.01, 1
        assert binary_entropy(q) < lam * (LN2 - binary_entropy(p))
        assert classify_phase(matched_binary_system(q, p, lam)) is Phase.ORDERED

    def test_noisy_channel_is_paramagnetic(self):
        assert classify_phase(bsc_system(0.49)) is Phase.PARAMAGNETIC

    def test_low_temperature_clip_boundary_is_glassy(self):
        system = bsc_system(crossover := 1.0 / (1.0 + math.exp(15.0)),
                            source_energies=GLASSY_SOURCE)
        assert system.beta == pytest.approx(15.0)
        report = analyze(system)
        assert report.phase is Phase.GLASSY
        assert report.sigma_at_eps0 <= 1e-6
        assert report.mi_rate == report.source_entropy
        assert crossover < 1e-5

    def test_boundary_prefers_ordered(self):
        # noiseless limit of a uniform binary source at lam=1 sits exactly on
        # the reliability boundary H(S) = lam*ln2
        beta = 20.0
        channel = ChannelSpec(np.array([[0.0, np.inf], [np.inf, 0.0]]), beta)
        system = SystemSpec(SourceSpec(np.zeros(2), beta), channel,
                            EnsembleSpec(np.array([0.5, 0.5])), Fraction(1))
        report = analyze(system)
        assert report.phase is Phase.ORDERED
        assert report.mi_rate == pytest.approx(LN2)


class TestMutualInformationRate:
    @pytest.mark.parametrize("p", [0.05, 0.2, 0.45])
    @pytest.mark.parametrize("lam", [1, 2])
    def test_fair_coin_closed_form(self, p, lam):
        system = bsc_system(p, lam=lam, alphabet=4)   # uniform 4-ary: paramagnetic
        assert classify_phase(system) is Phase.PARAMAGNETIC
        assert mutual_information_rate(system) == pytest.approx(
            lam * (LN2 - binary_entropy(p)), abs=1e-9)

    def test_fully_noisy_channel(self):
        assert mutual_information_rate(bsc_system(0.499)) == pytest.approx(
            LN2 - binary_entropy(0.499), abs=1e-9)

    @pytest.mark.parametrize("m", [0.1, 0.3])
    def test_bernoulli_ensemble_closed_form(self, m):
        p = 0.2
        system = bsc_system(p, m=m, alphabet=4)
        assert mutual_information_rate(system) == pytest.approx(
            binary_entropy(binary_convolution(m, p)) - binary_entropy(p), abs=1e-9)

    def test_invariant_under_hamiltonian_shift(self):
        # constructors normalize the ground state to zero, so shifted inputs
        # build the identical system and the identical report
        beta = math.log(0.8 / 0.2)
        base = SystemSpec(SourceSpec(np.array([0.0, 1.25]), beta),
                          ChannelSpec(np.array([[0.0, 1.0], [1.0, 0.0]]), beta),
                          EnsembleSpec(np.array([0.5, 0.5])), Fraction(1))
        shifted = SystemSpec(SourceSpec(np.array([5.0, 6.25]), beta),
                             ChannelSpec(np.array([[2.0, 3.0], [3.0, 2.0]]), beta),
                             EnsembleSpec(np.array([0.5, 0.5])), Fraction(1))
        assert base == shifted
        assert mutual_information_rate(base) == mutual_information_rate(shifted)

    def test_data_processing_bounds(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            p = rng.uniform(0.05, 0.45)
            lam = int(rng.integers(1, 3))
            system = bsc_system(p, lam=lam, alphabet=3)
            mi = mutual_information_rate(system)
            assert 0.0 <= mi <= min(math.log(3.0), lam * LN2) + 1e-12


class TestEnergySplit:
    def test_matched_binary_splits_at_q_and_p(self):
        q = p = 0.2
        system = matched_binary_system(q, p)
        eps_star, share = energy_split(system)
        assert eps_star == pytest.approx(q, abs=1e-9)
        assert share == pytest.approx(p, abs=1e-9)

    def test_uniform_source_share_is_mean(self):
        system = bsc_system(0.3, alphabet=4)
        eps_star, _ = energy_split(system)
        assert eps_star == 0.0   # all-zero energies

    def test_matches_equilibrium_solver(self):
        system = matched_binary_system(0.2, 0.2)
        report = analyze(system)
        sigma_s = source_entropy_function(system.source)
        phi = channel_phi(system)
        sol = solve_equilibrium(sigma_s, phi, 1.0, report.epsilon0)
        eps_star, share = energy_split(system)
        assert sol.epsilon_star == pytest.approx(eps_star, abs=5e-4)
        assert sol.epsilon_channel == pytest.approx(share, abs=5e-4)
        assert sol.beta == pytest.approx(system.beta, abs=5e-3)

    def test_requires_paramagnetic(self):
        with pytest.raises(PhaseMismatch):
            energy_split(matched_binary_system(0.1, 0.01))

    def test_equilibrium_slope_identity(self):
        # both entropy slopes equal beta at the dominant split
        from jscthermo import channel_phi_at, source_entropy_at
        system = matched_binary_system(0.3, 0.2, m=0.4)
        eps_star, share = energy_split(system)
        s_slope = source_entropy_at(system.source, eps_star).slope
        c_slope = channel_phi_at(system, share).slope
        assert abs(s_slope - c_slope) <= 1e-9
        assert s_slope == pytest.approx(system.beta, abs=1e-9)


class TestAlternativeRate:
    def test_leading_terms_cancel(self):
        # beta*eps* + psi_S - Sigma_S(eps*) is the entropy identity: ~0
        system = bsc_system(0.2, source_energies=[0.0, 1.0])
        src = system.source
        from jscthermo import source_entropy_at, source_log_partition
        eps_star = src.mean_energy()
        resid = (system.beta * eps_star + source_log_partition(src, system.beta)
                 - source_entropy_at(src, eps_star).value)
        assert abs(resid - math.fsum([])) <= 1e-10
        assert resid == pytest.approx(binary_entropy(0.2) - binary_entropy(0.2), abs=1e-10)

    def test_fully_noisy_channel_gives_zero(self):
        from jscthermo import system_from_dict
        system = system_from_dict({"binary_source": {"q": 0.5}, "bsc": {"p": 0.5},
                                   "lambda": {"num": 1, "den": 1}})
        assert mi_rate_alternative(system) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("m", [0.5, 0.3])
    def test_agrees_with_rate_formula(self, m):
        system = bsc_system(0.2, m=m, source_energies=[0.0, 1.0])
        sigma = total_entropy(system)
        lam = 1.0
        slope_tol = 3.0 * sigma.step * (1.0 + lam) / lam * system.beta
        assert mi_rate_alternative(system) == pytest.approx(
            mutual_information_rate(system), abs=1e-6 + slope_tol)

    def test_requires_paramagnetic(self):
        with pytest.raises(PhaseMismatch):
            mi_rate_alternative(matched_binary_system(0.1, 0.01))


class TestPhaseTransitionSweep:
    def test_single_ordered_to_paramagnetic_crossing(self):
        # uniform binary source at lam=2: H(S) = 2*(ln2 - h2(p_c))
        lam = 2
        phases = []
        ps = np.round(np.linspace(0.01, 0.49, 49), 6)
        for p in ps:
            phases.append(classify_phase(bsc_system(p, lam=lam), grid_size=1025))
        labels = [ph.value for ph in phases]
        flips = [i for i in range(1, len(labels)) if labels[i] != labels[i - 1]]
        assert len(flips) == 1
        i = flips[0]
        assert labels[i - 1] == "Ordered"
        assert labels[i] == "Paramagnetic"
        # closed-form crossing h2(p_c) = ln2/2
        lo, hi = 1e-9, 0.5
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if binary_entropy(mid) < LN2 / 2.0:
                lo = mid
            else:
                hi = mid
        p_c = 0.5 * (lo + hi)
        assert ps[i - 1] <= p_c <= ps[i]
