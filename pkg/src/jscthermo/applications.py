"""Wiretap-channel secrecy calculators and the two-user additive-access case.

The wiretap side evaluates the rate-versus-leakage curve Gamma(R), its fixed
point (the secrecy capacity) and the equivocation guaranteed by a random code
operating above the eavesdropper's capacity.  The multiple-access side
computes the per-user mutual information rate from the conditional and
unconditional channel-energy rate functions, with an exact two-codebook
enumeration oracle for small blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .errors import (
    InfeasibleRate,
    NotAboveCapacity,
    PhaseMismatch,
    SpecError,
    TooLarge,
)
from .models import (
    ChannelSpec,
    EnsembleSpec,
    PhiPoint,
    SourceSpec,
    SystemSpec,
    _log_m,
    _rate_function_at,
    _rate_function_table,
    _rate_geometry,
    _system_geometry,
    channel_from_dict,
    ensemble_from_dict,
    parse_lambda,
    source_from_dict,
    source_shannon_entropy,
    zeta_prime_neg,
)
from .oracle import DEFAULT_ENUM_BUDGET, derive_seed, draw_code
from .phases import Phase, analyze, mutual_information_rate
from .tabulated import DEFAULT_GRID_SIZE, ConcaveFunction

_ENTROPY_EPS = 1e-300


def _entropy(p: np.ndarray) -> float:
    p = p[p > _ENTROPY_EPS]
    return float(-np.sum(p * np.log(p)))


def channel_mutual_information(p_x: np.ndarray, w: np.ndarray) -> float:
    """I(X;Y) in nats for input law p_x over transition matrix w."""
    p_y = p_x @ w
    h_y = _entropy(p_y)
    h_y_given_x = float(np.dot(p_x, [_entropy(w[i]) for i in range(w.shape[0])]))
    return h_y - h_y_given_x


def _simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All probability vectors with coordinates k/steps, lexicographic order."""
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        first = np.arange(steps + 1) / steps
        return np.column_stack([first, 1.0 - first])
    if dim == 3:
        rows = []
        for i in range(steps + 1):
            j = np.arange(steps + 1 - i)
            block = np.column_stack([np.full(j.size, i / steps), j / steps,
                                     (steps - i - j) / steps])
            rows.append(block)
        return np.vstack(rows)
    raise ValueError("exhaustive grid only for up to 3 inputs")


@dataclass(frozen=True)
class WiretapSpec:
    """Main channel followed by a tap channel, at lam uses per source symbol."""

    main_channel: ChannelSpec
    tap_channel: ChannelSpec
    lam: Fraction
    source_entropy: float

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        if self.tap_channel.in_size != self.main_channel.out_size:
            raise ValueError("tap channel must consume the main channel output")
        if self.source_entropy < 0:
            raise ValueError("source entropy must be nonnegative")

    def cascade(self) -> ChannelSpec:
        """The end-to-end eavesdropper channel W(z|x)."""
        w = self.main_channel.transition_matrix() @ self.tap_channel.transition_matrix()
        energies = np.where(w > 0.0, -np.log(np.where(w > 0.0, w, 1.0)), np.inf)
        return ChannelSpec(energies, 1.0)


class GammaResult(NamedTuple):
    value: float
    input_dist: np.ndarray
    certified: bool


def _mi_tables(spec: WiretapSpec, resolution: int):
    w_y = spec.main_channel.transition_matrix()
    w_z = w_y @ spec.tap_channel.transition_matrix()
    grid = _simplex_grid(spec.main_channel.in_size, resolution)
    # vectorised entropies over the whole grid
    p_y = grid @ w_y
    p_z = grid @ w_z
    with np.errstate(divide="ignore", invalid="ignore"):
        h_y = -np.sum(np.where(p_y > 0, p_y * np.log(np.where(p_y > 0, p_y, 1.0)), 0.0), axis=1)
        h_z = -np.sum(np.where(p_z > 0, p_z * np.log(np.where(p_z > 0, p_z, 1.0)), 0.0), axis=1)
    row_h_y = np.array([_entropy(w_y[i]) for i in range(w_y.shape[0])])
    row_h_z = np.array([_entropy(w_z[i]) for i in range(w_z.shape[0])])
    mi_y = h_y - grid @ row_h_y
    mi_z = h_z - grid @ row_h_z
    return grid, mi_y, mi_z


def _local_ascent(spec: WiretapSpec, rate: float, starts: int = 16):
    """Multi-start hill climb for more than 3 input letters; not certified."""
    w_y = spec.main_channel.transition_matrix()
    w_z = w_y @ spec.tap_channel.transition_matrix()
    dim = spec.main_channel.in_size
    rng = np.random.default_rng(0)
    best_val, best_p = -math.inf, None
    for s in range(starts):
        p = np.full(dim, 1.0 / dim) if s == 0 else rng.dirichlet(np.ones(dim))
        step = 0.25
        val = -math.inf
        if channel_mutual_information(p, w_y) >= rate:
            val = channel_mutual_information(p, w_y) - channel_mutual_information(p, w_z)
        for _ in range(400):
            moved = False
            for i in range(dim):
                for sgn in (1.0, -1.0):
                    q = p.copy()
                    q[i] = max(q[i] + sgn * step, 0.0)
                    q = q / q.sum()
                    if channel_mutual_information(q, w_y) < rate:
                        continue
                    cand = channel_mutual_information(q, w_y) - channel_mutual_information(q, w_z)
                    if cand > val + 1e-15:
                        p, val, moved = q, cand, True
            if not moved:
                step *= 0.5
                if step < 1e-9:
                    break
        if val > best_val:
            best_val, best_p = val, p
    if best_p is None:
        raise InfeasibleRate(f"no input distribution reaches rate {rate!r}")
    return GammaResult(float(best_val), best_p, False)


def gamma(spec: WiretapSpec, rate: float, resolution: int = 1000) -> GammaResult:
    """max over {P_X : I(X;Y) >= rate} of I(X;Y) - I(X;Z).

    Exhaustive simplex grid (lexicographic tie-breaking) for up to 3 input
    letters; multi-start local ascent, flagged non-certified, beyond that.
    """
    if spec.main_channel.in_size > 3:
        return _local_ascent(spec, rate)
    grid, mi_y, mi_z = _mi_tables(spec, resolution)
    feasible = mi_y >= rate - 1e-12
    if not feasible.any():
        raise InfeasibleRate(f"no input distribution reaches rate {rate!r}")
    delta = np.where(feasible, mi_y - mi_z, -math.inf)
    k = int(np.argmax(delta))   # first occurrence: lexicographically smallest
    return GammaResult(float(delta[k]), grid[k], True)


def secrecy_capacity(spec: WiretapSpec, resolution: int = 1000,
                     tol: float = 1e-8) -> float:
    """Solve R = Gamma(R) by bisection on the grid-evaluated Gamma."""
    grid, mi_y, _ = _mi_tables(spec, resolution)
    r_max = float(mi_y.max())
    g0 = gamma(spec, 0.0, resolution).value
    if g0 <= 0.0:
        return 0.0
    lo, hi = 0.0, r_max
    if gamma(spec, r_max, resolution).value >= r_max:
        return r_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gamma(spec, mid, resolution).value - mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tap_capacity(spec: WiretapSpec, resolution: int = 1000) -> float:
    """Capacity of the cascade channel seen by the eavesdropper."""
    _, _, mi_z = _mi_tables(spec, resolution)
    return float(mi_z.max())


def max_main_rate(spec: WiretapSpec, resolution: int = 1000) -> float:
    """Capacity of the main channel (the upper end of the feasible rates)."""
    _, mi_y, _ = _mi_tables(spec, resolution)
    return float(mi_y.max())


def equivocation_bound(spec: WiretapSpec, eavesdrop_system: SystemSpec,
                       beta: Optional[float] = None, resolution: int = 1000,
                       grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Guaranteed H(S|Z) per source symbol for a code above tap capacity.

    The eavesdrop system models the codeword process against the cascade
    channel; the bound is its message entropy minus the leaked mutual
    information, clamped to [0, H(S)].
    """
    w_eaves = eavesdrop_system.channel.transition_matrix()
    w_casc = spec.cascade().transition_matrix()
    if w_eaves.shape != w_casc.shape or not np.allclose(w_eaves, w_casc, atol=1e-9):
        raise ValueError("eavesdrop system must run over the cascade channel")
    h_code = source_shannon_entropy(eavesdrop_system.source, beta)
    lam = float(eavesdrop_system.lam)
    rate_per_use = h_code / lam
    cap = tap_capacity(spec, resolution)
    if rate_per_use <= cap + 1e-12:
        raise NotAboveCapacity(
            f"code rate {rate_per_use:.6g} nats/use does not exceed tap capacity {cap:.6g}")
    leaked = mutual_information_rate(eavesdrop_system, beta, grid_size)
    return min(max(h_code - leaked, 0.0), spec.source_entropy)


# ---------------------------------------------------------------------------
# Two-user multiple access


@dataclass(frozen=True)
class MacChannelSpec:
    """Memoryless two-input channel, W(y|xs,xt) prop. exp(-beta*E(xs,xt,y))."""

    hamiltonian: np.ndarray   # shape (|Xs|, |Xt|, |Y|), +inf allowed
    beta: float

    def __post_init__(self):
        e = np.asarray(self.hamiltonian, dtype=float)
        if e.ndim != 3 or e.shape[2] < 2:
            raise ValueError("need a 3-d energy tensor with at least 2 outputs")
        if np.isnan(e).any() or np.isneginf(e).any():
            raise ValueError("energies must be finite or +inf")
        finite = np.isfinite(e)
        if not finite.reshape(-1, e.shape[2]).any(axis=1).all():
            raise ValueError("every input pair needs one allowed output")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        e = e - e[finite].min()
        e.setflags(write=False)
        object.__setattr__(self, "hamiltonian", e)

    @property
    def shape(self):
        return self.hamiltonian.shape

    def flattened(self) -> ChannelSpec:
        """Single-user view with the input pair as one super-letter."""
        ks, kt, ky = self.hamiltonian.shape
        return ChannelSpec(self.hamiltonian.reshape(ks * kt, ky), self.beta)


@dataclass(frozen=True)
class MacSpec:
    """Two independent sources and codebooks feeding one two-input channel."""

    source_s: SourceSpec
    source_t: SourceSpec
    ensemble_s: EnsembleSpec
    ensemble_t: EnsembleSpec
    channel: MacChannelSpec
    lam: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lam", Fraction(self.lam))
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        ks, kt, _ = self.channel.shape
        if self.ensemble_s.size != ks or self.ensemble_t.size != kt:
            raise ValueError("ensemble sizes must match the channel inputs")
        if abs(self.source_s.beta - self.source_t.beta) > 1e-12 or \
                abs(self.source_s.beta - self.channel.beta) > 1e-12:
            raise ValueError("sources and channel must share one inverse temperature")

    @property
    def beta(self) -> float:
        return self.source_s.beta

    def combined_system(self) -> SystemSpec:
        """Both users merged into one super-source and super-ensemble."""
        e_joint = (self.source_s.hamiltonian[:, None]
                   + self.source_t.hamiltonian[None, :]).ravel()
        source = SourceSpec(e_joint, self.beta)
        m_joint = (self.ensemble_s.coding_dist[:, None]
                   * self.ensemble_t.coding_dist[None, :]).ravel()
        return SystemSpec(source, self.channel.flattened(),
                          EnsembleSpec(m_joint), self.lam)


def _conditional_geometry(spec: MacSpec):
    """Rate-function geometry of the T-codeword energy given the true (xs, y).

    The conditioning pair is folded into the output axis with its true joint
    law: xs ~ M_S and y from the channel fed by both ensembles.
    """
    e = spec.channel.hamiltonian
    ks, kt, ky = e.shape
    w = spec.channel.flattened().transition_matrix().reshape(ks, kt, ky)
    m_s = spec.ensemble_s.coding_dist
    m_t = spec.ensemble_t.coding_dist
    joint = m_s[:, None] * np.einsum("t,sty->sy", m_t, w)   # law of (xs, y)
    joint = (joint / joint.sum()).ravel()
    energies = np.transpose(e, (1, 0, 2)).reshape(kt, ks * ky)
    return _rate_geometry(_log_m(spec.ensemble_t), energies, joint)


def mac_phi_conditional(spec: MacSpec,
                        grid_size: int = DEFAULT_GRID_SIZE) -> ConcaveFunction:
    """Rate function of the channel energy with the S-codeword pinned."""
    geom = _conditional_geometry(spec)
    e = spec.channel.hamiltonian
    e_max = float(e[np.isfinite(e)].max())
    return _rate_function_table(geom, 0.0, e_max, grid_size)


def mac_phi_conditional_at(spec: MacSpec, epsilon: float) -> PhiPoint:
    return _rate_function_at(_conditional_geometry(spec), epsilon)


def mac_mi_user(spec: MacSpec, grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Mutual information rate between user S and the output, in nats/symbol.

    lam * [phi(eps_C* | S) - phi(eps_C*)] at the dominant channel energy,
    valid in the paramagnetic phase of the combined system.
    """
    combined = spec.combined_system()
    report = analyze(combined, grid_size=grid_size)
    if report.phase is not Phase.PARAMAGNETIC:
        raise PhaseMismatch(f"combined system is {report.phase.value}, not Paramagnetic")
    eps_c = zeta_prime_neg(combined)
    cond = mac_phi_conditional_at(spec, eps_c).value
    joint = _rate_function_at(_system_geometry(combined), eps_c).value
    return float(spec.lam) * (cond - joint)


class MacOracleReport(NamedTuple):
    mi_s: float
    mi_t_given_s: float
    mi_joint: float


def mac_oracle(spec: MacSpec, N: int, seed: int,
               budget: Optional[int] = None) -> MacOracleReport:
    """Exact I(S;Y), I(T;Y|S), I(S,T;Y) per source symbol at block length N.

    Codebooks for the two users are drawn on independent derived streams;
    user S's stream seed is derive_seed(seed, 1) and user T's derive_seed(seed, 2).
    """
    budget = DEFAULT_ENUM_BUDGET if budget is None else budget
    lam = Fraction(spec.lam)
    n_frac = lam * N
    if n_frac.denominator != 1:
        raise ValueError(f"lambda*N = {n_frac} is not an integer")
    n = int(n_frac)
    ks_src = spec.source_s.alphabet_size
    kt_src = spec.source_t.alphabet_size
    ky = spec.channel.shape[2]
    num_s, num_t, num_y = ks_src ** N, kt_src ** N, ky ** n
    if num_s * num_t * num_y > budget:
        raise TooLarge(f"enumeration {num_s}x{num_t}x{num_y} exceeds budget {budget}")

    sys_s = SystemSpec(spec.source_s, ChannelSpec(
        np.zeros((spec.ensemble_s.size, 2)), spec.beta), spec.ensemble_s, lam)
    sys_t = SystemSpec(spec.source_t, ChannelSpec(
        np.zeros((spec.ensemble_t.size, 2)), spec.beta), spec.ensemble_t, lam)
    book_s = draw_code(sys_s, N, derive_seed(seed, 1), budget).codebook
    book_t = draw_code(sys_t, N, derive_seed(seed, 2), budget).codebook

    w = spec.channel.flattened().transition_matrix().reshape(*spec.channel.shape)
    p_s = _block_prior(spec.source_s, N, num_s)
    p_t = _block_prior(spec.source_t, N, num_t)

    # W(y-block | s, t) for every message pair, built coordinate by coordinate
    cond = np.ones((num_s, num_t, 1))
    for i in range(n):
        step = w[book_s[:, i][:, None], book_t[:, i][None, :]]   # (num_s, num_t, ky)
        cond = cond[:, :, :, None] * step[:, :, None, :]
        cond = cond.reshape(num_s, num_t, -1)

    def _row_entropies(arr: np.ndarray) -> np.ndarray:
        safe = np.where(arr > 0.0, arr, 1.0)
        return -np.sum(np.where(arr > 0.0, arr * np.log(safe), 0.0), axis=-1)

    p_y = np.einsum("s,t,sty->y", p_s, p_t, cond)
    h_y = _entropy(p_y)
    p_y_given_s = np.einsum("t,sty->sy", p_t, cond)
    h_y_given_s = float(np.dot(p_s, _row_entropies(p_y_given_s)))
    h_y_given_st = float(np.einsum("s,t,st->", p_s, p_t, _row_entropies(cond)))
    return MacOracleReport(
        mi_s=(h_y - h_y_given_s) / N,
        mi_t_given_s=(h_y_given_s - h_y_given_st) / N,
        mi_joint=(h_y - h_y_given_st) / N,
    )


def _block_prior(source: SourceSpec, N: int, num: int) -> np.ndarray:
    p = source.probabilities()
    k = source.alphabet_size
    out = np.ones(num)
    idx = np.arange(num)
    for _ in range(N):
        out = out * p[idx % k]
        idx = idx // k
    return out


# ---------------------------------------------------------------------------
# JSON ingestion


def wiretap_from_dict(obj: dict) -> WiretapSpec:
    block = obj.get("wiretap")
    if block is None:
        raise SpecError("wiretap", "missing")
    main = channel_from_dict(block.get("main", {}), "wiretap.main")
    tap = channel_from_dict(block.get("tap", {}), "wiretap.tap")
    lam = parse_lambda(block, "wiretap")
    if "source_entropy" in block:
        h = block["source_entropy"]
        if isinstance(h, bool) or not isinstance(h, (int, float)) or h < 0:
            raise SpecError("wiretap.source_entropy", "expected a nonnegative number")
        h = float(h)
    elif "binary_source" in block or "source" in block:
        h = source_shannon_entropy(source_from_dict(block, "wiretap"))
    else:
        raise SpecError("wiretap.source_entropy", "missing")
    try:
        return WiretapSpec(main, tap, lam, h)
    except ValueError as exc:
        raise SpecError("wiretap", str(exc)) from exc


def mac_from_dict(obj: dict) -> MacSpec:
    block = obj.get("mac")
    if block is None:
        raise SpecError("mac", "missing")
    source_s = source_from_dict(block, "mac")
    shim_t = {}
    if "source_t" in block:
        shim_t["source"] = block["source_t"]
    if "binary_source_t" in block:
        shim_t["binary_source"] = block["binary_source_t"]
    source_t = source_from_dict(shim_t, "mac(second user)")
    tensor = block.get("channel3")
    if tensor is None:
        raise SpecError("mac.channel3", "missing")
    beta = block.get("beta", source_s.beta)
    if isinstance(beta, bool) or not isinstance(beta, (int, float)):
        raise SpecError("mac.beta", "expected a number")
    try:
        channel = MacChannelSpec(np.asarray(tensor, dtype=float), float(beta))
    except (ValueError, TypeError) as exc:
        raise SpecError("mac.channel3", str(exc)) from exc
    ks, kt, _ = channel.shape
    ens_s = ensemble_from_dict(block, ks, "mac")
    ens_t = ensemble_from_dict(
        {"ensemble": block["ensemble_t"]} if "ensemble_t" in block else {}, kt, "mac")
    lam = parse_lambda(block, "mac")
    try:
        return MacSpec(source_s, source_t, ens_s, ens_t, channel, lam)
    except ValueError as exc:
        raise SpecError("mac", str(exc)) from exc
