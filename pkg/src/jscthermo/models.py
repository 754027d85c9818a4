"""Memoryless sources, discrete channels and i.i.d. coding ensembles.

Sources and channels are Boltzmann families: the stored Hamiltonian together
with an inverse temperature defines the letter distribution P(s) and the
transition matrix W(y|x).  This module computes their per-letter log
partition functions, microcanonical entropy curves, the output-averaged log
moment generating function of the channel energy and its rate function, plus
the closed-form crossover/bias parameter mappings and binary convolution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import IncompatibleSupport, InvalidTemperature, OutOfRange, SpecError
from .tabulated import (
    DEFAULT_GRID_SIZE,
    NEG_INF,
    ConcaveFunction,
    TabulatedFunction,
)

_DEGENERATE_SPAN = 1e-12   # energy ranges below this collapse to a point
_SLOPE_CAP = 1e5           # bisection window for tilt parameters


def binary_entropy(x):
    """h2 in nats; accepts scalars or arrays, 0 at the endpoints."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inner = (x > 0.0) & (x < 1.0)
    xi = x[inner]
    out[inner] = -xi * np.log(xi) - (1.0 - xi) * np.log(1.0 - xi)
    return float(out) if out.ndim == 0 else out


def binary_convolution(m: float, p: float) -> float:
    """m*p = m(1-p) + p(1-m), the crossover of two cascaded BSC mechanisms."""
    return m * (1.0 - p) + p * (1.0 - m)


def _check_kt(k_t: float):
    if k_t <= 0:
        raise InvalidTemperature(f"kT={k_t!r} must be positive")


def crossover_from_energy(e0: float, k_t: float) -> float:
    """BSC crossover p for a two-level channel with excitation energy e0."""
    _check_kt(k_t)
    return 1.0 / (1.0 + math.exp(e0 / k_t))


def energy_from_crossover(p: float, k_t: float) -> float:
    """Inverse of crossover_from_energy."""
    _check_kt(k_t)
    if not 0.0 < p < 1.0:
        raise OutOfRange(f"p={p!r} must lie in (0, 1)")
    return k_t * math.log((1.0 - p) / p)


def bias_from_field(b_field: float, k_t: float) -> float:
    """Probability of the aligned spin state under field B."""
    _check_kt(k_t)
    return 1.0 / (1.0 + math.exp(-2.0 * b_field / k_t))


def field_from_bias(q: float, k_t: float) -> float:
    """Inverse of bias_from_field."""
    _check_kt(k_t)
    if not 0.0 < q < 1.0:
        raise OutOfRange(f"q={q!r} must lie in (0, 1)")
    return 0.5 * k_t * math.log(q / (1.0 - q))


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Memoryless source with P(s) proportional to exp(-beta * E(s)).

    The Hamiltonian is shifted so its minimum is 0; the shift cancels in
    every probability and posterior.
    """

    hamiltonian: np.ndarray
    beta: float

    def __eq__(self, other):
        return (isinstance(other, SourceSpec) and self.beta == other.beta
                and np.array_equal(self.hamiltonian, other.hamiltonian))

    def __hash__(self):
        return hash((self.beta, self.hamiltonian.tobytes()))

    def __post_init__(self):
        e = np.asarray(self.hamiltonian, dtype=float)
        if e.ndim != 1 or e.size < 2:
            raise ValueError("source needs at least 2 symbols")
        if not np.isfinite(e).all():
            raise ValueError("source energies must be finite")
        if self.beta <= 0:
            raise ValueError("source beta must be positive")
        e = e - e.min()
        e.setflags(write=False)
        object.__setattr__(self, "hamiltonian", e)

    @property
    def alphabet_size(self) -> int:
        return int(self.hamiltonian.size)

    def retempered(self, beta: float) -> "SourceSpec":
        return SourceSpec(self.hamiltonian, beta)

    def probabilities(self, beta: Optional[float] = None) -> np.ndarray:
        b = self.beta if beta is None else beta
        logits = -b * self.hamiltonian
        return np.exp(logits - logsumexp(logits))

    def log_partition(self, beta: Optional[float] = None) -> float:
        b = self.beta if beta is None else beta
        return float(logsumexp(-b * self.hamiltonian))

    def mean_energy(self, beta: Optional[float] = None) -> float:
        b = self.beta if beta is None else beta
        return float(np.dot(self.probabilities(b), self.hamiltonian))


def source_log_partition(source: SourceSpec, beta: float) -> float:
    """Per-letter log partition function psi_S(beta)."""
    return source.log_partition(beta)


def source_shannon_entropy(source: SourceSpec, beta: Optional[float] = None) -> float:
    """Per-symbol Shannon entropy in nats: psi(beta) + beta * mean energy."""
    b = source.beta if beta is None else beta
    return source.log_partition(b) + b * source.mean_energy(b)


class EntropyPoint(NamedTuple):
    value: float
    slope: float


def _tilt_for_mean(energies: np.ndarray, weights_log: np.ndarray, targets: np.ndarray):
    """Solve mean_energy(t) = target for each target by vectorised bisection.

    The tilted mean sum_i e_i * softmax(w_i - t e_i) is strictly decreasing
    in t, so bisection over [-_SLOPE_CAP, _SLOPE_CAP] converges for targets
    strictly inside the achievable range.
    """
    targets = np.asarray(targets, dtype=float)
    lo = np.full(targets.shape, -_SLOPE_CAP)
    hi = np.full(targets.shape, _SLOPE_CAP)
    e = energies[None, :]
    w = weights_log[None, :]
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        logits = w - mid[:, None] * e
        logits -= logits.max(axis=1, keepdims=True)
        probs = np.exp(logits)
        probs /= probs.sum(axis=1, keepdims=True)
        mean = (probs * e).sum(axis=1)
        too_high = mean > targets
        lo = np.where(too_high, mid, lo)
        hi = np.where(too_high, hi, mid)
    return 0.5 * (lo + hi)


def source_entropy_function(source: SourceSpec,
                            grid_size: int = DEFAULT_GRID_SIZE) -> ConcaveFunction:
    """Microcanonical entropy Sigma_S over [0, max E]: growth rate of the
    number of N-strings at per-symbol energy eps.

    Interior points solve the tilted-mean equation exactly; the endpoints are
    the log multiplicities of the extreme energy levels.  A source whose
    energies are all equal collapses to a single finite point at eps = 0.
    """
    e = source.hamiltonian
    e_max = float(e.max())
    if e_max < _DEGENERATE_SPAN:
        vals = np.full(grid_size, NEG_INF)
        vals[0] = math.log(source.alphabet_size)
        return ConcaveFunction(TabulatedFunction(0.0, 1.0, vals))
    grid = np.linspace(0.0, e_max, grid_size)
    vals = np.empty(grid_size)
    zero_log = np.zeros(e.size)
    ts = _tilt_for_mean(e, zero_log, grid[1:-1])
    psi = logsumexp(-ts[:, None] * e[None, :], axis=1)
    vals[1:-1] = ts * grid[1:-1] + psi
    vals[0] = math.log(int((e < _DEGENERATE_SPAN).sum()))
    vals[-1] = math.log(int((e > e_max - _DEGENERATE_SPAN).sum()))
    return ConcaveFunction(TabulatedFunction(0.0, e_max, vals))


def source_entropy_at(source: SourceSpec, epsilon: float) -> EntropyPoint:
    """Pointwise Sigma_S(eps) and its slope beta(eps), solved exactly."""
    e = source.hamiltonian
    e_max = float(e.max())
    if e_max < _DEGENERATE_SPAN:
        if abs(epsilon) < _DEGENERATE_SPAN:
            return EntropyPoint(math.log(source.alphabet_size), math.nan)
        return EntropyPoint(NEG_INF, math.nan)
    if epsilon < -_DEGENERATE_SPAN or epsilon > e_max + _DEGENERATE_SPAN:
        return EntropyPoint(NEG_INF, math.nan)
    if epsilon < _DEGENERATE_SPAN:
        return EntropyPoint(math.log(int((e < _DEGENERATE_SPAN).sum())), math.inf)
    if epsilon > e_max - _DEGENERATE_SPAN:
        return EntropyPoint(math.log(int((e > e_max - _DEGENERATE_SPAN).sum())), -math.inf)
    t = float(_tilt_for_mean(e, np.zeros(e.size), np.array([epsilon]))[0])
    psi = float(logsumexp(-t * e))
    return EntropyPoint(t * epsilon + psi, t)


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """DMC with W(y|x) proportional to exp(-beta * E(x, y)).

    E may contain +inf for forbidden transitions (W = 0).  A single global
    shift puts the minimum finite energy at 0; per-row shifts would change W
    for asymmetric channels and are never applied.
    """

    hamiltonian: np.ndarray
    beta: float

    def __eq__(self, other):
        return (isinstance(other, ChannelSpec) and self.beta == other.beta
                and np.array_equal(self.hamiltonian, other.hamiltonian))

    def __hash__(self):
        return hash((self.beta, self.hamiltonian.shape, self.hamiltonian.tobytes()))

    def __post_init__(self):
        e = np.asarray(self.hamiltonian, dtype=float)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 2:
            raise ValueError("channel needs a 2-d energy matrix")
        if np.isnan(e).any() or np.isneginf(e).any():
            raise ValueError("channel energies must be finite or +inf")
        finite = np.isfinite(e)
        if not finite.any(axis=1).all():
            raise ValueError("every input needs at least one allowed output")
        if self.beta <= 0:
            raise ValueError("channel beta must be positive")
        e = e - e[finite].min()
        e.setflags(write=False)
        object.__setattr__(self, "hamiltonian", e)

    @property
    def in_size(self) -> int:
        return int(self.hamiltonian.shape[0])

    @property
    def out_size(self) -> int:
        return int(self.hamiltonian.shape[1])

    def retempered(self, beta: float) -> "ChannelSpec":
        return ChannelSpec(self.hamiltonian, beta)

    def transition_matrix(self, beta: Optional[float] = None) -> np.ndarray:
        b = self.beta if beta is None else beta
        logits = np.where(np.isfinite(self.hamiltonian), -b * self.hamiltonian, -np.inf)
        norm = logsumexp(logits, axis=1, keepdims=True)
        w = np.exp(logits - norm)
        w[~np.isfinite(self.hamiltonian)] = 0.0
        return w


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Per-letter law under which codeword coordinates are drawn i.i.d."""

    coding_dist: np.ndarray

    def __eq__(self, other):
        return (isinstance(other, EnsembleSpec)
                and np.array_equal(self.coding_dist, other.coding_dist))

    def __hash__(self):
        return hash(self.coding_dist.tobytes())

    def __post_init__(self):
        m = np.asarray(self.coding_dist, dtype=float)
        if m.ndim != 1 or m.size < 1:
            raise ValueError("coding distribution must be a vector")
        if (m < 0).any() or abs(m.sum() - 1.0) > 1e-9:
            raise ValueError("coding distribution must be a probability vector")
        m = m / m.sum()
        m.setflags(write=False)
        object.__setattr__(self, "coding_dist", m)

    @property
    def size(self) -> int:
        return int(self.coding_dist.size)


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """Source + channel + coding ensemble + bandwidth expansion factor.

    Source and channel share one inverse temperature; lam is the (rational)
    number of channel uses per source symbol.
    """

    source: SourceSpec
    channel: ChannelSpec
    ensemble: EnsembleSpec
    lam: Fraction

    def __eq__(self, other):
        return (isinstance(other, SystemSpec) and self.source == other.source
                and self.channel == other.channel and self.ensemble == other.ensemble
                and self.lam == other.lam)

    def __hash__(self):
        return hash((self.source, self.channel, self.ensemble, self.lam))

    def __post_init__(self):
        lam = Fraction(self.lam)
        if lam <= 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "lam", lam)
        if self.ensemble.size != self.channel.in_size:
            raise ValueError("coding distribution does not match channel inputs")
        if abs(self.source.beta - self.channel.beta) > 1e-12 * max(1.0, self.source.beta):
            raise ValueError("source and channel must share one inverse temperature")

    @property
    def beta(self) -> float:
        return self.source.beta

    @property
    def lambda_value(self) -> float:
        return float(self.lam)

    def retempered(self, beta: float) -> "SystemSpec":
        if beta == self.beta:
            return self
        return SystemSpec(self.source.retempered(beta),
                          self.channel.retempered(beta), self.ensemble, self.lam)

    def block_length(self, num_symbols: int) -> int:
        n = self.lam * num_symbols
        if n.denominator != 1:
            raise ValueError(f"lambda*N = {n} is not an integer")
        return int(n)


def output_marginal(ensemble: EnsembleSpec, channel: ChannelSpec,
                    beta: Optional[float] = None) -> np.ndarray:
    """Law of a channel output fed by one ensemble-distributed letter."""
    if ensemble.size != channel.in_size:
        raise ValueError("dimension mismatch between ensemble and channel")
    q = ensemble.coding_dist @ channel.transition_matrix(beta)
    return q / q.sum()


def _log_m(ensemble: EnsembleSpec) -> np.ndarray:
    m = ensemble.coding_dist
    return np.where(m > 0.0, np.log(np.where(m > 0.0, m, 1.0)), -np.inf)


def _weighted_log_mgf(log_m: np.ndarray, energies: np.ndarray,
                      out_weights: np.ndarray, t: float) -> float:
    """sum_y Q(y) * log sum_x M(x) exp(-t E(x,y)); +inf energies drop out."""
    total = 0.0
    for y in range(energies.shape[1]):
        if out_weights[y] <= 0.0:
            continue
        col = energies[:, y]
        ok = np.isfinite(col) & np.isfinite(log_m)
        if not ok.any():
            raise IncompatibleSupport(f"output {y} has no compatible input letter")
        total += out_weights[y] * float(logsumexp(log_m[ok] - t * col[ok]))
    return total


def _weighted_log_mgf_vec(log_m: np.ndarray, energies: np.ndarray,
                          out_weights: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Vectorised _weighted_log_mgf over an array of tilts."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.zeros(ts.shape)
    for y in range(energies.shape[1]):
        if out_weights[y] <= 0.0:
            continue
        col = energies[:, y]
        ok = np.isfinite(col) & np.isfinite(log_m)
        if not ok.any():
            raise IncompatibleSupport(f"output {y} has no compatible input letter")
        logits = log_m[ok][None, :] - ts[:, None] * col[ok][None, :]
        peak = logits.max(axis=1)
        out += out_weights[y] * (peak + np.log(np.exp(logits - peak[:, None]).sum(axis=1)))
    return out


def _weighted_tilted_mean(log_m: np.ndarray, energies: np.ndarray,
                          out_weights: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Mean energy under the t-tilted ensemble, averaged over outputs."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.zeros(ts.shape)
    for y in range(energies.shape[1]):
        if out_weights[y] <= 0.0:
            continue
        col = energies[:, y]
        ok = np.isfinite(col) & np.isfinite(log_m)
        if not ok.any():
            raise IncompatibleSupport(f"output {y} has no compatible input letter")
        e = col[ok]
        logits = log_m[ok][None, :] - ts[:, None] * e[None, :]
        logits -= logits.max(axis=1, keepdims=True)
        p = np.exp(logits)
        p /= p.sum(axis=1, keepdims=True)
        out += out_weights[y] * (p * e[None, :]).sum(axis=1)
    return out


def _energy_extremes(log_m: np.ndarray, energies: np.ndarray, out_weights: np.ndarray):
    """Q-averaged min/max achievable energy and the log mass attaining them."""
    lo = hi = 0.0
    lo_mass = hi_mass = 0.0
    for y in range(energies.shape[1]):
        if out_weights[y] <= 0.0:
            continue
        col = energies[:, y]
        ok = np.isfinite(col) & np.isfinite(log_m)
        if not ok.any():
            raise IncompatibleSupport(f"output {y} has no compatible input letter")
        e = col[ok]
        w = log_m[ok]
        e_lo, e_hi = float(e.min()), float(e.max())
        lo += out_weights[y] * e_lo
        hi += out_weights[y] * e_hi
        lo_mass += out_weights[y] * float(logsumexp(w[e <= e_lo + _DEGENERATE_SPAN]))
        hi_mass += out_weights[y] * float(logsumexp(w[e >= e_hi - _DEGENERATE_SPAN]))
    return lo, hi, lo_mass, hi_mass


class PhiPoint(NamedTuple):
    value: float
    slope: float


class _RateGeometry(NamedTuple):
    log_m: np.ndarray
    energies: np.ndarray
    out_weights: np.ndarray
    eps_lo: float
    eps_hi: float
    lo_mass: float
    hi_mass: float


def _rate_geometry(log_m, energies, out_weights) -> _RateGeometry:
    lo, hi, lo_mass, hi_mass = _energy_extremes(log_m, energies, out_weights)
    return _RateGeometry(log_m, energies, out_weights, lo, hi, lo_mass, hi_mass)


def _rate_function_at(geom: _RateGeometry, epsilon: float) -> PhiPoint:
    """phi(eps) = inf_t [zeta(t) + eps*t] with the minimising tilt as slope."""
    span = geom.eps_hi - geom.eps_lo
    slack = _DEGENERATE_SPAN * max(1.0, abs(geom.eps_hi), abs(geom.eps_lo))
    if span < _DEGENERATE_SPAN:
        if abs(epsilon - geom.eps_lo) <= max(slack, 1e-9):
            return PhiPoint(_weighted_log_mgf(geom.log_m, geom.energies,
                                              geom.out_weights, 0.0), 0.0)
        return PhiPoint(NEG_INF, math.nan)
    if epsilon < geom.eps_lo - slack or epsilon > geom.eps_hi + slack:
        return PhiPoint(NEG_INF, math.nan)
    if epsilon <= geom.eps_lo + slack:
        return PhiPoint(geom.lo_mass, math.inf)
    if epsilon >= geom.eps_hi - slack:
        return PhiPoint(geom.hi_mass, -math.inf)
    lo_t, hi_t = -_SLOPE_CAP, _SLOPE_CAP
    for _ in range(200):
        mid = 0.5 * (lo_t + hi_t)
        mean = float(_weighted_tilted_mean(geom.log_m, geom.energies,
                                           geom.out_weights, np.array([mid]))[0])
        if mean > epsilon:
            lo_t = mid
        else:
            hi_t = mid
        if hi_t - lo_t <= 1e-13 * max(1.0, abs(lo_t) + abs(hi_t)):
            break
    t = 0.5 * (lo_t + hi_t)
    return PhiPoint(_weighted_log_mgf(geom.log_m, geom.energies,
                                      geom.out_weights, t) + epsilon * t, t)


def _rate_function_table(geom: _RateGeometry, x_min: float, x_max: float,
                         grid_size: int) -> ConcaveFunction:
    if x_max - x_min < _DEGENERATE_SPAN:
        vals = np.full(grid_size, NEG_INF)
        vals[0] = _rate_function_at(geom, geom.eps_lo).value
        return ConcaveFunction(TabulatedFunction(x_min, x_min + 1.0, vals))
    grid = np.linspace(x_min, x_max, grid_size)
    vals = np.full(grid_size, NEG_INF)
    inside = (grid >= geom.eps_lo - _DEGENERATE_SPAN) & (grid <= geom.eps_hi + _DEGENERATE_SPAN)
    idx = np.flatnonzero(inside)
    if idx.size == 0:
        # reachable interval thinner than one grid cell
        k = int(np.argmin(np.abs(grid - 0.5 * (geom.eps_lo + geom.eps_hi))))
        idx = np.array([k])
    interior = []
    for k in idx:
        eps = grid[k]
        slack = _DEGENERATE_SPAN * max(1.0, abs(geom.eps_hi))
        if eps <= geom.eps_lo + slack:
            vals[k] = geom.lo_mass
        elif eps >= geom.eps_hi - slack:
            vals[k] = geom.hi_mass
        else:
            interior.append(k)
    if interior:
        interior = np.asarray(interior)
        ts = _tilt_vector(geom, grid[interior])
        vals[interior] = _weighted_log_mgf_vec(geom.log_m, geom.energies,
                                               geom.out_weights, ts) + grid[interior] * ts
    return ConcaveFunction(TabulatedFunction(x_min, x_max, vals))


def _tilt_vector(geom: _RateGeometry, targets: np.ndarray) -> np.ndarray:
    lo = np.full(targets.shape, -_SLOPE_CAP)
    hi = np.full(targets.shape, _SLOPE_CAP)
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        mean = _weighted_tilted_mean(geom.log_m, geom.energies, geom.out_weights, mid)
        too_high = mean > targets
        lo = np.where(too_high, mid, lo)
        hi = np.where(too_high, hi, mid)
    return 0.5 * (lo + hi)


def _system_geometry(system: SystemSpec, beta: Optional[float] = None) -> _RateGeometry:
    sys2 = system if beta is None else system.retempered(beta)
    q = output_marginal(sys2.ensemble, sys2.channel)
    return _rate_geometry(_log_m(sys2.ensemble), sys2.channel.hamiltonian, q)


def zeta(system: SystemSpec, t: float) -> float:
    """Output-averaged per-letter log MGF of the channel energy under M."""
    geom = _system_geometry(system)
    return _weighted_log_mgf(geom.log_m, geom.energies, geom.out_weights, t)


def zeta_prime_neg(system: SystemSpec, beta: Optional[float] = None) -> float:
    """-d zeta/dt at t = beta: the dominant per-letter channel energy."""
    b = system.beta if beta is None else beta
    geom = _system_geometry(system)
    return float(_weighted_tilted_mean(geom.log_m, geom.energies,
                                       geom.out_weights, np.array([b]))[0])


def channel_phi_at(system: SystemSpec, epsilon: float) -> PhiPoint:
    """Rate function of the channel energy against a typical output, at eps."""
    return _rate_function_at(_system_geometry(system), epsilon)


def channel_phi(system: SystemSpec,
                grid_size: int = DEFAULT_GRID_SIZE) -> ConcaveFunction:
    """Tabulated rate function over the finite channel energy range.

    phi <= 0 everywhere, with maximum 0 at the unconstrained mean energy;
    energies unreachable under the ensemble get NEG_INF.
    """
    geom = _system_geometry(system)
    e = system.channel.hamiltonian
    e_max = float(e[np.isfinite(e)].max())
    return _rate_function_table(geom, 0.0, e_max, grid_size)


def channel_energy_range(system: SystemSpec):
    """(eps_lo, eps_hi) achievable per-letter channel energies under M."""
    geom = _system_geometry(system)
    return geom.eps_lo, geom.eps_hi


# ---------------------------------------------------------------------------
# JSON ingestion


def _require(obj: dict, field: str, context: str = ""):
    path = f"{context}.{field}" if context else field
    if not isinstance(obj, dict) or field not in obj:
        raise SpecError(path, "missing")
    return obj[field]


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(path, "expected a number")
    return float(value)


def parse_lambda(obj: dict, context: str = "") -> Fraction:
    raw = _require(obj, "lambda", context)
    path = f"{context}.lambda" if context else "lambda"
    if not isinstance(raw, dict):
        raise SpecError(path, "expected {num, den}")
    num = _require(raw, "num", path)
    den = _require(raw, "den", path)
    if not isinstance(num, int) or not isinstance(den, int) or isinstance(num, bool):
        raise SpecError(path, "num and den must be integers")
    if den <= 0 or num <= 0:
        raise SpecError(path, "lambda must be positive")
    return Fraction(num, den)


def source_from_dict(obj: dict, context: str = "") -> SourceSpec:
    if "source" in obj:
        block = obj["source"]
        path = f"{context}.source" if context else "source"
        ham = _require(block, "hamiltonian", path)
        beta = _as_number(_require(block, "beta", path), f"{path}.beta")
        try:
            return SourceSpec(np.asarray(ham, dtype=float), beta)
        except (ValueError, TypeError) as exc:
            raise SpecError(path, str(exc)) from exc
    if "binary_source" in obj:
        block = obj["binary_source"]
        path = f"{context}.binary_source" if context else "binary_source"
        q = _as_number(_require(block, "q", path), f"{path}.q")
        k_t = _as_number(block.get("kT", 1.0), f"{path}.kT")
        if not 0.0 < q < 1.0:
            raise SpecError(f"{path}.q", "must lie in (0, 1)")
        try:
            b = field_from_bias(q, k_t)
        except (OutOfRange, InvalidTemperature) as exc:
            raise SpecError(path, str(exc)) from exc
        # symbols (0, 1) carry spin (-1, +1); energies -spin*B, shifted to min 0
        return SourceSpec(np.array([b, -b]), 1.0 / k_t)
    raise SpecError(f"{context}.source" if context else "source", "missing")


def channel_from_dict(obj: dict, context: str = "") -> ChannelSpec:
    if "channel" in obj:
        block = obj["channel"]
        path = f"{context}.channel" if context else "channel"
        ham = _require(block, "hamiltonian", path)
        beta = _as_number(_require(block, "beta", path), f"{path}.beta")
        try:
            rows = [[math.inf if isinstance(v, str) and v == "inf" else float(v)
                     for v in row] for row in ham]
            return ChannelSpec(np.asarray(rows, dtype=float), beta)
        except (ValueError, TypeError) as exc:
            raise SpecError(path, str(exc)) from exc
    if "bsc" in obj:
        block = obj["bsc"]
        path = f"{context}.bsc" if context else "bsc"
        p = _as_number(_require(block, "p", path), f"{path}.p")
        k_t = _as_number(block.get("kT", 1.0), f"{path}.kT")
        if not 0.0 < p < 1.0:
            raise SpecError(f"{path}.p", "must lie in (0, 1)")
        if p == 0.5:
            e0 = 0.0
        else:
            e0 = energy_from_crossover(p, k_t)
        ham = np.array([[0.0, e0], [e0, 0.0]])
        return ChannelSpec(ham, 1.0 / k_t)
    raise SpecError(f"{context}.channel" if context else "channel", "missing")


def ensemble_from_dict(obj: dict, in_size: int, context: str = "") -> EnsembleSpec:
    if "ensemble" in obj:
        block = obj["ensemble"]
        path = f"{context}.ensemble" if context else "ensemble"
        m = _require(block, "m", path)
        try:
            return EnsembleSpec(np.asarray(m, dtype=float))
        except (ValueError, TypeError) as exc:
            raise SpecError(f"{path}.m", str(exc)) from exc
    return EnsembleSpec(np.full(in_size, 1.0 / in_size))


def system_from_dict(obj: dict) -> SystemSpec:
    """Build a SystemSpec from the JSON schema (see schema/systemspec.json)."""
    if not isinstance(obj, dict):
        raise SpecError("", "top level must be an object")
    source = source_from_dict(obj)
    channel = channel_from_dict(obj)
    ensemble = ensemble_from_dict(obj, channel.in_size)
    lam = parse_lambda(obj)
    try:
        return SystemSpec(source, channel, ensemble, lam)
    except ValueError as exc:
        raise SpecError("system", str(exc)) from exc


def load_system(path: str) -> SystemSpec:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError("json", str(exc)) from exc
    return system_from_dict(obj)
