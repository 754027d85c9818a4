"""Finite-size ground truth for randomly drawn joint source-channel codes.

Codebooks are drawn with a counter-based generator (Philox), one stream per
codeword index, so the same (system, N, seed) always rebuilds the same code
on any platform and under any parallel schedule.  Mutual information and
posterior statistics are computed by exhaustive enumeration over messages and
channel outputs, or by seeded Monte Carlo when enumeration is out of budget.
All partition arithmetic runs in log space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.random import Philox
from scipy.special import logsumexp

from .errors import ImpossibleOutput, TooLarge
from .models import SystemSpec, source_shannon_entropy
from .tabulated import NEG_INF

DEFAULT_ENUM_BUDGET = 1 << 26   # (message, output) pairs
_CHUNK_CELLS = 1 << 22          # matrix cells processed per chunk
_MC_STREAM_BASE = 1 << 63       # Monte Carlo streams live above codeword streams


def derive_seed(base: int, index: int) -> int:
    """Documented 64-bit stream split: splitmix64 of base + index*golden."""
    x = (base + index * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    return x ^ (x >> 31)


def _uniforms(key_hi: int, key_lo: int, count: int) -> np.ndarray:
    """53-bit uniforms from the Philox stream keyed by (key_hi, key_lo)."""
    bits = Philox(key=np.array([key_lo & 0xFFFFFFFFFFFFFFFF,
                                key_hi & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    raw = bits.random_raw(count)
    return (raw >> np.uint64(11)) * (2.0 ** -53)


def _sample_letters(cumulative: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    return np.searchsorted(cumulative, uniforms, side="right").astype(np.int64)


def message_digits(alphabet: int, length: int, index: int) -> np.ndarray:
    """Most-significant-first base-`alphabet` digits of a message index."""
    digits = np.empty(length, dtype=np.int64)
    for i in range(length - 1, -1, -1):
        digits[i] = index % alphabet
        index //= alphabet
    return digits


@dataclass(frozen=True)
class CodeInstance:
    """A concrete random codebook s -> x(s), fully determined by its seed."""

    system: SystemSpec
    N: int
    n: int
    seed: int
    codebook: np.ndarray   # shape (|S|^N, n), channel-input letters

    def __post_init__(self):
        book = np.asarray(self.codebook, dtype=np.int64)
        book.setflags(write=False)
        object.__setattr__(self, "codebook", book)

    @property
    def num_messages(self) -> int:
        return int(self.codebook.shape[0])


@dataclass(frozen=True)
class OracleReport:
    """Exact or Monte-Carlo information quantities, per source symbol."""

    h_s: float
    h_s_given_y: float
    mi_per_symbol: float
    stderr: float
    energy_split_source: float
    energy_split_channel: float
    z_c_fraction: float


@dataclass(frozen=True)
class AggregateReport:
    """Across-codebook mean and variance of the oracle quantities."""

    num_seeds: int
    mi_mean: float
    mi_var: float
    h_s_given_y_mean: float
    energy_split_source_mean: float
    energy_split_channel_mean: float
    z_c_fraction_mean: float
    degenerate: bool


def draw_code(system: SystemSpec, N: int, seed: int,
              budget: Optional[int] = None) -> CodeInstance:
    """Draw the i.i.d. codebook deterministically from (system, N, seed)."""
    budget = DEFAULT_ENUM_BUDGET if budget is None else budget
    n = system.block_length(N)
    num = system.source.alphabet_size ** N
    if num * n > budget:
        raise TooLarge(f"codebook table {num}x{n} exceeds budget {budget}")
    cum = np.cumsum(system.ensemble.coding_dist)
    cum[-1] = 1.0
    book = np.empty((num, n), dtype=np.int64)
    for msg in range(num):
        book[msg] = _sample_letters(cum, _uniforms(seed, msg, n))
    return CodeInstance(system, N, n, seed, book)


def _source_digit_table(code: CodeInstance) -> np.ndarray:
    """Digits of every message, shape (num_messages, N)."""
    k = code.system.source.alphabet_size
    idx = np.arange(code.num_messages)
    digits = np.empty((code.num_messages, code.N), dtype=np.int64)
    for i in range(code.N - 1, -1, -1):
        digits[:, i] = idx % k
        idx = idx // k
    return digits


def _message_log_prior(code: CodeInstance) -> np.ndarray:
    src = code.system.source
    logp = np.log(src.probabilities())
    return logp[_source_digit_table(code)].sum(axis=1)


def _message_source_energy(code: CodeInstance) -> np.ndarray:
    src = code.system.source
    return src.hamiltonian[_source_digit_table(code)].sum(axis=1)


def _log_w(code: CodeInstance) -> np.ndarray:
    w = code.system.channel.transition_matrix()
    return np.where(w > 0.0, np.log(np.where(w > 0.0, w, 1.0)), -np.inf)


def _boltzmann_energies(code: CodeInstance, y: np.ndarray) -> np.ndarray:
    """E_S(s) + E_C(x(s), y) for every message, +inf where forbidden."""
    e_c = code.system.channel.hamiltonian
    chan = e_c[code.codebook, y[None, :]].sum(axis=1)
    return _message_source_energy(code) + chan


def _check_output(code: CodeInstance, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    if y.shape != (code.n,):
        raise ValueError(f"output must have length n={code.n}")
    if (y < 0).any() or (y >= code.system.channel.out_size).any():
        raise ValueError("output symbol out of range")
    return y


def posterior(code: CodeInstance, y) -> np.ndarray:
    """Exact posterior over all messages given the output block y."""
    y = _check_output(code, y)
    log_w = _log_w(code)
    loglik = log_w[code.codebook, y[None, :]].sum(axis=1)
    logits = _message_log_prior(code) + loglik
    norm = float(logsumexp(logits))
    if not math.isfinite(norm):
        raise ImpossibleOutput("output has zero likelihood under every message")
    return np.exp(logits - norm)


def boltzmann_log_partition(code: CodeInstance, y) -> float:
    """log sum over messages of exp(-beta * [E_S(s) + E_C(x(s), y)])."""
    y = _check_output(code, y)
    energies = _boltzmann_energies(code, y)
    finite = np.isfinite(energies)
    if not finite.any():
        return NEG_INF
    return float(logsumexp(-code.system.beta * energies[finite]))


def partition_split(code: CodeInstance, s0, y) -> Tuple[float, float]:
    """(log Z_c, log Z_e): the true message's Boltzmann term and the rest.

    s0 may be a message index or a digit string of length N.
    """
    y = _check_output(code, y)
    if np.isscalar(s0):
        idx = int(s0)
    else:
        s0 = np.asarray(s0, dtype=np.int64)
        k = code.system.source.alphabet_size
        idx = 0
        for d in s0:
            idx = idx * k + int(d)
    energies = _boltzmann_energies(code, y)
    b = code.system.beta
    log_zc = float(-b * energies[idx]) if math.isfinite(energies[idx]) else NEG_INF
    others = np.delete(energies, idx)
    finite = np.isfinite(others)
    log_ze = float(logsumexp(-b * others[finite])) if finite.any() else NEG_INF
    return log_zc, log_ze


def posterior_energy_split(code: CodeInstance, y) -> Tuple[float, float]:
    """Posterior-mean per-particle source and channel energies given y."""
    y = _check_output(code, y)
    post = posterior(code, y)
    e_src = _message_source_energy(code)
    e_chn = code.system.channel.hamiltonian[code.codebook, y[None, :]].sum(axis=1)
    ok = post > 0.0
    return (float(np.dot(post[ok], e_src[ok])) / code.N,
            float(np.dot(post[ok], e_chn[ok])) / code.n)


def _output_cascade(values: np.ndarray, per_letter: np.ndarray,
                    letters: np.ndarray) -> np.ndarray:
    """Accumulate per_letter[letters[:, i], y_i] over all output blocks.

    values has shape (chunk, 1); the result has shape (chunk, |Y|^n) with
    output blocks enumerated most-significant-digit first.
    """
    for i in range(letters.shape[1]):
        step = per_letter[letters[:, i]]
        values = (values[:, :, None] + step[:, None, :]).reshape(values.shape[0], -1)
    return values


def _logsumexp_rows(arr: np.ndarray) -> np.ndarray:
    """logsumexp over axis 0, tolerating all-NEG_INF columns."""
    peak = arr.max(axis=0)
    ok = np.isfinite(peak)
    if ok.all():
        return peak + np.log(np.exp(arr - peak[None, :]).sum(axis=0))
    out = np.full(arr.shape[1], NEG_INF)
    if ok.any():
        with np.errstate(invalid="ignore"):
            shifted = np.exp(arr[:, ok] - peak[ok][None, :])
        out[ok] = peak[ok] + np.log(shifted.sum(axis=0))
    return out


def exact_mi(code: CodeInstance, budget: Optional[int] = None) -> OracleReport:
    """Mutual information and posterior statistics by full enumeration."""
    budget = DEFAULT_ENUM_BUDGET if budget is None else budget
    out_size = code.system.channel.out_size
    num_y = out_size ** code.n
    num_s = code.num_messages
    if num_s * num_y > budget:
        raise TooLarge(f"enumeration {num_s}x{num_y} exceeds budget {budget}; use mc_mi")

    log_w = _log_w(code)
    log_prior = _message_log_prior(code)
    chunk = max(1, _CHUNK_CELLS // num_y)
    keep = num_s * num_y <= (1 << 24)   # reuse pass-1 blocks when they fit

    # pass 1: output marginal
    log_py = np.full(num_y, NEG_INF)
    blocks = []
    for a in range(0, num_s, chunk):
        letters = code.codebook[a:a + chunk]
        joint = _output_cascade(log_prior[a:a + chunk, None], log_w, letters)
        log_py = np.logaddexp(log_py, _logsumexp_rows(joint))
        if keep:
            blocks.append(joint)
    py_mask = np.isfinite(log_py)
    h_y = float(-np.sum(np.exp(log_py[py_mask]) * log_py[py_mask]))

    # pass 2: mean log-joint (for H(S|Y)) and the truth-mass of the posterior
    mean_log_joint = 0.0
    z_c_fraction = 0.0
    for i, a in enumerate(range(0, num_s, chunk)):
        if keep:
            joint = blocks[i]
        else:
            letters = code.codebook[a:a + chunk]
            joint = _output_cascade(log_prior[a:a + chunk, None], log_w, letters)
        p_joint = np.exp(joint)
        nonzero = p_joint > 0.0
        with np.errstate(invalid="ignore"):
            mean_log_joint += float(np.where(nonzero, p_joint * joint, 0.0).sum())
            z_c_fraction += float(
                np.where(nonzero, np.exp(2.0 * joint - log_py[None, :]), 0.0).sum())
    # H(S|Y) = -E[ln P(S,Y)] - H(Y), both taken under the exact joint
    h_s_given_y_total = -mean_log_joint - h_y

    # posterior-mean channel energy: under the exact joint the posterior
    # average over outputs collapses to the transmitted pair's mean, which is
    # a per-coordinate sum for a memoryless channel
    e_c = code.system.channel.hamiltonian
    w = code.system.channel.transition_matrix()
    row_mean_energy = np.sum(np.where(w > 0.0, w * np.where(np.isfinite(e_c), e_c, 0.0), 0.0), axis=1)
    prior = np.exp(log_prior)
    chan_energy = float(np.dot(prior, row_mean_energy[code.codebook].sum(axis=1)))

    # conditional output entropy is a per-letter sum under memorylessness
    letter_entropy = -np.sum(np.where(w > 0.0, w * np.log(np.where(w > 0.0, w, 1.0)), 0.0), axis=1)
    h_y_given_s = float(np.dot(prior, letter_entropy[code.codebook].sum(axis=1)))

    h_s = source_shannon_entropy(code.system.source)
    src_energy = float(np.dot(prior, _message_source_energy(code)))
    return OracleReport(
        h_s=h_s,
        h_s_given_y=h_s_given_y_total / code.N,
        mi_per_symbol=(h_y - h_y_given_s) / code.N,
        stderr=0.0,
        energy_split_source=src_energy / code.N,
        energy_split_channel=chan_energy / code.n,
        z_c_fraction=z_c_fraction,
    )


def mc_mi(code: CodeInstance, trials: int, seed: int) -> OracleReport:
    """Monte Carlo estimate of the exact_mi quantities.

    Each trial draws (s0, y) from the true joint law on its own counter
    stream and scores -ln posterior(s0 | y), an unbiased sample of the total
    conditional entropy.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    src = code.system.source
    cum_src = np.cumsum(src.probabilities())
    cum_src[-1] = 1.0
    w = code.system.channel.transition_matrix()
    cum_w = np.cumsum(w, axis=1)
    cum_w[:, -1] = 1.0
    log_w = _log_w(code)
    log_prior = _message_log_prior(code)
    e_src = _message_source_energy(code)
    e_c = code.system.channel.hamiltonian

    k = src.alphabet_size
    powers = k ** np.arange(code.N - 1, -1, -1, dtype=np.int64)
    samples = np.empty(trials)
    split_src = np.empty(trials)
    split_chn = np.empty(trials)
    truth_mass = np.empty(trials)
    for t in range(trials):
        u = _uniforms(seed, _MC_STREAM_BASE + t, code.N + code.n)
        s_digits = _sample_letters(cum_src, u[:code.N])
        idx = int(np.dot(s_digits, powers))
        x = code.codebook[idx]
        y = np.array([_sample_letters(cum_w[x[i]], u[code.N + i:code.N + i + 1])[0]
                      for i in range(code.n)], dtype=np.int64)
        loglik = log_w[code.codebook, y[None, :]].sum(axis=1)
        logits = log_prior + loglik
        norm = float(logsumexp(logits))
        samples[t] = norm - float(logits[idx])
        post = np.exp(logits - norm)
        truth_mass[t] = post[idx]
        ok = post > 0.0
        split_src[t] = float(np.dot(post[ok], e_src[ok]))
        e_chn = e_c[code.codebook, y[None, :]].sum(axis=1)
        split_chn[t] = float(np.dot(post[ok], e_chn[ok]))

    h_s = source_shannon_entropy(src)
    h_sy = float(samples.mean()) / code.N
    stderr = float(samples.std(ddof=1)) / math.sqrt(trials) / code.N
    return OracleReport(
        h_s=h_s,
        h_s_given_y=h_sy,
        mi_per_symbol=h_s - h_sy,
        stderr=stderr,
        energy_split_source=float(split_src.mean()) / code.N,
        energy_split_channel=float(split_chn.mean()) / code.n,
        z_c_fraction=float(truth_mass.mean()),
    )


def ensemble_stats(system: SystemSpec, N: int, num_seeds: int, base_seed: int,
                   budget: Optional[int] = None) -> AggregateReport:
    """Mean and variance of exact_mi across independently drawn codebooks."""
    if num_seeds < 1:
        raise ValueError("need at least one seed")
    reports = [exact_mi(draw_code(system, N, derive_seed(base_seed, k)), budget)
               for k in range(num_seeds)]
    mi = np.array([r.mi_per_symbol for r in reports])
    return AggregateReport(
        num_seeds=num_seeds,
        mi_mean=float(mi.mean()),
        mi_var=float(mi.var(ddof=1)) if num_seeds > 1 else 0.0,
        h_s_given_y_mean=float(np.mean([r.h_s_given_y for r in reports])),
        energy_split_source_mean=float(np.mean([r.energy_split_source for r in reports])),
        energy_split_channel_mean=float(np.mean([r.energy_split_channel for r in reports])),
        z_c_fraction_mean=float(np.mean([r.z_c_fraction for r in reports])),
        degenerate=num_seeds == 1,
    )
