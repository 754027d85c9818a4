"""Full-system analysis: combined entropy, phase, and mutual information rate.

The combined entropy curve is the weighted supremal convolution of the source
entropy with the channel rate function, enveloped and clipped at zero.  Its
argmax against beta*eps gives the dominant energy; comparing the correct-
codeword exponent with that supremum classifies the phase; the paramagnetic
mutual information rate is -lambda * phi(-zeta'(beta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateFunction, PhaseMismatch
from .models import (
    SystemSpec,
    _rate_function_at,
    _system_geometry,
    channel_phi,
    source_entropy_at,
    source_entropy_function,
    source_shannon_entropy,
    zeta_prime_neg,
)
from .tabulated import (
    DEFAULT_GRID_SIZE,
    NEG_INF,
    ConcaveFunction,
    TabulatedFunction,
    clip_nonnegative,
    concave_envelope,
    weighted_sup_convolution,
)

TOL_ZERO = 1e-6    # combined entropy below this at the argmax means frozen
TOL_PHASE = 1e-7   # slack in the correct-codeword dominance comparison


class Phase(str, Enum):
    ORDERED = "Ordered"
    PARAMAGNETIC = "Paramagnetic"
    GLASSY = "Glassy"


@dataclass(frozen=True)
class PhaseReport:
    """Phase label with the dominant energy split and information rates."""

    phase: Phase
    epsilon0: float
    epsilon_star: float
    channel_share: float
    mi_rate: float
    source_entropy: float
    sigma_at_eps0: float


class DominantEnergy(NamedTuple):
    epsilon0: float
    psi: float


def _convolution_objective(sigma_s, phi_tab, lam, totals, idx):
    """Objective of the supremal convolution at source grid indices idx.

    totals has shape (G,), idx shape (G, width); returns (G, width) values.
    """
    w = 1.0 / (1.0 + lam)
    eps_p = sigma_s.x_min + idx * sigma_s.step
    args = (totals[:, None] - eps_p) / lam
    s_vals = sigma_s.values[idx]
    phi_vals = phi_tab.values_at(args.ravel()).reshape(args.shape)
    return np.where(np.isfinite(s_vals) & np.isfinite(phi_vals),
                    w * s_vals + (lam * w) * phi_vals, NEG_INF)


def _convolution_table(sigma_s: ConcaveFunction, phi: ConcaveFunction,
                       lam: float, grid_size: int) -> TabulatedFunction:
    """Raw combined entropy on a uniform total-energy grid.

    For each total energy the objective over the source-energy grid is
    concave with a contiguous feasible interval, so a coarse scan plus a
    one-stride refinement finds the exact grid argmax (smallest-index ties
    included).
    """
    s_span = sigma_s.support_range()
    p_span = phi.support_range()
    if s_span is None or p_span is None:
        raise DegenerateFunction("source or channel entropy has empty support")
    lo = (s_span[0] + lam * p_span[0]) / (1.0 + lam)
    hi = (s_span[1] + lam * p_span[1]) / (1.0 + lam)
    if hi - lo < 1e-12:
        vals = np.full(grid_size, NEG_INF)
        vals[0] = weighted_sup_convolution(sigma_s, phi, lam, lo).value
        return TabulatedFunction(lo, lo + 1.0, vals)
    grid = np.linspace(lo, hi, grid_size)
    totals = (1.0 + lam) * grid
    phi_tab = phi.base if isinstance(phi, ConcaveFunction) else phi
    h = sigma_s.step
    s_first, s_last = sigma_s.support_indices()

    # feasible source-index interval per total energy
    lo_eps = np.maximum.reduce([np.full(grid_size, sigma_s.x_min + s_first * h),
                                totals - lam * p_span[1],
                                np.zeros(grid_size)])
    hi_eps = np.minimum.reduce([np.full(grid_size, sigma_s.x_min + s_last * h),
                                totals - lam * p_span[0],
                                totals])
    a_idx = np.ceil((lo_eps - sigma_s.x_min) / h - 1e-9).astype(int)
    b_idx = np.floor((hi_eps - sigma_s.x_min) / h + 1e-9).astype(int)
    a_idx = np.clip(a_idx, s_first, s_last)
    b_idx = np.clip(b_idx, s_first, s_last)
    empty = a_idx > b_idx

    coarse = 128
    j = np.arange(coarse + 1)
    span = (b_idx - a_idx).astype(float)
    coarse_idx = a_idx[:, None] + np.round(j[None, :] * span[:, None] / coarse).astype(int)
    coarse_idx = np.clip(coarse_idx, s_first, s_last)
    obj = _convolution_objective(sigma_s, phi_tab, lam, totals, coarse_idx)
    best = coarse_idx[np.arange(grid_size), np.argmax(obj, axis=1)]

    stride = np.maximum(np.ceil(span / coarse).astype(int), 1)
    width = int(stride.max()) * 2 + 5
    offsets = np.arange(width) - (width // 2)
    fine_idx = np.clip(best[:, None] + offsets[None, :], a_idx[:, None], b_idx[:, None])
    obj = _convolution_objective(sigma_s, phi_tab, lam, totals, fine_idx)
    pick = np.argmax(obj, axis=1)
    vals = obj[np.arange(grid_size), pick]
    vals[empty] = NEG_INF
    return TabulatedFunction(lo, hi, vals)


class _EntropyCurves(NamedTuple):
    sigma_s: ConcaveFunction     # source microcanonical entropy
    phi: ConcaveFunction         # channel-energy rate function
    raw: TabulatedFunction       # enveloped combined entropy before clipping
    clipped: TabulatedFunction   # the typical-code entropy (negative -> NEG_INF)


@lru_cache(maxsize=32)
def _combined_entropy(system: SystemSpec, grid_size: int) -> _EntropyCurves:
    sigma_s = source_entropy_function(system.source, grid_size)
    phi = channel_phi(system, grid_size)
    conv = _convolution_table(sigma_s, phi, system.lambda_value, grid_size)
    try:
        raw = concave_envelope(conv).base
    except DegenerateFunction:
        # fewer than 3 finite points: nothing to envelope
        raw = conv
    return _EntropyCurves(sigma_s, phi, raw, clip_nonnegative(raw))


def total_entropy(system: SystemSpec, beta: Optional[float] = None,
                  grid_size: int = DEFAULT_GRID_SIZE) -> TabulatedFunction:
    """Typical-code combined entropy over the total per-particle energy."""
    sys2 = system if beta is None else system.retempered(beta)
    return _combined_entropy(sys2, grid_size).clipped


def dominant_energy(system: SystemSpec, beta: Optional[float] = None,
                    grid_size: int = DEFAULT_GRID_SIZE,
                    sigma: Optional[TabulatedFunction] = None) -> DominantEnergy:
    """Grid argmax of Sigma(eps) - beta*eps, ties toward the smallest eps."""
    sys2 = system if beta is None else system.retempered(beta)
    b = sys2.beta
    if sigma is None:
        sigma = total_entropy(sys2, grid_size=grid_size)
    mask = sigma.finite_mask
    if not mask.any():
        return DominantEnergy(math.nan, NEG_INF)
    obj = np.where(mask, sigma.values - b * sigma.grid, NEG_INF)
    k = int(np.argmax(obj))
    return DominantEnergy(float(sigma.x_min + k * sigma.step), float(obj[k]))


def analyze(system: SystemSpec, beta: Optional[float] = None,
            grid_size: int = DEFAULT_GRID_SIZE) -> PhaseReport:
    """Classify the phase and assemble the full report at one temperature."""
    sys2 = system if beta is None else system.retempered(beta)
    b = sys2.beta
    lam = sys2.lambda_value
    h_source = source_shannon_entropy(sys2.source)
    eps_source = sys2.source.mean_energy()
    eps_channel = zeta_prime_neg(sys2)
    z_c_rate = -b * (eps_source + lam * eps_channel) / (1.0 + lam)

    curves = _combined_entropy(sys2, grid_size)
    sigma = curves.clipped
    mask = sigma.finite_mask
    if mask.any():
        obj = np.where(mask, sigma.values - b * sigma.grid, NEG_INF)
        k = int(np.argmax(obj))
        eps0_grid = float(sigma.x_min + k * sigma.step)
        psi = float(obj[k])
        sigma_at = float(sigma.values[k])
    else:
        k = -1
        eps0_grid = math.nan
        psi = NEG_INF
        sigma_at = NEG_INF

    if z_c_rate >= psi - TOL_PHASE:
        # the transmitted message dominates the posterior
        eps0 = (eps_source + lam * eps_channel) / (1.0 + lam)
        return PhaseReport(Phase.ORDERED, eps0, eps_source, eps_channel,
                           h_source, h_source, sigma.values_at(eps0))

    finite_idx = np.flatnonzero(mask)
    first, last = int(finite_idx[0]), int(finite_idx[-1])
    clipped_edge = False
    if k == first and k > 0 and np.isfinite(curves.raw.values[k - 1]) \
            and curves.raw.values[k - 1] < 0.0:
        clipped_edge = True
    if k == last and k < sigma.size - 1 and np.isfinite(curves.raw.values[k + 1]) \
            and curves.raw.values[k + 1] < 0.0:
        clipped_edge = True

    if sigma_at <= TOL_ZERO or clipped_edge:
        # subexponentially many configurations dominate: frozen
        split = weighted_sup_convolution(curves.sigma_s, curves.phi, lam, eps0_grid)
        eps_star = split.epsilon_source if math.isfinite(split.epsilon_source) else eps_source
        share = ((1.0 + lam) * eps0_grid - eps_star) / lam
        return PhaseReport(Phase.GLASSY, eps0_grid, eps_star, share,
                           h_source, h_source, sigma_at)

    mi = -lam * _rate_function_at(_system_geometry(sys2), eps_channel).value
    mi = min(max(mi, 0.0), h_source) + 0.0   # +0.0 normalizes a signed zero
    return PhaseReport(Phase.PARAMAGNETIC, eps0_grid, eps_source, eps_channel,
                       mi, h_source, sigma_at)


def classify_phase(system: SystemSpec, beta: Optional[float] = None,
                   grid_size: int = DEFAULT_GRID_SIZE) -> Phase:
    return analyze(system, beta, grid_size).phase


def mutual_information_rate(system: SystemSpec, beta: Optional[float] = None,
                            grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Nats of mutual information per source symbol for the typical code."""
    return analyze(system, beta, grid_size).mi_rate


def energy_split(system: SystemSpec, beta: Optional[float] = None,
                 grid_size: int = DEFAULT_GRID_SIZE):
    """(eps_star, channel_share) of the dominant posterior configurations."""
    report = analyze(system, beta, grid_size)
    if report.phase is not Phase.PARAMAGNETIC:
        raise PhaseMismatch(f"energy split defined in the paramagnetic phase, got {report.phase.value}")
    sys2 = system if beta is None else system.retempered(beta)
    lam = sys2.lambda_value
    sigma = total_entropy(sys2, grid_size=grid_size)
    gap = abs((1.0 + lam) * report.epsilon0
              - (report.epsilon_star + lam * report.channel_share))
    if gap > 3.0 * (1.0 + lam) * sigma.step:
        raise RuntimeError(f"energy split inconsistent with the dominant energy (gap {gap:.3g})")
    return report.epsilon_star, report.channel_share


def mi_rate_alternative(system: SystemSpec, beta: Optional[float] = None,
                        grid_size: int = DEFAULT_GRID_SIZE) -> float:
    """Mutual information via the log-likelihood chain,
    beta*eps* + psi_S - Sigma_S(eps*) - lam*phi(share), an independent route
    that must agree with mutual_information_rate up to grid resolution.
    """
    sys2 = system if beta is None else system.retempered(beta)
    report = analyze(sys2, grid_size=grid_size)
    if report.phase is not Phase.PARAMAGNETIC:
        raise PhaseMismatch(f"alternative rate defined in the paramagnetic phase, got {report.phase.value}")
    b = sys2.beta
    lam = sys2.lambda_value
    eps_star = sys2.source.mean_energy()
    psi_s = sys2.source.log_partition()
    sigma_star = source_entropy_at(sys2.source, eps_star).value
    share = ((1.0 + lam) * report.epsilon0 - eps_star) / lam
    phi_share = _rate_function_at(_system_geometry(sys2), share).value
    return b * eps_star + psi_s - sigma_star - lam * phi_share
