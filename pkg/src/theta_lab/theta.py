"""Theta series ``theta_m(z)`` and ``theta_m(z, mu) = theta_m(z + mu)`` with certified truncation.

Evaluation always range-reduces first: ``z = z0 + n1*delta + n2*tau`` with z0
in the fundamental cell, the truncated series is summed at z0 and the exact
multiplier ``exp(-2 pi i n2 z0 - pi i tau n2^2)`` is applied once, in log
space. The series is never summed at large ``|Im z|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._rng import counter_rng
from .cocycle import ExpAffineCocycle
from .torus import TorusModulus, reduce_array

DEFAULT_EPS = 1e-14


@dataclass(frozen=True)
class ThetaFamily:
    modulus: TorusModulus
    m_index: int = 0
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if not 0 <= self.m_index < self.modulus.delta:
            raise ValueError(f"m_index must lie in [0, {self.modulus.delta - 1}], got {self.m_index}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")


@dataclass(frozen=True)
class TruncationPlan:
    k_min: int
    k_max: int
    tail_bound: float

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1)

    def widen(self, by: int) -> "TruncationPlan":
        return TruncationPlan(self.k_min - by, self.k_max + by, self.tail_bound)


def _log_majorant(k: int, tau2: float, frac: float, z2_max: float) -> float:
    # log of max |term_k| over |Im z| <= z2_max
    return -math.pi * tau2 * k * k - 2 * math.pi * tau2 * frac * k + 2 * math.pi * abs(k + frac) * z2_max


def _one_sided_cutoff(step: int, tau2: float, frac: float, z2_max: float, log_budget: float):
    """Walk k = 0, step, 2*step, ... until the geometric tail beyond k fits the budget."""
    k = 0
    while True:
        nxt = k + step
        lb1 = _log_majorant(nxt, tau2, frac, z2_max)
        log_r = _log_majorant(nxt + step, tau2, frac, z2_max) - lb1
        # the ratio of consecutive majorants decreases once past k = 0 on either side
        if log_r < 0:
            log_tail = lb1 - math.log1p(-math.exp(log_r))
            if log_tail <= log_budget:
                return k, math.exp(log_tail)
        k = nxt


@lru_cache(maxsize=256)
def _plan_cached(tau2: float, frac: float, eps: float, z2_max: float) -> TruncationPlan:
    budget = math.log(eps / 2)
    k_max, up = _one_sided_cutoff(1, tau2, frac, z2_max, budget)
    k_min, down = _one_sided_cutoff(-1, tau2, frac, z2_max, budget)
    return TruncationPlan(k_min, k_max, up + down)


def plan_truncation(fam: ThetaFamily, z2_max: float) -> TruncationPlan:
    """Smallest k-range whose discarded terms sum to at most ``fam.eps`` for ``|Im z| <= z2_max``."""
    if not fam.eps > 0:
        raise ValueError("eps must be positive")
    if z2_max < 0:
        raise ValueError("z2_max must be non-negative")
    m = fam.modulus
    return _plan_cached(m.tau2, fam.m_index / m.delta, float(fam.eps), float(z2_max))


def theta_series(z, m_index: int, modulus: TorusModulus, plan: TruncationPlan) -> np.ndarray:
    """Raw truncated sum at ``z`` without range reduction."""
    z = np.asarray(z, dtype=complex)
    tau = modulus.tau
    frac = m_index / modulus.delta
    ks = plan.ks.astype(float)
    shape = z.shape
    zf = z.reshape(-1, 1)
    expo = 1j * math.pi * (ks * ks * tau + 2 * tau * frac * ks) + 2j * math.pi * (ks + frac) * zf
    return np.exp(expo).sum(axis=1).reshape(shape)


def _reduction_log_factor(z0: np.ndarray, n2: np.ndarray, tau: complex) -> np.ndarray:
    return -2j * math.pi * n2 * z0 - 1j * math.pi * tau * n2 * n2


def theta_frame_parts(
    z, modulus: TorusModulus, eps: float = DEFAULT_EPS, m_indices=None
) -> tuple[np.ndarray, np.ndarray]:
    """Reduced series values and the shared log multiplier.

    ``theta_m(z) = series[m] * exp(log_factor)``; the factor does not depend
    on m, so bilinear quantities can fold it into a metric weight.
    """
    z = np.asarray(z, dtype=complex)
    if m_indices is None:
        m_indices = range(modulus.delta)
    z0, _, n2 = reduce_array(z, modulus)
    series = []
    for m_index in m_indices:
        plan = plan_truncation(ThetaFamily(modulus, m_index, eps), modulus.tau2)
        series.append(theta_series(z0, m_index, modulus, plan))
    return np.stack(series), _reduction_log_factor(z0, n2, modulus.tau)


def theta_frame(z, modulus: TorusModulus, eps: float = DEFAULT_EPS, m_indices=None) -> np.ndarray:
    """All ``theta_m(z)`` for ``m`` in ``m_indices``; shape ``(len(m_indices),) + z.shape``."""
    series, log_factor = theta_frame_parts(z, modulus, eps, m_indices)
    return series * np.exp(log_factor)


def theta_m(z, fam: ThetaFamily):
    vals = theta_frame(z, fam.modulus, fam.eps, [fam.m_index])[0]
    return vals[()] if vals.ndim == 0 else vals


def theta_m_mu(z, mu, fam: ThetaFamily):
    return theta_m(np.asarray(z, dtype=complex) + np.asarray(mu, dtype=complex), fam)


def riemann_theta(z, tau: complex, eps: float = DEFAULT_EPS):
    """Jacobi's ``sum_k exp(pi i k^2 tau + 2 pi i k z)``; the delta = 1, m = 0 member."""
    return theta_m(z, ThetaFamily(TorusModulus(1, tau), 0, eps))


def quasi_periodicity_residual(
    fam: ThetaFamily, cocycle: ExpAffineCocycle, n_samples: int = 50, stream: int = 21
) -> float:
    """max |theta(w + lambda) - e_lambda(w) theta(w)| / (1 + |theta(w)|) over samples and generators.

    Both sides use the raw series (no range reduction), so the check does not
    lean on the multiplier it is testing. Samples ``w = s delta + t tau`` have
    ``s`` in [-1/2, 1/2) and ``t`` in [-1, 0), so w and ``w + tau`` both stay in
    the band ``|Im| <= tau2``. The residual is normalised by ``1 + |theta(w)|``
    while both sides scale with ``|e_lambda(w)|``; the band keeps that factor
    at most ``exp(pi tau2)``. For product cocycles z and mu each contribute
    half of w.
    """
    m = fam.modulus
    rng = counter_rng(stream)
    s = rng.uniform(-0.5, 0.5, n_samples)
    t = rng.uniform(-1.0, 0.0, n_samples)
    if cocycle.product:
        s2 = rng.uniform(-0.25, 0.25, n_samples)
        t2 = rng.uniform(-0.5, 0.0, n_samples)
        z = 0.5 * (s * m.delta + t * m.tau)
        mu = s2 * m.delta + t2 * m.tau
    else:
        z = s * m.delta + t * m.tau
        mu = np.zeros(n_samples, dtype=complex)
    cm = cocycle.modulus
    reach = max(abs(cm.lambda1.imag), abs(cm.lambda2.imag))
    z2_max = float(np.max(np.abs((z + mu).imag))) + reach
    plan = plan_truncation(fam, z2_max)
    base = theta_series(z + mu, fam.m_index, m, plan)
    worst = 0.0
    for g in cocycle.generators():
        dz, dmu = cocycle.shift(g)
        shifted = theta_series(z + dz + mu + dmu, fam.m_index, m, plan)
        expected = cocycle.multiplier(g)(z, mu) * base
        worst = max(worst, float(np.max(np.abs(shifted - expected) / (1 + np.abs(base)))))
    return worst


def cauchy_riemann_residual(fam: ThetaFamily, z, step: float = 1e-4) -> np.ndarray:
    """Central-difference estimate of ``|d theta / d zbar| / (1 + |theta|)``.

    For a holomorphic function the stencil leaves ``step^2 |theta'''| / 6``,
    which grows with theta itself, hence the same ``1 + |theta|`` scale as
    :func:`quasi_periodicity_residual`.
    """
    z = np.asarray(z, dtype=complex)
    dx = theta_m(z + step, fam) - theta_m(z - step, fam)
    dy = theta_m(z + 1j * step, fam) - theta_m(z - 1j * step, fam)
    return np.abs(dx + 1j * dy) / (4 * step) / (1 + np.abs(theta_m(z, fam)))
