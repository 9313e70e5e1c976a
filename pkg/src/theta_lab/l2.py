"""L2 geometry of H^0(M, L_mu): Gram fields of the theta frame and their curvature.

Inner products are tensor-product trapezoid sums over the cell
``[0, delta) x [0, tau2)`` in (z1, z2). The integrand ``h theta_m conj(theta_n)``
is lattice periodic, the z1 sum covers a full period, and the z1-integrated
function of z2 is tau2-periodic, so equal weights converge spectrally.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .forms import QuadExpMetric, h_Eprime, h_K, wirtinger_ddbar
from .theta import DEFAULT_EPS, theta_frame_parts
from .torus import TorusModulus, fundamental_grid, phi_L0_lift

log = logging.getLogger(__name__)

METRIC_TAGS = ("K_metric", "Eprime_metric")
PERIODICITY_TOL = 1e-8


class PeriodicityError(ValueError):
    """Integrand is not lattice periodic: sections and metric do not match."""


@dataclass(frozen=True)
class QuadratureSpec:
    n1: int = 64
    n2: int = 64

    def __post_init__(self):
        if self.n1 < 4 or self.n2 < 4:
            raise ValueError("quadrature needs at least 4 nodes per direction")

    def nodes(self, m: TorusModulus) -> tuple[np.ndarray, float]:
        """Grid points z = z1 + i z2 and the weight of each (cell area / node count)."""
        z1 = np.arange(self.n1) * (m.delta / self.n1)
        z2 = np.arange(self.n2) * (m.tau2 / self.n2)
        zz = z1[:, None] + 1j * z2[None, :]
        return zz.ravel(), m.delta * m.tau2 / (self.n1 * self.n2)


def metric_for(tag: str, m: TorusModulus) -> QuadExpMetric:
    if tag == "K_metric":
        return h_K(m)
    if tag == "Eprime_metric":
        return h_Eprime(m)
    raise ValueError(f"unknown metric tag {tag!r}; expected one of {METRIC_TAGS}")


def _periodicity_probe(f, g, h, m: TorusModulus) -> float:
    zs = np.array([0.125, 0.375, 0.625, 0.875]) * m.delta
    left = np.array([0.125, 0.375, 0.625, 0.875]) * 1j * m.tau2
    base = np.concatenate([zs, left])
    shifted = np.concatenate([zs + m.tau, left + m.delta])

    def integrand(z):
        return h(z) * f(z) * np.conj(g(z))

    a, b = integrand(base), integrand(shifted)
    return float(np.max(np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-300)))


def l2_inner(
    f: Callable, g: Callable, h: Callable, m: TorusModulus, q: QuadratureSpec = QuadratureSpec()
) -> complex:
    """``integral over M of h f conj(g) dz1 dz2`` by the trapezoid rule.

    ``f``, ``g`` and ``h`` are vectorised callables of z. Eight boundary pairs
    are spot-checked first; a mismatched section/metric pair raises.
    """
    worst = _periodicity_probe(f, g, h, m)
    if worst > PERIODICITY_TOL:
        raise PeriodicityError(f"integrand periodicity residual {worst:.3e} exceeds {PERIODICITY_TOL}")
    z, w = q.nodes(m)
    return complex(np.sum(h(z) * f(z) * np.conj(g(z))) * w)


def gram(
    mu: complex,
    tag: str,
    m: TorusModulus,
    eps: float = DEFAULT_EPS,
    q: QuadratureSpec = QuadratureSpec(),
    frame: np.ndarray | None = None,
) -> np.ndarray:
    """Gram matrix ``G[i, j] = (s_i, s_j)`` of the frame ``s = frame @ theta(., mu)``.

    ``frame`` defaults to the identity (the theta_m themselves).
    """
    metric = metric_for(tag, m)
    z, w = q.nodes(m)
    series, log_factor = theta_frame_parts(z + mu, m, eps)
    if frame is not None:
        series = np.asarray(frame, dtype=complex) @ series
    # the multiplier's phase cancels in theta_i conj(theta_j); its modulus joins the metric
    weight = np.exp(metric.log(z, mu) + 2 * log_factor.real) * w
    prod = series[:, None, :] * series.conj()[None, :, :] * weight
    g = prod.sum(axis=-1)
    return 0.5 * (g + g.conj().T)


def theta_norm_closed_form(m: TorusModulus, m_index: int) -> float:
    """Closed-form squared norm ``sqrt(tau2/2) delta exp(2 pi m^2 tau2 / delta^2)``."""
    return math.sqrt(m.tau2 / 2) * m.delta * math.exp(2 * math.pi * m_index**2 * m.tau2 / m.delta**2)


def gaussian_norm_oracle(m: TorusModulus, m_index: int, n: int = 4001) -> float:
    """The same squared norm built up step by step, independent of any theta evaluation.

    After the z1 integral kills cross terms the norm is
    ``delta * exp(2 pi m^2 tau2/delta^2) * integral of exp(-2 pi t^2 / tau2) dt``
    over the real line (the union of shifted unit windows); the Gaussian is
    integrated here by a wide trapezoid rule rather than its closed form.
    """
    half = 12 * math.sqrt(m.tau2)
    t = np.linspace(-half, half, n)
    vals = np.exp(-2 * math.pi * t * t / m.tau2)
    integral = float(np.sum(vals) * (t[1] - t[0]))
    return m.delta * math.exp(2 * math.pi * m_index**2 * m.tau2 / m.delta**2) * integral


@dataclass
class GramField:
    mu_grid: np.ndarray
    grams: np.ndarray
    metric_tag: str
    modulus: TorusModulus | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mu_grid = np.asarray(self.mu_grid, dtype=complex)
        self.grams = np.asarray(self.grams, dtype=complex)

    def check(self, tol: float = 1e-12) -> None:
        for mu, g in zip(self.mu_grid, self.grams):
            if np.max(np.abs(g - g.conj().T)) > tol * max(1.0, np.max(np.abs(g))):
                raise ValueError(f"Gram at mu={mu} is not Hermitian")
            if np.min(np.linalg.eigvalsh(g)) <= 0:
                raise ValueError(f"Gram at mu={mu} is not positive definite")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = self.grams.shape[1]
        header = ["mu1", "mu2"]
        for i in range(d):
            for j in range(d):
                header += [f"g{i}{j}_re", f"g{i}{j}_im"]
        writer.writerow(header)
        for mu, g in zip(self.mu_grid, self.grams):
            row = [repr(float(mu.real)), repr(float(mu.imag))]
            for v in g.ravel():
                row += [repr(float(v.real)), repr(float(v.imag))]
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "metric_tag": self.metric_tag,
            "modulus": None if self.modulus is None else self.modulus.to_json(),
            "mu_grid": [[float(mu.real), float(mu.imag)] for mu in self.mu_grid],
            "grams": [[[[v.real, v.imag] for v in row] for row in g] for g in self.grams.tolist()],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def gram_field(
    mus, tag: str, m: TorusModulus, eps: float = DEFAULT_EPS, q: QuadratureSpec = QuadratureSpec(),
    frame: np.ndarray | None = None,
) -> GramField:
    mus = np.asarray(mus, dtype=complex).ravel()
    grams = np.stack([gram(mu, tag, m, eps, q, frame) for mu in mus])
    return GramField(mus, grams, tag, m)


STENCIL = [(i, j) for i in (-1, 0, 1) for j in (-1, 0, 1)]


def gram_stencil(
    mu0: complex, step: float, tag: str, m: TorusModulus,
    eps: float = DEFAULT_EPS, q: QuadratureSpec = QuadratureSpec(),
) -> GramField:
    """3x3 Gram stencil at spacing ``step`` in mu1 and mu2, ordered as :data:`STENCIL`."""
    mus = [mu0 + step * (i + 1j * j) for i, j in STENCIL]
    f = gram_field(mus, tag, m, eps, q)
    f.meta.update(center=complex(mu0), step=float(step))
    return f


def adiabatic_curvature(field: GramField, step: float | None = None) -> np.ndarray:
    """Coefficient of ``dmu ^ dmu-bar`` in the Chern curvature of a Gram stencil.

    With ``F = G^-1 (dbar d G) - G^-1 (dbar G) G^-1 (d G)`` (the curvature of
    the holomorphic theta frame, coefficient of ``dmu-bar ^ dmu``) this returns
    ``-F``.
    """
    if step is None:
        step = field.meta["step"]
    g = {ij: field.grams[k] for k, ij in enumerate(STENCIL)}
    g0 = g[(0, 0)]
    d1 = (g[(1, 0)] - g[(-1, 0)]) / (2 * step)
    d2 = (g[(0, 1)] - g[(0, -1)]) / (2 * step)
    d11 = (g[(1, 0)] - 2 * g0 + g[(-1, 0)]) / step**2
    d22 = (g[(0, 1)] - 2 * g0 + g[(0, -1)]) / step**2
    d_mu = 0.5 * (d1 - 1j * d2)
    d_mubar = 0.5 * (d1 + 1j * d2)
    ddbar = wirtinger_ddbar(d11, d22)
    cond = np.linalg.cond(g0)
    log.debug("Gram condition number at stencil center: %.3e", cond)
    inv_ddbar = np.linalg.solve(g0, ddbar)
    inv_dbar = np.linalg.solve(g0, d_mubar)
    inv_d = np.linalg.solve(g0, d_mu)
    return -(inv_ddbar - inv_dbar @ inv_d)


@dataclass
class CurvatureEstimate:
    """Adiabatic curvature at two steps plus the Richardson combination."""

    center: complex
    step: float
    coarse: np.ndarray
    fine: np.ndarray
    extrapolated: np.ndarray
    finest: np.ndarray | None = None

    @property
    def observed_order(self) -> float | None:
        if self.finest is None:
            return None
        e1 = np.max(np.abs(self.coarse - self.fine))
        e2 = np.max(np.abs(self.fine - self.finest))
        if e1 == 0 or e2 == 0:
            return None
        return math.log2(e1 / e2)


def curvature_estimate(
    mu0: complex, tag: str, m: TorusModulus, step: float = 1e-3,
    eps: float = DEFAULT_EPS, q: QuadratureSpec = QuadratureSpec(), order_probe: bool = False,
) -> CurvatureEstimate:
    """Curvature at ``step`` and ``step/2``, Richardson-extrapolated (second-order FD)."""
    coarse = adiabatic_curvature(gram_stencil(mu0, step, tag, m, eps, q))
    fine = adiabatic_curvature(gram_stencil(mu0, step / 2, tag, m, eps, q))
    finest = None
    if order_probe:
        finest = adiabatic_curvature(gram_stencil(mu0, step / 4, tag, m, eps, q))
    return CurvatureEstimate(complex(mu0), step, coarse, fine, (4 * fine - coarse) / 3, finest)


def curvature_on_dual(
    mu_hat0: complex, m: TorusModulus, step: float = 1e-3,
    eps: float = DEFAULT_EPS, q: QuadratureSpec = QuadratureSpec(),
) -> tuple[np.ndarray, CurvatureEstimate]:
    """Curvature of E at ``mu_hat0`` as the coefficient of ``dmu_hat ^ dmu_hat-bar``.

    E' is the pullback of E along phi_L0, whose lift sends e1 to e1*, so the
    coefficient is the E' value at the corresponding mu, relabelled.
    """
    # phi_L0 lift is the identity on coordinates, so its inverse is too
    mu0 = complex(mu_hat0)
    if phi_L0_lift(mu0, m) != mu0:
        raise AssertionError("phi_L0 lift is expected to preserve coordinates")
    est = curvature_estimate(mu0, "Eprime_metric", m, step, eps, q)
    return est.extrapolated.copy(), est


@dataclass
class SplittingReport:
    ok: bool
    max_offdiag_ratio: float
    max_mu_variation: float
    max_eprime_error: float
    base_diagonal: np.ndarray
    details: dict = field(default_factory=dict)


def splitting_report(
    m: TorusModulus, grid: int = 5, eps: float = DEFAULT_EPS, q: QuadratureSpec = QuadratureSpec(),
    frame: np.ndarray | None = None,
) -> SplittingReport:
    """Check that the K-metric Gram is constant and diagonal over a mu grid and
    that the E'-metric Gram is ``exp(2 pi mu2^2 / tau2)`` times it."""
    mus = fundamental_grid(m, grid)
    k_field = gram_field(mus, "K_metric", m, eps, q, frame)
    e_field = gram_field(mus, "Eprime_metric", m, eps, q, frame)
    base = k_field.grams[0]
    scale = float(np.max(np.abs(np.diag(base))))
    offdiag = max(
        float(np.max(np.abs(g - np.diag(np.diag(g))))) for g in k_field.grams
    ) / scale
    variation = max(float(np.max(np.abs(g - base))) for g in k_field.grams) / scale
    errs = []
    for mu, g in zip(mus, e_field.grams):
        expected = math.exp(2 * math.pi * mu.imag**2 / m.tau2) * base
        errs.append(float(np.max(np.abs(g - expected)) / np.max(np.abs(expected))))
    e_err = max(errs)
    ok = offdiag <= 1e-10 and variation <= 1e-10 and e_err <= 1e-9
    return SplittingReport(ok, offdiag, variation, e_err, np.real(np.diag(base)).copy(),
                           {"k_field": k_field, "e_field": e_field})
