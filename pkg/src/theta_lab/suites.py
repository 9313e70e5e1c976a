"""Verification suites and the machine-readable report they produce.

Each suite is a pure function of a :class:`RunConfig` returning a list of
:class:`Record` items. Records carry an anchor naming the result they check.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Callable

import numpy as np

from . import cocycle as cc
from ._rng import counter_rng
from .forms import (
    curv_K_expected, curv_L0_expected, curv_P_expected, curvature_closed, curvature_fd,
    change_frame, first_chern, h_idphi_P, h_K, h_L0, h_L0_mu, mu_to_x_frame, omega,
    ConstTwoForm,
)
from .holonomy import (
    ConnectionOneForm, character_value, gluing_factor, holonomy, loop_curvature,
    parallel_transport, poincare_connection, pullback_curvature_check, xi_character,
)
from .l2 import (
    QuadratureSpec, adiabatic_curvature, curvature_estimate, curvature_on_dual, gram,
    gram_stencil, theta_norm_closed_form, splitting_report,
)
from .theta import ThetaFamily, quasi_periodicity_residual
from .torus import TorusModulus, fundamental_grid, z_to_x_frame

SUITES = ("adiabatic", "cocycles", "curvature-forms", "holonomy", "lemma4", "p2p", "splitting")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class RunConfig:
    delta: int = 1
    tau: tuple[float, float] = (0.0, 1.0)
    eps: float = 1e-14
    quad: tuple[int, int] = (64, 64)
    fd_step: float = 1e-3
    grid: int = 5
    suites: list[str] = field(default_factory=lambda: ["all"])
    out: str | None = None

    def validate(self) -> "RunConfig":
        if isinstance(self.delta, bool) or int(self.delta) != self.delta or self.delta < 1:
            raise ConfigError(f"delta: must be an integer >= 1, got {self.delta!r}")
        if len(self.tau) != 2 or not float(self.tau[1]) > 0:
            raise ConfigError(f"tau: imaginary part must be positive, got {self.tau!r}")
        if not 0 < self.eps <= 1e-6:
            raise ConfigError(f"eps: must lie in (0, 1e-6], got {self.eps!r}")
        if len(self.quad) != 2 or min(self.quad) < 16:
            raise ConfigError(f"quad: both node counts must be >= 16, got {self.quad!r}")
        if not 0 < self.fd_step <= 0.1:
            raise ConfigError(f"fd_step: must lie in (0, 0.1], got {self.fd_step!r}")
        if int(self.grid) != self.grid or self.grid < 2:
            raise ConfigError(f"grid: must be an integer >= 2, got {self.grid!r}")
        for s in self.suites:
            if s != "all" and s not in SUITES:
                raise ConfigError(f"suites: unknown suite {s!r}")
        self.delta = int(self.delta)
        self.tau = (float(self.tau[0]), float(self.tau[1]))
        self.quad = (int(self.quad[0]), int(self.quad[1]))
        self.grid = int(self.grid)
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"{sorted(unknown)[0]}: unknown configuration field")
        data = dict(data)
        for key in ("tau", "quad"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    @property
    def modulus(self) -> TorusModulus:
        return TorusModulus(self.delta, complex(*self.tau))

    @property
    def quadrature(self) -> QuadratureSpec:
        return QuadratureSpec(*self.quad)

    def selected_suites(self) -> list[str]:
        if "all" in self.suites:
            return list(SUITES)
        return sorted(set(self.suites))


# -- records -----------------------------------------------------------------

def _jsonable(v: Any) -> Any:
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


@dataclass
class Record:
    """One check. ``mode`` is "abs", "rel" (tolerance times max |expected|) or "min" (observed >= expected)."""

    name: str
    paper_anchor: str
    expected: Any
    observed: Any
    tolerance: float
    mode: str = "abs"
    passed: bool = False

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "paper_anchor": self.paper_anchor,
            "expected": _jsonable(self.expected),
            "observed": _jsonable(self.observed),
            "tolerance": self.tolerance,
            "mode": self.mode,
            "pass": bool(self.passed),
        }


def check(name: str, anchor: str, expected, observed, tolerance: float, mode: str = "abs") -> Record:
    exp = np.asarray(expected)
    obs = np.asarray(observed)
    if mode == "min":
        ok = bool(np.all(obs >= exp))
    else:
        err = float(np.max(np.abs(obs - exp))) if obs.size else 0.0
        scale = float(np.max(np.abs(exp))) if mode == "rel" else 1.0
        if mode not in ("abs", "rel"):
            raise ValueError(f"unknown tolerance mode {mode!r}")
        ok = bool(np.isfinite(err)) and err <= tolerance * scale
    return Record(name, anchor, expected, observed, tolerance, mode, ok)


# -- suites ------------------------------------------------------------------

def suite_lemma4(cfg: RunConfig) -> list[Record]:
    m, q = cfg.modulus, cfg.quadrature
    g = gram(0j, "K_metric", m, cfg.eps, q)
    expected = np.array([theta_norm_closed_form(m, k) for k in range(m.delta)])
    out = [check("K Gram diagonal", "Lemma 4", expected, np.real(np.diag(g)), 1e-10, "rel")]
    off = g - np.diag(np.diag(g))
    out.append(check("K Gram off-diagonal", "Lemma 4", 0.0, float(np.max(np.abs(off))),
                     1e-12 * float(np.max(expected))))
    fine = gram(0j, "K_metric", m, cfg.eps, QuadratureSpec(2 * cfg.quad[0], 2 * cfg.quad[1]))
    out.append(check("quadrature refinement (x2 nodes)", "Lemma 4", 0.0,
                     float(np.max(np.abs(fine - g)) / np.max(np.abs(g))), 1e-12))
    return out


def _defect_size(e: cc.ExpAffine) -> float:
    q = e.c / cc.TWO_PI_I
    dist = abs(complex(q.real - round(q.real), q.imag)) * 2 * math.pi
    return abs(e.a_z) + abs(e.a_mu) + dist


def _max_relation_defect(c: cc.ExpAffineCocycle) -> float:
    gens = c.generators()
    return max(
        (_defect_size(cc.relation_defect(c, g, h)) for i, g in enumerate(gens) for h in gens[i + 1:]),
        default=0.0,
    )


def _cocycle_quotient_defect(a: cc.ExpAffineCocycle, b: cc.ExpAffineCocycle) -> float:
    return max(_defect_size(a.multiplier(g) / b.multiplier(g)) for g in cc.GENERATORS)


def _all_cocycles(m: TorusModulus) -> list[cc.ExpAffineCocycle]:
    mu = 0.37 * m.delta + 0.61 * m.tau
    xi = (0.7, -1.3)
    return [
        cc.build_L0(m), cc.build_Lmu(m, mu), cc.build_pi1_L0(m), cc.build_pi2_L0(m),
        cc.build_idphi_P(m), cc.build_Ktilde(m), cc.build_Eprime_tilde(m),
        cc.build_dolbeault_class(m, -0.5j / m.tau2), cc.build_degree0(m, mu),
        cc.build_L_delta_xi(m, xi), cc.build_Lbar_xi(m, xi),
    ]


def _metric_coeff_diff(a, b) -> float:
    return max(abs(a.const - b.const), float(np.max(np.abs(a.lin - b.lin))),
               float(np.max(np.abs(a.quad - b.quad))))


def suite_cocycles(cfg: RunConfig) -> list[Record]:
    m = cfg.modulus
    out = [
        check(f"compatibility {c.name}", "Eq. (compatibility2)", 0.0, _max_relation_defect(c), cc.MOD_TOL)
        for c in _all_cocycles(m)
    ]
    decomposed = cc.tensor(cc.tensor(cc.build_pi1_L0(m), cc.build_idphi_P(m)), cc.build_pi2_L0(m))
    out.append(check("K~ = pi1*L0 (x) (Id x phi)*P (x) pi2*L0", "Proposition 1", 0.0,
                     _cocycle_quotient_defect(cc.build_Ktilde(m), decomposed), cc.MOD_TOL))
    factored = h_K(m) * (h_L0(m) * h_L0_mu(m)).inverse()
    out.append(check("h_K / (pi1*h_L0 pi2*h_L0) = h_P", "Eq. (metric IdPhiP)", 0.0,
                     _metric_coeff_diff(factored, h_idphi_P(m)), 1e-12))
    sigma = -0.5j / m.tau2
    f = cc.ExpAffine(a_z=-cc.TWO_PI_I * sigma)
    normalized = cc.change_trivialization(cc.build_dolbeault_class(m, sigma), f)
    out.append(check("normalized Dolbeault multipliers (alpha = e1*)", "Eq. (eqn20)", 0.0,
                     max(_defect_size(normalized.e_10),
                         _defect_size(normalized.e_20 / cc.ExpAffine(c=4 * math.pi * sigma * m.tau2))),
                     cc.MOD_TOL))
    out.append(check("eqn20 = eqn21 at mu = 1", "Property 1", 0.0,
                     _cocycle_quotient_defect(normalized, cc.build_degree0(m, 1.0)), cc.MOD_TOL))
    for k in range(m.delta):
        fam = ThetaFamily(m, k, cfg.eps)
        out.append(check(f"theta_{k} quasi-periodicity vs L0", "Lemma 1", 0.0,
                         quasi_periodicity_residual(fam, cc.build_L0(m)), 1e-12))
        out.append(check(f"theta_{k}(z, mu) quasi-periodicity vs K~", "Theorem 1", 0.0,
                         quasi_periodicity_residual(fam, cc.build_Ktilde(m)), 1e-12))
    return out


def _form_fd(h, point, step) -> ConstTwoForm:
    return curvature_fd(h.real_eval, point, step)


def suite_curvature_forms(cfg: RunConfig) -> list[Record]:
    m = cfg.modulus
    point = (0.31 * m.delta, 0.27 * m.tau2, 0.18 * m.delta, 0.44 * m.tau2)
    out = []
    for label, anchor, h, expected in (
        ("h_L0", "Eq. (curv2)", h_L0(m), curv_L0_expected(m)),
        ("h_K", "Eq. (curv1)", h_K(m), curv_K_expected(m)),
        ("h_P", "Eq. (curvP)", h_idphi_P(m), curv_P_expected(m)),
    ):
        out.append(check(f"closed-form curvature of {label}", anchor, expected.coeffs,
                         curvature_closed(h).coeffs, 1e-12))
        out.append(check(f"finite-difference curvature of {label}", anchor, expected.coeffs,
                         _form_fd(h, point, cfg.fd_step).coeffs, 1e-9))
    c1 = change_frame(first_chern(curv_L0_expected(m).restrict(("z", "zbar"))), z_to_x_frame(m))
    out.append(check("c1(L0, h_L0) = omega", "Eq. (curv2)", omega(m).coeffs, c1.coeffs, 1e-12))
    return out


def _eprime_centers(m: TorusModulus) -> list[complex]:
    return [s * m.delta + t * m.tau for s, t in ((0.25, 0.25), (0.5, 0.7), (0.8, 0.45))]


def suite_adiabatic(cfg: RunConfig) -> list[Record]:
    m, q = cfg.modulus, cfg.quadrature
    d = m.delta
    worst = 0.0
    for mu in fundamental_grid(m, cfg.grid):
        curv = adiabatic_curvature(gram_stencil(mu, cfg.fd_step, "K_metric", m, cfg.eps, q))
        worst = max(worst, float(np.max(np.abs(curv))))
    out = [check("K adiabatic curvature over mu grid", "Theorem KK", 0.0, worst, 1e-9)]
    target = -math.pi / m.tau2
    for mu in _eprime_centers(m):
        est = curvature_estimate(mu, "Eprime_metric", m, cfg.fd_step, cfg.eps, q, order_probe=True)
        ext = est.extrapolated
        tag = f"mu=({mu.real:.4f},{mu.imag:.4f})"
        out.append(check(f"E' curvature diagonal, Richardson {tag}", "Theorem 7",
                         np.full(d, target), np.real(np.diag(ext)), 1e-5, "rel"))
        out.append(check(f"E' curvature off-diagonal {tag}", "Theorem 7", 0.0,
                         float(np.max(np.abs(ext - np.diag(np.diag(ext))))), 1e-8))
        order = est.observed_order
        out.append(check(f"observed FD order (step, step/2, step/4) {tag}", "Theorem 7", 1.9,
                         float("nan") if order is None else order, 0.0, "min"))
    mu_hat = _eprime_centers(m)[0]
    curv, _ = curvature_on_dual(mu_hat, m, cfg.fd_step, cfg.eps, q)
    diag = [ConstTwoForm.from_terms(("mu", "mubar"), {("mu", "mubar"): curv[k, k]}) for k in range(d)]
    relabeled = [f.relabel({"mu": "muhat", "mubar": "muhatbar"}) for f in diag]
    out.append(check("relabel mu -> muhat", "Theorem 8",
                     [f.coefficient("mu", "mubar") for f in diag],
                     [f.coefficient("muhat", "muhatbar") for f in relabeled], 1e-12))
    out.append(check("curvature of E on dmuhat ^ dmuhat-bar", "Theorem 8", np.full(d, target),
                     [f.coefficient("muhat", "muhatbar").real for f in relabeled], 1e-5, "rel"))
    c1 = first_chern(diag)
    out.append(check("first Chern form (i/2pi) tr", "Theorem 8", -1j * d / (2 * m.tau2),
                     c1.coefficient("mu", "mubar"), 1e-5, "rel"))
    x_frame = mu_to_x_frame(m)
    per_entry = [change_frame(f, x_frame).coefficient("x1", "x2") for f in diag]
    out.append(check("curvature per diagonal entry in dx1 ^ dx2", "Theorem 1.1",
                     np.full(d, 2j * math.pi * d), per_entry, 1e-5, "rel"))
    out.append(check("c1(E) = -delta omega", "Theorem 1.1", (omega(m) * -d).coefficient("x1", "x2"),
                     change_frame(c1, x_frame).coefficient("x1", "x2"), 1e-5, "rel"))
    return out


def suite_holonomy(cfg: RunConfig) -> list[Record]:
    m = cfg.modulus
    A = poincare_connection()
    out = []
    xi = (math.pi, 0.0)
    sigma = parallel_transport(A, [[0, 0, *xi], [1, 0, *xi]], 1000)
    out.append(check("lambda1 loop at xi=(pi,0), 1000 steps", "Eq. (conn1)",
                     character_value(xi_character(xi), (1, 0)), sigma, 1e-12))
    out.append(check("unitarity of transport", "Eq. (good metric)", 1.0, abs(sigma), 1e-12))
    out.append(check("xi loop at x=(0.25,0) with gluing", "Eq. (action2pilambda)", -1j,
                     holonomy(A, [[0.25, 0, 0, 0], [0.25, 0, 2 * math.pi, 0]]), 1e-12))
    out.append(check("gluing at x=0 is trivial", "Theorem P2P", 1.0, gluing_factor((0, 0), (1, -2)), 0.0))
    center = (0.3, 0.2, 0.7, -0.4)
    for plane, exp, tol in ((("x1", "xi1"), -1j, 1e-3), (("x2", "xi2"), -1j, 1e-3),
                            (("x1", "x2"), 0.0, 1e-6), (("xi1", "xi2"), 0.0, 1e-6)):
        out.append(check(f"loop curvature in plane {plane}", "Eq. (dA)", exp,
                         loop_curvature(A, center, plane, 1e-2), tol))
    out.append(check("loop-curvature convergence order", "Eq. (dA)", 1.9, probe_loop_order(), 0.0, "min"))
    res = pullback_curvature_check(m)
    out.append(check("pullback of dA equals curvature of P", "Eq. (curvpullback)", 0.0, res.mismatch, 1e-12))
    return out


def probe_loop_order(sides=(2e-2, 1e-2, 5e-3)) -> float:
    """Observed order of loop_curvature on ``A = i xi1 (1 + x1^2) dx1``.

    The Poincare connection is linear, so its square loops are exact up to
    roundoff; this probe has varying curvature ``-i (1 + x1^2)`` on (x1, xi1).
    """
    probe = ConnectionOneForm(lambda p: np.array([1j * p[2] * (1 + p[0] ** 2), 0j, 0j, 0j]), "probe")
    center = (0.3, 0.0, 0.7, 0.0)
    exact = -1j * (1 + center[0] ** 2)
    errs = [abs(loop_curvature(probe, center, ("x1", "xi1"), s) - exact) for s in sides]
    return float(min(math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)))


def suite_p2p(cfg: RunConfig) -> list[Record]:
    m = cfg.modulus
    rng = counter_rng(7)
    xis = rng.uniform(-2 * math.pi, 2 * math.pi, (100, 2))
    fails, residual = 0, 0.0
    for xi in xis:
        res = cc.verify_P2P_matching((float(xi[0]), float(xi[1])), m)
        fails += not res.ok
        residual = max(residual, res.witness_residual)
    return [
        check("multiplier matching for 100 random xi", "Theorem P2P", 0, fails, 0.0),
        check("witness Phi_xi numeric residual", "Theorem P2P", 0.0, residual, 1e-12),
        check("trivial gluing at x = 0", "Theorem P2P", 1.0, gluing_factor((0.0, 0.0), (3, -1)), 0.0),
    ]


def suite_splitting(cfg: RunConfig) -> list[Record]:
    rep = splitting_report(cfg.modulus, cfg.grid, cfg.eps, cfg.quadrature)
    k = rep.details["k_field"]
    min_ratio = min(
        float(np.min(np.linalg.eigvalsh(g)) / np.min(np.real(np.diag(g)))) for g in k.grams
    )
    return [
        check("K Gram off-diagonal / max diagonal", "Eq. (Esplit)", 0.0, rep.max_offdiag_ratio, 1e-10),
        check("K Gram mu-variation (relative)", "Theorem KK", 0.0, rep.max_mu_variation, 1e-10),
        check("E' Gram = exp(2 pi mu2^2/tau2) K Gram", "Eq. (Esplit1)", 0.0, rep.max_eprime_error, 1e-9),
        check("frame positivity: min eigenvalue / min diagonal", "Remark rem3r", 0.1, min_ratio, 0.0, "min"),
    ]


SUITE_FUNCS: dict[str, Callable[[RunConfig], list[Record]]] = {
    "adiabatic": suite_adiabatic,
    "cocycles": suite_cocycles,
    "curvature-forms": suite_curvature_forms,
    "holonomy": suite_holonomy,
    "lemma4": suite_lemma4,
    "p2p": suite_p2p,
    "splitting": suite_splitting,
}


def _run_one(args: tuple[str, RunConfig]) -> tuple[str, list[Record]]:
    name, cfg = args
    return name, SUITE_FUNCS[name](cfg)


def run(cfg: RunConfig, parallel: bool = False) -> dict:
    """Execute the configured suites and assemble the report dictionary."""
    cfg.validate()
    names = cfg.selected_suites()
    t0 = time.perf_counter()
    if parallel and len(names) > 1:
        with ProcessPoolExecutor() as pool:
            results = dict(pool.map(_run_one, [(n, cfg) for n in names]))
    else:
        results = dict(_run_one((n, cfg)) for n in names)
    runtime = time.perf_counter() - t0
    suites = {}
    n_pass = n_total = 0
    for name in sorted(results):
        recs = results[name]
        ok = sum(r.passed for r in recs)
        n_pass += ok
        n_total += len(recs)
        suites[name] = {
            "pass": ok == len(recs),
            "records": [r.to_json() for r in recs],
        }
    config = asdict(cfg)
    config.pop("out")
    return {
        "config": _jsonable(config),
        "suites": suites,
        "summary": {
            "suites": len(suites),
            "suites_passed": sum(s["pass"] for s in suites.values()),
            "records": n_total,
            "records_passed": n_pass,
            "pass": n_pass == n_total,
        },
        "runtime": runtime,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
