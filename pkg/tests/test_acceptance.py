"""Acceptance criteria 1-10, each at its stated tolerance.

Every test logs one PASS/FAIL line, printed in the "acceptance criteria"
section of the pytest summary. Criteria that cannot be met as stated are
strict xfails: the check runs unmodified and must keep failing.
"""

import math
import time

import numpy as np
import pytest

from conftest import SKEW3, SQUARE1, SQUARE2, TEST_MODULI, record_criterion
from theta_lab import cocycle as cc
from theta_lab.cli import main
from theta_lab.forms import (
    ConstTwoForm, change_frame, curv_K_expected, curv_L0_expected, curv_P_expected, curvature_closed,
    curvature_fd, first_chern, h_idphi_P, h_K, h_L0, h_L0_mu, mu_to_x_frame, omega,
)
from theta_lab.holonomy import (
    ConnectionOneForm, character_value, gluing_factor, holonomy, loop_curvature, parallel_transport,
    poincare_connection, pullback_curvature_check, xi_character,
)
from theta_lab.l2 import (
    QuadratureSpec, adiabatic_curvature, curvature_estimate, curvature_on_dual, gram, gram_field,
    gram_stencil, theta_norm_closed_form,
)
from theta_lab._rng import counter_rng
from theta_lab.torus import TorusModulus, fundamental_grid

Q64 = QuadratureSpec(64, 64)
Q128 = QuadratureSpec(128, 128)
FD_STEP = 1e-3


def _centers(m):
    return [s * m.delta + t * m.tau for s, t in ((0.25, 0.25), (0.5, 0.7), (0.8, 0.45))]


@pytest.mark.parametrize("m", [SQUARE1, SQUARE2, SKEW3], ids=["d1", "d2", "d3"])
def test_criterion_1_closed_form_norms(m):
    t0 = time.perf_counter()
    g = gram(0j, "K_metric", m, 1e-14, Q128)
    elapsed = time.perf_counter() - t0
    expected = np.array([theta_norm_closed_form(m, k) for k in range(m.delta)])
    diag_err = float(np.max(np.abs(np.real(np.diag(g)) - expected) / expected))
    off = float(np.max(np.abs(g - np.diag(np.diag(g)))))
    ok = diag_err <= 1e-10 and off <= 1e-12 * expected.max() and elapsed <= 5
    assert record_criterion(f"criterion 1 (delta={m.delta})", ok,
                            f"diag rel err {diag_err:.2e}, off-diag {off:.2e}, {elapsed:.2f}s")


@pytest.mark.parametrize("m", TEST_MODULI, ids=["d1", "d2-skew"])
def test_criterion_2_mu_independence(m):
    field = gram_field(fundamental_grid(m, 5), "K_metric", m, 1e-14, Q64)
    base = field.grams[0]
    variation = max(float(np.max(np.abs(g - base))) for g in field.grams) / float(np.max(np.abs(base)))
    curv = max(
        float(np.max(np.abs(adiabatic_curvature(gram_stencil(mu, FD_STEP, "K_metric", m, 1e-14, Q64)))))
        for mu in fundamental_grid(m, 5)
    )
    ok = variation <= 1e-10 and curv <= 1e-9
    assert record_criterion(f"criterion 2 (delta={m.delta})", ok,
                            f"Gram variation {variation:.2e}, K curvature {curv:.2e}")


@pytest.mark.parametrize("m", TEST_MODULI, ids=["d1", "d2-skew"])
def test_criterion_3_curvature_closed_forms(m):
    point = (0.31 * m.delta, 0.27 * m.tau2, 0.18 * m.delta, 0.44 * m.tau2)
    worst = 0.0
    for h, expected in ((h_L0(m), curv_L0_expected(m)), (h_K(m), curv_K_expected(m)),
                        (h_idphi_P(m), curv_P_expected(m))):
        worst = max(worst, curvature_fd(h.real_eval, point, FD_STEP).max_abs_diff(expected))
    zz = curvature_fd(h_L0(m).real_eval, point, FD_STEP).coefficient("z", "zbar")
    ok = worst <= 1e-9 and abs(zz - math.pi / m.tau2) <= 1e-9
    assert record_criterion(f"criterion 3 (delta={m.delta})", ok, f"max coefficient error {worst:.2e}")


@pytest.mark.parametrize("delta", [1, 2, 3])
def test_criterion_4_eprime_curvature(delta):
    m = TorusModulus(delta, 0.3 + 1.1j) if delta == 3 else TorusModulus(delta, 1j)
    target = -math.pi / m.tau2
    diag_err = off = 0.0
    orders = []
    for mu in _centers(m):
        est = curvature_estimate(mu, "Eprime_metric", m, FD_STEP, 1e-14, Q64, order_probe=True)
        ext = est.extrapolated
        diag_err = max(diag_err, float(np.max(np.abs(np.real(np.diag(ext)) - target))) / abs(target))
        off = max(off, float(np.max(np.abs(ext - np.diag(np.diag(ext))))))
        orders.append(est.observed_order)
    ok = diag_err <= 1e-5 and off <= 1e-8 and min(orders) >= 1.9
    assert record_criterion(f"criterion 4 (delta={delta})", ok,
                            f"diag rel err {diag_err:.2e}, off-diag {off:.2e}, min FD order {min(orders):.2f}")


@pytest.mark.parametrize("m", [SQUARE1, SQUARE2, SKEW3], ids=["d1", "d2", "d3"])
def test_criterion_5_dual_curvature_and_chern(m):
    d = m.delta
    target = -math.pi / m.tau2
    curv, _ = curvature_on_dual(_centers(m)[0], m, FD_STEP, 1e-14, Q64)
    diag = [ConstTwoForm.from_terms(("mu", "mubar"), {("mu", "mubar"): curv[k, k]}) for k in range(d)]
    hat = [f.relabel({"mu": "muhat", "mubar": "muhatbar"}) for f in diag]
    relabel_err = max(abs(f.coefficient("mu", "mubar") - g.coefficient("muhat", "muhatbar"))
                      for f, g in zip(diag, hat))
    value_err = max(abs(g.coefficient("muhat", "muhatbar") - target) for g in hat) / abs(target)
    c1 = first_chern(hat).coefficient("muhat", "muhatbar")
    c1_err = abs(c1 - (-1j * d / (2 * m.tau2))) / (d / (2 * m.tau2))
    trace_err = abs(c1 - 1j / (2 * math.pi) * np.trace(curv))
    per_entry = [change_frame(f, mu_to_x_frame(m)).coefficient("x1", "x2") for f in diag]
    dx_err = max(abs(p - 2j * math.pi * d) for p in per_entry) / (2 * math.pi * d)
    omega_err = max(change_frame(f, mu_to_x_frame(m)).max_abs_diff(omega(m) * (2j * math.pi)) for f in diag)
    ok = (relabel_err <= 1e-12 and value_err <= 1e-5 and c1_err <= 1e-5 and trace_err <= 1e-15
          and dx_err <= 1e-5 and omega_err <= 1e-5 * 2 * math.pi * d)
    assert record_criterion(f"criterion 5 (delta={d})", ok,
                            f"relabel {relabel_err:.1e}, curvature rel {value_err:.2e}, c1 rel {c1_err:.2e}, "
                            f"dx frame rel {dx_err:.2e}")


@pytest.mark.parametrize("m", TEST_MODULI, ids=["d1", "d2-skew"])
def test_criterion_6_cocycle_suite(m):
    cocycles = [
        cc.build_L0(m), cc.build_Lmu(m, 0.3 - 0.2j), cc.build_pi1_L0(m), cc.build_pi2_L0(m),
        cc.build_idphi_P(m), cc.build_Ktilde(m), cc.build_Eprime_tilde(m),
        cc.build_dolbeault_class(m, -0.5j / m.tau2), cc.build_degree0(m, 1.0),
        cc.build_L_delta_xi(m, (1.0, 2.0)), cc.build_Lbar_xi(m, (1.0, 2.0)),
    ]
    compatible = all(cc.check_compatibility(c) for c in cocycles)
    decomposed = cc.tensor(cc.tensor(cc.build_pi1_L0(m), cc.build_idphi_P(m)), cc.build_pi2_L0(m))
    tensor_ok = decomposed.equals_mod(cc.build_Ktilde(m))
    factor_ok = (h_K(m) * (h_L0(m) * h_L0_mu(m)).inverse()).allclose(h_idphi_P(m), 1e-12)
    sigma = -0.5j / m.tau2
    normalized = cc.change_trivialization(cc.build_dolbeault_class(m, sigma),
                                          cc.ExpAffine(a_z=-2j * math.pi * sigma))
    chain_ok = (normalized.e_10.is_trivial()
                and normalized.e_20.equals_mod(cc.ExpAffine(c=4 * math.pi * sigma * m.tau2))
                and normalized.equals_mod(cc.build_degree0(m, 1.0)))
    ok = compatible and tensor_ok and factor_ok and chain_ok
    assert record_criterion(f"criterion 6 (delta={m.delta})", ok,
                            f"compatibility {compatible}, tensor {tensor_ok}, metric factorisation {factor_ok}, "
                            f"normalisation chain {chain_ok}")


@pytest.mark.parametrize("m", TEST_MODULI, ids=["d1", "d2-skew"])
def test_criterion_7_p2p(m):
    xis = counter_rng(7).uniform(-2 * math.pi, 2 * math.pi, (100, 2))
    results = [cc.verify_P2P_matching((float(a), float(b)), m) for a, b in xis]
    matched = sum(r.ok for r in results)
    symbolic = all(r.witness_ok for r in results)
    numeric = max(r.witness_residual for r in results)
    gluing = gluing_factor((0.0, 0.0), (3, -1)) == 1
    ok = matched == 100 and symbolic and numeric <= 1e-12 and gluing
    assert record_criterion(f"criterion 7 (delta={m.delta})", ok,
                            f"{matched}/100 matched, witness residual {numeric:.1e}, trivial gluing {gluing}")


@pytest.mark.xfail(strict=True, reason="RK4 phase error at 1000 steps is pi^5/(120 n^4) = 2.55e-12 > 1e-12")
def test_criterion_8a_lambda_loop():
    A = poincare_connection()
    xi = (math.pi, 0.0)
    worst = 0.0
    for end, lam in (((1, 0), (1, 0)), ((0, 1), (0, 1))):
        for x in (xi, (0.0, math.pi)):
            sigma = parallel_transport(A, [[0, 0, *x], [*end, *x]], 1000)
            worst = max(worst, abs(sigma - character_value(xi_character(x), lam)))
    ok = worst <= 1e-12
    record_criterion("criterion 8a (lambda loops, 1000 steps)", ok,
                     f"max |transport - chi| {worst:.2e} (expected failure, see decisions ledger)")
    assert ok


def test_criterion_8b_loop_curvature():
    A = poincare_connection()
    center = (0.3, 0.2, 0.7, -0.4)
    worst = 0.0
    for plane, expected in ((("x1", "xi1"), -1j), (("x2", "xi2"), -1j), (("xi1", "x1"), 1j),
                            (("x1", "x2"), 0), (("xi1", "xi2"), 0)):
        worst = max(worst, abs(loop_curvature(A, center, plane, 1e-2) - expected))
    probe = ConnectionOneForm(lambda p: np.array([1j * p[2] * (1 + p[0] ** 2), 0j, 0j, 0j]))
    pc = (0.3, 0.0, 0.7, 0.0)
    exact = -1j * (1 + pc[0] ** 2)
    errs = [abs(loop_curvature(probe, pc, ("x1", "xi1"), s) - exact) for s in (2e-2, 1e-2, 5e-3)]
    order = min(math.log2(errs[i] / errs[i + 1]) for i in range(2))
    ok = worst <= 1e-3 and order >= 1.9
    assert record_criterion("criterion 8b (loop curvature)", ok,
                            f"max coefficient error {worst:.2e}, observed order {order:.2f}")


@pytest.mark.parametrize("m", TEST_MODULI, ids=["d1", "d2-skew"])
def test_criterion_8c_pullback(m):
    res = pullback_curvature_check(m)
    glued = holonomy(poincare_connection(), [[0.25, 0, 0, 0], [0.25, 0, 2 * math.pi, 0]])
    ok = bool(res) and res.mismatch <= 1e-12 and abs(glued + 1j) <= 1e-12
    assert record_criterion(f"criterion 8c (delta={m.delta})", ok,
                            f"pullback mismatch {res.mismatch:.1e}, glued xi loop {glued:.3f}")


@pytest.mark.parametrize("m", [SQUARE1, SQUARE2, SKEW3], ids=["d1", "d2", "d3"])
def test_criterion_9_quadrature_refinement(m):
    worst = 0.0
    for mu in (0j, _centers(m)[1]):
        for tag in ("K_metric", "Eprime_metric"):
            a = gram(mu, tag, m, 1e-14, Q64)
            b = gram(mu, tag, m, 1e-14, Q128)
            worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    ok = worst <= 1e-12
    assert record_criterion(f"criterion 9 (delta={m.delta})", ok, f"max relative change {worst:.2e}")


@pytest.fixture(scope="module")
def verify_all_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance") / "report.json"
    t0 = time.perf_counter()
    code = main(["verify", "all", "--delta", "2", "--tau", "0,1", "--out", str(out)])
    return code, time.perf_counter() - t0


def test_criterion_10_runtime(verify_all_run):
    _, elapsed = verify_all_run
    ok = elapsed <= 60
    assert record_criterion("criterion 10 (runtime)", ok, f"verify all in {elapsed:.1f}s")


@pytest.mark.xfail(strict=True, reason="exit status follows criterion 8a, which fails")
def test_criterion_10_exit_status(verify_all_run):
    code, _ = verify_all_run
    ok = code == 0
    record_criterion("criterion 10 (exit status)", ok, f"exit {code} (expected failure via 8a)")
    assert ok
