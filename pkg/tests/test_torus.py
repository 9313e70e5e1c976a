import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ALL_MODULI, SQUARE1, SQUARE2
from theta_lab.torus import (
    FrameMatrix, TorusModulus, fundamental_grid, iso_frame, iso_inverse, iso_map, iso_matrix,
    phi_L0_lift, reduce_array, reduce_to_fundamental, x_to_z_frame, z_to_x_frame,
)

finite = st.floats(-50, 50, allow_nan=False)


def test_modulus_validation():
    with pytest.raises(ValueError):
        TorusModulus(0, 1j)
    with pytest.raises(ValueError):
        TorusModulus(1, 1 - 0.5j)
    with pytest.raises(ValueError):
        TorusModulus(1.5, 1j)
    m = TorusModulus(2, 0.3 + 1.1j)
    assert (m.lambda1, m.lambda2) == (2, 0.3 + 1.1j)
    assert m.lattice_point(1, -2) == 2 - 2 * (0.3 + 1.1j)
    with pytest.raises(ValueError):
        m.shift(3)


def test_reduce_examples():
    assert reduce_to_fundamental(0, SQUARE1) == (0, (0, 0))
    for m in ALL_MODULI:
        assert reduce_to_fundamental(m.delta + m.tau, m) == (0, (1, 1))
    z0, n = reduce_to_fundamental(2.5 + 0.5j, SQUARE2)
    assert n == (1, 0)
    assert abs(z0 - (0.5 + 0.5j)) < 1e-15


@given(finite, finite, st.sampled_from(ALL_MODULI))
def test_reduce_reconstructs_and_is_idempotent(x, y, m):
    z = complex(x, y)
    z0, (n1, n2) = reduce_to_fundamental(z, m)
    assert abs(z0 + n1 * m.delta + n2 * m.tau - z) <= 1e-12 * max(1, abs(z))
    t = z0.imag / m.tau2
    s = (z0.real - t * m.tau1) / m.delta
    assert -1e-12 <= s < 1 + 1e-12 and -1e-12 <= t < 1 + 1e-12
    z00, offsets = reduce_to_fundamental(z0, m)
    assert offsets == (0, 0)
    assert abs(z00 - z0) <= 1e-12


def test_reduce_array_matches_scalar():
    m = ALL_MODULI[-1]
    zs = np.array([0.1 + 5j, -3.2 - 1j, 7 + 0.2j])
    z0, n1, n2 = reduce_array(zs, m)
    for z, a, b, c in zip(zs, z0, n1, n2):
        w0, (k1, k2) = reduce_to_fundamental(z, m)
        assert (k1, k2) == (b, c)
        assert abs(w0 - a) < 1e-12


def test_x_to_z_frame_examples():
    f = x_to_z_frame(SQUARE1)
    assert np.allclose(f.matrix[:, 0], [0.5, -0.5j], atol=1e-15)
    f = x_to_z_frame(SQUARE2)
    assert np.allclose(f.matrix[:, 0], [0.25, -0.5j], atol=1e-15)


@pytest.mark.parametrize("m", ALL_MODULI)
def test_frames_are_inverse(m):
    composed = x_to_z_frame(m).compose(z_to_x_frame(m))
    assert composed.old == composed.new == ("x1", "x2")
    assert np.allclose(composed.matrix, np.eye(2), atol=1e-14)


def test_frame_matrix_validation():
    with pytest.raises(ValueError):
        FrameMatrix(("a", "b"), ("c", "d"), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        FrameMatrix(("a",), ("c", "d"), np.eye(2))
    with pytest.raises(ValueError):
        x_to_z_frame(SQUARE1).compose(x_to_z_frame(SQUARE1))


def test_iso_examples():
    assert iso_map(0, SQUARE1) == (0.0, 0.0)
    assert np.allclose(iso_map(1j, SQUARE1), (2 * math.pi, 0), atol=1e-15)
    assert np.allclose(iso_map(1, SQUARE1), (0, -2 * math.pi), atol=1e-15)
    assert iso_inverse((0, 0), SQUARE1) == 0
    assert abs(iso_inverse((2 * math.pi, 0), SQUARE1) - 1j) < 1e-15


@pytest.mark.parametrize("m", ALL_MODULI)
def test_iso_round_trip(m):
    from theta_lab._rng import counter_rng

    xs = counter_rng(3).uniform(-20, 20, (100, 2))
    err = max(np.max(np.abs(np.array(iso_map(iso_inverse(tuple(x), m), m)) - x)) for x in xs)
    assert err <= 1e-13


@given(st.floats(-3, 3), st.floats(-3, 3), finite, finite, finite, finite, st.sampled_from(ALL_MODULI))
def test_iso_is_real_linear(a, b, x1, y1, x2, y2, m):
    u, v = complex(x1, y1), complex(x2, y2)
    lhs = np.array(iso_map(a * u + b * v, m))
    rhs = a * np.array(iso_map(u, m)) + b * np.array(iso_map(v, m))
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * (1 + np.max(np.abs(rhs))))


@pytest.mark.parametrize("m", ALL_MODULI)
def test_iso_maps_dual_lattice_to_2pi_integers(m):
    for m1 in range(-5, 6):
        for m2 in range(-5, 6):
            xi = np.array(iso_map(m1 + m2 * m.tau / m.delta, m)) / (2 * math.pi)
            assert np.max(np.abs(xi - np.round(xi))) <= 1e-12


def test_iso_frame_is_the_real_matrix_in_wirtinger_form():
    m = ALL_MODULI[-1]
    frame = iso_frame(m)
    # d(mu1) = (dmu + dmubar)/2, d(mu2) = (dmu - dmubar)/(2i)
    back = frame.matrix @ np.array([[1, 1j], [1, -1j]])
    assert np.allclose(back, iso_matrix(m), atol=1e-14)


def test_phi_lift_is_identity_on_coordinates():
    for mu in (0, 1, 0.3 + 0.7j):
        assert phi_L0_lift(mu, SQUARE1) == mu


def test_fundamental_grid():
    m = ALL_MODULI[-1]
    g = fundamental_grid(m, 5)
    assert g.shape == (25,)
    _, n1, n2 = reduce_array(g, m)
    assert not n1.any() and not n2.any()
