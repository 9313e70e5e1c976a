"""Moduli, lattices and coordinate charts on M, its dual torus and M*.

All coordinates are in units of the lattice vector ``e1`` (resp. ``e1*``): the
lattice of M is ``Z{delta, tau}`` and a point of V is a single complex number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "TorusModulus",
    "FrameMatrix",
    "reduce_to_fundamental",
    "x_to_z_frame",
    "z_to_x_frame",
    "iso_matrix",
    "iso_map",
    "iso_inverse",
    "phi_L0_lift",
    "iso_frame",
    "fundamental_grid",
]

_SNAP = 1e-12


@dataclass(frozen=True)
class TorusModulus:
    """The pair (delta, tau) fixing ``Lambda = Z{delta*e1, tau*e1}``."""

    delta: int
    tau: complex

    def __post_init__(self):
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError(f"delta must be a positive integer, got {self.delta!r}")
        tau = complex(self.tau)
        if not tau.imag > 0:
            raise ValueError(f"Im(tau) must be positive, got {tau!r}")
        object.__setattr__(self, "delta", int(self.delta))
        object.__setattr__(self, "tau", tau)

    @property
    def tau1(self) -> float:
        return self.tau.real

    @property
    def tau2(self) -> float:
        return self.tau.imag

    @property
    def lambda1(self) -> complex:
        return complex(self.delta)

    @property
    def lambda2(self) -> complex:
        return self.tau

    def shift(self, which: int) -> complex:
        """Translation of the e1-coordinate for lattice generator 1 or 2."""
        if which == 1:
            return self.lambda1
        if which == 2:
            return self.lambda2
        raise ValueError(f"lattice generator index must be 1 or 2, got {which!r}")

    def lattice_point(self, n1: int, n2: int) -> complex:
        return n1 * self.lambda1 + n2 * self.lambda2

    def to_json(self) -> dict:
        return {"delta": self.delta, "tau": [self.tau.real, self.tau.imag]}


@dataclass(frozen=True)
class FrameMatrix:
    """Change of constant coframe: ``old[i] = sum_j matrix[i, j] * new[j]``."""

    old: tuple[str, ...]
    new: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (len(self.old), len(self.new)):
            raise ValueError(
                f"frame matrix shape {mat.shape} does not match "
                f"{len(self.old)} old x {len(self.new)} new coordinates"
            )
        if mat.shape[0] == mat.shape[1] and abs(np.linalg.det(mat)) == 0.0:
            raise ValueError("frame matrix is singular")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "old", tuple(self.old))
        object.__setattr__(self, "new", tuple(self.new))

    def compose(self, other: "FrameMatrix") -> "FrameMatrix":
        """Express ``self.old`` in ``other.new`` given ``self.new == other.old``."""
        if self.new != other.old:
            raise ValueError(f"cannot compose frames {self.new} and {other.old}")
        return FrameMatrix(self.old, other.new, self.matrix @ other.matrix)

    @staticmethod
    def block(*frames: "FrameMatrix") -> "FrameMatrix":
        old = sum((f.old for f in frames), ())
        new = sum((f.new for f in frames), ())
        mat = np.zeros((len(old), len(new)), dtype=complex)
        i = j = 0
        for f in frames:
            r, c = f.matrix.shape
            mat[i:i + r, j:j + c] = f.matrix
            i += r
            j += c
        return FrameMatrix(old, new, mat)


def reduce_to_fundamental(z: complex, m: TorusModulus) -> tuple[complex, tuple[int, int]]:
    """Write ``z = z0 + n1*delta + n2*tau`` with z0 in the half-open parallelogram.

    Values within 1e-12 of a cell boundary are snapped onto the lower cell so
    that lattice points reduce to exactly zero.
    """
    z = complex(z)
    t = z.imag / m.tau2
    s = (z.real - t * m.tau1) / m.delta
    n1 = math.floor(s + _SNAP)
    n2 = math.floor(t + _SNAP)
    z0 = z - n1 * m.delta - n2 * m.tau
    if abs(z0) < _SNAP * max(1.0, abs(z)):
        z0 = 0j
    return z0, (int(n1), int(n2))


def reduce_array(z: np.ndarray, m: TorusModulus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised :func:`reduce_to_fundamental`; returns (z0, n1, n2)."""
    z = np.asarray(z, dtype=complex)
    t = z.imag / m.tau2
    s = (z.real - t * m.tau1) / m.delta
    n1 = np.floor(s + _SNAP)
    n2 = np.floor(t + _SNAP)
    z0 = z - n1 * m.delta - n2 * m.tau
    return z0, n1.astype(np.int64), n2.astype(np.int64)


def x_to_z_frame(m: TorusModulus) -> FrameMatrix:
    """(dx1, dx2) expressed in (dz, dz-bar)."""
    d, t1, t2 = m.delta, m.tau1, m.tau2
    pi11 = (1 + 1j * t1 / t2) / (2 * d)
    pi21 = -1j / (2 * t2)
    mat = np.array([[pi11, np.conj(pi11)], [pi21, np.conj(pi21)]])
    return FrameMatrix(("x1", "x2"), ("z", "zbar"), mat)


def z_to_x_frame(m: TorusModulus, names: tuple[str, str] = ("z", "zbar")) -> FrameMatrix:
    """(dz, dz-bar) expressed in (dx1, dx2): dz = delta dx1 + tau dx2."""
    mat = np.array([[m.delta, m.tau], [m.delta, np.conj(m.tau)]], dtype=complex)
    return FrameMatrix(names, ("x1", "x2"), mat)


def iso_matrix(m: TorusModulus) -> np.ndarray:
    """Real 2x2 matrix sending (mu_hat1, mu_hat2) to (xi1, xi2)."""
    d, t1, t2 = m.delta, m.tau1, m.tau2
    return np.array(
        [[0.0, 2 * math.pi * d / t2],
         [-2 * math.pi, 2 * math.pi * t1 / t2]]
    )


def iso_map(mu_hat: complex, m: TorusModulus) -> tuple[float, float]:
    """Dual-torus coordinate to the coefficients (xi1, xi2) of xi in V*."""
    mu_hat = complex(mu_hat)
    xi = iso_matrix(m) @ np.array([mu_hat.real, mu_hat.imag])
    return float(xi[0]), float(xi[1])


def iso_inverse(xi: tuple[float, float], m: TorusModulus) -> complex:
    xi1, xi2 = xi
    two_pi = 2 * math.pi
    mu1 = -xi2 / two_pi + (m.tau1 / m.delta) * xi1 / two_pi
    mu2 = (m.tau2 / m.delta) * xi1 / two_pi
    return complex(mu1, mu2)


def phi_L0_lift(mu: complex, m: TorusModulus) -> complex:
    # complex-linear with e1 -> e1*, so the coordinate is unchanged
    return complex(mu)


def fundamental_grid(m: TorusModulus, side: int) -> np.ndarray:
    """``side x side`` points s*delta + t*tau with s, t = 0, 1/side, ..."""
    s = np.arange(side) / side
    ss, tt = np.meshgrid(s, s, indexing="ij")
    return (ss * m.delta + tt * m.tau).ravel()


_REAL_TO_WIRTINGER = np.array([[0.5, 0.5], [-0.5j, 0.5j]])


def iso_frame(m: TorusModulus, matrix: np.ndarray | None = None) -> FrameMatrix:
    """(dxi1, dxi2) expressed in (dmu_hat, dmu_hat-bar) through Iso.

    ``matrix`` overrides :func:`iso_matrix`, e.g. to probe a perturbed map.
    """
    r = iso_matrix(m) if matrix is None else np.asarray(matrix, dtype=float)
    return FrameMatrix(("xi1", "xi2"), ("muhat", "muhatbar"), r @ _REAL_TO_WIRTINGER)
