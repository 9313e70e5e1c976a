"""Characters, the connection d + i xi over M x V*, parallel transport and loop holonomy.

Points of the universal cover are real 4-vectors ``(x1, x2, xi1, xi2)``: x in
lattice units (``lambda_j`` has x-coordinates ``e_j``) and xi the coefficients
of ``xi1 dx1 + xi2 dx2``.  The fiber over M x V* is trivial; the 2 pi Lambda*
identification acts on it by ``sigma -> exp(-2 pi i <nu, x>) sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .forms import COMPLEX_COORDS, ConstTwoForm, change_frame, curv_P_expected
from .torus import FrameMatrix, TorusModulus, iso_frame, x_to_z_frame

COORDS = ("x1", "x2", "xi1", "xi2")
STEPS_PER_UNIT = 1024
MIN_STEPS = 16
INTEGER_TOL = 1e-9


def _integer_vector(v, scale: float = 1.0) -> np.ndarray:
    a = np.asarray(v, dtype=float) / scale
    n = np.round(a)
    if a.shape != (2,) or np.max(np.abs(a - n)) > INTEGER_TOL:
        raise ValueError(f"{tuple(np.asarray(v, dtype=float))} is not a lattice vector")
    return n


@dataclass(frozen=True)
class Character:
    """``chi_xi`` on Lambda (kind "lattice") or ``chi_x`` on 2 pi Lambda* (kind "dual-lattice")."""

    kind: str
    parameter: tuple[float, float]

    def __post_init__(self):
        if self.kind not in ("lattice", "dual-lattice"):
            raise ValueError(f"unknown character kind {self.kind!r}")
        object.__setattr__(self, "parameter", (float(self.parameter[0]), float(self.parameter[1])))


def xi_character(xi: Sequence[float]) -> Character:
    return Character("lattice", tuple(xi))


def x_character(x: Sequence[float]) -> Character:
    return Character("dual-lattice", tuple(x))


def character_value(chi: Character, lattice_vector: Sequence[float]) -> complex:
    """Evaluate a character on a lattice vector.

    For ``chi_xi`` the vector is ``n1 lambda1 + n2 lambda2`` given as (n1, n2)
    and ``<xi, lambda> = xi1 n1 + xi2 n2``.  For ``chi_x`` it is ``2 pi nu`` given
    by its dx-coefficients, which must lie in ``2 pi Z``.
    """
    p = np.asarray(chi.parameter)
    if chi.kind == "lattice":
        n = _integer_vector(lattice_vector)
        return complex(np.exp(-1j * float(p @ n)))
    nu = _integer_vector(lattice_vector, scale=2 * math.pi)
    return complex(np.exp(-2j * math.pi * float(nu @ p)))


def gluing_factor(x: Sequence[float], nu: Sequence[int]) -> complex:
    """Fiber multiplier of the 2 pi nu identification at base point x."""
    return complex(np.exp(-2j * math.pi * float(np.dot(nu, x))))


@dataclass(frozen=True)
class ConnectionOneForm:
    """``A = sum_k coeffs(p)[k] dp_k`` over (x1, x2, xi1, xi2) with imaginary coefficients."""

    coeffs: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def __call__(self, point, tangent) -> complex:
        return complex(np.dot(self.coeffs(np.asarray(point, dtype=float)), tangent))


def poincare_connection() -> ConnectionOneForm:
    """``A = i (xi1 dx1 + xi2 dx2)``."""
    return ConnectionOneForm(lambda p: np.array([1j * p[2], 1j * p[3], 0j, 0j]), "poincare")


def flat_connection(xi: Sequence[float]) -> ConnectionOneForm:
    """``d + i xi`` on M for a fixed xi; ignores the xi-coordinates of the point."""
    c = np.array([1j * xi[0], 1j * xi[1], 0j, 0j])
    return ConnectionOneForm(lambda p: c, f"flat{tuple(xi)}")


def dA_form() -> ConstTwoForm:
    """``i (dxi1 ^ dx1 + dxi2 ^ dx2)`` over :data:`COORDS`."""
    return ConstTwoForm.from_terms(COORDS, {("xi1", "x1"): 1j, ("xi2", "x2"): 1j})


def _segment_steps(lengths: np.ndarray, n_steps: int | None) -> list[int]:
    total = float(lengths.sum())
    if n_steps is None:
        n_steps = max(MIN_STEPS, math.ceil(STEPS_PER_UNIT * total))
    elif n_steps < MIN_STEPS:
        raise ValueError(f"n_steps must be at least {MIN_STEPS}, got {n_steps}")
    return [max(1, round(n_steps * ln / total)) if ln > 0 else 0 for ln in lengths]


def parallel_transport(A: ConnectionOneForm, path, n_steps: int | None = None) -> complex:
    """Solve ``sigma' = -A(gamma, gamma') sigma`` along a polygon with RK4; returns sigma(1).

    ``path`` is a sequence of vertices in (x1, x2, xi1, xi2).  ``n_steps`` is
    the total step count, spread over the segments in proportion to their
    length; by default 1024 per unit length.
    """
    verts = np.asarray(path, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 4 or len(verts) < 2:
        raise ValueError("path needs at least two vertices in (x1, x2, xi1, xi2)")
    seg = np.diff(verts, axis=0)
    lengths = np.linalg.norm(seg, axis=1)
    if lengths.sum() == 0:
        return 1 + 0j
    sigma = 1 + 0j
    for start, d, k in zip(verts[:-1], seg, _segment_steps(lengths, n_steps)):
        if k == 0:
            continue
        h = 1.0 / k

        def rhs(t, s):
            return -A(start + t * d, d) * s

        for i in range(k):
            t = i * h
            k1 = rhs(t, sigma)
            k2 = rhs(t + h / 2, sigma + h / 2 * k1)
            k3 = rhs(t + h / 2, sigma + h / 2 * k2)
            k4 = rhs(t + h, sigma + h * k3)
            sigma += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return sigma


def holonomy(A: ConnectionOneForm, loop, n_steps: int | None = None) -> complex:
    """Transport around a loop of M x M*, closing it with the gluing factor.

    The lift may end at ``start + (n, 2 pi nu)`` with integer n and nu.  Lambda
    acts trivially on the fiber, the 2 pi Lambda* step contributes
    :func:`gluing_factor`.
    """
    verts = np.asarray(loop, dtype=float)
    jump = verts[-1] - verts[0]
    _integer_vector(jump[:2])
    nu = _integer_vector(jump[2:], scale=2 * math.pi)
    return parallel_transport(A, verts, n_steps) * gluing_factor(verts[-1][:2], nu)


def square_loop(center, plane: tuple[str, str], side: float) -> np.ndarray:
    """Corners of the square in ``plane`` traversed +u, +v, -u, -v."""
    c = np.asarray(center, dtype=float)
    iu, iv = COORDS.index(plane[0]), COORDS.index(plane[1])
    if iu == iv:
        raise ValueError("plane needs two distinct coordinates")
    u = np.zeros(4)
    v = np.zeros(4)
    u[iu] = side
    v[iv] = side
    p0 = c - (u + v) / 2
    return np.array([p0, p0 + u, p0 + u + v, p0 + v, p0])


def loop_curvature(
    A: ConnectionOneForm, center, plane: tuple[str, str], side: float, n_steps: int | None = None
) -> complex:
    """``-log(holonomy) / side^2`` for the square loop; tends to the ``du ^ dv`` coefficient of dA."""
    if not side > 0:
        raise ValueError("side must be positive")
    hol = parallel_transport(A, square_loop(center, plane, side), n_steps)
    return -complex(np.log(hol)) / side**2


@dataclass(frozen=True)
class PullbackCheck:
    ok: bool
    mismatch: float
    relative_mismatch: float
    pulled_back: ConstTwoForm

    def __bool__(self) -> bool:
        return self.ok


def pullback_frame(m: TorusModulus, iso_matrix_override=None) -> FrameMatrix:
    """(dx1, dx2, dxi1, dxi2) in (dz, dzbar, dmuhat, dmuhatbar)."""
    return FrameMatrix.block(x_to_z_frame(m), iso_frame(m, iso_matrix_override))


def pullback_curvature_check(m: TorusModulus, iso_matrix_override=None, tol: float = 1e-12) -> PullbackCheck:
    """Pull dA back through the x-z frame and Iso and compare with the curvature of P.

    The target is ``(pi / tau2)(dz ^ dmuhatbar + dmuhat ^ dzbar)``; after the
    relabel muhat -> mu it must coincide with the closed-form curvature of the
    pulled-back Poincare metric.
    """
    pulled = change_frame(dA_form(), pullback_frame(m, iso_matrix_override))
    k = math.pi / m.tau2
    target = ConstTwoForm.from_terms(
        pulled.coords, {("z", "muhatbar"): k, ("muhat", "zbar"): k}
    )
    relabeled = pulled.relabel({"muhat": "mu", "muhatbar": "mubar"})
    if relabeled.coords != COMPLEX_COORDS:
        raise RuntimeError("unexpected frame ordering")
    mismatch = max(pulled.max_abs_diff(target), relabeled.max_abs_diff(curv_P_expected(m)))
    return PullbackCheck(mismatch <= tol, mismatch, mismatch / k, pulled)
