"""Quadratic-exponent Hermitian metrics, constant 2-forms and Chern curvature.

Sign convention throughout: ``Theta = -d dbar log h``.  A :class:`ConstTwoForm`
stores an antisymmetric matrix ``C`` and represents ``(1/2) sum C[i,j] e_i ^ e_j``,
so ``C[i, j]`` is the coefficient of ``e_i ^ e_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .cocycle import ExpAffineCocycle
from .torus import FrameMatrix, TorusModulus, z_to_x_frame

REAL_VARS = ("z1", "z2", "mu1", "mu2")
COMPLEX_COORDS = ("z", "zbar", "mu", "mubar")


def wirtinger_ddbar(d_xx, d_yy, d_xy=0.0, d_yx=0.0):
    """``d_w d_wbar'`` from real second derivatives.

    For a single complex variable this is the quarter Laplacian. Shared by the
    closed-form curvature, the finite-difference oracle and the Gram-field
    curvature so every factor of 2 lives here.
    """
    return 0.25 * (d_xx + d_yy + 1j * (d_xy - d_yx))


@dataclass(frozen=True)
class ConstTwoForm:
    coords: tuple[str, ...]
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        n = len(self.coords)
        if c.shape != (n, n):
            raise ValueError(f"coefficient matrix must be {n}x{n}, got {c.shape}")
        if not np.array_equal(c, -c.T):
            raise ValueError("coefficient matrix is not antisymmetric")
        if len(set(self.coords)) != n:
            raise ValueError("duplicate coordinate labels")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "coords", tuple(self.coords))

    @classmethod
    def zero(cls, coords: Sequence[str]) -> "ConstTwoForm":
        return cls(tuple(coords), np.zeros((len(coords), len(coords)), dtype=complex))

    @classmethod
    def from_terms(cls, coords: Sequence[str], terms: Mapping[tuple[str, str], complex]) -> "ConstTwoForm":
        """Build ``sum coef * a ^ b`` from ``{(a, b): coef}``."""
        coords = tuple(coords)
        c = np.zeros((len(coords), len(coords)), dtype=complex)
        for (a, b), v in terms.items():
            i, j = coords.index(a), coords.index(b)
            if i == j:
                raise ValueError(f"{a} ^ {a} vanishes")
            c[i, j] += v
            c[j, i] -= v
        return cls(coords, c)

    def coefficient(self, a: str, b: str) -> complex:
        return complex(self.coeffs[self.coords.index(a), self.coords.index(b)])

    def _check_same(self, other: "ConstTwoForm") -> None:
        if self.coords != other.coords:
            raise ValueError(f"forms live in different frames: {self.coords} vs {other.coords}")

    def __add__(self, other: "ConstTwoForm") -> "ConstTwoForm":
        self._check_same(other)
        return ConstTwoForm(self.coords, self.coeffs + other.coeffs)

    def __sub__(self, other: "ConstTwoForm") -> "ConstTwoForm":
        self._check_same(other)
        return ConstTwoForm(self.coords, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "ConstTwoForm":
        return ConstTwoForm(self.coords, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "ConstTwoForm":
        return self * -1

    def max_abs_diff(self, other: "ConstTwoForm") -> float:
        self._check_same(other)
        return float(np.max(np.abs(self.coeffs - other.coeffs)))

    def allclose(self, other: "ConstTwoForm", atol: float = 1e-12) -> bool:
        return self.max_abs_diff(other) <= atol

    def relabel(self, mapping: Mapping[str, str]) -> "ConstTwoForm":
        return ConstTwoForm(tuple(mapping.get(c, c) for c in self.coords), self.coeffs)

    def restrict(self, coords: Sequence[str]) -> "ConstTwoForm":
        idx = [self.coords.index(c) for c in coords]
        return ConstTwoForm(tuple(coords), self.coeffs[np.ix_(idx, idx)])

    def terms(self, tol: float = 0.0) -> dict[tuple[str, str], complex]:
        out = {}
        n = len(self.coords)
        for i in range(n):
            for j in range(i + 1, n):
                v = complex(self.coeffs[i, j])
                if abs(v) > tol:
                    out[(self.coords[i], self.coords[j])] = v
        return out

    def to_json(self) -> dict:
        return {
            "coords": list(self.coords),
            "coeffs": [[[v.real, v.imag] for v in row] for row in self.coeffs.tolist()],
        }


def change_frame(f: ConstTwoForm, frame: FrameMatrix) -> ConstTwoForm:
    """Rewrite ``f`` in ``frame.new`` given ``frame.old`` in terms of it."""
    if tuple(frame.old) != f.coords:
        raise ValueError(f"frame expects coordinates {frame.old}, form has {f.coords}")
    t = frame.matrix
    c = t.T @ f.coeffs @ t
    # exact antisymmetry; T^T C T only has it up to roundoff
    return ConstTwoForm(frame.new, 0.5 * (c - c.T))


def first_chern(curv: ConstTwoForm | Iterable[ConstTwoForm]) -> ConstTwoForm:
    """``(i / 2 pi) tr Theta``; pass the diagonal entries or an already traced form."""
    if isinstance(curv, ConstTwoForm):
        total = curv
    else:
        forms = list(curv)
        total = forms[0]
        for f in forms[1:]:
            total = total + f
    return total * (1j / (2 * math.pi))


def omega(m: TorusModulus) -> ConstTwoForm:
    """The positive integral form ``delta dx1 ^ dx2``."""
    return ConstTwoForm.from_terms(("x1", "x2"), {("x1", "x2"): m.delta})


def mu_to_x_frame(m: TorusModulus) -> FrameMatrix:
    return z_to_x_frame(m, names=("mu", "mubar"))


# -- metrics -----------------------------------------------------------------

@dataclass(frozen=True)
class QuadExpMetric:
    """``h = exp(Q)`` with ``Q(v) = const + lin . v + v^T quad v`` over (z1, z2, mu1, mu2)."""

    const: float
    lin: np.ndarray
    quad: np.ndarray
    name: str = ""

    def __post_init__(self):
        lin = np.array(self.lin, dtype=float).reshape(4)
        quad = np.array(self.quad, dtype=float).reshape(4, 4)
        if not np.array_equal(quad, quad.T):
            raise ValueError("quadratic part must be symmetric")
        lin.setflags(write=False)
        quad.setflags(write=False)
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "quad", quad)
        object.__setattr__(self, "const", float(self.const))

    @classmethod
    def from_terms(cls, terms: Mapping[tuple[str, ...], float], name: str = "") -> "QuadExpMetric":
        """``{(): c, ("z2",): a, ("z2", "mu2"): b, ...}`` as monomial coefficients."""
        const = 0.0
        lin = np.zeros(4)
        quad = np.zeros((4, 4))
        for key, v in terms.items():
            idx = [REAL_VARS.index(k) for k in key]
            if len(idx) == 0:
                const += v
            elif len(idx) == 1:
                lin[idx[0]] += v
            elif len(idx) == 2:
                i, j = idx
                if i == j:
                    quad[i, i] += v
                else:
                    quad[i, j] += v / 2
                    quad[j, i] += v / 2
            else:
                raise ValueError(f"degree > 2 monomial {key}")
        return cls(const, lin, quad, name)

    @staticmethod
    def _vars(z, mu) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        mu = np.broadcast_to(np.asarray(mu, dtype=complex), z.shape)
        return np.stack([z.real, z.imag, mu.real, mu.imag], axis=-1)

    def log(self, z, mu=0j):
        v = self._vars(z, mu)
        return self.const + v @ self.lin + np.einsum("...i,ij,...j->...", v, self.quad, v)

    def __call__(self, z, mu=0j):
        return np.exp(self.log(z, mu))

    def real_eval(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(np.exp(self.const + v @ self.lin + v @ self.quad @ v))

    def __mul__(self, other: "QuadExpMetric") -> "QuadExpMetric":
        return QuadExpMetric(
            self.const + other.const, self.lin + other.lin, self.quad + other.quad,
            f"{self.name}*{other.name}",
        )

    def inverse(self) -> "QuadExpMetric":
        return QuadExpMetric(-self.const, -self.lin, -self.quad, f"{self.name}^-1")

    def hessian(self) -> np.ndarray:
        return 2 * self.quad

    def shift_difference(self, dz: complex = 0j, dmu: complex = 0j) -> tuple[float, np.ndarray]:
        """``Q(v + s) - Q(v)`` as (constant, linear coefficients)."""
        s = np.array([dz.real, dz.imag, dmu.real, dmu.imag], dtype=float)
        return float(self.lin @ s + s @ self.quad @ s), 2 * self.quad @ s

    def restrict_z0(self) -> "QuadExpMetric":
        """Restriction to z = 0, still as a function on (z, mu)."""
        keep = np.array([0, 0, 1, 1], dtype=float)
        return QuadExpMetric(self.const, self.lin * keep, self.quad * np.outer(keep, keep), f"{self.name}|z=0")

    def allclose(self, other: "QuadExpMetric", atol: float = 1e-12) -> bool:
        return (
            abs(self.const - other.const) <= atol
            and np.allclose(self.lin, other.lin, rtol=0, atol=atol)
            and np.allclose(self.quad, other.quad, rtol=0, atol=atol)
        )


def metric_law_defects(h: QuadExpMetric, cocycle: ExpAffineCocycle) -> dict[str, float]:
    """Per generator, max coefficient gap in ``Q(v+lambda) - Q(v) = -2 Re log e_lambda``.

    This is the quasi-periodicity that makes ``h |theta|^2`` lattice-periodic.
    """
    out = {}
    for g in cocycle.generators():
        dz, dmu = cocycle.shift(g)
        c0, c1 = h.shift_difference(dz, dmu)
        e = cocycle.multiplier(g)
        want0 = -2 * e.c.real
        want1 = -2 * np.array([e.a_z.real, -e.a_z.imag, e.a_mu.real, -e.a_mu.imag])
        out[g] = float(max(abs(c0 - want0), np.max(np.abs(c1 - want1))))
    return out


def h_L0(m: TorusModulus) -> QuadExpMetric:
    return QuadExpMetric.from_terms({("z2", "z2"): -2 * math.pi / m.tau2}, "h_L0")


def h_L0_mu(m: TorusModulus) -> QuadExpMetric:
    """``h_L0`` pulled back along the second factor."""
    return QuadExpMetric.from_terms({("mu2", "mu2"): -2 * math.pi / m.tau2}, "pi2*h_L0")


def h_Lmu(m: TorusModulus, mu: complex) -> QuadExpMetric:
    """``h_L0(z + mu)`` at a fixed, numeric mu."""
    a = -2 * math.pi / m.tau2
    b = complex(mu).imag
    return QuadExpMetric.from_terms({("z2", "z2"): a, ("z2",): 2 * a * b, (): a * b * b}, "h_Lmu")


def h_K(m: TorusModulus) -> QuadExpMetric:
    """``exp(-2 pi (z2 + mu2)^2 / tau2)`` on K-tilde."""
    a = -2 * math.pi / m.tau2
    return QuadExpMetric.from_terms(
        {("z2", "z2"): a, ("mu2", "mu2"): a, ("z2", "mu2"): 2 * a}, "h_K"
    )


def h_idphi_P(m: TorusModulus) -> QuadExpMetric:
    return QuadExpMetric.from_terms({("z2", "mu2"): -4 * math.pi / m.tau2}, "h_P")


def h_Eprime(m: TorusModulus) -> QuadExpMetric:
    """``exp(-2 pi (z2^2 + 2 z2 mu2) / tau2)`` on E'-tilde."""
    a = -2 * math.pi / m.tau2
    return QuadExpMetric.from_terms({("z2", "z2"): a, ("z2", "mu2"): 2 * a}, "h_E'")


# -- curvature ---------------------------------------------------------------

def _assemble(hess: np.ndarray, n_complex: int) -> ConstTwoForm:
    coords = COMPLEX_COORDS[: 2 * n_complex]
    c = np.zeros((2 * n_complex, 2 * n_complex), dtype=complex)
    for a in range(n_complex):
        for b in range(n_complex):
            xa, ya, xb, yb = 2 * a, 2 * a + 1, 2 * b, 2 * b + 1
            hab = wirtinger_ddbar(hess[xa, xb], hess[ya, yb], hess[xa, yb], hess[ya, xb])
            # -h_{a bbar} dw_a ^ dwbar_b
            c[2 * a, 2 * b + 1] += -hab
            c[2 * b + 1, 2 * a] += hab
    return ConstTwoForm(coords, c)


def curvature_closed(h: QuadExpMetric) -> ConstTwoForm:
    """``-d dbar Q`` from the quadratic coefficients, over (z, zbar, mu, mubar)."""
    return _assemble(h.hessian(), 2)


def curvature_fd(
    h: Callable[[np.ndarray], float], point: Sequence[float], step: float = 1e-3
) -> ConstTwoForm:
    """Finite-difference Chern curvature of a positive function of real coordinates.

    ``point`` holds (z1, z2) or (z1, z2, mu1, mu2); second derivatives of
    ``log h`` are central differences at spacing ``step``.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    x0 = np.asarray(point, dtype=float)
    n = x0.size
    if n % 2:
        raise ValueError("point must hold real/imaginary pairs")

    cache: dict[tuple[int, ...], float] = {}

    def logh(offset: tuple[int, ...]) -> float:
        if offset not in cache:
            val = h(x0 + step * np.asarray(offset, dtype=float))
            if not val > 0:
                raise ValueError(f"metric is not positive at offset {offset}: {val}")
            cache[offset] = math.log(val)
        return cache[offset]

    def unit(i: int, s: int) -> tuple[int, ...]:
        e = [0] * n
        e[i] = s
        return tuple(e)

    def pair(i: int, si: int, j: int, sj: int) -> tuple[int, ...]:
        e = [0] * n
        e[i] += si
        e[j] += sj
        return tuple(e)

    hess = np.zeros((n, n))
    f0 = logh((0,) * n)
    for i in range(n):
        hess[i, i] = (logh(unit(i, 1)) - 2 * f0 + logh(unit(i, -1))) / step**2
        for j in range(i + 1, n):
            v = (logh(pair(i, 1, j, 1)) - logh(pair(i, 1, j, -1))
                 - logh(pair(i, -1, j, 1)) + logh(pair(i, -1, j, -1))) / (4 * step**2)
            hess[i, j] = hess[j, i] = v
    return _assemble(hess, n // 2)


# -- reference forms ---------------------------------------------------------

def curv_K_expected(m: TorusModulus) -> ConstTwoForm:
    k = math.pi / m.tau2
    return ConstTwoForm.from_terms(
        COMPLEX_COORDS,
        {("z", "zbar"): k, ("mu", "mubar"): k, ("z", "mubar"): k, ("mu", "zbar"): k},
    )


def curv_L0_expected(m: TorusModulus) -> ConstTwoForm:
    return ConstTwoForm.from_terms(COMPLEX_COORDS, {("z", "zbar"): math.pi / m.tau2})


def curv_P_expected(m: TorusModulus) -> ConstTwoForm:
    k = math.pi / m.tau2
    return ConstTwoForm.from_terms(COMPLEX_COORDS, {("z", "mubar"): k, ("mu", "zbar"): k})
