"""Multiplier systems of exponential-affine type on M and M x M.

Every multiplier ``e_lambda`` used for the bundles L0, L_mu, K-tilde, the
Poincare bundle pullback and the flat bundles is ``exp(a_z*z + a_mu*mu + c)``.
That class is closed under products, inverses, translations and changes of
trivialisation by nowhere-vanishing exponentials, so compatibility and
isomorphism questions reduce to exponent arithmetic: coefficients of z and mu
must agree exactly and constants must agree modulo ``2*pi*i*Z``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import counter_rng
from .torus import TorusModulus, iso_inverse

TWO_PI_I = 2j * math.pi
MOD_TOL = 1e-12

# e_10, e_20 translate z by lambda_1, lambda_2; e_01, e_02 translate mu
GENERATORS = ("e_10", "e_20", "e_01", "e_02")


def _shift(name: str, m: TorusModulus) -> tuple[complex, complex]:
    if name == "e_10":
        return m.lambda1, 0j
    if name == "e_20":
        return m.lambda2, 0j
    if name == "e_01":
        return 0j, m.lambda1
    if name == "e_02":
        return 0j, m.lambda2
    raise KeyError(name)


def is_integer_multiple_of_2pi_i(c: complex, tol: float = MOD_TOL) -> bool:
    q = complex(c) / TWO_PI_I
    return abs(q.real - round(q.real)) <= tol and abs(q.imag) <= tol


@dataclass(frozen=True)
class ExpAffine:
    """The function ``exp(a_z*z + a_mu*mu + c)``."""

    a_z: complex = 0j
    a_mu: complex = 0j
    c: complex = 0j

    def __post_init__(self):
        object.__setattr__(self, "a_z", complex(self.a_z))
        object.__setattr__(self, "a_mu", complex(self.a_mu))
        object.__setattr__(self, "c", complex(self.c))

    def __mul__(self, other: "ExpAffine") -> "ExpAffine":
        return ExpAffine(self.a_z + other.a_z, self.a_mu + other.a_mu, self.c + other.c)

    def __truediv__(self, other: "ExpAffine") -> "ExpAffine":
        return self * other.inverse()

    def inverse(self) -> "ExpAffine":
        return ExpAffine(-self.a_z, -self.a_mu, -self.c)

    def shifted(self, dz: complex = 0j, dmu: complex = 0j) -> "ExpAffine":
        """The function ``w -> self(z + dz, mu + dmu)``."""
        return ExpAffine(self.a_z, self.a_mu, self.c + self.a_z * dz + self.a_mu * dmu)

    def exponent(self, z, mu=0j):
        return self.a_z * np.asarray(z) + self.a_mu * np.asarray(mu) + self.c

    def __call__(self, z, mu=0j):
        return np.exp(self.exponent(z, mu))

    def is_trivial(self, tol: float = MOD_TOL) -> bool:
        return self.a_z == 0 and self.a_mu == 0 and is_integer_multiple_of_2pi_i(self.c, tol)

    def equals_mod(self, other: "ExpAffine", tol: float = MOD_TOL) -> bool:
        """Equal as multipliers: same linear part, constants differ by 2*pi*i*Z."""
        return (self / other).is_trivial(tol)

    def to_json(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in ("a_z", "a_mu", "c")}

    @classmethod
    def from_json(cls, data: dict) -> "ExpAffine":
        return cls(*(complex(*data[k]) for k in ("a_z", "a_mu", "c")))


ONE = ExpAffine()


@dataclass(frozen=True)
class ExpAffineCocycle:
    """Multipliers for lambda_10, lambda_20 (z-translations) and lambda_01, lambda_02 (mu)."""

    modulus: TorusModulus
    e_10: ExpAffine = ONE
    e_20: ExpAffine = ONE
    e_01: ExpAffine = ONE
    e_02: ExpAffine = ONE
    product: bool = False
    name: str = ""

    def multiplier(self, gen: str) -> ExpAffine:
        return getattr(self, gen)

    def generators(self) -> tuple[str, ...]:
        return GENERATORS if self.product else GENERATORS[:2]

    def shift(self, gen: str) -> tuple[complex, complex]:
        return _shift(gen, self.modulus)

    def map(self, fn, name: str | None = None) -> "ExpAffineCocycle":
        kw = {g: fn(g, self.multiplier(g)) for g in GENERATORS}
        return replace(self, name=self.name if name is None else name, **kw)

    def equals_mod(self, other: "ExpAffineCocycle", tol: float = MOD_TOL) -> bool:
        return all(self.multiplier(g).equals_mod(other.multiplier(g), tol) for g in GENERATORS)

    def to_json(self) -> dict:
        return {g: self.multiplier(g).to_json() for g in GENERATORS}


@dataclass
class CompatibilityReport:
    ok: bool
    failures: list[tuple[str, ExpAffine]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _relation_pairs(c: ExpAffineCocycle):
    gens = c.generators()
    for i, g in enumerate(gens):
        for h in gens[i + 1:]:
            yield g, h


def _relation_label(g: str, h: str) -> str:
    kinds = {g[2] == "0", h[2] == "0"}
    if kinds == {False}:
        family = "(z,z)"
    elif kinds == {True}:
        family = "(mu,mu)"
    else:
        family = "(z,mu)"
    return f"{family}: {g}(w+{h}) {h}(w) = {h}(w+{g}) {g}(w)"


def relation_defect(c: ExpAffineCocycle, g: str, h: str) -> ExpAffine:
    """Exponent of ``e_g(w+lambda_h) e_h(w) / (e_h(w+lambda_g) e_g(w))``."""
    eg, eh = c.multiplier(g), c.multiplier(h)
    lhs = eg.shifted(*c.shift(h)) * eh
    rhs = eh.shifted(*c.shift(g)) * eg
    return lhs / rhs


def check_compatibility(c: ExpAffineCocycle, tol: float = MOD_TOL) -> CompatibilityReport:
    """Exact check of the compatibility relations as exponent identities."""
    failures = []
    for g, h in _relation_pairs(c):
        d = relation_defect(c, g, h)
        if not d.is_trivial(tol):
            failures.append((_relation_label(g, h), d))
    return CompatibilityReport(not failures, failures)


def check_compatibility_numeric(
    c: ExpAffineCocycle, n_points: int = 50, rtol: float = 1e-9, stream: int = 11
) -> bool:
    """Brute-force oracle: evaluate both sides of every relation at sample points."""
    rng = counter_rng(stream)
    zs = rng.uniform(-1, 1, n_points) + 1j * rng.uniform(-1, 1, n_points)
    mus = rng.uniform(-1, 1, n_points) + 1j * rng.uniform(-1, 1, n_points)
    for g, h in _relation_pairs(c):
        eg, eh = c.multiplier(g), c.multiplier(h)
        (gz, gm), (hz, hm) = c.shift(g), c.shift(h)
        for z, mu in zip(zs, mus):
            lhs = cmath.exp(complex(eg.exponent(z + hz, mu + hm))) * cmath.exp(complex(eh.exponent(z, mu)))
            rhs = cmath.exp(complex(eh.exponent(z + gz, mu + gm))) * cmath.exp(complex(eg.exponent(z, mu)))
            if abs(lhs - rhs) > rtol * max(abs(lhs), abs(rhs)):
                return False
    return True


# -- constructions -----------------------------------------------------------

def build_L0(m: TorusModulus) -> ExpAffineCocycle:
    return ExpAffineCocycle(
        m, e_20=ExpAffine(a_z=-TWO_PI_I, c=-1j * math.pi * m.tau), name="L0"
    )


def build_Lmu(m: TorusModulus, mu: complex) -> ExpAffineCocycle:
    return ExpAffineCocycle(
        m,
        e_20=ExpAffine(a_z=-TWO_PI_I, c=-TWO_PI_I * mu - 1j * math.pi * m.tau),
        name="L_mu",
    )


def build_pi1_L0(m: TorusModulus) -> ExpAffineCocycle:
    return ExpAffineCocycle(
        m, e_20=ExpAffine(a_z=-TWO_PI_I, c=-1j * math.pi * m.tau), product=True, name="pi1*L0"
    )


def build_pi2_L0(m: TorusModulus) -> ExpAffineCocycle:
    return ExpAffineCocycle(
        m, e_02=ExpAffine(a_mu=-TWO_PI_I, c=-1j * math.pi * m.tau), product=True, name="pi2*L0"
    )


def build_idphi_P(m: TorusModulus) -> ExpAffineCocycle:
    return ExpAffineCocycle(
        m,
        e_20=ExpAffine(a_mu=-TWO_PI_I),
        e_02=ExpAffine(a_z=-TWO_PI_I),
        product=True,
        name="(Id x phi)*P",
    )


def build_Ktilde(m: TorusModulus) -> ExpAffineCocycle:
    e = ExpAffine(a_z=-TWO_PI_I, a_mu=-TWO_PI_I, c=-1j * math.pi * m.tau)
    return ExpAffineCocycle(m, e_20=e, e_02=e, product=True, name="K~")


def build_Eprime_tilde(m: TorusModulus) -> ExpAffineCocycle:
    return tensor(build_pi1_L0(m), build_idphi_P(m), name="E'~")


def build_dolbeault_class(m: TorusModulus, sigma: complex) -> ExpAffineCocycle:
    """Constant multipliers (e^{2 pi i sigma delta}, e^{2 pi i sigma conj(tau)}) of sigma dz-bar."""
    return ExpAffineCocycle(
        m,
        e_10=ExpAffine(c=TWO_PI_I * sigma * m.delta),
        e_20=ExpAffine(c=TWO_PI_I * sigma * m.tau.conjugate()),
        name="alpha",
    )


def build_degree0(m: TorusModulus, mu: complex) -> ExpAffineCocycle:
    """Multipliers of T_mu^* L0 (x) L0^*, equivalently of P at mu_hat = mu."""
    return ExpAffineCocycle(m, e_20=ExpAffine(c=-TWO_PI_I * mu), name="P_mu")


def build_L_delta_xi(m: TorusModulus, xi: tuple[float, float]) -> ExpAffineCocycle:
    a = xi[0] / m.delta
    return ExpAffineCocycle(
        m, e_10=ExpAffine(c=1j * a * m.delta), e_20=ExpAffine(c=1j * a * m.tau), name="L_Delta"
    )


def build_Lbar_xi(m: TorusModulus, xi: tuple[float, float]) -> ExpAffineCocycle:
    return ExpAffineCocycle(m, e_10=ExpAffine(c=1j * xi[0]), e_20=ExpAffine(c=1j * xi[1]), name="Lbar_xi")


# -- operations --------------------------------------------------------------

def _same_torus(c1: ExpAffineCocycle, c2: ExpAffineCocycle) -> None:
    if c1.modulus != c2.modulus:
        raise ValueError("cocycles live on different tori")


def tensor(c1: ExpAffineCocycle, c2: ExpAffineCocycle, name: str | None = None) -> ExpAffineCocycle:
    _same_torus(c1, c2)
    out = c1.map(lambda g, e: e * c2.multiplier(g))
    label = name if name is not None else f"{c1.name} (x) {c2.name}"
    return replace(out, product=c1.product or c2.product, name=label)


def dual(c: ExpAffineCocycle) -> ExpAffineCocycle:
    return c.map(lambda g, e: e.inverse(), name=f"{c.name}^*")


def trivial_cocycle(m: TorusModulus, product: bool = False) -> ExpAffineCocycle:
    return ExpAffineCocycle(m, product=product, name="O")


def translate_pullback(c: ExpAffineCocycle, mu: complex) -> ExpAffineCocycle:
    """Pull back along z -> z + mu."""
    if c.product:
        raise ValueError("translate_pullback is only defined for cocycles on a single torus")
    return c.map(lambda g, e: e.shifted(dz=mu), name=f"T_mu^*{c.name}")


def change_trivialization(c: ExpAffineCocycle, f: ExpAffine) -> ExpAffineCocycle:
    """e_lambda(w) -> f(w + lambda) e_lambda(w) / f(w)."""
    return c.map(lambda g, e: f.shifted(*c.shift(g)) * e / f)


@dataclass(frozen=True)
class SectionWitness:
    """A nowhere-vanishing section ``form`` of the bundle given by ``cocycle``."""

    form: ExpAffine
    cocycle: ExpAffineCocycle

    def defects(self) -> dict[str, ExpAffine]:
        """Exponent of ``w(x+lambda) / (e_lambda(x) w(x))`` per generator."""
        out = {}
        for g in self.cocycle.generators():
            shifted = self.form.shifted(*self.cocycle.shift(g))
            out[g] = shifted / (self.cocycle.multiplier(g) * self.form)
        return out

    def holds(self, tol: float = MOD_TOL) -> bool:
        return all(d.is_trivial(tol) for d in self.defects().values())

    def numeric_residual(self, n_points: int = 50, stream: int = 12) -> float:
        rng = counter_rng(stream)
        zs = rng.uniform(-1, 1, n_points) + 1j * rng.uniform(-1, 1, n_points)
        mus = rng.uniform(-1, 1, n_points) + 1j * rng.uniform(-1, 1, n_points)
        worst = 0.0
        for g in self.cocycle.generators():
            dz, dmu = self.cocycle.shift(g)
            e = self.cocycle.multiplier(g)
            lhs = self.form(zs + dz, mus + dmu)
            rhs = e(zs, mus) * self.form(zs, mus)
            worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.abs(rhs))))
        return worst


def constant_trivializer(c: ExpAffineCocycle, tol: float = 1e-10) -> SectionWitness | None:
    """Witness ``exp(a z)`` trivialising a cocycle with constant multipliers, if one exists.

    Needs ``a*delta = c1`` and ``a*tau = c2`` modulo 2*pi*i.  Writing
    ``a = (c1 + 2*pi*i*k)/delta`` leaves ``n - k*tau/delta = u`` with
    ``u = (c1*tau/delta - c2)/(2*pi*i)``, which has a unique real solution.
    """
    if c.product:
        raise ValueError("only single-torus cocycles are supported")
    e1, e2 = c.e_10, c.e_20
    if any(x != 0 for x in (e1.a_z, e1.a_mu, e2.a_z, e2.a_mu)):
        raise ValueError("multipliers are not constant")
    m = c.modulus
    u = (e1.c * m.tau / m.delta - e2.c) / TWO_PI_I
    k = -m.delta * u.imag / m.tau2
    n = u.real + k * m.tau1 / m.delta
    if abs(k - round(k)) > tol or abs(n - round(n)) > tol:
        return None
    a = (e1.c + TWO_PI_I * round(k)) / m.delta
    return SectionWitness(ExpAffine(a_z=a), c)


@dataclass
class P2PMatch:
    ok: bool
    xi: tuple[float, float]
    mu_hat: complex
    product: ExpAffineCocycle
    target: ExpAffineCocycle
    witness: SectionWitness
    witness_ok: bool
    witness_residual: float


def verify_P2P_matching(xi: tuple[float, float], m: TorusModulus) -> P2PMatch:
    """Check ``P_{mu_hat} (x) L_{Delta,xi} == Lbar_xi`` and that ``exp(i a z)`` trivialises L_{Delta,xi}."""
    mu_hat = iso_inverse(xi, m)
    p_mu = build_degree0(m, mu_hat)
    l_delta = build_L_delta_xi(m, xi)
    prod = tensor(p_mu, l_delta)
    target = build_Lbar_xi(m, xi)
    witness = SectionWitness(ExpAffine(a_z=1j * xi[0] / m.delta), l_delta)
    w_ok = witness.holds()
    return P2PMatch(
        ok=prod.equals_mod(target) and w_ok,
        xi=(float(xi[0]), float(xi[1])),
        mu_hat=mu_hat,
        product=prod,
        target=target,
        witness=witness,
        witness_ok=w_ok,
        witness_residual=witness.numeric_residual(),
    )
