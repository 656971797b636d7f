"""The family f_{a,b}(z) = z^3 - 3/2 (a+b) z^2 + 3ab z of monic cubics fixing 0."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DegenerateCritical, Escaped, NonDistinct
from .numerics import EXT, check_finite, is_extended, to_precision

ESCAPE_CUTOFF = 1e15


@dataclass(frozen=True)
class CubicPolynomial:
    """Monic cubic fixing 0, stored by its critical points.

    ``a`` is the critical point in the omega slot (the one whose orbit reaches
    the other), ``b`` the omega-prime slot.  Coefficients are derived.
    """

    a: complex
    b: complex
    c2: complex = field(init=False, repr=False, compare=False)
    c1: complex = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "c2", -1.5 * (self.a + self.b))
        object.__setattr__(self, "c1", 3 * self.a * self.b)

    def __call__(self, z):
        return z * (z * (z + self.c2) + self.c1)

    def derivative(self, z):
        return (3 * z + 2 * self.c2) * z + self.c1

    def second_derivative(self, z):
        return 6 * z + 2 * self.c2

    @property
    def critical_points(self):
        return (self.a, self.b)

    @property
    def coefficients(self):
        """(c1, c2): f(z) = z^3 + c2 z^2 + c1 z."""
        return (self.c1, self.c2)

    @property
    def extended(self) -> bool:
        return is_extended(self.a)

    def with_precision(self, precision: str) -> "CubicPolynomial":
        return CubicPolynomial(to_precision(self.a, precision), to_precision(self.b, precision))

    def as_double(self) -> "CubicPolynomial":
        return self.with_precision("double")

    def swapped(self) -> "CubicPolynomial":
        return CubicPolynomial(self.b, self.a)

    def escape_radius(self) -> float:
        return max(2.0, abs(complex(self.c2)) + abs(complex(self.c1)) + 1.0)

    def is_real(self, tol: float = 1e-14) -> bool:
        return abs(complex(self.c1).imag) <= tol and abs(complex(self.c2).imag) <= tol

    def coefficient_distance(self, other: "CubicPolynomial") -> float:
        return max(abs(complex(self.c1 - other.c1)), abs(complex(self.c2 - other.c2)))

    def to_record(self) -> dict:
        a, b = complex(self.a), complex(self.b)
        return {"a_re": a.real, "a_im": a.imag, "b_re": b.real, "b_im": b.imag}

    @classmethod
    def from_record(cls, rec: dict) -> "CubicPolynomial":
        return cls(complex(float(rec["a_re"]), float(rec["a_im"])),
                   complex(float(rec["b_re"]), float(rec["b_im"])))


def from_critical_points(a, b) -> CubicPolynomial:
    check_finite(a, b)
    scale = max(1.0, float(abs(a)), float(abs(b)))
    if abs(a - b) < 1e-14 * scale:
        raise DegenerateCritical(f"critical points {a} and {b} coincide")
    return CubicPolynomial(a, b)


def from_coefficients(c1, c2, k: int | None = None) -> CubicPolynomial:
    """Recover (a, b) from f(z) = z^3 + c2 z^2 + c1 z.

    With ``k`` given, ``a`` is the critical point whose k-th iterate is closest
    to the other one; otherwise the pair is ordered lexicographically.
    """
    s = -2 * c2 / 3
    p = c1 / 3
    disc = (s * s - 4 * p) ** 0.5 if not is_extended(s) else EXT.sqrt(s * s - 4 * p)
    r1, r2 = (s + disc) / 2, (s - disc) / 2
    pair = sorted([r1, r2], key=lambda z: (float(z.real), float(z.imag)))
    f = from_critical_points(pair[0], pair[1])
    if k is None:
        return f
    g = f.swapped()

    def miss(h):
        try:
            return abs(complex(iterate(h, h.a, k) - h.b))
        except Escaped:
            return math.inf

    return f if miss(f) <= miss(g) else g


def omega_closed_form(precision: str = "double"):
    """Unique real negative solution of f^2(w) = 3w for f(z) = z(z - 3w)^2."""
    if precision == "extended":
        return -EXT.sqrt(6 + 2 * EXT.sqrt(9 + 8 * EXT.sqrt(3))) / 4
    return -0.25 * math.sqrt(6 + 2 * math.sqrt(9 + 8 * math.sqrt(3)))


def seed_polynomial(precision: str = "double") -> CubicPolynomial:
    """f(z) = z (z - 3w)^2 with critical points (w, 3w)."""
    w = omega_closed_form(precision)
    return CubicPolynomial(to_precision(w, precision), to_precision(3 * w, precision))


def iterate(f: CubicPolynomial, z, n: int):
    if n < 0:
        raise ValueError("n must be non-negative")
    for step in range(1, n + 1):
        z = f(z)
        if not abs(z) <= ESCAPE_CUTOFF:
            raise Escaped(step, z)
    return z


def orbit(f: CubicPolynomial, z, n: int) -> list:
    """[z, f(z), ..., f^n(z)]."""
    out = [z]
    for _ in range(n):
        out.append(iterate(f, out[-1], 1))
    return out


@dataclass(frozen=True)
class FixedPointSet:
    alpha: complex
    beta: complex
    gamma: complex
    multipliers: tuple

    @property
    def points(self):
        return (self.alpha, self.beta, self.gamma)

    def all_repelling(self) -> bool:
        return all(abs(m) > 1 for m in self.multipliers)


def fixed_points(f: CubicPolynomial, beta_first=None) -> FixedPointSet:
    """alpha = 0 and the two roots of z^2 + c2 z + (c1 - 1).

    The nonzero pair is ordered lexicographically unless ``beta_first`` picks
    the point to call beta (used once the 1/2-ray landing is known).
    """
    c2, c1 = f.c2, f.c1
    disc = c2 * c2 - 4 * (c1 - 1)
    root = EXT.sqrt(disc) if is_extended(disc) else complex(disc) ** 0.5
    q = -(c2 + root) / 2 if abs(c2 + root) >= abs(c2 - root) else -(c2 - root) / 2
    r1 = q
    r2 = (c1 - 1) / q if abs(q) > 0 else -c2 - q
    scale = max(1.0, float(abs(r1)), float(abs(r2)))
    if abs(r1 - r2) < 1e-12 * scale or min(abs(r1), abs(r2)) < 1e-12:
        raise NonDistinct("fixed points are not distinct")
    beta, gamma = sorted([r1, r2], key=lambda z: (float(z.real), float(z.imag)))
    if beta_first is not None and abs(gamma - beta_first) < abs(beta - beta_first):
        beta, gamma = gamma, beta
    zero = 0 * c1
    mult = tuple(f.derivative(p) for p in (zero, beta, gamma))
    return FixedPointSet(zero, beta, gamma, mult)
