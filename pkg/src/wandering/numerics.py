"""Numeric kernel: exact circle angles, cubic roots and damped Newton solvers.

Scalars are plain Python ``complex`` in double precision.  Passing values
created with :func:`ext` (or ``precision="extended"``) runs the same code on
``mpmath`` numbers with a 128-bit significand.  A private mpmath context is
used so the global ``mpmath.mp`` precision is never touched.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import mpmath
import numpy as np

from .errors import DerivativeVanished, NoConvergence, NonFiniteInput, SingularJacobian, WanderingError

EXT = mpmath.MPContext()
EXT.prec = 128

PRECISIONS = ("double", "extended")

MAX_HALVINGS = 20


def ext(z):
    """Lift a number to extended precision."""
    if isinstance(z, (complex, np.complexfloating)):
        return EXT.mpc(z.real, z.imag)
    return EXT.mpc(z)


def is_extended(z) -> bool:
    return isinstance(z, (EXT.mpc, EXT.mpf))


def to_precision(z, precision: str):
    if precision == "double":
        return complex(z)
    if precision == "extended":
        return ext(z)
    raise ValueError(f"unknown precision {precision!r}")


def is_finite(z) -> bool:
    if is_extended(z):
        return bool(EXT.isfinite(z))
    z = complex(z)
    return math.isfinite(z.real) and math.isfinite(z.imag)


def check_finite(*values) -> None:
    for v in values:
        if not is_finite(v):
            raise NonFiniteInput(f"non-finite value {v!r}")


# ---------------------------------------------------------------------------
# Angles on T = R/Z


@dataclass(frozen=True)
class CircleAngle:
    """Exact rational angle num/den on the circle, stored reduced with 0 <= num < den."""

    num: int
    den: int

    def __post_init__(self):
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        g = math.gcd(self.num, self.den)
        object.__setattr__(self, "num", (self.num // g) % (self.den // g))
        object.__setattr__(self, "den", self.den // g)

    @classmethod
    def of(cls, value) -> "CircleAngle":
        if isinstance(value, CircleAngle):
            return value
        if isinstance(value, str):
            return cls.parse(value)
        q = Fraction(value)
        return cls(q.numerator, q.denominator)

    @classmethod
    def parse(cls, text: str) -> "CircleAngle":
        text = text.strip()
        if "/" in text:
            p, q = text.split("/")
            return cls(int(p), int(q))
        return cls.of(Fraction(text))

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __float__(self) -> float:
        return self.num / self.den

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"

    def __lt__(self, other: "CircleAngle") -> bool:
        return self.num * other.den < other.num * self.den

    def __add__(self, offset) -> "CircleAngle":
        return CircleAngle.of(self.fraction + Fraction(offset))

    def __sub__(self, other) -> Fraction:
        """Signed difference in (-1/2, 1/2]."""
        d = (self.fraction - CircleAngle.of(other).fraction) % 1
        return d - 1 if d > Fraction(1, 2) else d

    def __neg__(self) -> "CircleAngle":
        return CircleAngle(-self.num, self.den)

    def triple(self, times: int = 1) -> "CircleAngle":
        return CircleAngle(self.num * 3**times, self.den)

    def preimages(self) -> list["CircleAngle"]:
        """The three angles mapped to this one by tripling, in increasing order."""
        return [CircleAngle(self.num + k * self.den, 3 * self.den) for k in range(3)]

    def signed(self) -> Fraction:
        """Representative in (-1/2, 1/2]."""
        q = self.fraction
        return q - 1 if q > Fraction(1, 2) else q


def orbit_of(theta: CircleAngle) -> list[CircleAngle]:
    """Forward orbit of theta under tripling, stopping before the first repeat."""
    seen = []
    index = {}
    t = theta
    while t not in index:
        index[t] = len(seen)
        seen.append(t)
        t = t.triple()
    return seen


def tripling_closure(angles: Sequence[CircleAngle]) -> list[CircleAngle]:
    """Smallest tripling-invariant set containing the given angles, sorted."""
    out = set()
    for a in angles:
        t = CircleAngle.of(a)
        while t not in out:
            out.add(t)
            t = t.triple()
    return sorted(out)


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc [start, end] on T."""

    start: CircleAngle
    end: CircleAngle

    def contains(self, t, closed: bool = True) -> bool:
        t = CircleAngle.of(t)
        length = (self.end.fraction - self.start.fraction) % 1
        pos = (t.fraction - self.start.fraction) % 1
        if closed:
            return pos <= length
        return 0 < pos < length

    def length(self) -> Fraction:
        return (self.end.fraction - self.start.fraction) % 1


# ---------------------------------------------------------------------------
# Polynomial roots


def _lex_key(z):
    return (float(z.real), float(z.imag))


def cubic_roots(c3, c2, c1, c0) -> list:
    """Roots of c3 z^3 + c2 z^2 + c1 z + c0 with multiplicity, sorted by (re, im)."""
    check_finite(c3, c2, c1, c0)
    if abs(c3) == 0:
        raise ValueError("leading coefficient must be nonzero")
    coeffs = (c3, c2, c1, c0)
    extended = any(is_extended(c) for c in coeffs)
    approx = np.roots([complex(c) for c in coeffs])
    roots = [complex(r) for r in approx]
    if extended:
        coeffs = tuple(ext(c) for c in coeffs)
        roots = [ext(r) for r in roots]

    def p(z):
        return ((coeffs[0] * z + coeffs[1]) * z + coeffs[2]) * z + coeffs[3]

    def dp(z):
        return (3 * coeffs[0] * z + 2 * coeffs[1]) * z + coeffs[2]

    polished = []
    for r in roots:
        for _ in range(8 if extended else 3):
            d = dp(r)
            v = p(r)
            if abs(d) < 1e-30 or v == 0:
                break
            step = v / d
            if abs(p(r - step)) >= abs(v):
                break
            r = r - step
        polished.append(r)
    return sorted(polished, key=_lex_key)


# ---------------------------------------------------------------------------
# Newton solvers


def newton_1c(F: Callable, dF: Callable, seed, tol: float, max_iter: int = 100):
    """Damped Newton for a holomorphic map of one variable; returns z with |F(z)| <= tol."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    z = seed
    fz = F(z)
    check_finite(z, fz)
    for _ in range(max_iter + 1):
        if abs(fz) <= tol:
            return z
        d = dF(z)
        if abs(d) < 1e-30:
            raise DerivativeVanished(f"|F'| = {abs(d):.3g} at {z}")
        step = fz / d
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = z - lam * step
            ft = F(trial)
            if is_finite(ft) and abs(ft) < abs(fz):
                break
            lam /= 2
        z, fz = trial, ft
        check_finite(z, fz)
    raise NoConvergence(f"newton_1c: |F| = {abs(fz):.3g} after {max_iter} iterations")


def _fd_jacobian(G, x, fx, extended):
    rel = 1e-13 if extended else 1e-7
    cols = []
    for j in range(2):
        h = rel * max(1.0, float(abs(x[j])))
        xp = list(x)
        xm = list(x)
        xp[j] = x[j] + h
        xm[j] = x[j] - h
        gp, gm = G(*xp), G(*xm)
        cols.append([(gp[i] - gm[i]) / (2 * h) for i in range(2)])
    return [[cols[0][0], cols[1][0]], [cols[0][1], cols[1][1]]]


def _solve2(J, rhs):
    (a, b), (c, d) = J
    det = a * d - b * c
    norm = max(abs(a) + abs(b), abs(c) + abs(d))
    if det == 0:
        raise SingularJacobian("zero determinant")
    inv_norm = max(abs(d) + abs(b), abs(c) + abs(a)) / abs(det)
    cond = float(norm * inv_norm)
    if not math.isfinite(cond) or cond > 1e12:
        raise SingularJacobian(f"condition estimate {cond:.3g}")
    return [(d * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - c * rhs[0]) / det]


def newton_2c(G: Callable, seed, tol: float, max_iter: int = 100, jacobian: Callable | None = None):
    """Damped Newton for a holomorphic map C^2 -> C^2; returns (a, b) with ||G||_inf <= tol.

    Without ``jacobian`` the Jacobian is a central difference with relative
    step 1e-7 (1e-13 in extended precision).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = list(seed)
    extended = any(is_extended(v) for v in x)
    gx = G(*x)
    check_finite(*x, *gx)

    def size(g):
        return max(abs(g[0]), abs(g[1]))

    for it in range(max_iter + 1):
        if size(gx) <= tol:
            return x[0], x[1]
        J = jacobian(*x) if jacobian is not None else _fd_jacobian(G, x, gx, extended)
        step = _solve2(J, gx)
        lam = 1.0
        for _ in range(MAX_HALVINGS):
            trial = [x[0] - lam * step[0], x[1] - lam * step[1]]
            try:
                gt = G(*trial)
            except (ArithmeticError, ValueError, WanderingError):
                gt = None
            if gt is not None and all(is_finite(v) for v in gt) and size(gt) < size(gx):
                break
            lam /= 2
        if gt is None:
            raise NoConvergence("newton_2c: no admissible damped step")
        x, gx = trial, gt
    raise NoConvergence(f"newton_2c: ||G|| = {float(size(gx)):.3g} after {max_iter} iterations")


def polyline_diameter(points: np.ndarray) -> float:
    """Largest pairwise distance among complex points."""
    pts = np.asarray(points, dtype=complex)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 64:
        from scipy.spatial import ConvexHull

        xy = np.column_stack([pts.real, pts.imag])
        try:
            pts = pts[ConvexHull(xy).vertices]
        except Exception:
            pass
    d = np.abs(pts[:, None] - pts[None, :])
    return float(d.max())


def cexp(z):
    return EXT.exp(z) if is_extended(z) else cmath.exp(z)
