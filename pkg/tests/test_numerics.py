import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wandering.errors import DerivativeVanished, NonFiniteInput, NoConvergence
from wandering.numerics import (
    Arc,
    CircleAngle,
    cubic_roots,
    ext,
    newton_1c,
    newton_2c,
    orbit_of,
    tripling_closure,
)

# Frozen from a bracketing root finder on x(x - 3w)^2 = w, w = seed critical point.
OMEGA_MINUS_1 = -0.12261811628738502
CUBE_ROOT_2 = 1.2599210498948732

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)
angles = st.builds(CircleAngle, st.integers(-10**6, 10**6), st.integers(1, 10**6))


def test_cube_roots_of_unity():
    r = cubic_roots(1, 0, 0, -1)
    want = sorted([1, cmath.exp(2j * math.pi / 3), cmath.exp(-2j * math.pi / 3)], key=lambda z: (z.real, z.imag))
    assert np.allclose(r, want, atol=1e-14)


def test_triple_root():
    assert np.allclose(cubic_roots(1, 0, 0, 0), [0, 0, 0], atol=1e-12)


def test_roots_sorted_lexicographically():
    r = cubic_roots(1, 0, 0, -1)
    keys = [(z.real, z.imag) for z in r]
    assert keys == sorted(keys)


def test_seed_preimage_of_omega_roots(seed):
    w = seed.a
    r = cubic_roots(1, seed.c2, seed.c1, -w)
    assert all(abs(z.imag) < 1e-12 for z in r)
    assert abs(r[-1] - OMEGA_MINUS_1) < 1e-12
    oracle = np.sort(np.roots([1, seed.c2, seed.c1, -w]).real)
    assert np.allclose([z.real for z in r], oracle, atol=1e-10)


def test_leading_coefficient_zero():
    with pytest.raises(ValueError):
        cubic_roots(0, 1, 1, 1)


def test_non_finite_rejected():
    with pytest.raises(NonFiniteInput):
        cubic_roots(1, float("nan"), 0, 0)


@settings(max_examples=300, deadline=None)
@given(complexes, complexes, complexes)
def test_cubic_roots_residual(c2, c1, c0):
    scale = max(1.0, abs(c2), abs(c1), abs(c0))
    for z in cubic_roots(1, c2, c1, c0):
        p = ((z + c2) * z + c1) * z + c0
        assert abs(p) <= 1e-9 * scale * max(1.0, abs(z)) ** 3


def test_newton_1c_examples():
    assert abs(newton_1c(lambda z: z * z - 1, lambda z: 2 * z, 0.7, 1e-14) - 1) < 1e-12
    z = newton_1c(lambda z: z**3 - 2, lambda z: 3 * z * z, 1.2, 1e-14)
    assert abs(z - CUBE_ROOT_2) < 1e-12


def test_newton_1c_degenerate_root():
    try:
        z = newton_1c(lambda z: z * z, lambda z: 2 * z, 1e-20, 1e-30)
    except DerivativeVanished:
        return
    assert abs(z * z) <= 1e-30


def test_newton_1c_bad_tol():
    with pytest.raises(ValueError):
        newton_1c(lambda z: z, lambda z: 1, 0, 0)


def test_newton_1c_no_root():
    with pytest.raises((NoConvergence, DerivativeVanished)):
        newton_1c(lambda z: z * z + 1, lambda z: 2 * z, 0.5, 1e-14, max_iter=5)


def test_newton_2c_examples():
    a, b = newton_2c(lambda a, b: (a - 1, b + 2), (0, 0), 1e-14)
    assert abs(a - 1) < 1e-14 and abs(b + 2) < 1e-14
    a, b = newton_2c(lambda a, b: (a * a - b, b - 4), (1.9, 3.8), 1e-13)
    assert abs(a - 2) < 1e-12 and abs(b - 4) < 1e-12


@settings(max_examples=100, deadline=None)
@given(complexes, complexes, complexes, complexes, complexes)
def test_newton_2c_linear_in_two_steps(p, q, r, s, t):
    # G(a, b) = (a - p + q b/10, b - r) is linear with a well-conditioned Jacobian
    G = lambda a, b: (a - p + q * b / 10, b - r)
    a, b = newton_2c(G, (s, t), 1e-9, max_iter=2)
    g = G(a, b)
    assert max(abs(g[0]), abs(g[1])) <= 1e-9


def test_newton_2c_extended_precision():
    a, b = newton_2c(lambda a, b: (a * a - 2, b - a), (ext(1.4), ext(1.4)), 1e-30)
    assert abs(float((a - ext(2) ** 0.5).real)) < 1e-28


def test_angle_reduction_and_parse():
    t = CircleAngle(-2, 6)
    assert (t.num, t.den) == (2, 3)
    assert CircleAngle.parse("4/27") == CircleAngle(4, 27)
    assert CircleAngle.of(0.5) == CircleAngle(1, 2)
    assert str(CircleAngle(5, 6)) == "5/6"
    assert CircleAngle(5, 6).signed() == Fraction(-1, 6)


def test_preimages_and_orbit():
    pre = CircleAngle(1, 3).preimages()
    assert pre == [CircleAngle(1, 9), CircleAngle(4, 9), CircleAngle(7, 9)]
    assert all(p.triple() == CircleAngle(1, 3) for p in pre)
    assert orbit_of(CircleAngle(1, 4)) == [CircleAngle(1, 4), CircleAngle(3, 4)]
    assert tripling_closure([CircleAngle(4, 27)]) == sorted(
        [CircleAngle(4, 27), CircleAngle(4, 9), CircleAngle(1, 3), CircleAngle(0, 1)])


@given(angles)
def test_preimages_triple_back(t):
    assert all(p.triple() == t for p in t.preimages())


@given(st.integers(0, 10**6), st.integers(1, 3000).filter(lambda d: d % 3))
def test_tripling_periodic_on_coprime_denominators(num, den):
    t = CircleAngle(num, den)
    q = 1
    while pow(3, q, t.den) != 1 % t.den:
        q += 1
    assert t.triple(q) == t


@given(angles, angles, angles)
def test_arc_membership_exclusive(a, b, t):
    if t in (a, b) or a == b:
        return
    assert Arc(a, b).contains(t) != Arc(b, a).contains(t, closed=False)


@given(angles, angles)
def test_angle_difference_range(a, b):
    d = a - b
    assert Fraction(-1, 2) < d <= Fraction(1, 2)
    assert a == b + d
