import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from wandering import fixed_points, from_coefficients, from_critical_points, seed_polynomial
from wandering.cubic import CubicPolynomial, iterate, omega_closed_form, orbit
from wandering.errors import DegenerateCritical, Escaped, NonDistinct

OMEGA = -0.9862072184965908
BETA = -3.958621655489772
GAMMA = -1.958621655
F_OMEGA = -3.836759016017956

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
complexes = st.builds(complex, finite, finite)


def test_seed_coefficients():
    f = from_critical_points(OMEGA, 3 * OMEGA)
    assert abs(f.c1 - 8.7534421003338) < 1e-12
    assert abs(f.c2 - 5.9172433109798) < 1e-12


def test_simple_families():
    f = from_critical_points(1j, -1j)
    assert f.c2 == 0 and abs(f.c1 - 3) < 1e-15
    s = math.sqrt(2) / 2
    g = from_critical_points(1j * s, -1j * s)
    assert abs(g.c1 - 1.5) < 1e-15
    assert abs(g(g.a) - g.a) < 1e-15


def test_seed_values(seed):
    w = seed.a
    assert abs(w - OMEGA) < 1e-15
    assert abs(seed.b - 3 * w) < 1e-15
    assert abs(seed(3 * w)) < 1e-14
    assert abs(seed(w) - F_OMEGA) < 1e-14
    assert abs(seed(w) - 4 * w**3) < 1e-14
    assert abs(iterate(seed, w, 2) - 3 * w) < 1e-13


def test_seed_real_ordering(seed):
    w = seed.a.real
    fp = fixed_points(seed)
    beta, gamma = fp.beta.real, fp.gamma.real
    assert beta == pytest.approx(3 * w - 1, abs=1e-15)
    assert beta < seed(w).real < 3 * w < gamma < w < 0


def test_seed_fixed_points_and_multipliers(seed):
    fp = fixed_points(seed)
    assert fp.alpha == 0
    assert abs(fp.beta - BETA) < 1e-13
    assert abs(fp.gamma - GAMMA) < 1e-9
    w = OMEGA
    want = (9 * w * w, 3 - 6 * w, 3 + 6 * w)
    assert np.allclose(fp.multipliers, want, atol=1e-12)
    assert fp.all_repelling()


def test_fixed_points_by_hand():
    fp = fixed_points(from_critical_points(1j, -1j))
    got = sorted(fp.points, key=lambda z: z.imag)
    assert np.allclose(got, [-1j * math.sqrt(2), 0, 1j * math.sqrt(2)], atol=1e-14)


def test_iterate_zero_and_escape(seed):
    assert iterate(seed, 0, 50) == 0
    with pytest.raises(Escaped):
        iterate(seed, 100.0, 20)
    assert len(orbit(seed, OMEGA, 3)) == 4


def test_coincident_critical_points():
    with pytest.raises(DegenerateCritical):
        from_critical_points(1.0, 1.0)


def test_from_coefficients_roundtrip(seed):
    f = from_coefficients(seed.c1, seed.c2, 2)
    assert abs(f.a - seed.a) < 1e-12 and abs(f.b - seed.b) < 1e-12


def test_extended_seed_matches_closed_form():
    f = seed_polynomial("extended")
    assert f.extended
    assert abs(complex(f.a) - OMEGA) < 1e-15
    assert abs(complex(omega_closed_form("extended")) - OMEGA) < 1e-15


def test_record_roundtrip(seed):
    assert CubicPolynomial.from_record(seed.to_record()) == seed


@settings(max_examples=300, deadline=None)
@given(complexes, complexes)
def test_critical_points_are_critical(a, b):
    assume(abs(a - b) > 1e-6)
    f = from_critical_points(a, b)
    scale = max(1.0, abs(a), abs(b)) ** 2
    assert abs(f.derivative(a)) <= 1e-12 * scale
    assert abs(f.derivative(b)) <= 1e-12 * scale


@settings(max_examples=300, deadline=None)
@given(complexes, complexes)
def test_fixed_points_fixed(a, b):
    assume(abs(a - b) > 1e-6)
    f = from_critical_points(a, b)
    try:
        fp = fixed_points(f)
    except NonDistinct:
        return
    for z, m in zip(fp.points, fp.multipliers):
        scale = max(1.0, abs(z)) ** 3 * max(1.0, abs(f.c1), abs(f.c2))
        assert abs(f(z) - z) <= 1e-10 * scale
        assert m == pytest.approx(3 * z * z + 2 * f.c2 * z + f.c1, abs=1e-12 * scale)
