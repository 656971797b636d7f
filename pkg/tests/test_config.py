import math

import pytest
from hypothesis import given, settings, strategies as st

from wandering.config import (
    Configuration,
    check_minimal,
    config_residual,
    configuration_residuals,
    orbit_scale,
    solve_config,
    verify_in_V,
)
from wandering.constants import FIG5, relative_error
from wandering.cubic import CubicPolynomial, iterate
from wandering.errors import NoConvergence, NonMinimal, SingularJacobian

OMEGA = -0.9862072184965908
small = st.floats(-0.01, 0.01, allow_nan=False)


def test_residual_at_seed():
    r = config_residual(OMEGA, 3 * OMEGA, 2, 1)
    assert abs(r[0]) < 1e-10 and abs(r[1]) < 1e-10


def test_residual_when_a_is_fixed():
    s = math.sqrt(2) / 2
    r = config_residual(1j * s, -1j * s, 1, 1)
    assert abs(r[0]) > 0.5


def test_residual_by_hand():
    # f = z^3 - 0.75 z: f(0.5) = -0.25 and f(-0.5) = 0.25
    r = config_residual(0.5, -0.5, 1, 1)
    assert r == pytest.approx((0.25, 0.25), abs=1e-15)


def test_residual_rejects_zero_lengths():
    with pytest.raises(ValueError):
        config_residual(0.5, -0.5, 0, 1)


def test_solve_seed():
    f = solve_config((-0.99, -2.96), 2, 1, 1e-12)
    c1, c2, _ = FIG5[0]
    assert abs(f.c1 - c1) < 1e-9 and abs(f.c2 - c2) < 1e-9
    assert abs(f.a - OMEGA) < 1e-12


def test_solve_first_member_from_published_neighbourhood():
    c1, c2, (j, k, l) = FIG5[1]
    from wandering.cubic import from_coefficients

    guess = from_coefficients(c1, c2, k)
    f = solve_config((guess.a + 1e-7, guess.b - 1e-7), k, l, 1e-12)
    assert relative_error(f.c1, c1) < 1e-6 and relative_error(f.c2, c2) < 1e-6


def test_solve_extended_precision():
    f = solve_config((-0.99, -2.96), 2, 1, 1e-25, precision="extended")
    assert f.extended
    assert abs(complex(f.a) - OMEGA) < 1e-15


def test_minimality():
    f = CubicPolynomial(OMEGA, 3 * OMEGA)
    assert abs(f(OMEGA) - (-3.836759016017956)) < 1e-12
    check_minimal(f, 2, 1)
    with pytest.raises(NonMinimal):
        check_minimal(f, 4, 1)


def test_configuration_validation():
    assert Configuration(0, 2, 1).triple == (0, 2, 1)
    assert Configuration(0, 2, 1).verified().status == "verified"
    with pytest.raises(ValueError):
        Configuration(0, 0, 1)
    with pytest.raises(ValueError):
        Configuration(-1, 2, 1)


def test_orbit_scale(seed):
    assert orbit_scale(seed, 3) == pytest.approx(3.836759016017956)


def test_verify_seed(seed, seed_regions):
    rep = verify_in_V(seed, regions=seed_regions)
    assert rep.passed, [c.name for c in rep.failures()]


def test_verify_coincident_critical_points():
    f = CubicPolynomial(OMEGA, OMEGA + 1e-14)
    rep = verify_in_V(f)
    assert not rep["distinct critical points"].passed


@settings(max_examples=25, deadline=None)
@given(small, small, small, small)
def test_solution_residual_below_tol(da, db, ea, eb):
    seed = (complex(OMEGA + da, ea), complex(3 * OMEGA + db, eb))
    try:
        f = solve_config(seed, 2, 1, 1e-12)
    except (NoConvergence, SingularJacobian):
        return
    assert max(configuration_residuals(f, Configuration(0, 2, 1))) <= 1e-12
    assert abs(iterate(f, f.a, 2) - f.b) <= 1e-12
    assert abs(f(f.b)) <= 1e-12
    check_minimal(f, 2, 1)
