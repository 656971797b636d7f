"""Cubic polynomials with a wandering branch point: configurations, perturbation, rays and puzzles."""
from .cubic import CubicPolynomial, fixed_points, from_coefficients, from_critical_points, seed_polynomial
from .numerics import CircleAngle

__all__ = [
    "CircleAngle",
    "CubicPolynomial",
    "fixed_points",
    "from_coefficients",
    "from_critical_points",
    "seed_polynomial",
]
