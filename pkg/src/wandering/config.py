"""(k, l)-configurations: f^k(a) = b and f^l(b) = 0, solved by Newton in the (a, b) plane."""
from __future__ import annotations

from dataclasses import dataclass

from .cubic import CubicPolynomial, fixed_points, from_critical_points, iterate
from .errors import CommonLandingFailed, Escaped, NonMinimal, TooCloseToBoundary, WanderingError
from .numerics import CircleAngle, newton_2c, to_precision
from .rays import DEFAULT, RaySettings, build_standard_regions, landing_points
from .reports import Report


@dataclass(frozen=True)
class Configuration:
    """Orbit lengths xi -(j)-> omega -(k)-> omega' -(l)-> 0."""

    j: int
    k: int
    l: int
    status: str = "unverified"

    def __post_init__(self):
        if self.j < 0 or self.k < 1 or self.l < 1:
            raise ValueError(f"invalid configuration ({self.j}, {self.k}, {self.l})")

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.j, self.k, self.l)

    def verified(self) -> "Configuration":
        return Configuration(self.j, self.k, self.l, "verified")

    def __str__(self) -> str:
        return f"({self.j},{self.k},{self.l})"


def config_residual(a, b, k: int, l: int):
    """(f^k(a) - b, f^l(b)) for f = f_{a,b}."""
    if k < 1 or l < 1:
        raise ValueError("k and l must be positive")
    f = CubicPolynomial(a, b)
    return iterate(f, a, k) - b, iterate(f, b, l)


def orbit_scale(f: CubicPolynomial, n: int) -> float:
    """max(1, |z|) over the first n iterates of both critical points; used to scale tolerances."""
    s = 1.0
    for z in f.critical_points:
        for _ in range(n):
            s = max(s, abs(complex(z)))
            z = f(z)
            if abs(complex(z)) > 1e15:
                break
    return s


def check_minimal(f: CubicPolynomial, k: int, l: int, sep: float = 1e-6) -> None:
    """Raise NonMinimal if the a-orbit hits b before step k or the b-orbit hits 0 before step l."""
    z = f.a
    for i in range(1, k):
        z = f(z)
        if abs(complex(z - f.b)) < sep:
            raise NonMinimal("k", i)
    z = f.b
    for i in range(0, l):
        if abs(complex(z)) < sep:
            raise NonMinimal("l", i)
        z = f(z)


def solve_config(seed, k: int, l: int, tol: float = 1e-12, precision: str = "double",
                 max_iter: int = 100) -> CubicPolynomial:
    """Newton on config_residual from ``seed`` = (a, b); checks minimality of (k, l)."""
    a0, b0 = (to_precision(v, precision) for v in seed)
    a, b = newton_2c(lambda a, b: config_residual(a, b, k, l), (a0, b0), tol, max_iter)
    f = from_critical_points(a, b)
    check_minimal(f, k, l)
    return f


def configuration_residuals(f: CubicPolynomial, cfg: Configuration) -> tuple[float, float]:
    r1, r2 = config_residual(f.a, f.b, cfg.k, cfg.l)
    return float(abs(r1)), float(abs(r2))


# ---------------------------------------------------------------------------
# membership in the class of polynomials with the standard ray picture


def verify_in_V(f: CubicPolynomial, settings: RaySettings = DEFAULT, regions=None) -> Report:
    """Numerical evidence for the five defining items; never raises."""
    rep = Report("membership")
    g = f.as_double()
    try:
        fp = fixed_points(g)
        mods = [abs(complex(m)) for m in fp.multipliers]
        rep.add("repelling fixed points", min(mods) > 1, min(mods), 1.0)
    except WanderingError as exc:
        rep.add("repelling fixed points", False, detail=str(exc))
        fp = None
    gap = abs(complex(g.a - g.b))
    rep.add("distinct critical points", gap > 1e-12 * max(1.0, abs(g.a), abs(g.b)), gap, 1e-12)
    tol = settings.landing_tol
    try:
        rays = landing_points(g, ["0", "1/2", "1/4", "3/4"], settings=settings)
    except WanderingError as exc:
        rep.add("ray tracing", False, detail=str(exc))
        return rep

    def land_check(name, theta, target):
        r = rays[CircleAngle.parse(theta)]
        if r.landing is None or r.bifurcation_suspected:
            rep.add(name, False, r.landing_spread, tol, "unresolved or bifurcating")
            return
        d = abs(r.landing - target)
        rep.add(name, d <= 10 * tol, d, 10 * tol)

    land_check("ray 0 lands at alpha", "0", 0j)
    if fp is None:
        return rep
    beta = min(fp.beta, fp.gamma, key=lambda p: abs(rays[CircleAngle(1, 2)].end - p))
    gamma = fp.gamma if beta is fp.beta else fp.beta
    land_check("ray 1/2 lands at beta", "1/2", beta)
    land_check("ray 1/4 lands at gamma", "1/4", gamma)
    land_check("ray 3/4 lands at gamma", "3/4", gamma)
    try:
        regions = regions or build_standard_regions(g, settings)
    except (CommonLandingFailed, WanderingError) as exc:
        rep.add("standard regions", False, detail=str(exc))
        return rep
    rep.add("V boundary maps onto W boundary", regions.image_defect < 1e-8, regions.image_defect, 1e-8)
    Ua, Ub = regions.U_alpha, regions.U_beta
    try:
        in_a = [Ua.contains(c) for c in (g.a, g.b)]
        if in_a[0] == in_a[1]:
            rep.add("one critical point in each of U_alpha, U_beta", False)
            return rep
        w_alpha, w_beta = (g.a, g.b) if in_a[0] else (g.b, g.a)
        rep.add("one critical point in each of U_alpha, U_beta", True)
        rep.add("alpha in U_alpha", Ua.contains(0j))
        rep.add("beta in U_beta", Ub.contains(beta))
        rep.add("f(omega_beta) in U_alpha", Ua.contains(g(w_beta)))
        rep.add("f(omega_alpha) in U_beta", Ub.contains(g(w_alpha)))
        rep.add("f^2(omega_alpha) in U_beta", Ub.contains(g(g(w_alpha))))
    except (TooCloseToBoundary, Escaped) as exc:
        rep.add("region membership", False, detail=str(exc))
    return rep
