"""Univalent-branch preimages of omega and the critical-role-swapping perturbation."""
from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass, field

from .config import Configuration, check_minimal, config_residual, configuration_residuals, orbit_scale
from .cubic import CubicPolynomial, iterate, seed_polynomial
from .dendrite import BranchingData, find_branching_point, verify_admissible
from .errors import (
    AmbiguousBranch,
    ChainStepError,
    ConfigurationMismatch,
    NoConvergence,
    NonMinimal,
    NotAdmissible,
    NotInW,
    SingularJacobian,
    WanderingError,
)
from .numerics import cubic_roots, newton_2c, to_precision
from .rays import DEFAULT, RaySettings, StandardRegions, build_standard_regions


class RegionCache:
    """Standard regions of a nearby polynomial, re-traced when (a, b) moves more than ``move_tol``."""

    def __init__(self, settings: RaySettings = DEFAULT, move_tol: float = 1e-3):
        self.settings = settings
        self.move_tol = move_tol
        self.key = None
        self.regions: StandardRegions | None = None
        self.builds = 0

    def get(self, g: CubicPolynomial) -> StandardRegions:
        a, b = complex(g.a), complex(g.b)
        if self.key is None or max(abs(a - self.key[0]), abs(b - self.key[1])) > self.move_tol:
            self.regions = build_standard_regions(CubicPolynomial(a, b), self.settings)
            self.key = (a, b)
            self.builds += 1
        return self.regions


def inverse_branch_preimage(g: CubicPolynomial, z, regions: StandardRegions):
    """The unique w in V_g with g(w) = z."""
    if not regions.W.contains(z):
        raise NotInW(f"{complex(z)} is not in W")
    roots = cubic_roots(1, g.c2, g.c1, -z)
    inside = [r for r in roots if regions.V.contains(r)]
    if len(inside) != 1:
        raise AmbiguousBranch(f"{len(inside)} preimages of {complex(z)} lie in V")
    return inside[0]


def omega_minus_chain(g: CubicPolynomial, m: int, regions: StandardRegions | None = None,
                      omega=None, check: bool = True) -> list:
    """[w_0, w_-1, ..., w_-m] with w_0 = omega (default: the a-slot) and g(w_-i-1) = w_-i."""
    if m < 0:
        raise ValueError("m must be non-negative")
    chain = [g.a if omega is None else omega]
    if m == 0:
        return chain
    regions = regions or build_standard_regions(g.as_double())
    for _ in range(m):
        chain.append(inverse_branch_preimage(g, chain[-1], regions))
    if check:
        for i in range(m):
            miss = abs(complex(g(chain[i + 1]) - chain[i]))
            if miss > 1e-10 * (1 + abs(complex(chain[i]))):
                raise AmbiguousBranch(f"link {i + 1} re-composes with error {miss:.3g}")
    return chain


@dataclass
class PerturbationStep:
    source: CubicPolynomial
    m: int
    target: CubicPolynomial
    omega_chain: list
    source_config: Configuration
    target_config: Configuration
    candidates: int = 0
    role_swap: bool = True
    residual: float = 0.0

    @property
    def delta(self) -> float:
        return self.source.coefficient_distance(self.target)


class _Budget(WanderingError):
    pass


def perturbation_system(k: int, l: int, m: int, cache: RegionCache, centre=None, radius=math.inf,
                        budget: int | None = None):
    """G(a, b) = (f^(k+l)(a), f^l(b) - w_-m(f)) with w_-m recomputed for each (a, b).

    Evaluations farther than ``radius`` from ``centre`` raise ValueError (the
    damped Newton step treats that as a rejected trial); more than ``budget``
    evaluations abort the solve.
    """
    count = [0]

    def G(a, b):
        if centre is not None and max(abs(complex(a) - centre[0]), abs(complex(b) - centre[1])) > radius:
            raise ValueError("outside the search region")
        count[0] += 1
        if budget is not None and count[0] > budget:
            raise _Budget("evaluation budget exhausted")
        g = CubicPolynomial(a, b)
        w = omega_minus_chain(g, m, cache.get(g), check=False)[-1]
        return iterate(g, a, k + l), iterate(g, b, l) - w

    return G


def _ring_seeds(a, b, radius, count):
    for i in range(count):
        u = radius * cmath.exp(2j * math.pi * i / count)
        yield (a + u, b)
        yield (a, b + u)


def _try_solve(k, l, m, cache, centre, radius, seed, tol, max_iter, budget):
    G = perturbation_system(k, l, m, cache, centre, radius, budget)
    try:
        return newton_2c(G, seed, tol, max_iter)
    except (NoConvergence, SingularJacobian, WanderingError, ArithmeticError, ValueError):
        return None


def _solutions(f, k, l, m, tol, cache, rings, count, max_iter, budget=80):
    """All distinct non-degenerate zeros found from f and from rings of seeds around it."""
    a0, b0 = complex(f.a), complex(f.b)
    radius = 10 * max(rings)

    def solve(seed):
        return _try_solve(k, l, m, cache, (a0, b0), radius, seed, tol, max_iter, budget)

    found: list[CubicPolynomial] = []

    def accept(sol):
        if sol is None:
            return
        g = CubicPolynomial(*sol)
        if abs(complex(iterate(g, g.b, l))) <= tol:
            return  # the unperturbed zero: b still lands on 0
        if any(max(abs(complex(g.a - h.a)), abs(complex(g.b - h.b))) < 1e-8 for h in found):
            return
        found.append(g)

    accept(solve((a0, b0)))
    if found:
        s = max(abs(complex(found[0].a) - a0), abs(complex(found[0].b) - b0))
        radii = [s / 2, s]
    else:
        radii = list(rings)
    for r in radii:
        for seed in _ring_seeds(a0, b0, r, count):
            accept(solve(seed))
    return found


def select_nearest(source: CubicPolynomial, found: list[CubicPolynomial]) -> CubicPolynomial:
    """Nearest solution in coefficient distance; near-ties go to Im c1 > 0."""
    dist = [source.coefficient_distance(g) for g in found]
    best = min(dist)
    near = [g for g, d in zip(found, dist) if d <= best * (1 + 1e-6) + 1e-14]
    return max(near, key=lambda g: (complex(g.c1).imag, -source.coefficient_distance(g)))


def perturb(f: CubicPolynomial, cfg: Configuration, m: int, tol: float = 1e-12,
            settings: RaySettings = DEFAULT, precision: str = "double", retries: int = 5,
            rings=(0.01, 0.03), ring_count: int = 16, max_iter: int = 60) -> PerturbationStep:
    """Perturb f with (k, l)-configuration into g with (m+l, k+l)-configuration and swapped roles.

    Zeros of the perturbation system are collected by Newton from f and from
    rings of seeds around it; the one nearest f is kept.  If none is found the
    step is retried with m+1, ..., m+retries.
    """
    k, l = cfg.k, cfg.l
    src = f.as_double()
    cache = RegionCache(settings)
    for mm in range(m, m + retries + 1):
        found = _solutions(src, k, l, mm, tol, cache, rings, ring_count, max_iter)
        if found:
            break
    else:
        raise NoConvergence(f"no perturbation zero for m in [{m}, {m + retries}]")
    g = select_nearest(src, found)
    if precision == "extended":
        G = perturbation_system(k, l, mm, cache)
        a, b = newton_2c(G, (to_precision(g.a, precision), to_precision(g.b, precision)),
                         min(tol, 1e-25), max_iter)
        g = CubicPolynomial(a, b)
    chain = omega_minus_chain(g, mm, cache.get(g))
    target = g.swapped()
    new_cfg = Configuration(cfg.j + k, mm + l, k + l)
    r1, r2 = config_residual(target.a, target.b, new_cfg.k, new_cfg.l)
    res = max(abs(complex(r1)), abs(complex(r2)))
    scale = orbit_scale(target.as_double(), new_cfg.k + new_cfg.l)
    if res > 1e-8 * scale:
        raise ConfigurationMismatch(f"target residual {res:.3g} for {new_cfg}")
    try:
        check_minimal(target, new_cfg.k, new_cfg.l)
    except NonMinimal as exc:
        raise ConfigurationMismatch(f"target configuration not minimal: {exc}") from exc
    return PerturbationStep(f, mm, target, chain, cfg, new_cfg.verified(), len(found), True, float(res))


SEED_CONFIGURATION = Configuration(0, 2, 1)


@dataclass
class ChainMember:
    f: CubicPolynomial
    config: Configuration
    branching: BranchingData
    report: object = None
    seconds: float = 0.0

    @property
    def xi(self) -> complex:
        return self.branching.xi

    @property
    def angles(self) -> tuple:
        return self.branching.angles

    def to_record(self) -> dict:
        rec = {"j": self.config.j, "k": self.config.k, "l": self.config.l}
        rec.update(self.f.to_record())
        rec.update(self.branching.to_record())
        rec["seconds"] = round(self.seconds, 3)
        return rec


@dataclass
class ChainRecord:
    members: list = field(default_factory=list)
    steps: list = field(default_factory=list)

    @property
    def deltas(self) -> list[float]:
        return [a.f.coefficient_distance(b.f) for a, b in zip(self.members, self.members[1:])]

    @property
    def j_ladder(self) -> list[int]:
        return [m.config.j for m in self.members]

    def to_records(self) -> list[dict]:
        out = []
        for n, m in enumerate(self.members):
            rec = {"member": n}
            rec.update(m.to_record())
            if n > 0:
                rec["m"] = self.steps[n - 1].m
                rec["delta"] = self.deltas[n - 1]
            out.append(rec)
        return out


def _admissible_member(f, cfg, hint, settings) -> ChainMember:
    t0 = time.perf_counter()
    bd = find_branching_point(f, cfg, hint=hint, settings=settings)
    rep = verify_admissible(f, cfg, bd, settings)
    if not rep.passed:
        raise NotAdmissible("; ".join(c.name for c in rep.failures()))
    return ChainMember(f, cfg.verified(), bd, rep, time.perf_counter() - t0)


def build_chain(N: int, m_schedule=None, tol: float = 1e-12, settings: RaySettings = DEFAULT,
                precision: str = "double", seed: CubicPolynomial | None = None,
                progress=None) -> ChainRecord:
    """f_0 = seed, f_(n+1) = perturb(f_n, m_n), each member checked for admissibility.

    After each step the configuration is re-verified by direct iteration, the
    new j must equal j + k of the previous member and the branching point is
    located afresh from the previous one.  Errors are re-raised as
    ChainStepError carrying the step index.
    """
    schedule = list(m_schedule) if m_schedule is not None else list(range(1, N + 1))
    if len(schedule) != N:
        raise ValueError(f"schedule has {len(schedule)} entries for N={N}")
    f = seed or seed_polynomial()
    cfg = SEED_CONFIGURATION
    record = ChainRecord()
    try:
        r1, r2 = configuration_residuals(f, cfg)
        if max(r1, r2) > 1e-8 * orbit_scale(f.as_double(), cfg.k + cfg.l):
            raise ConfigurationMismatch(f"seed residuals {r1:.3g}, {r2:.3g}")
        record.members.append(_admissible_member(f, cfg, None, settings))
    except WanderingError as exc:
        raise ChainStepError(0, exc) from exc
    if progress:
        progress(0, record.members[-1])
    for n, m in enumerate(schedule, start=1):
        prev = record.members[-1]
        try:
            t0 = time.perf_counter()
            step = perturb(prev.f, prev.config, m, tol, settings, precision)
            new_cfg = step.target_config
            if new_cfg.j != prev.config.j + prev.config.k:
                raise ConfigurationMismatch(f"j = {new_cfg.j}, expected {prev.config.j + prev.config.k}")
            member = _admissible_member(step.target, new_cfg, (prev.branching, prev.config, step.m), settings)
            member.seconds = time.perf_counter() - t0
        except WanderingError as exc:
            raise ChainStepError(n, exc) from exc
        record.steps.append(step)
        record.members.append(member)
        if progress:
            progress(n, member)
    return record
