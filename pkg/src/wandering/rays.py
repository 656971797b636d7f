"""Green potential, external rays by Newton pullback, and ray-bounded regions.

Rays are traced in lockstep over the tripling-closure of the requested
angles: the node of R(t) at potential p is the Newton preimage under f of the
node of R(3t) at potential 3p, seeded at the previous (higher) node of R(t).
With 24 substeps per tripling the image node sits exactly 24 levels above.
Above a potential of about 10 the inverse Boettcher map is replaced by its
asymptotic form w - c2/3.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .cubic import CubicPolynomial, fixed_points
from .errors import (
    CommonLandingFailed,
    LandingUnresolved,
    NoConvergence,
    RayBifurcationSuspected,
    TooCloseToBoundary,
)
from .numerics import CircleAngle, tripling_closure

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class RaySettings:
    substeps: int = 24
    start_potential: float = 2.0
    end_potential: float = 1e-8
    landing_tol: float = 1e-7
    refinements: int = 6
    jump_factor: float = 10.0
    asymptotic_potential: float = 30.0
    max_newton: int = 60
    threads: int = 1

    @property
    def rho(self) -> float:
        return 3.0 ** (1.0 / self.substeps)


DEFAULT = RaySettings()


@dataclass
class TracedRay:
    angle: CircleAngle
    potentials: np.ndarray
    points: np.ndarray
    landing: complex | None
    landing_spread: float
    bifurcation_suspected: bool = False

    @property
    def nodes(self) -> list[tuple[float, complex]]:
        return list(zip(self.potentials.tolist(), self.points.tolist()))

    @property
    def end(self) -> complex:
        return complex(self.points[-1])

    def point_at(self, potential: float) -> complex:
        i = int(np.argmin(np.abs(np.log(self.potentials / potential))))
        return complex(self.points[i])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["potential", "re", "im"])
            for p, z in zip(self.potentials, self.points):
                w.writerow([repr(float(p)), repr(float(z.real)), repr(float(z.imag))])


# ---------------------------------------------------------------------------
# Green potential


def potential(f: CubicPolynomial, z, max_iter: int = 10_000, bailout: float = 1e8) -> float:
    """G(z) = lim 3^-n log|f^n(z)|; 0 for points that do not escape."""
    c2 = complex(f.c2)
    c1 = complex(f.c1)
    z = complex(z)
    for n in range(max_iter):
        if abs(z) > bailout:
            return math.log(abs(z + c2 / 3)) / 3.0**n
        z = z * (z * (z + c2) + c1)
    return 0.0


def potential_array(f: CubicPolynomial, z: np.ndarray, max_iter: int = 500, bailout: float = 1e8) -> np.ndarray:
    """Vectorized potential; points still bounded after max_iter get 0."""
    c2 = complex(f.c2)
    c1 = complex(f.c1)
    z = np.array(z, dtype=complex)
    out = np.zeros(z.shape)
    alive = np.ones(z.shape, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(max_iter):
            big = alive & (np.abs(z) > bailout)
            if big.any():
                out[big] = np.log(np.abs(z[big] + c2 / 3)) / 3.0**n
                alive &= ~big
            if not alive.any():
                break
            z = np.where(alive, z * (z * (z + c2) + c1), z)
    return out


# ---------------------------------------------------------------------------
# Lockstep pullback


def _newton_preimages(c2, c1, w, z, max_iter):
    """Solve z^3 + c2 z^2 + c1 z = w elementwise, damped, freezing converged entries."""
    z = z.copy()
    active = np.arange(len(z))
    for _ in range(max_iter):
        if len(active) == 0:
            return z
        za = z[active]
        wa = w[active]
        F = za * (za * (za + c2) + c1) - wa
        az = np.abs(za)
        scale = az**3 + abs(c2) * az**2 + abs(c1) * az + np.abs(wa)
        done = np.abs(F) <= 16 * EPS * scale
        dF = (3 * za + 2 * c2) * za + c1
        step = F / dF
        done |= np.abs(step) <= 4 * EPS * np.maximum(az, 1e-300)
        keep = ~done
        active, za, F, step = active[keep], za[keep], F[keep], step[keep]
        if len(active) == 0:
            return z
        lam = np.ones(len(active))
        trial = za - step
        Ft = trial * (trial * (trial + c2) + c1) - w[active]
        bad = ~(np.abs(Ft) < np.abs(F))
        for _ in range(20):
            if not bad.any():
                break
            lam[bad] *= 0.5
            tb = za[bad] - lam[bad] * step[bad]
            trial[bad] = tb
            Ft[bad] = tb * (tb * (tb + c2) + c1) - w[active][bad]
            bad[bad] = ~(np.abs(Ft[bad]) < np.abs(F[bad]))
        z[active] = trial
    if len(active):
        raise NoConvergence(f"ray pullback: {len(active)} nodes did not converge")
    return z


def _solve_level(c2, c1, w, seed, max_iter, threads):
    if threads <= 1 or len(w) < 4096:
        return _newton_preimages(c2, c1, w, seed, max_iter)
    chunks = np.array_split(np.arange(len(w)), threads)
    out = np.empty_like(seed)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda ix: _newton_preimages(c2, c1, w[ix], seed[ix], max_iter), chunks))
    for ix, part in zip(chunks, parts):
        out[ix] = part
    return out


def _root_resolution(c2, c1, w):
    """How well a root w of f(w) = target is determined in double precision.

    The value f(w) carries an error of about eps times the size of its terms;
    that moves w by eps*S/|f'(w)|, or by sqrt(2*eps*S/|f''(w)|) next to a
    critical point, whichever is smaller.
    """
    aw = np.abs(w)
    S = aw**3 + abs(c2) * aw**2 + abs(c1) * aw + 1.0
    d1 = np.abs(3 * w * w + 2 * c2 * w + c1)
    d2 = np.abs(6 * w + 2 * c2)
    with np.errstate(divide="ignore"):
        return np.minimum(EPS * S / d1, np.sqrt(2 * EPS * S / d2))


def potential_grid(start: float, end: float, substeps: int) -> np.ndarray:
    """Potentials end * rho^L for L = N..0, with end*rho^N >= start."""
    rho = 3.0 ** (1.0 / substeps)
    n = max(int(math.ceil(math.log(start / end) / math.log(rho) - 1e-12)), substeps)
    return end * rho ** np.arange(n, -1, -1, dtype=float)


def trace_rays(
    f: CubicPolynomial,
    angles: Iterable,
    start_potential: float | None = None,
    end_potential: float | None = None,
    settings: RaySettings = DEFAULT,
    keep: Sequence | None = None,
) -> dict[CircleAngle, TracedRay]:
    """Trace every requested angle (and, internally, its tripling orbit).

    Potentials run over the grid end*rho^L; the grid is anchored at the end
    potential so that the last node sits exactly on it.  ``keep`` restricts
    which rays are returned (default: the requested ones).
    """
    start = settings.start_potential if start_potential is None else start_potential
    end = settings.end_potential if end_potential is None else end_potential
    if start < math.log(2) - 1e-12 or end <= 0:
        raise ValueError("need start_potential >= log 2 and end_potential > 0")
    requested = [CircleAngle.of(a) for a in angles]
    if not requested:
        return {}
    kept = sorted(set(CircleAngle.of(a) for a in (keep if keep is not None else requested)))

    s = settings.substeps
    rho = settings.rho
    grid = potential_grid(start, end, s)
    n_store = len(grid)
    top_levels = n_store - 1
    k_extra = 0
    while grid[0] * 3.0**k_extra < settings.asymptotic_potential:
        k_extra += 1
    L_top = top_levels + s * k_extra
    newton_top = L_top - s

    # The ray 3^i t is needed by Newton only on levels i*s .. newton_top, so the
    # tripling orbit is followed only while i*s <= newton_top; deeper images are
    # used in the asymptotic band alone.
    depth: dict[CircleAngle, int] = {}
    frontier = [(t, 0) for t in sorted(set(requested) | set(kept))]
    while frontier:
        nxt = []
        for t, d in frontier:
            if t in depth and depth[t] <= d:
                continue
            depth[t] = d
            if d * s <= newton_top:
                nxt.append((t.triple(), d + 1))
        frontier = nxt
    closure = sorted(depth)
    index = {t: i for i, t in enumerate(closure)}
    img = np.array([index.get(t.triple(), i) for i, t in enumerate(closure)])
    first_level = np.array([depth[t] * s for t in closure])
    kept_ix = np.array([index[t] for t in kept])
    thetas = np.array([float(t) for t in closure])
    c2, c1 = complex(f.c2), complex(f.c1)
    phase = np.exp(2j * np.pi * thetas)

    ring: dict[int, np.ndarray] = {}
    stored = np.empty((n_store, len(kept_ix)), dtype=complex)
    suspect = np.zeros(len(closure), dtype=bool)
    prev_spacing = np.full(len(closure), np.nan)
    for L in range(L_top, -1, -1):
        p = end * rho**L
        if L > newton_top:
            z = math.exp(p) * phase - c2 / 3
        else:
            z = ring[L + 1].copy()
            act = np.nonzero(first_level <= L)[0]
            if len(act):
                w = ring[L + s][img[act]]
                seed = ring[L + 1][act]
                za = _solve_level(c2, c1, w, seed, settings.max_newton, settings.threads)
                z[act] = za
                jump = np.abs(za - seed)
                prev = prev_spacing[act]
                floor = np.maximum(1e-10 * (1 + np.abs(za)), 100 * _root_resolution(c2, c1, za))
                with np.errstate(invalid="ignore"):
                    suspect[act] |= jump > settings.jump_factor * np.maximum(prev, floor)
                prev_spacing[act] = jump
        ring[L] = z
        ring.pop(L + s + 1, None)
        if L <= top_levels:
            stored[top_levels - L] = z[kept_ix]
    # a ray is suspect if any ray in its forward orbit is
    for _ in range(len(closure)):
        spread = suspect[img] & ~suspect
        if not spread.any():
            break
        suspect |= spread
    out = {}
    for j, t in enumerate(kept):
        pts = stored[:, j].copy()
        tail = pts[-10:]
        spread = float(np.max(np.abs(tail[:, None] - tail[None, :])))
        landing = complex(pts[-1]) if spread < settings.landing_tol else None
        out[t] = TracedRay(t, grid.copy(), pts, landing, spread, bool(suspect[kept_ix[j]]))
    return out


def trace_ray(f, theta, start_potential=None, end_potential=None, settings: RaySettings = DEFAULT) -> TracedRay:
    theta = CircleAngle.of(theta)
    ray = trace_rays(f, [theta], start_potential, end_potential, settings)[theta]
    if ray.bifurcation_suspected:
        raise RayBifurcationSuspected(f"ray {theta} jumped during pullback")
    return ray


def landing_points(f, angles, tol: float | None = None, settings: RaySettings = DEFAULT,
                   raise_unresolved: bool = False) -> dict[CircleAngle, TracedRay]:
    """Trace to landing, dividing the end potential by 10 (up to 6 times) until spread < tol."""
    tol = settings.landing_tol if tol is None else tol
    todo = sorted(set(CircleAngle.of(a) for a in angles))
    end = settings.end_potential
    local = RaySettings(**{**settings.__dict__, "landing_tol": tol})
    done: dict[CircleAngle, TracedRay] = {}
    for attempt in range(settings.refinements + 1):
        rays = trace_rays(f, todo, end_potential=end, settings=local)
        for t, r in rays.items():
            if r.landing is not None:
                done[t] = r
        todo = [t for t in todo if t not in done]
        if not todo:
            break
        if attempt < settings.refinements:
            end /= 10
    for t in todo:
        done[t] = rays[t]
        if raise_unresolved:
            raise LandingUnresolved(f"ray {t}: spread {rays[t].landing_spread:.3g} >= {tol:.3g}")
    return done


def landing_point(f, theta, tol: float | None = None, settings: RaySettings = DEFAULT) -> complex:
    theta = CircleAngle.of(theta)
    ray = landing_points(f, [theta], tol, settings, raise_unresolved=True)[theta]
    return ray.landing


# ---------------------------------------------------------------------------
# Regions bounded by two rays with a common landing point


def _edge_geometry(poly: np.ndarray):
    a = poly
    b = np.roll(poly, -1)
    return a, b


def _crossing_parity(poly: np.ndarray, z: complex) -> bool:
    a, b = _edge_geometry(poly)
    ay, by = a.imag, b.imag
    straddle = (ay > z.imag) != (by > z.imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        x_cross = a.real + (z.imag - ay) * (b.real - a.real) / (by - ay)
    return bool(np.count_nonzero(straddle & (x_cross > z.real)) % 2)


def _segment_distances(a: np.ndarray, b: np.ndarray, z: complex) -> np.ndarray:
    d = b - a
    L2 = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(np.where(L2 > 0, ((z - a) * np.conj(d)).real / L2, 0.0), 0.0, 1.0)
    return np.abs(z - (a + t * d))


@dataclass
class RayRegion:
    """Region bounded by two rays landing at a common point.

    ``contains_zero_side`` selects the side containing the far end of the
    angle-0 ray; otherwise the side containing the angle-1/2 ray.  The
    boundary is closed by a large circular arc about ``centre`` (-c2/3).
    """

    boundary_rays: tuple[TracedRay, TracedRay]
    common_landing: complex
    contains_zero_side: bool
    centre: complex = 0j
    polygon: np.ndarray = field(repr=False, default=None)
    n_ray_edges: int = field(repr=False, default=0)

    def __post_init__(self):
        if self.polygon is None:
            self.polygon, self.n_ray_edges = _region_polygon(self)

    def contains(self, z) -> bool:
        return region_contains(self, z)


def _region_polygon(region: RayRegion):
    r1, r2 = region.boundary_rays
    if r1.angle.signed() < 0:
        r1, r2 = r2, r1
    p1, p2 = r1.points, r2.points
    centre = region.centre
    a1 = np.angle(p1[0] - centre)
    a2 = np.angle(p2[0] - centre)
    radius = 4 * max(abs(p1[0] - centre), abs(p2[0] - centre))
    if region.contains_zero_side:
        if a2 > a1:
            a2 -= 2 * np.pi
    elif a2 < a1:
        a2 += 2 * np.pi
    arc = centre + radius * np.exp(1j * np.linspace(a1, a2, 129))
    ray_part = np.concatenate([p1, [region.common_landing], p2[::-1]])
    return np.concatenate([ray_part, arc[::-1]]), len(ray_part) - 1


def region_contains(region: RayRegion, z) -> bool:
    """Crossing parity of a far ray from z against the boundary polyline."""
    z = complex(z)
    poly = region.polygon
    a = poly[: region.n_ray_edges]
    b = poly[1 : region.n_ray_edges + 1]
    dist = _segment_distances(a, b, z)
    i = int(np.argmin(dist))
    if dist[i] < 2 * abs(b[i] - a[i]):
        raise TooCloseToBoundary(f"{z} lies within {dist[i]:.3g} of the region boundary")
    return _crossing_parity(poly, z)


def make_region(ray_pos: TracedRay, ray_neg: TracedRay, contains_zero_side: bool, centre: complex,
                landing_tol: float) -> RayRegion:
    if ray_pos.landing is None or ray_neg.landing is None:
        raise CommonLandingFailed(f"rays {ray_pos.angle}, {ray_neg.angle} do not both land")
    gap = abs(ray_pos.landing - ray_neg.landing)
    if gap > 3 * landing_tol:
        raise CommonLandingFailed(f"rays {ray_pos.angle} and {ray_neg.angle} land {gap:.3g} apart")
    return RayRegion((ray_pos, ray_neg), 0.5 * (ray_pos.landing + ray_neg.landing), contains_zero_side,
                     complex(centre))


@dataclass
class StandardRegions:
    """U_alpha/U_beta (rays +-1/4), W (+-5/12) and V (+-5/36) of a polynomial."""

    U_alpha: RayRegion
    U_beta: RayRegion
    W: RayRegion
    V: RayRegion
    rays: dict
    image_defect: float


STANDARD_ANGLES = {
    "U": (CircleAngle(1, 4), CircleAngle(3, 4)),
    "W": (CircleAngle(5, 12), CircleAngle(7, 12)),
    "V": (CircleAngle(5, 36), CircleAngle(31, 36)),
}


def build_standard_regions(f: CubicPolynomial, settings: RaySettings = DEFAULT) -> StandardRegions:
    """Trace the six boundary rays together and assemble the four regions.

    ``image_defect`` is the largest |f(V node) - W node| over paired nodes;
    small values confirm f maps the V boundary onto the W boundary.
    """
    angles = [t for pair in STANDARD_ANGLES.values() for t in pair]
    rays = landing_points(f, angles, settings=settings)
    centre = -complex(f.c2) / 3
    tol = settings.landing_tol
    (u1, u2), (w1, w2), (v1, v2) = ([rays[t] for t in STANDARD_ANGLES[k]] for k in ("U", "W", "V"))
    U_alpha = make_region(u1, u2, True, centre, tol)
    U_beta = make_region(u1, u2, False, centre, tol)
    W = make_region(w1, w2, True, centre, tol)
    V = make_region(v1, v2, True, centre, tol)
    defect = 0.0
    s = settings.substeps
    for v, w in ((v1, w1), (v2, w2)):
        n = min(len(v.points) - s, len(w.points))
        if v.potentials[0] == w.potentials[0] and n > 0:
            img = f(v.points[s : s + n])
            defect = max(defect, float(np.max(np.abs(img - w.points[:n]) / (1 + np.abs(img)))))
    return StandardRegions(U_alpha, U_beta, W, V, rays, defect)


def label_fixed_points(f: CubicPolynomial, settings: RaySettings = DEFAULT):
    """Fixed points with beta chosen as the landing point of the 1/2-ray."""
    beta_land = landing_point(f, CircleAngle(1, 2), settings=settings)
    return fixed_points(f, beta_first=beta_land)
