"""Branching point, its four external angles, admissibility, nodal points and loop samples."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .config import Configuration, orbit_scale
from .cubic import CubicPolynomial, fixed_points, iterate
from .errors import (
    Escaped,
    NoFourRayCluster,
    NoTripleCoincidence,
    NotSeparated,
    SeparationFailed,
    WanderingError,
)
from .numerics import CircleAngle, cubic_roots, newton_1c
from .rays import DEFAULT, RaySettings, landing_points, trace_rays
from .reports import Report

TEST_ANGLES = (CircleAngle(1, 2), CircleAngle(1, 6), CircleAngle(5, 6))


# ---------------------------------------------------------------------------
# angle combinatorics


def separation_map(angles: Sequence[CircleAngle], tests=TEST_ANGLES) -> dict:
    """Index of the arc of T minus ``angles`` holding each test angle.

    Arc i runs counterclockwise from the i-th to the (i+1)-th sorted angle.
    A test angle equal to one of ``angles`` maps to None.
    """
    cut = sorted(CircleAngle.of(a) for a in angles)
    out = {}
    for t in tests:
        t = CircleAngle.of(t)
        if t in cut:
            out[t] = None
            continue
        idx = len(cut) - 1
        for i, c in enumerate(cut):
            if c.fraction < t.fraction:
                idx = i
        out[t] = idx
    return out


def separates(angles, tests=TEST_ANGLES) -> bool:
    idx = list(separation_map(angles, tests).values())
    return None not in idx and len(set(idx)) == len(idx)


# ---------------------------------------------------------------------------
# level-wise pullback of angle sets along an orbit


def _root_assignment(f: CubicPolynomial, image, ends: np.ndarray):
    """Roots of f(w) = image and, for each end point, the index of the nearest root."""
    roots = [complex(r) for r in cubic_roots(1, f.c2, f.c1, -image)]
    d = np.abs(ends[:, None] - np.array(roots)[None, :])
    return roots, np.argmin(d, axis=1), d


def angles_along_orbit(f: CubicPolynomial, points: Sequence[complex], final: Sequence[CircleAngle],
                       settings: RaySettings = DEFAULT) -> list[list[CircleAngle]]:
    """Angles of rays landing at each of ``points`` with f(points[i]) = points[i+1].

    Starts from the angles ``final`` at the last point and pulls back one level
    at a time, keeping the preimage angles whose rays end nearest the orbit
    point among the three preimages of the next point.
    """
    g = f.as_double()
    sets = [sorted(CircleAngle.of(t) for t in final)]
    for i in range(len(points) - 2, -1, -1):
        cands = sorted({p for t in sets[0] for p in t.preimages()})
        rays = trace_rays(g, cands, settings=settings)
        ends = np.array([rays[t].end for t in cands])
        roots, nearest, _ = _root_assignment(g, complex(points[i + 1]), ends)
        z = complex(points[i])
        gaps = [abs(r - z) for r in roots]
        # a critical orbit point is a double root: accept every root that coincides with it
        target = {n for n, d in enumerate(gaps) if d <= max(min(gaps), 1e-6 * (1 + abs(z)))}
        keep = [t for t, n in zip(cands, nearest) if n in target]
        sets.insert(0, keep)
    return sets


def orbit_to_zero(f: CubicPolynomial, z, n: int) -> list[complex]:
    """[z, f(z), ..., f^n(z)] with the last entry snapped to the fixed point 0."""
    pts = [complex(z)]
    for _ in range(n):
        pts.append(complex(f(pts[-1])))
    pts[-1] = 0j
    return pts


def critical_angles(f: CubicPolynomial, cfg: Configuration, settings: RaySettings = DEFAULT):
    """(angles at omega', angles at omega) by pullback of {0} along the critical orbit."""
    g = f.as_double()
    at_wp = angles_along_orbit(g, orbit_to_zero(g, g.b, cfg.l), [CircleAngle(0, 1)], settings)[0]
    pts = [complex(g.a)]
    for _ in range(cfg.k):
        pts.append(complex(g(pts[-1])))
    pts[-1] = complex(g.b)
    at_w = angles_along_orbit(g, pts, at_wp, settings)[0]
    return at_wp, at_w


def landing_angles_at(f: CubicPolynomial, target, candidates, tol: float = 1e-6,
                      settings: RaySettings = DEFAULT) -> list[CircleAngle]:
    """Candidates whose rays land within max(tol, 3 * landing tolerance) of ``target``."""
    cl = max(tol, 3 * settings.landing_tol)
    rays = landing_points(f.as_double(), candidates, settings=settings)
    out = []
    for t in sorted(CircleAngle.of(c) for c in candidates):
        r = rays[t]
        z = r.landing if r.landing is not None else r.end
        if abs(z - complex(target)) <= cl:
            out.append(t)
    return out


# ---------------------------------------------------------------------------
# branching point


@dataclass
class BranchingData:
    xi: complex
    angles: tuple
    j: int
    separation: dict
    omega_angles: tuple = ()
    omega_prime_angles: tuple = ()
    spread: float = 0.0

    def to_record(self) -> dict:
        return {
            "xi_re": self.xi.real,
            "xi_im": self.xi.imag,
            "j": self.j,
            "angles": [str(t) for t in self.angles],
            "separation": {str(k): v for k, v in self.separation.items()},
        }


def _refine_xi(f: CubicPolynomial, estimate: complex, j: int) -> complex:
    """Newton on f^j(z) = omega from the ray-landing estimate."""
    if j == 0:
        return complex(f.a)
    g = f.as_double()
    target = complex(g.a)

    def F(z):
        return iterate(g, z, j) - target

    def dF(z):
        d = 1.0 + 0j
        for _ in range(j):
            d *= g.derivative(z)
            z = g(z)
        return d

    return complex(newton_1c(F, dF, complex(estimate), 1e-13 * orbit_scale(g, 1), max_iter=60))


def _cluster_four(ends: np.ndarray):
    """Split 8 end points into two groups of 4 around two well separated centres."""
    d = np.abs(ends[:, None] - ends[None, :])
    i, j = np.unravel_index(np.argmax(d), d.shape)
    to_i = np.abs(ends - ends[i]) < np.abs(ends - ends[j])
    groups = [np.nonzero(to_i)[0], np.nonzero(~to_i)[0]]
    if any(len(g) != 4 for g in groups):
        raise NoFourRayCluster(f"cluster sizes {[len(g) for g in groups]}")
    return groups


def _choose_separating(f, cfg, groups_of_angles, ends_by_angle, omega_angles, omega_prime_angles):
    hits = [grp for grp in groups_of_angles if separates(grp)]
    if len(hits) != 1:
        raise SeparationFailed(f"{len(hits)} of {len(groups_of_angles)} candidate points separate the test angles")
    grp = sorted(hits[0])
    pts = np.array([ends_by_angle[t] for t in grp])
    est = complex(pts.mean())
    spread = float(np.max(np.abs(pts - est)))
    xi = _refine_xi(f, est, cfg.j)
    return BranchingData(xi, tuple(grp), cfg.j, separation_map(grp), tuple(omega_angles),
                         tuple(omega_prime_angles), spread)


def eight_ray_candidates(prev: BranchingData, prev_cfg: Configuration, m: int,
                         omega_prime_angles: Sequence[CircleAngle]) -> list[CircleAngle]:
    """theta_i + eta^+- with eta = eps / 3^(m + l + j + k) and eps the angles at the new omega'."""
    shifts = []
    for e in omega_prime_angles:
        eps = CircleAngle.of(e).signed()
        if not -Fraction(5, 12) < eps < Fraction(5, 12):
            raise SeparationFailed(f"angle {e} at omega' outside (-5/12, 5/12)")
        shifts.append(eps / 3 ** (m + prev_cfg.l + prev_cfg.j + prev_cfg.k))
    return sorted({t + s for t in prev.angles for s in shifts})


def find_branching_point(f: CubicPolynomial, cfg: Configuration, hint=None,
                         settings: RaySettings = DEFAULT, max_exhaustive_j: int = 6) -> BranchingData:
    """Locate xi with f^j(xi) = omega and its four angles.

    ``hint`` = (previous BranchingData, previous Configuration, m) from the
    chain step that produced f; without it the 3^j preimages of omega are
    searched exhaustively (j <= max_exhaustive_j).
    """
    g = f.as_double()
    at_wp, at_w = critical_angles(g, cfg, settings)
    if len(at_w) != 4:
        raise NoFourRayCluster(f"{len(at_w)} rays land at omega")
    if cfg.j == 0:
        rays = trace_rays(g, at_w, settings=settings)
        ends = {t: rays[t].end for t in at_w}
        return _choose_separating(g, cfg, [at_w], ends, at_w, at_wp)
    if hint is not None:
        prev, prev_cfg, m = hint
        cands = eight_ray_candidates(prev, prev_cfg, m, at_wp)
        rays = trace_rays(g, cands, settings=settings)
        ends = {t: rays[t].end for t in cands}
        arr = np.array([ends[t] for t in cands])
        groups = [[cands[i] for i in grp] for grp in _cluster_four(arr)]
        bd = _choose_separating(g, cfg, groups, ends, at_w, at_wp)
        want = set(at_w)
        for t in bd.angles:
            if t.triple(cfg.j) not in want:
                raise NoFourRayCluster(f"3^{cfg.j} * {t} does not land at omega")
        return bd
    if cfg.j > max_exhaustive_j:
        raise NoFourRayCluster(f"exhaustive search for j={cfg.j} exceeds the limit; pass a hint")
    # exhaustive: pull the four angles at omega back j levels along every branch
    nodes = [(complex(g.a), list(at_w))]
    for _ in range(cfg.j):
        cands = sorted({p for _, angs in nodes for t in angs for p in t.preimages()})
        rays = trace_rays(g, cands, settings=settings)
        ends = {t: rays[t].end for t in cands}
        new_nodes = []
        for z, angs in nodes:
            pre = sorted({p for t in angs for p in t.preimages()})
            roots, nearest, _ = _root_assignment(g, z, np.array([ends[t] for t in pre]))
            for r in range(3):
                grp = [t for t, n in zip(pre, nearest) if n == r]
                if len(grp) != 4:
                    raise NoFourRayCluster(f"{len(grp)} rays at a preimage of an orbit point")
                new_nodes.append((roots[r], grp))
        nodes = new_nodes
    leaves = [angs for _, angs in nodes]
    rays = trace_rays(g, [t for grp in leaves for t in grp], settings=settings)
    ends = {t: r.end for t, r in rays.items()}
    return _choose_separating(g, cfg, leaves, ends, at_w, at_wp)


# ---------------------------------------------------------------------------
# admissibility


def beta_preimages(f: CubicPolynomial, settings: RaySettings = DEFAULT):
    """Landing points of the rays 1/2, 1/6, 5/6 and the three roots of f(w) = beta."""
    g = f.as_double()
    rays = landing_points(g, TEST_ANGLES, settings=settings)
    beta = rays[TEST_ANGLES[0]].end
    fp = fixed_points(g, beta_first=beta)
    roots = [complex(r) for r in cubic_roots(1, g.c2, g.c1, -fp.beta)]
    return {t: rays[t] for t in TEST_ANGLES}, fp, roots


def verify_admissible(f: CubicPolynomial, cfg: Configuration, branching: BranchingData,
                      settings: RaySettings = DEFAULT) -> Report:
    rep = Report("admissibility")
    g = f.as_double()
    scale = orbit_scale(g, cfg.j + cfg.k + cfg.l + 1)
    tol = 1e-8 * scale
    try:
        r_xi = abs(complex(iterate(g, branching.xi, cfg.j)) - complex(g.a))
        r_w = abs(complex(iterate(g, g.a, cfg.k)) - complex(g.b))
        r_wp = abs(complex(iterate(g, g.b, cfg.l)))
    except Escaped as exc:
        rep.add("orbit stays bounded", False, detail=str(exc))
        return rep
    rep.add(f"f^{cfg.j}(xi) = omega", r_xi <= tol, r_xi, tol)
    rep.add(f"f^{cfg.k}(omega) = omega'", r_w <= tol, r_w, tol)
    rep.add(f"f^{cfg.l}(omega') = 0", r_wp <= tol, r_wp, tol)
    rep.add("xi separates the test angles", separates(branching.angles))
    rays = trace_rays(g, branching.angles, settings=settings)
    spread = max(abs(rays[t].end - branching.xi) for t in branching.angles)
    rep.add("four rays land at xi", spread <= 1e-3, spread, 1e-3)
    try:
        test_rays, fp, roots = beta_preimages(g, settings)
        ends = [test_rays[t].end for t in TEST_ANGLES]
        hit = [int(np.argmin([abs(e - r) for r in roots])) for e in ends]
        miss = max(min(abs(e - r) for r in roots) for e in ends)
        rep.add("rays 1/2, 1/6, 5/6 land at the three preimages of beta",
                len(set(hit)) == 3 and miss <= 1e-5, miss, 1e-5)
    except WanderingError as exc:
        rep.add("rays 1/2, 1/6, 5/6 land at the three preimages of beta", False, detail=str(exc))
    pts = [complex(branching.xi)]
    for _ in range(cfg.j):
        pts.append(complex(g(pts[-1])))
    crit = (complex(g.a), complex(g.b))
    sep = min([abs(p - q) for i, p in enumerate(pts[:-1]) for q in pts[i + 1:-1]] + [np.inf])
    crit_gap = min([abs(p - c) for p in pts[:-1] for c in crit] + [np.inf])
    rep.add("xi orbit before omega is distinct and non-critical", min(sep, crit_gap) > 1e-9,
            min(sep, crit_gap), 1e-9)
    return rep


# ---------------------------------------------------------------------------
# loops and nodal points


@dataclass
class LoopApproximation:
    """Points of the rays k/M, k = 0..M-1, at potential ``potential``."""

    angles: list
    points: np.ndarray
    potential: float
    f: CubicPolynomial | None = field(default=None, repr=False)

    @property
    def M(self) -> int:
        return len(self.angles)

    @property
    def samples(self):
        return list(zip(self.angles, self.points.tolist()))

    def at(self, t) -> complex:
        t = CircleAngle.of(t)
        if (t.den and self.M % t.den) and t.den != 1:
            raise KeyError(f"{t} is not on the grid of size {self.M}")
        return complex(self.points[(t.num * self.M // t.den) % self.M])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["num", "den", "re", "im"])
            for t, z in zip(self.angles, self.points):
                w.writerow([t.num, t.den, repr(float(z.real)), repr(float(z.imag))])


def approximate_loop(f: CubicPolynomial, M: int = 2048, eps: float = 1e-4,
                     settings: RaySettings = DEFAULT) -> LoopApproximation:
    if M < 3 or eps <= 0:
        raise ValueError("need M >= 3 and eps > 0")
    angles = [CircleAngle(k, M) for k in range(M)]
    rays = trace_rays(f.as_double(), angles, end_potential=eps, settings=settings)
    pts = np.array([rays[t].end for t in angles])
    return LoopApproximation(angles, pts, eps, f)


def loop_distance(a: LoopApproximation, b: LoopApproximation) -> float:
    if a.M != b.M:
        raise ValueError("loops must share the angle grid")
    return float(np.max(np.abs(a.points - b.points)))


def _arc_samples(loop: LoopApproximation, tests):
    """For each of the three arcs between consecutive test angles, its (angles, points) in order."""
    ts = sorted(CircleAngle.of(t) for t in tests)
    out = []
    for i in range(3):
        lo = ts[i].fraction
        length = (ts[(i + 1) % 3].fraction - lo) % 1
        rows = [((t.fraction - lo) % 1, t, z) for t, z in zip(loop.angles, loop.points)]
        rows = sorted(r for r in rows if r[0] <= length)
        out.append(([r[1] for r in rows], np.array([r[2] for r in rows], dtype=complex)))
    return out


def _polyline_distance(poly: np.ndarray, z: complex) -> float:
    if len(poly) == 1:
        return float(abs(poly[0] - z))
    a, b = poly[:-1], poly[1:]
    d = b - a
    L2 = np.abs(d) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(np.where(L2 > 0, ((z - a) * np.conj(d)).real / L2, 0.0), 0.0, 1.0)
    return float(np.min(np.abs(z - (a + t * d))))


def _local_spacing(poly: np.ndarray, z: complex) -> float:
    if len(poly) < 2:
        return 0.0
    i = int(np.argmin(np.abs(poly - z)))
    nb = [abs(poly[i] - poly[j]) for j in (i - 1, i + 1) if 0 <= j < len(poly)]
    return float(max(nb))


def _minimax(polys):
    """Point minimizing the largest distance to the polylines, from the best pairwise midpoint."""

    def score(z):
        return max(_polyline_distance(p, z) for p in polys)

    cands = []
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            d = np.abs(polys[i][:, None] - polys[j][None, :])
            p, q = np.unravel_index(np.argmin(d), d.shape)
            cands.append(0.5 * (polys[i][p] + polys[j][q]))
    best = min(cands, key=score)
    res = minimize(lambda v: score(complex(v[0], v[1])), [best.real, best.imag], method="Nelder-Mead",
                   options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 4000})
    z = complex(res.x[0], res.x[1])
    if score(z) > score(best):
        z = best
    return z, score(z)


def _visits(arcs, z, ratio=2.0):
    """Angles of the local minima of |point - z| along the arcs within ``ratio`` of the smallest."""
    found = []
    for angles, pts in arcs:
        d = np.abs(pts - z)
        for i in range(len(d)):
            if (i == 0 or d[i] <= d[i - 1]) and (i == len(d) - 1 or d[i] <= d[i + 1]):
                found.append((d[i], angles[i]))
    dmin = min(v[0] for v in found)
    return list(dict.fromkeys(t for d, t in found if d <= ratio * dmin))


def nodal_point_loop(loop: LoopApproximation, tests=TEST_ANGLES, min_samples: int = 300,
                     refine: int = 3, factor: int = 16, window: int = 2, sweeps: int = 20) -> complex:
    """Point where the images of the three arcs between the test angles come together.

    A first estimate minimizes the largest distance to the three arc
    polylines; it must lie within 3x the local sample spacing of every arc,
    else NoTripleCoincidence.  The loop passes the nodal point once per ray
    landing there, closest to it where it crosses the ray, and those
    crossings sit symmetrically around it.  When the loop carries its
    polynomial, each pass near the first estimate is resampled ``refine``
    times, ``factor`` times finer over ``window`` old steps either side, and
    the estimate is iterated as the mean of the points closest to it.
    """
    if loop.M < min_samples:
        raise NoTripleCoincidence(f"{loop.M} samples are too coarse (need {min_samples})")
    arcs = _arc_samples(loop, tests)
    if any(len(a[0]) == 0 for a in arcs):
        raise NoTripleCoincidence("an arc holds no samples")
    z, sc = _minimax([a[1] for a in arcs])
    tol = 3 * max(_local_spacing(a[1], z) for a in arcs)
    if sc > tol:
        raise NoTripleCoincidence(f"arcs come within {sc:.3g} of a common point, tolerance {tol:.3g}")
    if loop.f is None or refine <= 0:
        return z
    g = loop.f.as_double()
    centres = [t.fraction for t in _visits(arcs, z)]
    step = Fraction(1, loop.M)
    for _ in range(refine):
        step /= factor
        half = window * factor
        wins = [[c + i * step for i in range(-half, half + 1)] for c in centres]
        rays = trace_rays(g, sorted({CircleAngle.of(u) for w in wins for u in w}), end_potential=loop.potential)
        pts = [np.array([rays[CircleAngle.of(u)].end for u in w]) for w in wins]
        for _ in range(sweeps):
            idx = [int(np.argmin(np.abs(p - z))) for p in pts]
            z_new = complex(np.mean([p[i] for p, i in zip(pts, idx)]))
            done = z_new == z
            z = z_new
            if done:
                break
        centres = [w[i] for w, i in zip(wins, idx)]
    return z


def nodal_point_exact(f: CubicPolynomial, branching: BranchingData, tests=TEST_ANGLES,
                      loop: LoopApproximation | None = None) -> complex:
    """xi when its four angles separate the test angles.

    Otherwise, with a loop available, the loop nodal point is located and
    reported through NotSeparated when it coincides with a test landing point.
    """
    if separates(branching.angles, tests):
        return complex(branching.xi)
    if loop is not None:
        z = nodal_point_loop(loop, tests)
        rays = landing_points(f.as_double(), tests)
        for i, t in enumerate(sorted(CircleAngle.of(x) for x in tests)):
            if abs(rays[t].end - z) <= 3 * _local_spacing(loop.points, z):
                raise NotSeparated(rays[t].end, i)
    raise SeparationFailed("the four angles at xi do not separate the test angles")
