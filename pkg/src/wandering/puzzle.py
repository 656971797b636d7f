"""Puzzle pieces bounded by the equipotential log 2 / 3^m and the rays landing at preimages of gamma.

Every boundary node carries a Boettcher label (angle, potential): the depth-m
graph is the equipotential at log 2 / 3^m together with the rays whose angle
satisfies 3^m t in {1/4, 3/4}, each ending at its landing point.  The angle
grid of depth m is the preimage of half the grid of depth m - 1, so f maps
boundary nodes of depth m onto nodes of depth m - 1.  Pieces are the faces of
the chord diagram formed by rays with a common landing point.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .cubic import CubicPolynomial
from .errors import CommonLandingFailed, StitchingBroken
from .numerics import CircleAngle, polyline_diameter
from .rays import DEFAULT, RaySettings, _crossing_parity, trace_rays
from .reports import Report

BASE_SAMPLES = 3 * 2**10
EQUIPOTENTIAL = math.log(2)
ALPHA, BETA = "alpha", "beta"


@dataclass
class Piece:
    depth: int
    arcs: list
    boundary: np.ndarray
    color: str
    witness: complex
    parent: int | None = None

    @property
    def diameter(self) -> float:
        return polyline_diameter(self.boundary)

    def contains(self, z) -> bool:
        return _crossing_parity(self.boundary, complex(z))


@dataclass
class PuzzleLevel:
    depth: int
    potential: float
    ray_angles: list
    pairs: dict
    landings: dict
    pieces: list = field(default_factory=list)
    grid: list = field(default_factory=list)
    equipotential: dict = field(default_factory=dict)
    rays: dict = field(default_factory=dict)
    owner: dict = field(default_factory=dict)
    ring: np.ndarray | None = None


@dataclass
class PuzzleTree:
    f: CubicPolynomial
    levels: list = field(default_factory=list)
    settings: RaySettings = DEFAULT

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    @property
    def pieces(self) -> list:
        return [lvl.pieces for lvl in self.levels]


def grid_size(depth: int) -> int:
    """3 * 2^10 * (3/2)^depth equipotential samples at the given depth (depth <= 10)."""
    if not 0 <= depth <= 10:
        raise ValueError("depth must lie in 0..10")
    return BASE_SAMPLES * 3**depth // 2**depth


def puzzle_ray_angles(depth: int) -> list[CircleAngle]:
    """Angles t with 3^depth t in {1/4, 3/4}."""
    d = 3**depth
    return sorted(CircleAngle.of(Fraction(4 * i + r, 4 * d)) for i in range(d) for r in (1, 3))


_PERMS = np.array([[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]])


def _cubic_roots_batch(c2: complex, c1: complex, q: np.ndarray) -> np.ndarray:
    """Roots of w^3 + c2 w^2 + c1 w = q for every q, shape (n, 3)."""
    comp = np.zeros((len(q), 3, 3), dtype=complex)
    comp[:, 0, 0] = -c2
    comp[:, 0, 1] = -c1
    comp[:, 0, 2] = q
    comp[:, 1, 0] = 1
    comp[:, 2, 1] = 1
    return np.linalg.eigvals(comp)


def _jumps(ring: np.ndarray, factor: float) -> int:
    """Steps of a closed polyline longer than ``factor`` times both neighbouring steps."""
    step = np.abs(np.roll(ring, -1) - ring)
    return int(np.sum((step > factor * np.roll(step, 1)) & (step > factor * np.roll(step, -1))))


def lift_equipotential(f: CubicPolynomial, prev_ring: np.ndarray, start: np.ndarray,
                       factor: float = 10.0) -> np.ndarray:
    """Equipotential of the next depth as the preimage of ``prev_ring``, stitched by continuity.

    Sample k of the new ring (angle k/N) maps to sample 2k of the previous
    ring; the three roots over it are samples k, k + N/3, k + 2N/3.  Roots
    are matched between consecutive k by the cheapest permutation and the
    matches are composed by a prefix scan; ``start`` holds the samples at
    angles 0, 1/3, 2/3 traced directly.  Raises StitchingBroken on a
    continuity jump.
    """
    M = len(prev_ring)
    N = 3 * M // 2
    n3 = N // 3
    q = prev_ring[(2 * np.arange(n3)) % M]
    R = _cubic_roots_batch(complex(f.c2), complex(f.c1), q)
    cost = np.stack([np.abs(R[1:][:, p] - R[:-1]).sum(axis=1) for p in _PERMS], axis=1)
    best = _PERMS[np.argmin(cost, axis=1)]
    # step[k][c] = column at k+1 continuing column c at k
    step = np.empty_like(best)
    np.put_along_axis(step, best, np.broadcast_to(np.arange(3), best.shape), axis=1)
    scan = np.concatenate([np.arange(3)[None, :], step])
    shift = 1
    while shift < len(scan):
        scan[shift:] = np.take_along_axis(scan[shift:], scan[:-shift], axis=1)
        shift *= 2
    first = [int(np.argmin(np.abs(R[0] - z))) for z in start]
    if len(set(first)) != 3:
        raise StitchingBroken("start samples do not pick distinct roots")
    ring = np.empty(N, dtype=complex)
    for j, c in enumerate(first):
        ring[j * n3:(j + 1) * n3] = R[np.arange(n3), scan[:, c]]
    if _jumps(ring, factor):
        raise StitchingBroken(f"{_jumps(ring, factor)} continuity jumps in the lifted equipotential")
    return ring


def _pair_landings(ends: dict, what) -> dict:
    """Pair rays by mutual nearest end points."""
    angles = list(ends)
    pts = np.array([ends[t] for t in angles])
    _, idx = cKDTree(np.column_stack([pts.real, pts.imag])).query(np.column_stack([pts.real, pts.imag]), k=2)
    near = [j if j != i else k for i, (j, k) in enumerate(idx)]
    pairs = {}
    for i, j in enumerate(near):
        if near[j] != i:
            raise what(f"ray {angles[i]} has no partner with a common landing point")
        pairs[angles[i]] = angles[j]
    return pairs


def _arc_indices(N: int, a: CircleAngle, b: CircleAngle) -> np.ndarray:
    """Indices k of the grid k/N from a to b counterclockwise, both ends included (ends on the grid)."""
    i, j = a.fraction * N, b.fraction * N
    if i.denominator != 1 or j.denominator != 1:
        raise ValueError("arc ends must lie on the grid")
    i, j = int(i), int(j)
    return np.arange(i, i + (j - i) % N + 1) % N


def _faces(ray_angles: list, pairs: dict) -> list[list[tuple]]:
    """Faces of the chord diagram as cycles of arcs (t_i, t_{i+1})."""
    n = len(ray_angles)
    pos = {t: i for i, t in enumerate(ray_angles)}
    seen = [False] * n
    faces = []
    for start in range(n):
        if seen[start]:
            continue
        arcs, i = [], start
        while not seen[i]:
            seen[i] = True
            a, b = ray_angles[i], ray_angles[(i + 1) % n]
            arcs.append((a, b))
            i = pos[pairs[b]]
        faces.append(arcs)
    return faces


def build_level(f: CubicPolynomial, depth: int, settings: RaySettings = DEFAULT,
                end_potential: float = 1e-8, retries: int = 3, prev_ring: np.ndarray | None = None) -> PuzzleLevel:
    """Graph, landing pairs and pieces of the given depth.

    The equipotential is lifted from ``prev_ring`` (the previous depth's
    samples) when given and traced directly otherwise or if the lift breaks.
    """
    g = f.as_double()
    G = EQUIPOTENTIAL / 3**depth
    N = grid_size(depth)
    grid = [CircleAngle.of(Fraction(k, N)) for k in range(N)]
    ring = None
    if prev_ring is not None and depth > 0:
        thirds = [CircleAngle.of(Fraction(j, 3)) for j in range(3)]
        start = trace_rays(g, thirds, end_potential=G, settings=settings)
        try:
            ring = lift_equipotential(g, prev_ring, np.array([start[t].end for t in thirds]))
        except StitchingBroken:
            ring = None
    if ring is None:
        eq_rays = trace_rays(g, grid, end_potential=G, settings=settings)
        ring = np.array([eq_rays[t].end for t in grid])
    equi = dict(zip(grid, ring))
    angles = puzzle_ray_angles(depth)
    end = end_potential / 3**depth
    failure = StitchingBroken if depth else CommonLandingFailed
    for attempt in range(retries + 1):
        rays = trace_rays(g, angles, end_potential=end, settings=settings)
        ends = {t: rays[t].end for t in angles}
        try:
            pairs = _pair_landings(ends, failure)
            break
        except (CommonLandingFailed, StitchingBroken):
            if attempt == retries:
                raise
            end /= 10
    landings = {t: 0.5 * (ends[t] + ends[pairs[t]]) for t in angles}
    segments = {}
    for t in angles:
        r = rays[t]
        below = r.potentials < G
        segments[t] = np.concatenate([[equi[t]], r.points[below]])
    level = PuzzleLevel(depth, G, angles, pairs, landings, grid=grid, equipotential=equi, rays=segments,
                        ring=ring)
    faces = _faces(angles, pairs)
    mids = [_midpoint(arcs[0]) for arcs in faces]
    wit = trace_rays(g, mids, end_potential=G / 2, settings=settings)
    for arcs, mid in zip(faces, mids):
        parts = []
        for a, b in arcs:
            parts.append(ring[_arc_indices(N, a, b)])
            p = pairs[b]
            parts.append(segments[b][1:])
            parts.append([landings[b]])
            parts.append(segments[p][:0:-1])
        boundary = np.concatenate([np.asarray(x, dtype=complex) for x in parts])
        color = ALPHA if abs(mid.triple(depth).signed()) < Fraction(1, 4) else BETA
        level.owner.update({a: len(level.pieces) for a, _ in arcs})
        level.pieces.append(Piece(depth, arcs, boundary, color, wit[mid].end))
    return level


def _midpoint(arc) -> CircleAngle:
    a, b = arc
    return CircleAngle.of(a.fraction + ((b.fraction - a.fraction) % 1) / 2)


def arc_owner(level: PuzzleLevel, t) -> int:
    """Index of the piece whose equipotential arcs contain the angle t (not a ray angle)."""
    t = CircleAngle.of(t)
    starts = level.ray_angles
    i = bisect.bisect_left(starts, t)
    if i < len(starts) and starts[i] == t:
        raise ValueError(f"{t} is a ray angle of depth {level.depth}")
    return level.owner[starts[i - 1]]


def _link_parents(parent: PuzzleLevel, child: PuzzleLevel) -> None:
    """Parent = the depth m-1 piece whose arcs contain the child's first arc midpoint."""
    for pc in child.pieces:
        pc.parent = arc_owner(parent, _midpoint(pc.arcs[0]))


def _check_equivariant(parent: PuzzleLevel, child: PuzzleLevel) -> None:
    for t, u in child.pairs.items():
        if parent.pairs.get(t.triple()) != u.triple():
            raise StitchingBroken(f"pair ({t}, {u}) does not map to a depth-{parent.depth} pair")


def build_gamma0(f: CubicPolynomial, settings: RaySettings = DEFAULT) -> PuzzleTree:
    """Depth-0 puzzle: equipotential log 2 and the rays 1/4, 3/4 landing at gamma."""
    level = build_level(f, 0, settings)
    if len(level.pieces) != 2:
        raise CommonLandingFailed(f"{len(level.pieces)} depth-0 pieces")
    return PuzzleTree(f, [level], settings)


def pullback_level(f: CubicPolynomial, tree: PuzzleTree) -> PuzzleTree:
    """Tree extended by one depth; pairs must map onto the previous pairs and pieces nest."""
    parent = tree.levels[-1]
    child = build_level(f, tree.depth + 1, tree.settings, prev_ring=parent.ring)
    _check_equivariant(parent, child)
    _link_parents(parent, child)
    return PuzzleTree(tree.f, tree.levels + [child], tree.settings)


def build_puzzle(f: CubicPolynomial, depth: int = 8, settings: RaySettings = DEFAULT) -> PuzzleTree:
    tree = build_gamma0(f, settings)
    for _ in range(depth):
        tree = pullback_level(f, tree)
    return tree


def max_diameter(tree: PuzzleTree, depth: int) -> float:
    if depth > tree.depth:
        raise ValueError(f"tree only has depth {tree.depth}")
    return max(p.diameter for p in tree.levels[depth].pieces)


def piece_containing(level: PuzzleLevel, z) -> list[int]:
    return [n for n, p in enumerate(level.pieces) if p.contains(z)]


def check_tree(tree: PuzzleTree) -> Report:
    """Nesting by witness points, at most one critical point per piece, colors pulled through f."""
    rep = Report("puzzle")
    g = tree.f.as_double()
    crit = [complex(c) for c in g.critical_points]
    for m, level in enumerate(tree.levels):
        counts = [0] * len(level.pieces)
        for c in crit:
            for n in piece_containing(level, c):
                counts[n] += 1
        rep.add(f"depth {m}: at most one critical point per piece", max(counts) <= 1, max(counts), 1)
        if m == 0:
            continue
        parent = tree.levels[m - 1]
        boxes = np.array([[p.boundary.real.min(), p.boundary.real.max(), p.boundary.imag.min(),
                           p.boundary.imag.max()] for p in parent.pieces])
        bad = 0
        for pc in level.pieces:
            w = pc.witness
            near = np.nonzero((boxes[:, 0] <= w.real) & (w.real <= boxes[:, 1])
                              & (boxes[:, 2] <= w.imag) & (w.imag <= boxes[:, 3]))[0]
            hits = [int(n) for n in near if parent.pieces[n].contains(w)]
            bad += hits != [pc.parent]
        rep.add(f"depth {m}: pieces nest in exactly one parent", bad == 0, bad, 0)
        wrong = sum(parent.pieces[arc_owner(parent, _midpoint(pc.arcs[0]).triple())].color != pc.color
                    for pc in level.pieces)
        rep.add(f"depth {m}: colors are pulled back through f", wrong == 0, wrong, 0)
    return rep


def write_csv(tree: PuzzleTree, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["depth", "piece", "color", "parent", "index", "re", "im"])
        for level in tree.levels:
            for n, pc in enumerate(level.pieces):
                parent = "" if pc.parent is None else pc.parent
                for i, z in enumerate(pc.boundary):
                    w.writerow([level.depth, n, pc.color, parent, i, repr(float(z.real)), repr(float(z.imag))])


COLORS = {ALPHA: "#4f81bd", BETA: "#c0504d"}


def write_svg(tree: PuzzleTree, path, size: int = 800, max_points: int = 4000) -> None:
    """One layer per depth, pieces filled by color class."""
    pts = np.concatenate([pc.boundary for pc in tree.levels[0].pieces])
    lo = complex(pts.real.min(), pts.imag.min())
    span = max(pts.real.max() - lo.real, pts.imag.max() - lo.imag)
    scale = size / span

    def xy(z):
        return f"{(z.real - lo.real) * scale:.2f},{(span - (z.imag - lo.imag)) * scale:.2f}"

    with open(path, "w") as fh:
        fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">\n')
        for level in tree.levels:
            fh.write(f'<g id="depth{level.depth}" stroke="black" stroke-width="0.3" fill-opacity="0.35">\n')
            for pc in level.pieces:
                b = pc.boundary
                step = max(1, len(b) // max_points)
                d = " ".join(xy(z) for z in b[::step])
                fh.write(f'<polygon fill="{COLORS[pc.color]}" points="{d}"/>\n')
            fh.write("</g>\n")
        fh.write("</svg>\n")
