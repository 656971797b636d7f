"""Escape-time images with ray, marker and puzzle overlays, written as binary PPM."""
from __future__ import annotations

import colorsys
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .cubic import CubicPolynomial
from .rays import DEFAULT, RaySettings, trace_rays

WHITE = (255, 255, 255)
RED = (255, 0, 0)


@dataclass
class RenderJob:
    f: CubicPolynomial
    center: complex = 0j
    width: float = 4.0
    pixels: tuple = (400, 400)
    rays: tuple = ()
    markers: tuple = ()
    puzzle_depth: int | None = None
    budget: int = 500
    smooth: bool = False
    threads: int = 1
    ray_end_potential: float = 1e-6

    def __post_init__(self):
        w, h = self.pixels
        if w <= 0 or h <= 0:
            raise ValueError("pixel counts must be positive")
        if not self.width > 0:
            raise ValueError("width must be positive")

    @property
    def step(self) -> float:
        return self.width / self.pixels[0]

    def plane(self, rows: np.ndarray) -> np.ndarray:
        """Pixel centres of the given rows; exactly conjugation-symmetric about the centre."""
        w, h = self.pixels
        x = (2 * np.arange(w) - (w - 1)) / 2 * self.step
        y = ((h - 1) - 2 * rows) / 2 * self.step
        return complex(self.center) + x[None, :] + 1j * y[:, None]

    def to_pixel(self, z: complex):
        w, h = self.pixels
        d = complex(z) - complex(self.center)
        col = d.real / self.step + (w - 1) / 2
        row = (h - 1) / 2 - d.imag / self.step
        return row, col


def escape_counts(f: CubicPolynomial, z: np.ndarray, budget: int = 500, smooth: bool = False) -> np.ndarray:
    """Iterations before |z| exceeds the escape radius; ``budget`` for points that never do."""
    c2, c1 = complex(f.c2), complex(f.c1)
    R = f.escape_radius()
    z = np.array(z, dtype=complex)
    n = np.full(z.shape, budget, dtype=float)
    alive = np.ones(z.shape, dtype=bool)
    for i in range(budget):
        out = alive & (np.abs(z) > R)
        if out.any():
            if smooth:
                n[out] = i - np.log(np.log(np.abs(z[out])) / math.log(R)) / math.log(3)
            else:
                n[out] = i
            alive &= ~out
        if not alive.any():
            break
        z[alive] = z[alive] * (z[alive] * (z[alive] + c2) + c1)
    return n


def gray(counts: np.ndarray, budget: int) -> np.ndarray:
    """Light far from the set, darker near it, black for points that never escape."""
    v = 255 * (1 - np.log1p(np.clip(counts, 0, budget)) / math.log1p(budget))
    v = np.where(counts >= budget, 0, v)
    return np.round(v).astype(np.uint8)


def _draw_polyline(img: np.ndarray, job: RenderJob, pts, color) -> None:
    h, w, _ = img.shape
    pts = [job.to_pixel(z) for z in pts]
    for (r0, c0), (r1, c1) in zip(pts, pts[1:]):
        n = int(math.ceil(max(abs(r1 - r0), abs(c1 - c0)))) + 1
        if n > 4 * (w + h):
            continue
        r = np.rint(np.linspace(r0, r1, n)).astype(int)
        c = np.rint(np.linspace(c0, c1, n)).astype(int)
        ok = (r >= 0) & (r < h) & (c >= 0) & (c < w)
        img[r[ok], c[ok]] = color


def _draw_marker(img: np.ndarray, job: RenderJob, z, color, size: int = 3) -> None:
    h, w, _ = img.shape
    r, c = (int(round(v)) for v in job.to_pixel(z))
    for d in range(-size, size + 1):
        for rr, cc in ((r + d, c), (r, c + d)):
            if 0 <= rr < h and 0 <= cc < w:
                img[rr, cc] = color


def depth_hue(depth: int, total: int):
    r, g, b = colorsys.hsv_to_rgb((depth / max(total, 1)) * 0.8, 1.0, 1.0)
    return (int(round(255 * r)), int(round(255 * g)), int(round(255 * b)))


def render(job: RenderJob, settings: RaySettings = DEFAULT) -> np.ndarray:
    """RGB image of shape (height, width, 3), uint8; identical for any thread count."""
    w, h = job.pixels
    g = job.f.as_double()
    block = max(1, math.ceil(h / max(job.threads, 1) / 4))
    starts = list(range(0, h, block))

    def band(r0):
        rows = np.arange(r0, min(r0 + block, h))
        return escape_counts(g, job.plane(rows), job.budget, job.smooth)

    if job.threads > 1:
        with ThreadPoolExecutor(job.threads) as pool:
            parts = list(pool.map(band, starts))
    else:
        parts = [band(r0) for r0 in starts]
    counts = np.concatenate(parts)
    img = np.repeat(gray(counts, job.budget)[:, :, None], 3, axis=2)
    if job.puzzle_depth is not None:
        from .puzzle import build_puzzle

        tree = build_puzzle(g, job.puzzle_depth, settings)
        for level in tree.levels:
            color = depth_hue(level.depth, tree.depth)
            for pc in level.pieces:
                _draw_polyline(img, job, np.append(pc.boundary, pc.boundary[:1]), color)
    if job.rays:
        rays = trace_rays(g, job.rays, end_potential=job.ray_end_potential, settings=settings)
        for t in job.rays:
            _draw_polyline(img, job, rays[t].points, WHITE)
    for z in job.markers:
        _draw_marker(img, job, z[1] if isinstance(z, tuple) else z, RED)
    return img


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def write_ppm(path, img: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    fields, pos = [], 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = int(fields[1]), int(fields[2])
    return np.frombuffer(data[pos + 1:pos + 1 + w * h * 3], dtype=np.uint8).reshape(h, w, 3)
