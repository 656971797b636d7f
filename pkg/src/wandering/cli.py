"""Command-line entry point: one subcommand per pipeline stage, results as line records.

A record is one line of ``key:value`` fields separated by spaces; values are
compact JSON (numbers, quoted strings, [arrays], {objects}).  ``--json``
prints one JSON object per line instead.  Exit codes: 0 when every check
passes, 1 when a check fails, 2 on a pipeline error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from .config import Configuration, configuration_residuals, orbit_scale, solve_config, verify_in_V
from .constants import FIG5, FIG5_SCHEDULE, published_branching, published_member, relative_error
from .cubic import CubicPolynomial, from_coefficients, from_critical_points, seed_polynomial
from .dendrite import (
    TEST_ANGLES,
    approximate_loop,
    find_branching_point,
    nodal_point_exact,
    nodal_point_loop,
    verify_admissible,
)
from .errors import WanderingError
from .numerics import CircleAngle
from .rays import DEFAULT, RaySettings, landing_points, trace_rays
from .reports import Report

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


# ---------------------------------------------------------------------------
# records


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, CircleAngle):
        return str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [_clean(float(value.real)), _clean(float(value.imag))]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if value is None or isinstance(value, str):
        return value
    return str(value)


def format_record(rec: dict) -> str:
    return " ".join(f"{k}:{json.dumps(_clean(v), separators=(',', ':'))}" for k, v in rec.items())


def parse_record(line: str) -> dict:
    dec = json.JSONDecoder()
    out, i = {}, 0
    line = line.strip()
    while i < len(line):
        j = line.index(":", i)
        key = line[i:j]
        value, i = dec.raw_decode(line, j + 1)
        out[key] = value
        while i < len(line) and line[i] == " ":
            i += 1
    return out


def polynomial_fields(f: CubicPolynomial) -> dict:
    a, b = complex(f.a), complex(f.b)
    return {"a": [a.real, a.imag], "b": [b.real, b.imag],
            "c1": complex(f.c1), "c2": complex(f.c2)}


def polynomial_from_fields(rec: dict) -> CubicPolynomial:
    return CubicPolynomial(complex(*rec["a"]), complex(*rec["b"]))


def report_fields(rep: Report) -> list:
    return [{"name": c.name, "pass": c.passed, "measured": c.measured, "tolerance": c.tolerance}
            for c in rep.checks]


class Emitter:
    def __init__(self, as_json: bool, stream=None):
        self.as_json = as_json
        self.stream = stream or sys.stdout
        self.lines: list[str] = []

    def __call__(self, rec: dict) -> None:
        line = json.dumps(_clean(rec)) if self.as_json else format_record(rec)
        self.lines.append(line)
        print(line, file=self.stream, flush=True)


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_complex(text: str) -> complex:
    return complex(text.replace(" ", "").replace("i", "j"))


def parse_polynomial(spec: str, tol: float = 1e-10):
    """seed | fig5:N | crit:A,B | coef:C1,C2[,K]; returns (f, configuration or None)."""
    spec = spec.strip()
    if spec in ("seed", "f0"):
        return seed_polynomial(), Configuration(0, 2, 1)
    kind, _, rest = spec.partition(":")
    if kind == "fig5" or (spec[:1] == "f" and spec[1:].isdigit()):
        n = int(rest if kind == "fig5" else spec[1:])
        if not 0 <= n < len(FIG5):
            raise ValueError(f"no published member {n}")
        return published_member(n, tol)
    parts = [p for p in rest.split(",") if p]
    if kind == "crit" and len(parts) == 2:
        return from_critical_points(parse_complex(parts[0]), parse_complex(parts[1])), None
    if kind == "coef" and len(parts) in (2, 3):
        k = int(parts[2]) if len(parts) == 3 else None
        return from_coefficients(parse_complex(parts[0]), parse_complex(parts[1]), k), None
    raise ValueError(f"cannot parse polynomial {spec!r}")


def parse_configuration(text: str | None, default: Configuration | None) -> Configuration:
    if text is None:
        if default is None:
            raise ValueError("a configuration j,k,l is required for this polynomial")
        return default
    j, k, l = (int(x) for x in text.split(","))
    return Configuration(j, k, l)


def read_config_file(path) -> dict:
    """key=value lines; '#' starts a comment."""
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


RAY_KEYS = {"substeps": int, "start_potential": float, "end_potential": float, "landing_tol": float,
            "refinements": int, "jump_factor": float, "asymptotic_potential": float, "max_newton": int}


def settings_from(args) -> RaySettings:
    values = {k: conv(v) for k, v in args.file_config.items() if k in RAY_KEYS for conv in [RAY_KEYS[k]]}
    values["threads"] = args.threads
    return RaySettings(**{**DEFAULT.__dict__, **values})


def _branching(f, cfg, spec: str, settings):
    """Branching data; published members are located along the chain."""
    kind, _, rest = spec.partition(":")
    n = int(rest) if kind == "fig5" else (int(spec[1:]) if spec[:1] == "f" and spec[1:].isdigit() else None)
    if n is not None and cfg.j > 6:
        return published_branching(n, settings)[-1][2]
    return find_branching_point(f, cfg, settings=settings)


# ---------------------------------------------------------------------------
# commands


def cmd_solve_config(args, emit, settings) -> int:
    k, l = args.k, args.l
    f = solve_config((parse_complex(args.a), parse_complex(args.b)), k, l, args.tol, args.precision)
    r1, r2 = configuration_residuals(f, Configuration(0, k, l))
    scale = orbit_scale(f.as_double(), k + l)
    ok = max(r1, r2) <= max(args.tol, 1e-8 * scale)
    emit({"command": "solve-config", "k": k, "l": l, **polynomial_fields(f), "residuals": [r1, r2],
          "status": "pass" if ok else "fail"})
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_perturb(args, emit, settings) -> int:
    from .perturbation import perturb

    f, default = parse_polynomial(args.f)
    cfg = parse_configuration(args.cfg, default)
    step = perturb(f, cfg, args.m, args.tol, settings, args.precision)
    emit({"command": "perturb", "m": step.m, **polynomial_fields(step.target),
          "configuration": list(step.target_config.triple), "delta": step.delta,
          "candidates": step.candidates, "residual": step.residual, "status": "pass"})
    return EXIT_PASS


def _chain(args, settings, emit, command):
    from .perturbation import build_chain

    t0 = time.perf_counter()
    schedule = [int(x) for x in args.schedule.split(",")] if args.schedule else None
    rec = build_chain(args.n, schedule, args.tol, settings, args.precision)
    for r, m in zip(rec.to_records(), rec.members):
        emit({"command": command, "member": r["member"], **polynomial_fields(m.f),
              "configuration": list(m.config.triple), "xi": m.xi, "angles": [str(t) for t in m.angles],
              "delta": r.get("delta", 0.0)})
    return rec, time.perf_counter() - t0


def cmd_chain(args, emit, settings) -> int:
    rec, seconds = _chain(args, settings, emit, "chain")
    emit({"command": "chain", "j_ladder": rec.j_ladder, "deltas": rec.deltas, "status": "pass",
          "seconds": round(seconds, 1)})
    return EXIT_PASS


def fig5_rows(rec) -> list[dict]:
    """Relative coefficient errors of a chain against the published members."""
    rows = []
    for n, (m, (c1, c2, triple)) in enumerate(zip(rec.members, FIG5)):
        e1, e2 = relative_error(m.f.c1, c1), relative_error(m.f.c2, c2)
        tol = 1e-9 if n == 0 else 1e-6
        good = max(e1, e2) <= tol and m.config.triple == triple
        rows.append({"member": n, "rel_err_c1": e1, "rel_err_c2": e2, "tolerance": tol,
                     "configuration": list(m.config.triple), "published": list(triple), "pass": good})
    return rows


def fig5_text(rec) -> str:
    return "\n".join(format_record(r) for r in fig5_rows(rec)) + "\n"


def cmd_reproduce_fig5(args, emit, settings) -> int:
    args.n = 3
    args.schedule = ",".join(str(m) for m in FIG5_SCHEDULE)
    rec, seconds = _chain(args, settings, emit, "reproduce-fig5")
    rows = fig5_rows(rec)
    ok = all(r["pass"] for r in rows)
    for r in rows:
        emit({"command": "reproduce-fig5", **r})
    emit({"command": "reproduce-fig5", "status": "pass" if ok else "fail"})
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        Path(args.out, "fig5.txt").write_text(fig5_text(rec))
    print(f"# runtime {seconds:.1f} s", file=sys.stderr)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_verify(args, emit, settings) -> int:
    f, default = parse_polynomial(args.f)
    cfg = parse_configuration(args.cfg, default)
    rep = Report("verify")
    rep.extend(verify_in_V(f, settings), "V: ")
    try:
        bd = _branching(f, cfg, args.f, settings)
    except WanderingError as exc:
        # no branching point with this configuration is a failed check, not a pipeline error
        rep.add("admissible: branching point located", False, detail=f"{type(exc).__name__}: {exc}")
        bd = None
    if bd is not None:
        rep.extend(verify_admissible(f, cfg, bd, settings), "admissible: ")
    emit({"command": "verify", **polynomial_fields(f), "configuration": list(cfg.triple),
          "xi": bd.xi if bd else None, "angles": [str(t) for t in bd.angles] if bd else [],
          "checks": report_fields(rep),
          "status": "pass" if rep.passed else "fail"})
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_trace_ray(args, emit, settings) -> int:
    f, _ = parse_polynomial(args.f)
    t = CircleAngle.parse(args.angle)
    ray = trace_rays(f.as_double(), [t], args.start, args.end, settings)[t]
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        ray.write_csv(Path(args.out, f"ray_{t.num}_{t.den}.csv"))
    ok = ray.landing is not None and not ray.bifurcation_suspected
    emit({"command": "trace-ray", "angle": str(t), "end": ray.end, "spread": ray.landing_spread,
          "nodes": len(ray.points), "bifurcation_suspected": ray.bifurcation_suspected,
          "status": "pass" if ok else "fail"})
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_landing(args, emit, settings) -> int:
    f, _ = parse_polynomial(args.f)
    angles = [CircleAngle.parse(a) for a in args.angles]
    rays = landing_points(f.as_double(), angles, settings=settings)
    ok = True
    for t in angles:
        r = rays[t]
        ok &= r.landing is not None
        emit({"command": "landing", "angle": str(t), "landing": r.end, "spread": r.landing_spread,
              "resolved": r.landing is not None})
    emit({"command": "landing", "status": "pass" if ok else "fail"})
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_puzzle(args, emit, settings) -> int:
    from .puzzle import build_puzzle, check_tree, max_diameter, write_csv, write_svg

    f, _ = parse_polynomial(args.f)
    tree = build_puzzle(f, args.depth, settings)
    diam = [max_diameter(tree, d) for d in range(tree.depth + 1)]
    rep = check_tree(tree)
    decreasing = all(b < a for a, b in zip(diam, diam[1:]))
    rep.add("max diameter strictly decreasing", decreasing)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        write_csv(tree, Path(args.out, "puzzle.csv"))
        write_svg(tree, Path(args.out, "puzzle.svg"))
    emit({"command": "puzzle", "depth": tree.depth, "pieces": [len(l.pieces) for l in tree.levels],
          "max_diameter": diam, "checks": report_fields(rep), "status": "pass" if rep.passed else "fail"})
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_render(args, emit, settings) -> int:
    from .render import RenderJob, ppm_bytes, render

    f, _ = parse_polynomial(args.f)
    w, h = (int(x) for x in args.pixels.lower().split("x"))
    job = RenderJob(f, parse_complex(args.center), args.width, (w, h),
                    rays=tuple(CircleAngle.parse(a) for a in args.rays),
                    markers=tuple(parse_complex(z) for z in args.markers),
                    puzzle_depth=args.puzzle_depth, budget=args.budget, threads=args.threads)
    data = ppm_bytes(render(job, settings))
    out = Path(args.out or ".", args.name)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    emit({"command": "render", "file": str(out), "pixels": [w, h], "bytes": len(data), "status": "pass"})
    return EXIT_PASS


def cmd_loop(args, emit, settings) -> int:
    f, _ = parse_polynomial(args.f)
    loop = approximate_loop(f, args.samples, args.eps, settings)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        loop.write_csv(Path(args.out, "loop.csv"))
    emit({"command": "loop", "samples": loop.M, "eps": args.eps,
          "diameter": float(np.max(np.abs(loop.points - loop.points.mean())) * 2), "status": "pass"})
    return EXIT_PASS


def cmd_nodal(args, emit, settings) -> int:
    from .dendrite import _arc_samples, _local_spacing

    f, default = parse_polynomial(args.f)
    cfg = parse_configuration(args.cfg, default)
    bd = _branching(f, cfg, args.f, settings)
    loop = approximate_loop(f, args.samples, args.eps, settings)
    exact = nodal_point_exact(f, bd, TEST_ANGLES, loop)
    z = nodal_point_loop(loop, TEST_ANGLES)
    spacing = max(_local_spacing(p, exact) for _, p in _arc_samples(loop, TEST_ANGLES))
    gap = abs(z - exact)
    ok = gap <= 3 * spacing
    emit({"command": "nodal", "exact": exact, "loop": z, "distance": gap, "tolerance": 3 * spacing,
          "status": "pass" if ok else "fail"})
    return EXIT_PASS if ok else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="solver tolerance (default 1e-12)")
    common.add_argument("--precision", choices=["double", "extended"], default=None)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", default=None, help="directory for files")
    common.add_argument("--json", action="store_true", help="print JSON lines")
    common.add_argument("--config", default=None, help="key=value file; flags win")

    p = argparse.ArgumentParser(prog="wandering", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-config", parents=[common], help="Newton onto a (k, l)-configuration")
    s.add_argument("k", type=int)
    s.add_argument("l", type=int)
    s.add_argument("a", help="seed for the a critical point")
    s.add_argument("b", help="seed for the b critical point")
    s.set_defaults(run=cmd_solve_config)

    s = sub.add_parser("perturb", parents=[common], help="one role-swapping perturbation step")
    s.add_argument("f")
    s.add_argument("m", type=int)
    s.add_argument("--cfg", default=None, help="j,k,l")
    s.set_defaults(run=cmd_perturb)

    s = sub.add_parser("chain", parents=[common], help="build the chain f_0 .. f_N")
    s.add_argument("n", type=int)
    s.add_argument("--schedule", default=None, help="comma separated m values")
    s.set_defaults(run=cmd_chain)

    s = sub.add_parser("reproduce-fig5", parents=[common], help="chain of length 3 against the published values")
    s.set_defaults(run=cmd_reproduce_fig5)

    s = sub.add_parser("verify", parents=[common], help="membership and admissibility checks")
    s.add_argument("f")
    s.add_argument("--cfg", default=None, help="j,k,l")
    s.set_defaults(run=cmd_verify)

    s = sub.add_parser("trace-ray", parents=[common], help="trace one external ray")
    s.add_argument("f")
    s.add_argument("angle", help="p/q")
    s.add_argument("--start", type=float, default=None)
    s.add_argument("--end", type=float, default=None)
    s.set_defaults(run=cmd_trace_ray)

    s = sub.add_parser("landing", parents=[common], help="landing points of several rays")
    s.add_argument("f")
    s.add_argument("angles", nargs="+")
    s.set_defaults(run=cmd_landing)

    s = sub.add_parser("puzzle", parents=[common], help="puzzle pieces up to a depth")
    s.add_argument("f")
    s.add_argument("depth", type=int)
    s.set_defaults(run=cmd_puzzle)

    s = sub.add_parser("render", parents=[common], help="escape-time image as PPM")
    s.add_argument("f")
    s.add_argument("--center", default="0")
    s.add_argument("--width", type=float, default=4.0)
    s.add_argument("--pixels", default="400x400")
    s.add_argument("--rays", nargs="*", default=[])
    s.add_argument("--markers", nargs="*", default=[])
    s.add_argument("--puzzle-depth", type=int, default=None)
    s.add_argument("--budget", type=int, default=500)
    s.add_argument("--name", default="render.ppm")
    s.set_defaults(run=cmd_render)

    s = sub.add_parser("loop", parents=[common], help="approximate Caratheodory loop")
    s.add_argument("f")
    s.add_argument("--samples", type=int, default=2048)
    s.add_argument("--eps", type=float, default=1e-4)
    s.set_defaults(run=cmd_loop)

    s = sub.add_parser("nodal", parents=[common], help="nodal point from the angles and from the loop")
    s.add_argument("f")
    s.add_argument("--cfg", default=None, help="j,k,l")
    s.add_argument("--samples", type=int, default=2048)
    s.add_argument("--eps", type=float, default=1e-4)
    s.set_defaults(run=cmd_nodal)
    return p


DEFAULTS = {"tol": 1e-12, "precision": "double", "threads": 1, "out": None}


def resolve(args) -> None:
    """Fill unset flags from the config file, then from the defaults."""
    args.file_config = read_config_file(args.config) if args.config else {}
    for key, default in DEFAULTS.items():
        if getattr(args, key) is None:
            raw = args.file_config.get(key)
            if raw is None:
                setattr(args, key, default)
            else:
                setattr(args, key, type(default)(raw) if default is not None else raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    resolve(args)
    emit = Emitter(args.json)
    try:
        return args.run(args, emit, settings_from(args))
    except (WanderingError, ValueError, ArithmeticError) as exc:
        emit({"command": args.command, "status": "error", "error": type(exc).__name__, "message": str(exc)})
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
