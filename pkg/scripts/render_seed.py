"""Filled Julia set of the seed polynomial with the rays landing at the critical points."""
import argparse

from wandering import CircleAngle, seed_polynomial
from wandering.render import RenderJob, render, write_ppm

RAYS = ("0", "1/2", "1/4", "3/4", "1/3", "2/3", "4/27", "5/27", "22/27", "23/27")


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="seed.ppm")
    p.add_argument("--pixels", type=int, nargs=2, default=(800, 600))
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--puzzle-depth", type=int, default=None)
    args = p.parse_args()
    f = seed_polynomial()
    beta = 3 * f.a - 1
    job = RenderJob(f, center=beta / 2, width=abs(beta) * 1.2, pixels=tuple(args.pixels),
                    rays=tuple(CircleAngle.parse(t) for t in RAYS), markers=(f.a, f.b),
                    puzzle_depth=args.puzzle_depth, threads=args.threads)
    write_ppm(args.out, render(job))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
