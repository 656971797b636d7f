"""Distances between successive chain loops and the two nodal point estimates per member."""
import argparse

from wandering.constants import published_branching
from wandering.dendrite import approximate_loop, loop_distance, nodal_point_exact, nodal_point_loop


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--samples", type=int, default=2048)
    p.add_argument("--eps", type=float, default=1e-4)
    args = p.parse_args()
    members = published_branching(3)
    loops = []
    for n, (f, cfg, bd) in enumerate(members):
        loop = approximate_loop(f, args.samples, args.eps)
        loops.append(loop)
        exact = nodal_point_exact(f, bd)
        z = nodal_point_loop(loop)
        print(f"f{n} {cfg}: xi = {exact:.10f}, loop estimate {z:.10f}, gap {abs(z - exact):.2e}")
    for n in range(len(loops) - 1):
        print(f"sup |loop{n} - loop{n + 1}| = {loop_distance(loops[n], loops[n + 1]):.3e}")


if __name__ == "__main__":
    main()
