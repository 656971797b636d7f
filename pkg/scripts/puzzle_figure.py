"""Puzzle pieces of the seed polynomial as layered SVG and CSV, with the diameter table."""
import argparse
from pathlib import Path

from wandering import seed_polynomial
from wandering.puzzle import build_puzzle, check_tree, max_diameter, write_csv, write_svg


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--out", default="puzzle_out")
    args = p.parse_args()
    tree = build_puzzle(seed_polynomial(), args.depth)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_svg(tree, out / "puzzle.svg")
    write_csv(tree, out / "puzzle.csv")
    for m, level in enumerate(tree.levels):
        print(f"depth {m}: {len(level.pieces)} pieces, max diameter {max_diameter(tree, m):.4f}")
    rep = check_tree(tree)
    print("tree checks:", "pass" if rep.passed else [c.name for c in rep.failures()])


if __name__ == "__main__":
    main()
