"""Build f0..f3 and compare them with the published coefficients."""
import argparse
import time

from wandering.cli import fig5_rows, format_record
from wandering.perturbation import build_chain


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=None, help="write the comparison records to this file")
    args = p.parse_args()
    t0 = time.perf_counter()
    rec = build_chain(3, (1, 2, 3), progress=lambda n, m: print(f"member {n}: {m.config} xi={m.xi:.10f}", flush=True))
    rows = fig5_rows(rec)
    text = "\n".join(format_record(r) for r in rows) + "\n"
    print(text, end="")
    print(f"deltas {rec.deltas}")
    print(f"runtime {time.perf_counter() - t0:.1f} s")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
