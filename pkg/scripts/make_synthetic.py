#!/usr/bin/env python3
"""Generate a synthetic planted-signal benchmark ready for the CLI.

Writes annotations, embedding stores, fixture caption responses, and a
config.ini into the target directory, then prints the commands to try.
"""

import argparse

from duocir.synthetic import make_planted_benchmark, write_benchmark


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir")
    parser.add_argument("--queries", type=int, default=50)
    parser.add_argument("--distractors", type=int, default=100)
    parser.add_argument("--dim", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--signal", choices=["integration", "modification"], default="integration")
    args = parser.parse_args()

    bench = make_planted_benchmark(
        n_queries=args.queries,
        n_distractors=args.distractors,
        dim=args.dim,
        seed=args.seed,
        signal=args.signal,
    )
    config = write_benchmark(bench, args.out_dir)
    print(f"wrote {len(bench.records)} queries over {len(bench.gallery)} gallery items")
    print(f"config: {config}")
    print("try:")
    print(f"  duocir --config {config} captions")
    print(f"  duocir --config {config} eval")
    print(f"  duocir --config {config} ablate")
    print(f"  duocir --config {config} sweep --alpha-grid 0,0.05,0.2 --beta-grid 0.5,0.9")


if __name__ == "__main__":
    main()
