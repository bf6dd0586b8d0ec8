"""Regenerate the CLI golden outputs under tests/golden/.

Run after an intentional change to output formatting or numerics, then
review the diff before committing.
"""
import argparse
from pathlib import Path

from expsum.cli import main

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

# output file name -> CLI arguments (spec paths relative to golden/specs)
CASES = {
    "pdf_exp1.csv": ["pdf", "--spec", "exp1.json", "--t-min", "0", "--t-max", "5", "--points", "6"],
    "pdf_hypo12.json": ["pdf", "--spec", "hypo12.json", "--t", "1", "--format", "json"],
    "pdf_three_gamma_log.csv": ["pdf", "--spec", "three_gamma.json", "--t-min", "0.01", "--t-max", "10",
                                "--points", "7", "--log-grid"],
    "cdf_exp1.csv": ["cdf", "--spec", "exp1.json", "--t", "1"],
    "cdf_harrison.json": ["cdf", "--spec", "harrison.json", "--t-min", "0", "--t-max", "4", "--points", "5",
                          "--format", "json"],
    "mgf_erlang21.csv": ["mgf", "--spec", "erlang21.json", "--s", "0", "--s", "0.5"],
    "sample_harrison.csv": ["sample", "--spec", "harrison.json", "--n", "5", "--seed", "1"],
}


def run_case(name, args, out):
    args = list(args)
    i = args.index("--spec") + 1
    args[i] = str(GOLDEN / "specs" / args[i])
    return main(args + ["--out", str(out)])


def regenerate():
    for name, args in CASES.items():
        code = run_case(name, args, GOLDEN / name)
        print(f"{name}: exit {code}")


if __name__ == "__main__":
    argparse.ArgumentParser(description=__doc__.splitlines()[0]).parse_args()
    regenerate()
