"""Run the convolution oracle over every spec file in a directory.

Prints one line per spec and exits 1 if any check fails.
"""
import argparse
import sys
from pathlib import Path

from expsum.cli import SpecError, load_spec
from expsum.errors import ExpSumError
from expsum.oracle import check_spec

DEFAULT_DIR = Path(__file__).resolve().parent.parent / "tests" / "golden" / "specs"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("directory", nargs="?", type=Path, default=DEFAULT_DIR)
    ap.add_argument("--tol-abs", type=float, default=1e-7)
    ap.add_argument("--mc-samples", type=int, default=0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    failed = 0
    for path in sorted(args.directory.glob("*.json")):
        try:
            spec, _ = load_spec(str(path))
            rep = check_spec(spec, tol_abs=args.tol_abs, mc_n=args.mc_samples, seed=args.seed)
        except (SpecError, ExpSumError) as exc:
            print(f"{path.name:24} skipped  {exc}")
            continue
        failed += rep.verdict != "pass"
        print(f"{path.name:24} {rep.verdict:7}  max abs err {rep.max_abs_err:.2e} at t={rep.worst_t:.3g}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
