"""Cancellation in the Lagrange form as two exponential rates merge.

For rates (lam, lam*(1+h)) the hypo-exponential density is compared with
the Erlang(2, lam) limit and with the Hermite-Genocchi quadrature of the
same divided difference.  The error first shrinks like h, then grows like
eps/h once cancellation takes over.
"""
import argparse
import math

from expsum.density import EvalOptions, erlang_pdf, hypoexp_pdf
from expsum.divdiff import NodeMultiset, exp_derivative, hermite_genocchi


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rate", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--h-min-exp", type=int, default=14, help="smallest h is 10**-this")
    args = ap.parse_args(argv)

    lam, t = args.rate, args.t
    limit = erlang_pdf(2, lam, t).value
    opts = EvalOptions(cond_threshold=math.inf)
    print(f"Erlang(2, {lam}) at t={t}: {limit:.16e}")
    print(f"{'h':>8} {'lagrange err':>13} {'hg err':>13} {'cond':>9}")
    for e in range(1, args.h_min_exp + 1):
        h = 10.0 ** -e
        rates = (lam, lam * (1 + h))
        r = hypoexp_pdf(rates, t, opts)
        nodes = NodeMultiset.from_pairs([(-x, 1) for x in rates], mode="keep")
        scale = math.log(rates[0] * rates[1])
        hg = hermite_genocchi(exp_derivative(t, 1, scale), nodes).value
        print(f"{h:8.0e} {abs(r.value - limit) / limit:13.3e} {abs(hg - limit) / limit:13.3e} "
              f"{r.condition_estimate:9.2e}")


if __name__ == "__main__":
    main()
