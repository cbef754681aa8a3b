"""Regenerate the frozen bivariate-normal oracle grid.

Evaluates the bivariate normal CDF by adaptive 2-d quadrature
(scipy.integrate.dblquad, epsabs 1e-13) on an 11 x 11 x 9 grid of
(a, b, rho) and writes tests/data/bvn_oracle.csv. The test suite and
the acceptance run compare the package implementation against this
file; quadrature at this tolerance is ~12 ms per point, too slow to
run live inside the tests.

Truncating the lower integration limits at -9 discards less than 1e-18
of probability mass, far below the 1e-10 comparison tolerance.

Usage: python3 scripts/make_bvn_oracle.py [--out PATH]
"""

import argparse
import csv
import math
from pathlib import Path

import numpy as np
from scipy.integrate import dblquad

LOWER = -9.0


def bvn_density(u, v, rho):
    det = 1.0 - rho * rho
    quad_form = (u * u - 2.0 * rho * u * v + v * v) / det
    return math.exp(-0.5 * quad_form) / (2.0 * math.pi * math.sqrt(det))


def bvn_quadrature(a, b, rho):
    val, _ = dblquad(bvn_density, LOWER, a,
                     lambda _: LOWER, lambda _: b,
                     args=(rho,), epsabs=1e-13, epsrel=1e-13)
    return val


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default_out = Path(__file__).resolve().parent.parent / "tests" / "data" / "bvn_oracle.csv"
    parser.add_argument("--out", type=Path, default=default_out)
    args = parser.parse_args()

    abscissae = np.linspace(-4.0, 4.0, 11)
    correlations = np.linspace(-0.95, 0.95, 9)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["a", "b", "rho", "phi2"])
        for a in abscissae:
            for b in abscissae:
                for rho in correlations:
                    writer.writerow([repr(float(a)), repr(float(b)),
                                     repr(float(rho)),
                                     repr(bvn_quadrature(a, b, rho))])
                    n += 1
    print(f"wrote {n} oracle values to {args.out}")


if __name__ == "__main__":
    main()
