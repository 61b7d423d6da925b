"""Compare the convergence predicate with partial-integral curves on a model grid."""

import itertools

from gsp4bessel import zeta_integral as zi


def main() -> None:
    grid = itertools.product((0, 3, 6), (0, 1), (0, 1), (-1.5, -0.5, 1.0, 2.5))
    mismatches = 0
    print("alpha beta gamma delta  predicate  numeric  last partial integral")
    for a, b, c, d in grid:
        curve = zi.model_integral_curve(a, b, c, d)
        pred = zi.convergence_predicate(a, b, c, d)
        mismatches += pred != curve.converges
        print(f"{a:5d} {b:4d} {c:5d} {d:5.1f}  {pred!s:9s}  {curve.converges!s:7s}  {curve.values[-1]:.6e}")
    print("mismatches:", mismatches)


if __name__ == "__main__":
    main()
