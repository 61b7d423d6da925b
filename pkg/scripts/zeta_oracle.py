"""Compare the Gamma closed form of the archimedean integral with direct quadrature."""

import argparse
import itertools
import time

from gsp4bessel import zeta_integral as zi


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=12)
    ap.add_argument("--D", type=int, default=3)
    args = ap.parse_args()
    print(" k  j  s            r     closed                         rel_err    seconds")
    for (k, j), s, r in itertools.product(zi.ckj_indices(9), (0.6, 1.0, 0.8 + 0.5j), (0.0, 1.5)):
        p = zi.ZetaParams(args.l, 9, args.D, s, r)
        t0 = time.perf_counter()
        quad = zi.z_kj_quadrature(s, k, j, p)
        closed = zi.z_kj_closed(s, k, j, p)
        print(f"{k:2d} {j:2d}  {s!s:11s} {r:4.1f}  {closed:.15e}  {abs(quad - closed) / abs(closed):.1e}"
              f"   {time.perf_counter() - t0:.2f}")


if __name__ == "__main__":
    main()
