"""Print the split growth gap log|f| - beta log||h|| along the witness ray."""

import argparse

from gsp4bessel import bessel_split as bs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=10)
    ap.add_argument("--lp", type=int, default=10)
    ap.add_argument("--s1", type=complex, default=0j)
    ap.add_argument("--s2", type=complex, default=0j)
    ap.add_argument("--beta-max", type=float, default=50.0)
    args = ap.parse_args()
    for branch in (1, -1):
        rep = bs.growth_violation(args.l, args.lp, args.s1, args.s2, args.beta_max, branch=branch)
        print(f"branch {branch:+d}")
        print("t".rjust(10) + "".join(f"beta={b:g}".rjust(14) for b in rep.betas))
        for i, t in enumerate(rep.t[::3]):
            print(f"{t:10.3g}" + "".join(f"{g:14.4g}" for g in rep.gaps[:, 3 * i]))
        print("first t with gap > 1e3:", rep.first_witness())


if __name__ == "__main__":
    main()
