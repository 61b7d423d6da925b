"""Fit the top ladder vector against the closed forms and report N+ residuals."""

import argparse

import numpy as np

from gsp4bessel import bessel_nonsplit as bn


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--l", type=int, default=12)
    ap.add_argument("--precision", choices=("double", "extended"), default="extended")
    args = ap.parse_args()
    zeta = np.linspace(1.1, 2.2, 6)
    lam = np.linspace(0.1, 1.0, 5)
    Z, L = np.meshgrid(zeta, lam, indexing="ij")
    print("n  form       constant              residual   max N+ residual")
    for n in (3, 5, 7, 9):
        lp = args.l - (n - 1)
        top = bn.ladder_top(args.l, lp, 0, 0.0, zeta, check=False)
        vecs = bn.ladder(args.l, lp, 0, 0.0, (n - 1) // 2, np.array([1.3, 1.9]), 0.3, 0.2,
                         precision=args.precision)
        nplus = max(float(np.max(v.nplus_residual(lam))) for v in vecs)
        forms = ("printed", "corrected") if n == 3 else ("printed",)
        for form in forms:
            fit = bn.fit_proportional(top.values(lam),
                                      bn.closed_form_top(args.l, lp, L, Z, corrected=form == "corrected"))
            print(f"{n}  {form:9s}  {fit.constant.real: .12e}  {fit.residual:.2e}   {nplus:.2e}")


if __name__ == "__main__":
    main()
