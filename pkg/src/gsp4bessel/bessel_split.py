"""Split Bessel models: chart operators, the first-order system, its formal solution
and the growth witness showing the solution is never of moderate growth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import group_core as gc
from . import jets as jx
from .bessel_nonsplit import COMPLEX_OPS, _power, partials
from .config import DEFAULT, SplitConfig
from .errors import ChartSingularity, SingularBase
from .jets import Jet
from .lie_algebra import basis_matrix

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class SplitCharacter:
    """Lambda(t0 diag(a, b) t0^{-1}) = a**s1 * b**s2."""

    s1: complex = 0.0
    s2: complex = 0.0

    def __call__(self, a, b):
        return a ** self.s1 * b ** self.s2


def split_theta(x, y, z):
    """theta(u(X)) for S = diag(1, -1)."""
    return np.exp(2j * np.pi * (x - z))


def torus_diagonalized(a: float, b: float) -> np.ndarray:
    """t0^{-1} g t0 for the upper block g of torus_split(a, b); diagonal by construction."""
    g = gc.torus_split(a, b)[:2, :2]
    return np.linalg.solve(gc.T0, g @ gc.T0)


# formal solution ----------------------------------------------------------

def split_bases(zeta, phi1, phi2):
    c1, s1 = jx.cos(phi1), jx.sin(phi1)
    c2, s2 = jx.cos(phi2), jx.sin(phi2)
    first = c2 * (c1 - zeta * s1) + 1j * (zeta * c1 + s1) * s2
    second = s1 * c2 - 1j * c1 * s2
    return first, second


def _exponents(l: int, lp: int, s1: complex, s2: complex):
    return ((l - lp + s1 - s2) / 2, (l - lp - s1 + s2) / 2, (l + lp + s1 + s2) / 2)


def _radial(lam, a):
    """|lam|**a on both branches (lam > 0 and lam < 0)."""
    lam_val = np.real(jx.value_of(lam))
    if isinstance(lam, Jet):
        return (lam if np.all(lam_val > 0) else -lam).cpow(a)
    return np.abs(np.asarray(lam, dtype=float)).astype(complex) ** a


def f_split(p, l: int, lp: int, s1: complex = 0.0, s2: complex = 0.0):
    """Formal solution on the chart; for lam < 0 the same angular factor with (-lam)."""
    lam, zeta, phi1, phi2 = p.coords if isinstance(p, gc.ChartPoint) else p
    first, second = split_bases(zeta, phi1, phi2)
    e1, e2, a = _exponents(l, lp, s1, s2)
    for base, e in ((first, e1), (second, e2)):
        if np.any(np.abs(jx.value_of(base)) < 1e-300):
            if np.real(e) < 0 or (np.real(e) == 0 and e != 0):
                raise SingularBase("base of a negative power vanishes")
            if not isinstance(base, Jet) and e != 0:
                return 0j
    return _power(first, e1) * _power(second, e2) * _radial(lam, a) * jx.exp(FOUR_PI * lam * zeta)


def log_f_split(p, l: int, lp: int, s1: complex = 0.0, s2: complex = 0.0) -> tuple[float, float]:
    """(log|f|, arg f) of the formal solution, safe when lam * zeta is large."""
    lam, zeta, phi1, phi2 = p.coords if isinstance(p, gc.ChartPoint) else p
    first, second = split_bases(zeta, phi1, phi2)
    if abs(first) == 0 or abs(second) == 0:
        raise SingularBase("a base vanishes; the logarithm is -inf")
    e1, e2, a = _exponents(l, lp, s1, s2)
    log = e1 * np.log(complex(first)) + e2 * np.log(complex(second)) + a * np.log(abs(lam))
    log = log + FOUR_PI * lam * zeta
    return float(log.real), float(np.angle(np.exp(1j * log.imag)))


def f_split_auto(p, l: int, lp: int, s1: complex = 0.0, s2: complex = 0.0,
                 cfg: SplitConfig = DEFAULT.split) -> tuple[float, float]:
    """(log|f|, arg f), switching to the logarithmic route above the configured threshold."""
    lam, zeta, *_ = p.coords if isinstance(p, gc.ChartPoint) else p
    if abs(lam * zeta) > cfg.log_domain_above:
        return log_f_split(p, l, lp, s1, s2)
    v = complex(f_split(p, l, lp, s1, s2))
    return (float(np.log(abs(v))) if v != 0 else -np.inf), float(np.angle(v))


# first-order system -------------------------------------------------------

def _guard(phi2) -> None:
    c = np.cos(2 * np.asarray(jx.value_of(phi2)).real)
    if np.any(np.abs(c) < 1e-12):
        raise ChartSingularity("cos(2 phi2) = 0")


def pde_coefficients_split(lam, zeta, phi1, phi2, l: int, lp: int, s1: complex, s2: complex):
    """Right-hand sides of the four logarithmic derivatives."""
    d, e = l - lp, s1 - s2
    c1, sn1 = np.cos(phi1), np.sin(phi1)
    c2, sn2 = np.cos(phi2), np.sin(phi2)
    cc1, ss1 = np.cos(2 * phi1), np.sin(2 * phi1)
    cc2, ss2 = np.cos(2 * phi2), np.sin(2 * phi2)
    dlam = (l + lp + s1 + s2) / (2 * lam) + FOUR_PI * zeta
    den_z = 2 * c2 * (c1 - zeta * sn1) + 2j * (zeta * c1 + sn1) * sn2
    dz = FOUR_PI * lam - (d + e) * (c2 * sn1 - 1j * c1 * sn2) / den_z
    den = zeta * cc2 + cc1 * (-zeta + 1j * ss2) - ss1 * (1 + 1j * zeta * ss2)
    d1 = (e * cc2 + d * (zeta * ss1 - cc1 - 1j * ss2 * (ss1 + zeta * cc1))) / den
    d2 = (-1j * e + d * (-zeta * ss2 + 1j * cc2 * (cc1 - zeta * ss1))) / den
    return dlam, dz, d1, d2


def pde_residuals_split_of(fjet: Jet, p, l: int, lp: int, s1: complex, s2: complex) -> np.ndarray:
    lam, zeta, phi1, phi2 = p.coords if isinstance(p, gc.ChartPoint) else p
    f, *grads = partials(fjet)
    coefs = pde_coefficients_split(lam, zeta, phi1, phi2, l, lp, s1, s2)
    return np.array([g - c * f for g, c in zip(grads, coefs)])


def pde_residuals_split(p, l: int, lp: int, s1: complex = 0.0, s2: complex = 0.0) -> np.ndarray:
    coords = p.coords if isinstance(p, gc.ChartPoint) else tuple(p)
    _guard(coords[3])
    fjet = f_split(jx.chart_jet(coords, 1), l, lp, s1, s2)
    return pde_residuals_split_of(fjet, coords, l, lp, s1, s2)


# operator formulas --------------------------------------------------------

def operator_terms_split(op: str, lam, zeta, phi1, phi2, f, lam_flam, f_zeta, f_phi1, f_phi2,
                         l: int, lp: int, s1: complex, s2: complex):
    """Complexified operator on the split chart, from f, lam f_lam and the other partials."""
    if op not in COMPLEX_OPS:
        raise KeyError(op)
    _guard(phi2)
    cc1, ss1 = jx.cos(2 * phi1), jx.sin(2 * phi1)
    cc2, ss2 = jx.cos(2 * phi2), jx.sin(2 * phi2)
    t2 = ss2 / cc2
    if op in ("Nplus", "Nminus"):
        sg = 1 if op == "Nplus" else -1
        return 0.5j * t2 * (lp - l) * f + f_phi1 / (2 * cc2) - sg * 0.5j * f_phi2
    quart = (1.0 - 0.5 * ss2 * ss2) / cc2
    sq = ss2 * t2
    diff, tot = s1 - s2, s1 + s2
    w = cc1 - zeta * ss1
    pi = np.pi
    if op in ("Xplus", "Xminus"):
        sg = 1 if op == "Xplus" else -1
        coef = (0.25 * diff * (cc1 + sg * 1j * ss1 * ss2) - 0.25 * tot * cc2
                + sg * (l / 2) * quart - sg * (lp / 4) * sq
                + 2j * pi * lam * (w * ss2 + sg * 1j * (zeta * cc1 - zeta * cc2 + ss1)))
        return (coef * f + 0.5 * cc2 * lam_flam
                + 0.5 * (-zeta * cc1 - ss1 + sg * 1j * ss2 * w) * f_zeta
                + (0.25 * ss1 - sg * 0.25j * (cc1 * cc2 - 1) * t2) * f_phi1
                + 0.25 * ss2 * f_phi2)
    if op in ("P1plus", "P1minus"):
        sg = 1 if op == "P1plus" else -1
        coef = (0.5 * diff * ss1 * cc2 - sg * 0.5j * tot * ss2 + 0.5j * ss2 * (l + lp)
                - 4j * pi * lam * (sg * 1j * cc2 * w - zeta * ss2))
        return (coef * f + sg * 1j * ss2 * lam_flam + cc2 * w * f_zeta
                - 0.5 * cc1 * cc2 * f_phi1 - sg * 0.5j * cc2 * f_phi2)
    sg = 1 if op == "P0plus" else -1
    coef = (0.25 * diff * (-cc1 + sg * 1j * ss1 * ss2) - 0.25 * tot * cc2
            - sg * (l / 4) * sq + sg * (lp / 2) * quart
            + 2j * pi * lam * (w * ss2 - sg * 1j * (zeta * cc1 + zeta * cc2 + ss1)))
    return (coef * f + 0.5 * cc2 * lam_flam
            + 0.5 * (zeta * cc1 + ss1 + sg * 1j * w * ss2) * f_zeta
            - (0.25 * ss1 + sg * 0.25j * (1 + cc1 * cc2) * t2) * f_phi1
            + 0.25 * ss2 * f_phi2)


def operator_rhs_split(op: str, p, fvals, l: int, lp: int, s1: complex, s2: complex):
    """Operator formula at a split chart point; ``fvals`` as in the non-split analogue."""
    if isinstance(fvals, Jet):
        fvals = partials(fvals)
    lam, zeta, phi1, phi2 = p.coords if isinstance(p, gc.ChartPoint) else p
    f, f_lam, f_zeta, f_phi1, f_phi2 = fvals
    return operator_terms_split(op, lam, zeta, phi1, phi2, f, lam * f_lam, f_zeta,
                                f_phi1, f_phi2, l, lp, s1, s2)


def extend_to_group(chart_fn: Callable, l: int, lp: int, s1: complex, s2: complex) -> Callable:
    """Group function u t h r3 r4 -> theta(u) Lambda(t) e^{i(l phi3 + lp phi4)} f(chart)."""
    char = SplitCharacter(s1, s2)

    def B(g, guess: gc.CosetCoords | None = None) -> complex:
        c = gc.coset_decompose(g, "split", guess=guess)
        a, b = c.torus
        return complex(split_theta(c.x, c.y, c.z) * char(a, b)
                       * np.exp(1j * (l * c.phi3 + lp * c.phi4)) * chart_fn(c.chart.coords))

    return B


def fd_operator_split(B: Callable, p, op: str, h: float = 1e-4) -> complex:
    """(L.B)(h(p)) by fourth-order central differences of the real and imaginary parts of L."""
    point = p if isinstance(p, gc.ChartPoint) else gc.ChartPoint("split", *p)
    hm = gc.chart_element(point)
    guess = gc.CosetCoords("split", (1.0, 1.0), 0.0, 0.0, 0.0, point, 0.0, 0.0)
    L = basis_matrix(op)
    out = 0j
    for part, weight in ((L.real, 1.0), (L.imag, 1j)):
        if not np.any(part):
            continue
        vals = {t: B(hm @ gc.expm(t * h * part), guess) for t in (-2, -1, 1, 2)}
        out += weight * (8 * (vals[1] - vals[-1]) - (vals[2] - vals[-2])) / (12 * h)
    return out


# growth witness -----------------------------------------------------------

@dataclass(frozen=True)
class GrowthReport:
    """log|f(h(t, t, angles))| - beta log||h|| on a ray, per beta."""

    t: np.ndarray
    betas: tuple[float, ...]
    gaps: np.ndarray
    branch: int

    @property
    def eventually_increasing(self) -> np.ndarray:
        tail = np.diff(self.gaps[:, len(self.t) // 2:], axis=1)
        return np.all(tail > 0, axis=1)

    @property
    def max_gap(self) -> np.ndarray:
        return self.gaps.max(axis=1)

    @property
    def witnessed(self) -> np.ndarray:
        return (self.max_gap > 1e3) & self.eventually_increasing

    def first_witness(self, threshold: float = 1e3) -> list[float | None]:
        out = []
        for row in self.gaps:
            idx = np.flatnonzero(row > threshold)
            out.append(float(self.t[idx[0]]) if idx.size else None)
        return out


def growth_violation(l: int, lp: int, s1: complex = 0.0, s2: complex = 0.0, beta_max: float = 50.0,
                     betas: Sequence[float] | None = None, branch: int = 1,
                     cfg: SplitConfig = DEFAULT.split) -> GrowthReport:
    """Growth gap on the ray lam = zeta = branch * t with the witness angles.

    ``branch=-1`` follows the lam < 0 component, where e^{4 pi lam zeta} grows the same way.
    """
    if betas is None:
        betas = tuple(cfg.betas) + (beta_max,)
    betas = tuple(float(b) for b in betas)
    t = np.geomspace(1.0, cfg.t_max, cfg.n_ray)
    logf = np.empty_like(t)
    lognorm = np.empty_like(t)
    for i, ti in enumerate(t):
        p = (branch * ti, branch * ti, cfg.phi1, cfg.phi2)
        logf[i] = log_f_split(p, l, lp, s1, s2)[0]
        lognorm[i] = np.log(gc.group_norm(gc.chart_element_coords("split", *p)))
    gaps = logf[None, :] - np.asarray(betas)[:, None] * lognorm[None, :]
    return GrowthReport(t, betas, gaps, branch)
