"""Non-split Bessel functions of lowest weight modules.

Functions of chart coordinates are written generically: the same code accepts
floats, numpy arrays, :class:`~gsp4bessel.jets.Jet` values and, for the radial
coordinate, :class:`~gsp4bessel.jets.LambdaPoly`.

The ladder stores a function f on the chart in reduced form
``f = lam**a * exp(-2 pi lam (zeta**2 + zeta**-2)) * G`` with ``G`` a polynomial
in ``lam`` whose coefficients are jets in ``(zeta, phi1, phi2)``.  The operator
formulas only need ``lam * df/dlam`` and ``zeta * df/dzeta``, which keep that
form, so the radial direction stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import group_core as gc
from . import jets as jx
from .config import DEFAULT, LadderConfig
from .errors import (
    ChartSingularity,
    InvalidWeights,
    JetOrderExhausted,
    NotRepresentable,
    SingularBase,
)
from .jets import Jet, LambdaPoly
from .lie_algebra import basis_matrix

TWO_PI = 2.0 * np.pi
COMPLEX_OPS = ("Nplus", "Nminus", "Xplus", "Xminus", "P1plus", "P1minus", "P0plus", "P0minus")
ANNIHILATORS = ("Nplus", "Xminus", "P1minus", "P0minus")
WEIGHT_SHIFT = {
    "Nplus": (1, -1), "Nminus": (-1, 1),
    "Xplus": (2, 0), "Xminus": (-2, 0),
    "P1plus": (1, 1), "P1minus": (-1, -1),
    "P0plus": (0, 2), "P0minus": (0, -2),
}
COEFFICIENT_NAMES = ("gamma", "delta", "lam", "zeta", "x", "y", "z", "phi1", "phi2", "phi3", "phi4")
# order of CosetCoords.as_vector
VECTOR_ORDER = ("gamma", "delta", "x", "y", "z", "lam", "zeta", "phi1", "phi2", "phi3", "phi4")


@dataclass(frozen=True)
class BesselCharacter:
    """Lambda(gamma * rot(delta)) = gamma**s * exp(i m delta)."""

    s: complex = 0.0
    m: int = 0

    def __call__(self, gamma, delta):
        return gamma ** self.s * np.exp(1j * self.m * delta)


@dataclass(frozen=True)
class ThetaChar:
    """theta(u(X)) = exp(2 pi i tr(S X)) with S = [[a, b/2], [b/2, c]]."""

    a: float = 1.0
    b: float = 0.0
    c: float = 1.0

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b / 2], [self.b / 2, self.c]])

    def __call__(self, x, y, z):
        return np.exp(TWO_PI * 1j * (self.a * x + self.b * y + self.c * z))


# existence and closed forms ------------------------------------------------

def _check_weights(l: int, lp: int) -> None:
    if lp < 1 or l < lp:
        raise InvalidWeights(f"need l >= lp >= 1, got ({l}, {lp})")


def exists_dimension(l: int, lp: int, m: int) -> int:
    """Dimension (0 or 1) of the space of lowest weight Bessel functions."""
    _check_weights(l, lp)
    return int((l + lp + m) % 2 == 0 and abs(m) <= l - lp)


def _require(l: int, lp: int, m: int) -> None:
    if exists_dimension(l, lp, m) == 0:
        raise NotRepresentable(f"no Bessel function for (l, lp, m) = ({l}, {lp}, {m})")


def _trig(phi1, phi2):
    return (jx.cos(2 * phi1), jx.sin(2 * phi1), jx.cos(2 * phi2), jx.sin(2 * phi2))


def _power(base, e):
    """base**e with exact integer powers where possible."""
    e = complex(e)
    if e.imag == 0 and e.real.is_integer():
        e = int(e.real)
        if e == 0:
            return base * 0 + 1.0
        if isinstance(base, Jet):
            return base.ipow(e)
        return np.asarray(base, dtype=complex) ** e
    if isinstance(base, Jet):
        return base.cpow(e)
    return np.asarray(base, dtype=complex) ** e


def _nonzero(base, what: str, scale=1.0) -> None:
    # rounding leaves ~1e-16 where the base is exactly zero in exact arithmetic
    if np.any(np.abs(jx.value_of(base)) <= 1e-13 * np.abs(jx.value_of(scale))):
        raise SingularBase(f"{what} vanishes")


def c1_bases(zeta, phi1, phi2):
    """The three bases whose powers make up the angular factor."""
    c, s = jx.cos(phi1), jx.sin(phi1)
    c_, s_ = jx.cos(phi2), jx.sin(phi2)
    u = c * c_ + 1j * s * s_
    v = c * s_ + 1j * s * c_
    inv = 1.0 / zeta
    base1 = zeta * u + inv * v
    base1p = zeta * u - inv * v
    c1_, s1_, c2_, s2_ = _trig(phi1, phi2)
    z2 = zeta * zeta
    iz2 = inv * inv
    base2 = (z2 - iz2) * (c1_ + 1j * s1_ * s2_) + (z2 + iz2) * c2_
    return base1, base1p, base2


def c1(zeta, phi1, phi2, l: int, lp: int, m: int, form: int = 1):
    """Angular factor; ``form=1`` and ``form=2`` are the two equal closed forms."""
    base1, base1p, base2 = c1_bases(zeta, phi1, phi2)
    scale = zeta * zeta + 1.0 / (zeta * zeta)
    if form == 1:
        if m < 0:
            _nonzero(base1, "first base", scale)
        if (l - lp - m) < 0:
            _nonzero(base2, "second base", scale)
        return _power(base1, m) * _power(base2, (l - lp - m) / 2)
    if form == 2:
        if m > 0:
            _nonzero(base1p, "first base", scale)
        if (l - lp + m) < 0:
            _nonzero(base2, "second base", scale)
        return 2.0 ** (-m) * _power(base1p, -m) * _power(base2, (l - lp + m) / 2)
    raise ValueError("form must be 1 or 2")


def _coords(p):
    if isinstance(p, gc.ChartPoint):
        return p.coords
    return tuple(p)


def B0_coords(p, l: int, lp: int, m: int, s: complex = 0.0):
    """Lowest weight vector on the chart, normalized by the first closed form."""
    _require(l, lp, m)
    lam, zeta, phi1, phi2 = _coords(p)
    lam_val = np.asarray(jx.value_of(lam)).real
    if not isinstance(lam, Jet) and np.ndim(lam_val) == 0 and lam_val < 0:
        return 0j
    if np.any(lam_val <= 0):
        raise ValueError("B0_coords on jets or arrays needs lam > 0")
    zp = zeta * zeta + 1.0 / (zeta * zeta)
    radial = _power(lam, (l + lp + s) / 2) * jx.exp(-TWO_PI * lam * zp)
    return c1(zeta, phi1, phi2, l, lp, m) * radial


def B0_global(g, l: int, lp: int, m: int, s: complex = 0.0):
    """Lowest weight vector as a function on the group, holomorphic in the entries."""
    _require(l, lp, m)
    g = g.mat if isinstance(g, gc.GroupElement) else g
    mu = gc.multiplier(g, tol=None)
    mu_val = np.real(jx.value_of(mu))
    if np.ndim(mu_val) == 0 and mu_val <= 0:
        return 0j
    ji = gc.j_factor(g, gc.I_POINT)
    det_j = gc.det2(ji)
    w = gc.w_poly(g)
    tr = gc.trace2(gc.siegel_action(g, gc.I_POINT))
    if m >= 0:
        entry = g[3, 3] - g[2, 1] + 1j * g[3, 1] + 1j * g[2, 3]
        out = _power(mu, lp + s / 2 + m / 2) * _power(w, (l - lp - m) // 2) * _power(entry, m)
    else:
        entry = g[3, 3] + g[2, 1] + 1j * g[3, 1] - 1j * g[2, 3]
        out = (2.0 ** (-m)) * _power(mu, lp + s / 2 - m / 2) * _power(w, (l - lp + m) // 2) \
            * _power(entry, -m)
    return out * _power(det_j, -l) * jx.exp(TWO_PI * 1j * tr)


def chart_jet(p, l: int, lp: int, m: int, s: complex = 0.0, order: int = 1) -> Jet:
    """Taylor jet of B0_coords in (lam, zeta, phi1, phi2)."""
    return B0_coords(jx.chart_jet(_coords(p), order), l, lp, m, s)


def partials(fjet: Jet) -> tuple:
    """(f, f_lam, f_zeta, f_phi1, f_phi2) at the expansion point of a 4-variable jet."""
    out = [fjet.value]
    for k in range(4):
        out.append(fjet.derivative(tuple(int(i == k) for i in range(4))))
    return tuple(out)


# operator formulas --------------------------------------------------------

def _guard(zeta, phi2, need_zeta: bool) -> None:
    c2 = np.cos(2 * np.asarray(jx.value_of(phi2)).real)
    if np.any(np.abs(c2) < 1e-12):
        raise ChartSingularity("cos(2 phi2) = 0")
    if need_zeta:
        z = np.asarray(jx.value_of(zeta)).real
        if np.any(np.abs(z**4 - 1) < 1e-12):
            raise ChartSingularity("zeta**4 = 1")


class Geometry:
    """Chart-dependent pieces of the operator formulas, with per-operator coefficient cache."""

    def __init__(self, zeta, phi1, phi2):
        self.zeta = zeta
        c1_, s1_, c2_, s2_ = _trig(phi1, phi2)
        self.c1, self.s1, self.c2, self.s2 = c1_, s1_, c2_, s2_
        self.ic2 = 1.0 / c2_
        self.t2 = s2_ * self.ic2
        z2 = zeta * zeta
        iz2 = 1.0 / z2
        self.zm = z2 - iz2
        self.zp = z2 + iz2
        self._cache: dict = {}

    def coefficients(self, op: str, l: int, lp: int, s: complex, m: int):
        """(A, B, c_lamflam, c_zetafzeta, c_phi1, c_phi2) with f-coefficient A + lam B."""
        key = (op, l, lp, s, m)
        if key not in self._cache:
            self._cache[key] = self._build(op, l, lp, s, m)
        return self._cache[key]

    def _build(self, op, l, lp, s, m):
        c1_, s1_, c2_, s2_ = self.c1, self.s1, self.c2, self.s2
        ic2, t2, zm, zp = self.ic2, self.t2, self.zm, self.zp
        pi = np.pi
        if op in ("Nplus", "Nminus"):
            sg = 1 if op == "Nplus" else -1
            return (0.5j * (lp - l) * t2, None, None, None, 0.5 * ic2, -sg * 0.5j)
        izm = 1.0 / zm
        s1s2 = s1_ * s2_
        c1s2 = c1_ * s2_
        quart = (1.0 - 0.5 * s2_ * s2_) * ic2
        sq = s2_ * t2
        ratio = 0.25 * zp * izm
        if op in ("Xplus", "Xminus"):
            sg = 1 if op == "Xplus" else -1
            A = (-s / 4 * c2_ + (m / 2) * izm * (1j * s1_ + sg * c1s2)
                 + sg * (l / 2) * quart - sg * (lp / 4) * sq)
            B = -pi * 1j * zm * s1s2 - sg * pi * (zm * c1_ + zp * c2_)
            return (A, B, 0.5 * c2_, 0.25 * (c1_ + sg * 1j * s1s2),
                    ratio * (-s1_ + sg * 1j * c1s2) + sg * 0.25j * t2, 0.25 * s2_)
        if op in ("P1plus", "P1minus"):
            sg = 1 if op == "P1plus" else -1
            c1c2 = c1_ * c2_
            A = (0.5j * (l + lp) - sg * 0.5j * s) * s2_ - 1j * m * izm * c1c2
            B = -2j * pi * zp * s2_ - sg * 2 * pi * zm * c2_ * s1_
            return (A, B, sg * 1j * s2_, 0.5 * c2_ * s1_, 2 * ratio * c1c2, -sg * 0.5j * c2_)
        if op in ("P0plus", "P0minus"):
            sg = 1 if op == "P0plus" else -1
            A = (-s / 4 * c2_ - (m / 2) * izm * (1j * s1_ - sg * c1s2)
                 - sg * (l / 4) * sq + sg * (lp / 2) * quart)
            B = -pi * 1j * zm * s1s2 - sg * pi * (zp * c2_ - zm * c1_)
            return (A, B, 0.5 * c2_, 0.25 * (-c1_ + sg * 1j * s1s2),
                    ratio * (s1_ + sg * 1j * c1s2) - sg * 0.25j * t2, 0.25 * s2_)
        raise KeyError(op)


def _times_lam(x, lam):
    if isinstance(x, LambdaPoly):
        return LambdaPoly(x.coeffs, x.low + 1)
    return lam * x


def operator_terms(op: str, lam, zeta, phi1, phi2, f, lam_flam, zeta_fzeta, f_phi1, f_phi2,
                   l: int, lp: int, s: complex, m: int, geometry: Geometry | None = None):
    """Complexified operator on the chart, from ``f``, ``lam f_lam``, ``zeta f_zeta``, ``f_phi1``, ``f_phi2``."""
    if op not in COMPLEX_OPS:
        raise KeyError(op)
    _guard(zeta, phi2, op not in ("Nplus", "Nminus"))
    geo = Geometry(zeta, phi1, phi2) if geometry is None else geometry
    A, B, c_lam, c_zeta, c_phi1, c_phi2 = geo.coefficients(op, l, lp, s, m)
    out = f * A + f_phi1 * c_phi1 + f_phi2 * c_phi2
    if B is not None:
        out = out + _times_lam(f * B, lam) + lam_flam * c_lam + zeta_fzeta * c_zeta
    return out


def operator_rhs(op: str, p, fvals, l: int, lp: int, s: complex, m: int):
    """Operator formula at a chart point.

    ``fvals`` is ``(f, f_lam, f_zeta, f_phi1, f_phi2)`` or a 4-variable jet of f.
    """
    if isinstance(fvals, Jet):
        fvals = partials(fvals)
    lam, zeta, phi1, phi2 = _coords(p)
    f, f_lam, f_zeta, f_phi1, f_phi2 = fvals
    return operator_terms(op, lam, zeta, phi1, phi2, f, lam * f_lam, zeta * f_zeta,
                          f_phi1, f_phi2, l, lp, s, m)


# PDE system ---------------------------------------------------------------

def pde_coefficients(zeta, phi1, phi2, l: int, lp: int, m: int):
    """Logarithmic derivatives of c1 in zeta, phi1, phi2."""
    c1_, s1_, c2_, s2_ = _trig(phi1, phi2)
    z4 = zeta ** 4
    den = (z4 - 1) * (c1_ + 1j * s1_ * s2_) + (z4 + 1) * c2_
    d = l - lp
    dz = (-2 * m * zeta * (c1_ * s2_ + 1j * s1_)
          + (d / zeta) * ((z4 + 1) * (c1_ + 1j * s1_ * s2_) + (z4 - 1) * c2_)) / den
    d1 = (2j * m * zeta**2 * c2_ - d * (z4 - 1) * (s1_ - 1j * c1_ * s2_)) / den
    d2 = (2 * m * zeta**2 - d * ((z4 + 1) * s2_ - 1j * (z4 - 1) * s1_ * c2_)) / den
    return dz, d1, d2


def pde_residuals_of(fjet: Jet, p, l: int, lp: int, m: int, s: complex = 0.0) -> np.ndarray:
    """LHS - RHS of the four first-order equations for the function with jet ``fjet``."""
    lam, zeta, phi1, phi2 = _coords(p)
    f, f_lam, f_zeta, f_phi1, f_phi2 = partials(fjet)
    dz, d1, d2 = pde_coefficients(zeta, phi1, phi2, l, lp, m)
    zp = zeta**2 + zeta**-2
    return np.array([
        f_lam - ((l + lp + s) / (2 * lam) - TWO_PI * zp) * f,
        f_zeta - (-2 * TWO_PI * lam * (zeta - zeta**-3) + dz) * f,
        f_phi1 - d1 * f,
        f_phi2 - d2 * f,
    ])


def pde_residuals(p, l: int, lp: int, m: int, s: complex = 0.0) -> np.ndarray:
    _guard(_coords(p)[1], _coords(p)[3], True)
    return pde_residuals_of(chart_jet(p, l, lp, m, s, order=1), p, l, lp, m, s)


def c1_pde_residuals(zeta, phi1, phi2, l: int, lp: int, m: int, form: int = 1) -> np.ndarray:
    """Residuals of the lambda-free subsystem for c1."""
    z, a, b = jx.chart_jet((zeta, phi1, phi2), 1)
    cj = c1(z, a, b, l, lp, m, form)
    val = cj.value
    dz, d1, d2 = pde_coefficients(zeta, phi1, phi2, l, lp, m)
    return np.array([
        cj.coefficient((1, 0, 0)) - dz * val,
        cj.coefficient((0, 1, 0)) - d1 * val,
        cj.coefficient((0, 0, 1)) - d2 * val,
    ])


# coefficient lists --------------------------------------------------------

def coefficient_list(tag: str, lam, zeta, phi1, phi2) -> dict[str, float]:
    """Derivatives at t = 0 of the eleven coset parameters of h exp(tL)."""
    c1_, s1_, c2_, s2_ = _trig(phi1, phi2)
    z2, z4 = zeta**2, zeta**4
    t2 = s2_ / c2_
    sn, cs = np.sin(phi2), np.cos(phi2)
    zero = 0.0
    if tag in ("H1", "H2"):
        sg = 1 if tag == "H1" else -1
        vals = (-0.5 * c2_, sg * z2 * s1_ / (z4 - 1), lam * c2_, sg * 0.5 * zeta * c1_,
                -z2 * lam * s1_ * s2_, -lam * c1_ * s2_, lam * s1_ * s2_ / z2,
                sg * (1 + z4) * s1_ / (2 * (1 - z4)), 0.5 * s2_, zero, zero)
    elif tag in ("F", "G"):
        phi3 = -(sn**4 if tag == "F" else cs**4) / c2_
        vals = (zero, z2 * c1_ * s2_ / (2 * (1 - z4)), zero, zeta / 4 * s1_ * s2_,
                0.5 * z2 * lam * (c1_ + c2_), -lam / 2 * s1_, lam * (c2_ - c1_) / (2 * z2),
                0.25 * t2 + (z4 + 1) / (4 * (z4 - 1)) * c1_ * s2_, zero,
                phi3, 0.25 * s2_ * t2)
    elif tag in ("R", "Rp"):
        phi4 = -(sn**4 if tag == "R" else cs**4) / c2_
        vals = (zero, z2 * c1_ * s2_ / (2 * (1 - z4)), zero, zeta / 4 * s1_ * s2_,
                0.5 * z2 * lam * (c2_ - c1_), lam / 2 * s1_, lam * (c2_ + c1_) / (2 * z2),
                -0.25 * t2 + (z4 + 1) / (4 * (z4 - 1)) * c1_ * s2_, zero,
                s2_**2 / (4 * c2_), phi4)
    elif tag in ("P", "Pp"):
        sg = -1 if tag == "P" else 1
        phi3 = t2 * cs**2 if tag == "P" else -t2 * sn**2
        phi4 = -t2 * sn**2 if tag == "P" else t2 * cs**2
        vals = (zero, z2 * c1_ * c2_ / (1 - z4), zero, 0.5 * zeta * c2_ * s1_,
                -z2 * lam * s2_, zero, -lam * s2_ / z2,
                sg / (2 * c2_) + (z4 + 1) / (2 * (z4 - 1)) * c1_ * c2_, zero, phi3, phi4)
    elif tag in ("Q", "Qp"):
        phi2d = sn**2 if tag == "Q" else -cs**2
        vals = (-s2_ / 2, zero, lam * s2_, zero,
                z2 * lam * c2_ * s1_, lam * c2_ * c1_, -lam * c2_ * s1_ / z2,
                zero, phi2d, zero, zero)
    else:
        raise KeyError(tag)
    return dict(zip(COEFFICIENT_NAMES, (float(v) for v in vals)))


@dataclass(frozen=True)
class CoefficientReport:
    tag: str
    point: tuple[float, float, float, float]
    numeric: dict[str, float]
    closed: dict[str, float]

    @property
    def deviations(self) -> dict[str, float]:
        return {k: abs(self.numeric[k] - self.closed[k]) for k in COEFFICIENT_NAMES}

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())


def verify_coefficients(tag: str, p, h: float = 1e-3) -> CoefficientReport:
    """Fourth-order central differences of coset_decompose(h(p) exp(tL)) against the closed forms."""
    lam, zeta, phi1, phi2 = _coords(p)
    point = gc.ChartPoint("nonsplit", lam, zeta, phi1, phi2)
    _guard(zeta, phi2, True)
    hmat = gc.chart_element(point)
    gen = basis_matrix(tag).real
    base = gc.CosetCoords("nonsplit", (1.0, 0.0), 0.0, 0.0, 0.0, point, 0.0, 0.0)

    def params(t: float) -> np.ndarray:
        return gc.coset_decompose(hmat @ gc.expm(t * gen), "nonsplit", guess=base).as_vector()

    d = (8 * (params(h) - params(-h)) - (params(2 * h) - params(-2 * h))) / (12 * h)
    numeric = dict(zip(VECTOR_ORDER, (float(v) for v in d)))
    return CoefficientReport(tag, (lam, zeta, phi1, phi2), numeric,
                             coefficient_list(tag, lam, zeta, phi1, phi2))


# transports ---------------------------------------------------------------

def change_of_model(B: Callable, A, alpha: float) -> Callable:
    """B'(g) = B(diag(A, alpha^{-1} A^{-T}) g)."""
    A = np.asarray(A, dtype=float)
    lower = np.linalg.inv(A).T / alpha
    block = np.zeros((4, 4))
    block[:2, :2] = A
    block[2:, 2:] = lower

    def transported(g):
        g = g.mat if isinstance(g, gc.GroupElement) else g
        return B(block @ g)

    transported.block = block
    return transported


def transported_theta_matrix(S, A, alpha: float) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    return alpha * A.T @ np.asarray(S) @ A


def twist(B: Callable, chi_exponent: complex, chi_sign: int = 1) -> Callable:
    """B~(g) = chi(mu2(g)) B(g) with chi(x) = |x|**e * sign(x)**((1 - chi_sign)/2)."""
    if chi_sign not in (1, -1):
        raise ValueError("chi_sign must be +1 or -1")

    def twisted(g):
        g = g.mat if isinstance(g, gc.GroupElement) else g
        mu = float(np.real(gc.multiplier(g, tol=None)))
        sign = np.sign(mu) ** ((1 - chi_sign) // 2)
        return abs(mu) ** chi_exponent * sign * B(g)

    return twisted


def untwisting_exponent(s: complex) -> complex:
    """Exponent of chi that removes s; the multiplier of gamma*rot is gamma**2."""
    return -s / 2


# ladder -------------------------------------------------------------------

@dataclass
class ReducedFunction:
    """f = lam**a exp(-2 pi lam (zeta^2 + zeta^-2)) G on a batch of base points."""

    G: LambdaPoly
    a: complex
    weight: tuple[int, int]
    zeta: Jet
    phi1: Jet
    phi2: Jet
    geometry: Geometry | None = None

    def __post_init__(self):
        if self.geometry is None:
            self.geometry = Geometry(self.zeta, self.phi1, self.phi2)

    @property
    def order(self) -> int:
        return self.G.order

    def values(self, lam) -> np.ndarray:
        """f at (lam, base point); the lam grid is appended to the batch."""
        lam = np.asarray(lam, dtype=self.zeta.value.real.dtype)
        zp = self.zeta.value.real**2 + self.zeta.value.real**-2
        g = self.G.evaluate(lam)
        radial = lam ** self.a * np.exp(-TWO_PI * np.multiply.outer(zp, lam))
        return g * radial

    def values_rows(self, lam) -> np.ndarray:
        """f at (lam[i, j], base point i)."""
        lam = np.asarray(lam, dtype=self.zeta.value.real.dtype)
        zp = self.zeta.value.real**2 + self.zeta.value.real**-2
        powers = np.arange(self.G.low, self.G.high + 1)
        g = np.einsum("ip,ijp->ij", self.G.coeffs.value, lam[..., None] ** powers)
        return g * lam ** self.a * np.exp(-TWO_PI * lam * zp[:, None])

    def values_at(self, lam) -> np.ndarray:
        """f at (lam[i], base point i)."""
        lam = np.asarray(lam, dtype=self.zeta.value.real.dtype)
        zp = self.zeta.value.real**2 + self.zeta.value.real**-2
        powers = np.arange(self.G.low, self.G.high + 1)
        g = np.sum(self.G.coeffs.value * lam[..., None] ** powers, axis=-1)
        return g * lam ** self.a * np.exp(-TWO_PI * lam * zp)

    def chart_derivatives(self, lam) -> tuple[np.ndarray, ...]:
        """(f, f_lam, f_zeta, f_phi1, f_phi2) at (lam[i], base point i)."""
        lam = np.asarray(lam, dtype=self.zeta.value.real.dtype)
        zeta = self.zeta.value.real
        zp, zm = zeta**2 + zeta**-2, zeta**2 - zeta**-2
        powers = np.arange(self.G.low, self.G.high + 1)
        lp = lam[..., None] ** powers

        def ev(exps, weights=None):
            c = self.G.coefficient(exps)
            if weights is not None:
                c = c * weights
            return np.sum(c * lp, axis=-1)

        g = ev((0, 0, 0))
        g_lam = ev((0, 0, 0), powers) / lam
        radial = lam ** self.a * np.exp(-TWO_PI * lam * zp)
        f = g * radial
        f_lam = radial * (self.a / lam * g + g_lam - TWO_PI * zp * g)
        f_zeta = radial * (ev((1, 0, 0)) - 4 * np.pi * lam * zm / zeta * g)
        return f, f_lam, f_zeta, radial * ev((0, 1, 0)), radial * ev((0, 0, 1))


def reduced_B0(l: int, lp: int, m: int, s: complex, zeta, phi1, phi2, order: int) -> ReducedFunction:
    """B0 in reduced form, with jets of the given order at the base points."""
    _require(l, lp, m)
    z, a, b = jx.chart_jet((zeta, phi1, phi2), order)
    _guard(z, b, True)
    G = LambdaPoly.lift(c1(z, a, b, l, lp, m), None)
    return ReducedFunction(G, (l + lp + s) / 2, (l, lp), z, a, b)


def apply_operator(op: str, F: ReducedFunction, s: complex, m: int) -> ReducedFunction:
    """Operator formula in reduced form; the jet order drops by one."""
    if F.order < 1:
        raise JetOrderExhausted("jet order exhausted")
    G = F.G
    geo = F.geometry
    low = G.truncate(G.order - 1)
    l, lp = F.weight
    if op in ("Nplus", "Nminus"):
        out = operator_terms(op, None, F.zeta, F.phi1, F.phi2, low, None, None,
                             G.partial(1), G.partial(2), l, lp, s, m, geo)
    else:
        euler = LambdaPoly(G.lam_derivative().coeffs.truncate(G.order - 1), G.low)
        lam_flam = euler + low * F.a - TWO_PI * _times_lam(low * geo.zp, None)
        zeta_fzeta = G.partial(0) * F.zeta - 4 * np.pi * _times_lam(low * geo.zm, None)
        out = operator_terms(op, None, F.zeta, F.phi1, F.phi2, low, lam_flam, zeta_fzeta,
                             G.partial(1), G.partial(2), l, lp, s, m, geo)
    dl, dlp = WEIGHT_SHIFT[op]
    return ReducedFunction(out, F.a, (l + dl, lp + dlp), F.zeta, F.phi1, F.phi2, geo)


def apply_word(word: Sequence[str], F: ReducedFunction, s: complex, m: int) -> ReducedFunction:
    """Apply L_1 (L_2 (... L_k F)); the last operator acts first."""
    for op in reversed(word):
        F = apply_operator(op, F, s, m)
    return F


def _combine(terms: Sequence[tuple[complex, ReducedFunction]]) -> ReducedFunction:
    order = min(t.order for _, t in terms)
    G = None
    for c, t in terms:
        piece = t.G.truncate(order) * c
        G = piece if G is None else G + piece
    ref = terms[0][1]
    return ReducedFunction(G, ref.a, ref.weight, ref.zeta, ref.phi1, ref.phi2, ref.geometry)


def ladder_step(F: ReducedFunction, l: int, lp0: int, k: int, s: complex, m: int) -> ReducedFunction:
    """One raising step from weight (l, lp0 + 2k - 2) to (l, lp0 + 2k)."""
    alpha = l - lp0 - 2 * k + 2
    A = apply_operator("P0plus", F, s, m)
    C1 = apply_operator("Nplus", A, s, m)
    D1 = apply_operator("Nminus", C1, s, m)
    C2 = apply_operator("Nplus", C1, s, m)
    E2 = apply_word(("Nminus", "Nminus"), C2, s, m)
    return _combine([(1.0, A), (1.0 / alpha, D1), (1.0 / (2 * alpha * (alpha + 1)), E2)])


LADDER_WORD_TERMS = (
    (("P0plus",), 0),
    (("Nminus", "Nplus", "P0plus"), 1),
    (("Nminus", "Nminus", "Nplus", "Nplus", "P0plus"), 2),
)


def ladder_words(l: int, lp: int, k: int) -> list[tuple[complex, tuple[str, ...]]]:
    """Expansion of one raising step (to weight lp + 2k) as weighted operator words."""
    alpha = l - lp - 2 * k + 2
    weights = (1.0, 1.0 / alpha, 1.0 / (2 * alpha * (alpha + 1)))
    return [(w, word) for w, (word, _) in zip(weights, LADDER_WORD_TERMS)]


@dataclass
class LadderVector:
    """B_{l, lp + 2k} on a batch of base points, with its N+ residual."""

    l: int
    lp0: int
    k: int
    m: int
    s: complex
    function: ReducedFunction
    nplus: ReducedFunction | None = None

    @property
    def weight(self) -> tuple[int, int]:
        return self.function.weight

    def values(self, lam) -> np.ndarray:
        return self.function.values(lam)

    def nplus_residual(self, lam) -> np.ndarray:
        """|N+ B| / max|B| on the grid of lam values."""
        if self.nplus is None:
            raise JetOrderExhausted("no order left for the N+ check")
        scale = np.abs(self.values(lam)).max()
        return np.abs(self.nplus.values(lam)) / scale


def required_order(target_k: int, check: bool = True) -> int:
    return 5 * target_k + (1 if check else 0)


def ladder(l: int, lp: int, m: int, s: complex, target_k: int, zeta, phi1=0.0, phi2=0.0,
           order: int | None = None, cfg: LadderConfig = DEFAULT.ladder,
           check: bool = True, precision: str = "double") -> list[LadderVector]:
    """All ladder vectors B_{l, lp + 2k}, k = 0..target_k, at the given base points.

    The ladder words cancel heavily, so the N+ residual of high rungs sits near
    roundoff times that cancellation; ``precision="extended"`` buys three digits.
    """
    with jx.precision(precision):
        return _ladder(l, lp, m, s, target_k, zeta, phi1, phi2, order, cfg, check)


def _ladder(l, lp, m, s, target_k, zeta, phi1, phi2, order, cfg, check) -> list[LadderVector]:
    _require(l, lp, m)
    if target_k > (l - lp) // 2 or target_k < 0:
        raise ValueError("target_k out of range")
    need = required_order(target_k, check)
    order = cfg.order if order is None and cfg.order is not None else order
    order = need if order is None else order
    if order < need:
        raise JetOrderExhausted(f"order {order} < required {need}")
    if order > cfg.max_order:
        raise JetOrderExhausted(f"order {order} above cap {cfg.max_order}")
    zeta, phi1, phi2 = np.broadcast_arrays(*(np.asarray(v, dtype=jx.real_dtype()) for v in (zeta, phi1, phi2)))
    F = reduced_B0(l, lp, m, s, zeta, phi1, phi2, order)
    out = []
    for k in range(target_k + 1):
        if k:
            F = ladder_step(F, l, lp, k, s, m)
        nplus = apply_operator("Nplus", F, s, m) if check and F.order >= 1 else None
        out.append(LadderVector(l, lp, k, m, s, F, nplus))
    return out


def ladder_top(l: int, lp: int, m: int = 0, s: complex = 0.0, zeta=1.5, **kw) -> LadderVector:
    """The vector of weight (l, l) reached from (l, lp)."""
    return ladder(l, lp, m, s, (l - lp) // 2, zeta, 0.0, 0.0, **kw)[-1]


def closed_form_top(l: int, lp: int, lam, zeta, corrected: bool = False) -> np.ndarray:
    """Published closed forms of B_{l,l}(h(lam, zeta, 0, 0)) for l - lp in {2, 4, 6, 8}.

    The printed l - lp = 2 form carries a wrong sign on its lam term; ``corrected``
    flips it to the form the ladder actually produces.
    """
    lam = np.asarray(lam, dtype=float)
    x = (np.asarray(zeta, dtype=float) ** 2 + np.asarray(zeta, dtype=float) ** -2) / 2
    e = 8 * np.pi * lam
    n = l - lp
    if n == 2:
        poly = 4 * lam ** (l - 1) * (2 * (l - 3) * x + (-e if corrected else e))
    elif n == 4:
        poly = 4 / 15 * lam ** (l - 2) * (12 * (l - 4) * (l - 5) * x**2 - 8 * (l - 4) * x * e
                                          + 2 * e**2 - 4 * (l - 4) * (l - 5))
    elif n == 6:
        a, b, c = l - 5, l - 6, l - 7
        poly = 8 / 35 * lam ** (l - 3) * (40 * a * b * c * x**3 - 36 * a * b * e * x**2
                                          + 12 * a * e**2 * x - 2 * e**3
                                          - 24 * a * b * c * x + 12 * a * b * e)
    elif n == 8:
        a, b, c, d = l - 6, l - 7, l - 8, l - 9
        poly = 16 / 315 * lam ** (l - 4) * (
            560 * a * b * c * d * x**4 - 640 * a * b * c * e * x**3
            + 288 * a * b * e**2 * x**2 - 64 * a * e**3 * x + 8 * e**4
            - 480 * a * b * c * d * x**2 + 384 * a * b * c * e * x
            - 96 * a * b * e**2 + 48 * a * b * c * d)
    else:
        raise ValueError("closed forms exist for l - lp in {2, 4, 6, 8}")
    return np.exp(-4 * np.pi * lam * x) * poly


@dataclass(frozen=True)
class ProportionalityFit:
    constant: complex
    residual: float


def fit_proportional(computed: np.ndarray, reference: np.ndarray) -> ProportionalityFit:
    """Least-squares scalar c with computed ~ c * reference and the relative residual."""
    computed = np.ravel(computed)
    reference = np.ravel(reference)
    c = np.vdot(reference, computed) / np.vdot(reference, reference)
    resid = np.linalg.norm(computed - c * reference) / np.linalg.norm(computed)
    return ProportionalityFit(complex(c), float(resid))


# global extensions for derivative checks ---------------------------------

def ladder_global(l: int, lp: int, m: int, s: complex, k: int) -> Callable:
    """B_{l, lp + 2k} as a group function built from iterated Lie derivatives of B0_global.

    Returns ``F(g, word)`` giving ``(L_1 ... L_j B_k)(g)`` for a prefix word.
    """
    terms: list[tuple[complex, tuple[str, ...]]] = [(1.0, ())]
    for step in range(1, k + 1):
        new = []
        for w, word in ladder_words(l, lp, step):
            for c, prev in terms:
                new.append((w * c, word + prev))
        terms = new

    def F(g, prefix: Sequence[str] = ()) -> complex:
        total = 0j
        for c, word in terms:
            mats = [basis_matrix(t) for t in tuple(prefix) + word]
            total += c * jx.lie_derivative(lambda x: B0_global(x, l, lp, m, s), np.asarray(g), mats)
        return total

    return F


# linear independence ------------------------------------------------------

@dataclass(frozen=True)
class GramReport:
    singular_values: np.ndarray
    independent: bool


def linear_independence_check(l: int, lp: int, m: int, s: complex, words: Sequence[Sequence[str]],
                              n_points: int = 40, seed: int = 7,
                              coefficients: Sequence[complex] | None = None) -> GramReport:
    """Gram singular values of word-applied B0 evaluated on a fixed chart sample.

    ``coefficients`` scales each word (to test dependent families like B0, 2 B0).
    """
    rng = np.random.default_rng(seed)
    zeta = rng.uniform(1.3, 2.5, n_points)
    phi1 = rng.uniform(-0.5, 0.5, n_points)
    phi2 = rng.uniform(-0.4, 0.4, n_points)
    lam = rng.uniform(0.05, 0.5, n_points)
    order = max(len(w) for w in words)
    F0 = reduced_B0(l, lp, m, s, zeta, phi1, phi2, order)
    rows = []
    for i, w in enumerate(words):
        v = apply_word(tuple(w), F0, s, m).values_at(lam)
        if coefficients is not None:
            v = v * coefficients[i]
        rows.append(v)
    V = np.array(rows)
    V = V / np.abs(V).max()
    sv = np.linalg.svd(V @ V.conj().T, compute_uv=False)
    return GramReport(sv, bool(sv[-1] > 1e-6 * sv[0]))


# sampling helpers ---------------------------------------------------------

def random_chart_points(rng: np.random.Generator, n: int, guard: float = 0.05,
                        lam_range=(0.05, 1.0), zeta_range=(1.05, 2.5),
                        phi1_range=(-0.6, 0.6), phi2_range=(-0.6, 0.6)) -> np.ndarray:
    """Chart samples avoiding zeta = 1 and cos(2 phi2) = 0 by a guard band."""
    pts = np.empty((n, 4))
    pts[:, 0] = rng.uniform(*lam_range, n)
    pts[:, 1] = rng.uniform(max(zeta_range[0], 1 + guard), zeta_range[1], n)
    pts[:, 2] = rng.uniform(*phi1_range, n)
    lim = np.pi / 4 - guard
    pts[:, 3] = rng.uniform(max(phi2_range[0], -lim), min(phi2_range[1], lim), n)
    return pts


def blowup_probe(l: int, lp: int, m: int, eps: Sequence[float] = tuple(10.0 ** -k for k in range(1, 9))):
    """|c1 (form 1)| approaching the zero of its base with a negative exponent.

    For m > l - lp the second base vanishes at (1, 0, pi/4); for m < -(l - lp)
    the first base vanishes at (1, 0, -pi/4).
    """
    target = np.pi / 4 if m >= 0 else -np.pi / 4
    sign = -1 if m >= 0 else 1
    out = []
    for e in eps:
        phi2 = target + sign * e
        out.append(abs(complex(c1(1.0, 0.0, phi2, l, lp, m))))
    return np.array(out)


# lowest weight checks -------------------------------------------------------

@dataclass(frozen=True)
class LowestWeightReport:
    """Worst relative residuals over a chart sample."""

    annihilation: dict[str, float]
    weight: dict[str, float]
    operator: dict[str, float]
    n_points: int

    def passed(self, annihilation_tol: float = 1e-8, weight_tol: float = 1e-9,
               operator_tol: float = 1e-7) -> bool:
        return (max(self.annihilation.values()) < annihilation_tol
                and max(self.weight.values()) < weight_tol
                and max(self.operator.values(), default=0.0) < operator_tol)


def lowest_weight_check(l: int, lp: int, m: int, s: complex = 0.0, n_points: int = 100,
                        seed: int = 0, operators: bool = False) -> LowestWeightReport:
    """Lie derivatives of B0_global at sampled chart points.

    Annihilators are measured against |B|; Z and Z' against the eigenvalues l and lp.
    With ``operators`` every complex operator is also compared to operator_rhs.
    """
    rng = np.random.default_rng(seed)
    pts = random_chart_points(rng, n_points)
    fn = lambda x: B0_global(x, l, lp, m, s)  # noqa: E731
    ann = {op: 0.0 for op in ANNIHILATORS}
    wt = {"Z": 0.0, "Zp": 0.0}
    ops = {op: 0.0 for op in COMPLEX_OPS} if operators else {}
    eig = {"Z": l, "Zp": lp}
    tags = tuple(ann) + tuple(wt) + tuple(op for op in ops if op not in ann)
    mats = [basis_matrix(t) for t in tags]
    for p in pts:
        g = gc.chart_element_coords("nonsplit", *p)
        b = fn(g)
        size = abs(b)
        if size == 0:
            continue
        grad = dict(zip(tags, jx.lie_gradient(fn, g, mats)))
        for op in ann:
            ann[op] = max(ann[op], abs(grad[op]) / size)
        for t in wt:
            wt[t] = max(wt[t], abs(grad[t] - eig[t] * b) / size)
        if ops:
            fj = chart_jet(tuple(p), l, lp, m, s, 1)
            for op in ops:
                rhs = operator_rhs(op, tuple(p), fj, l, lp, s, m)
                ops[op] = max(ops[op], abs(grad[op] - rhs) / size)
    return LowestWeightReport(ann, wt, ops, n_points)
