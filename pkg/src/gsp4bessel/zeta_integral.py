"""Archimedean zeta integral pieces: Gamma, Whittaker W, the (k, j) integrals in closed
form and by quadrature, their assembly from ladder coefficients, and the
convergence criteria for integrals of Bessel functions over R\\GSp(4)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bessel_nonsplit as bn
from .config import DEFAULT, QuadratureConfig
from .errors import (
    DivergentRegion,
    ParameterRegionUnsupported,
    PoleOfGamma,
    PoleOfQ,
    QuadratureNotConverged,
    ShapeMismatch,
)

# Lanczos approximation, g = 7, nine terms
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993, 676.5203681218851, -1259.1392167224028,
    771.32342877765313, -176.61502916214059, 12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7,
)


def _is_pole(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    near = np.round(z.real)
    return (np.abs(z - near) < 1e-14) & (near <= 0)


def _gamma_right(z: np.ndarray) -> np.ndarray:
    z = z - 1
    x = np.full(z.shape, _LANCZOS[0], dtype=complex)
    for i in range(1, 9):
        x = x + _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return np.sqrt(2 * np.pi) * np.exp((z + 0.5) * np.log(t) - t) * x


def gamma_complex(z):
    """Gamma on the complex plane with reflection for Re z < 1/2."""
    z = np.asarray(z, dtype=complex)
    if np.any(_is_pole(z)):
        raise PoleOfGamma(f"Gamma has a pole at {z}")
    left = z.real < 0.5
    out = np.empty(z.shape, dtype=complex)
    if np.any(~left):
        out[~left] = _gamma_right(z[~left])
    if np.any(left):
        zl = z[left]
        out[left] = np.pi / (np.sin(np.pi * zl) * _gamma_right(1 - zl))
    return out if out.ndim else complex(out)


def rgamma(z):
    """1/Gamma, zero at the poles."""
    z = np.asarray(z, dtype=complex)
    if np.any(_is_pole(z)):
        return 0j
    return 1.0 / gamma_complex(z)


# double-exponential rules ---------------------------------------------------

def exp_sinh_rule(h: float, tau_min: float, tau_max: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes t = exp(pi/2 sinh tau) on (0, inf) and trapezoid weights dt."""
    tau = np.arange(tau_min, tau_max + h / 2, h)
    arg = 0.5 * np.pi * np.sinh(tau)
    t = np.exp(arg)
    return t, h * 0.5 * np.pi * np.cosh(tau) * t


def _log_sum(logs: np.ndarray, weights: np.ndarray, axis: int = -1) -> np.ndarray:
    """sum(weights * exp(logs)) with a common scale."""
    shift = np.max(logs.real, axis=axis, keepdims=True)
    shift = np.where(np.isfinite(shift), shift, 0.0)
    return np.sum(weights * np.exp(logs - shift), axis=axis) * np.exp(np.squeeze(shift, axis))


# Whittaker W ----------------------------------------------------------------

def _whittaker_integral(kappa: complex, mu: complex, y: np.ndarray, h: float = 1 / 64) -> np.ndarray:
    """Integral representation, valid for Re(mu - kappa + 1/2) > 0."""
    a = mu - kappa + 0.5
    b = mu + kappa + 0.5
    if a.real <= 0:
        raise ParameterRegionUnsupported("integral representation needs Re(mu - kappa + 1/2) > 0")
    left = -math.asinh(2 / np.pi * 40 / max(a.real, 0.05))
    right = math.asinh(2 / np.pi * math.log(800 / max(float(np.min(y)), 1e-300)))
    t, w = exp_sinh_rule(h, left - 0.5, right + 0.5)
    logt = np.log(t)
    logs = (a - 1) * logt + (b - 1) * np.log1p(t) - np.multiply.outer(y, t)
    integral = _log_sum(logs.astype(complex), w)
    return np.exp((mu + 0.5) * np.log(y) - y / 2) * rgamma(a) * integral


def _whittaker_polynomial(degree: int, mu: complex, y: np.ndarray) -> np.ndarray:
    """Terminating case mu - kappa + 1/2 = -degree: a Laguerre polynomial times e^{-y/2} y^{mu+1/2}."""
    alpha = 2 * mu
    # L_N^(alpha)(y) = sum_j binom(N + alpha, N - j) (-y)^j / j!
    total = np.zeros_like(y, dtype=complex)
    coef = 1.0 + 0j
    for j in range(degree):
        coef *= (alpha + degree - j) / (j + 1)
    for j in range(degree + 1):
        total += coef * (-y) ** j
        if j < degree:
            coef *= (degree - j) / ((alpha + j + 1) * (j + 1))
    sign = -1.0 if degree % 2 else 1.0
    return sign * math.factorial(degree) * np.exp((mu + 0.5) * np.log(y) - y / 2) * total


def whittaker_w(kappa: complex, mu: complex, y):
    """W_{kappa, mu}(y) for y > 0.

    The integral representation is used at kappa0 = kappa - n, chosen so that it
    is valid at kappa0 and kappa0 - 1, and the three-term recurrence in kappa
    climbs back up.
    """
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ParameterRegionUnsupported("Whittaker W needs y > 0")
    kappa, mu = complex(kappa), complex(mu)
    # W is even in mu; one representative keeps W(mu) = W(-mu) exact
    if mu.real < 0 or (mu.real == 0 and mu.imag < 0):
        mu = -mu
    a = mu - kappa + 0.5
    if abs(a.imag) < 1e-14 and a.real < 0.5 and abs(a.real - round(a.real)) < 1e-14:
        return _whittaker_polynomial(-round(a.real), mu, y)
    n = max(0, math.ceil(kappa.real - mu.real))
    k0 = kappa - n
    if n == 0:
        return _whittaker_integral(kappa, mu, y)
    w_prev = _whittaker_integral(k0 - 1, mu, y)
    w_cur = _whittaker_integral(k0, mu, y)
    k = k0
    for _ in range(n):
        w_prev, w_cur = w_cur, (y - 2 * k) * w_cur - ((k - 0.5) ** 2 - mu**2) * w_prev
        k += 1
    return w_cur


# zeta pieces ------------------------------------------------------------------

@dataclass(frozen=True)
class ZetaParams:
    l: int
    n: int
    D: int
    s: complex
    r: complex
    c1: complex = 1.0

    def __post_init__(self):
        if self.l <= 0 or self.l % 2:
            raise ValueError("l must be a positive even integer")
        if self.n not in (3, 5, 7, 9):
            raise ValueError("n must be one of 3, 5, 7, 9")
        if self.D <= 0 or self.D % 4 not in (0, 3):
            raise ValueError("D must be positive with D = 0 or 3 mod 4")
        if self.l < self.n:
            raise ValueError("need l >= n")


def ckj_indices(n: int) -> list[tuple[int, int]]:
    return [(k, j) for j in range((n - 1) // 4 + 1) for k in range(2 * j, (n - 1) // 2 + 1)]


@dataclass
class CkjTable:
    """Coefficients c_{k,j} of B_{l,l}(lam, zeta) e^{4 pi lam x} in lam^{l-k} x^{k-2j}."""

    l: int
    n: int
    coeffs: dict[tuple[int, int], float] = field(default_factory=dict)
    residual: float = 0.0

    def __post_init__(self):
        bad = set(self.coeffs) - set(ckj_indices(self.n))
        if bad:
            raise ValueError(f"indices {sorted(bad)} outside the allowed range")

    def evaluate(self, lam, x) -> np.ndarray:
        lam, x = np.asarray(lam, dtype=float), np.asarray(x, dtype=float)
        return sum(c * lam ** (self.l - k) * x ** (k - 2 * j) for (k, j), c in self.coeffs.items())

    def scaled(self, factor: float) -> "CkjTable":
        return CkjTable(self.l, self.n, {kj: factor * c for kj, c in self.coeffs.items()}, self.residual)

    def relative_difference(self, other: "CkjTable") -> float:
        keys = set(self.coeffs) | set(other.coeffs)
        num = max(abs(self.coeffs.get(k, 0.0) - other.coeffs.get(k, 0.0)) for k in keys)
        return num / max(abs(v) for v in self.coeffs.values())


def published_ckj(l: int, n: int) -> CkjTable:
    """Coefficients obtained by expanding the printed closed forms of B_{l,l}."""
    e = 8 * np.pi
    if n == 3:
        c = {(0, 0): 4 * e, (1, 0): 8 * (l - 3)}
    elif n == 5:
        f = 4 / 15
        c = {(0, 0): f * 2 * e**2, (1, 0): -f * 8 * (l - 4) * e,
             (2, 0): f * 12 * (l - 4) * (l - 5), (2, 1): -f * 4 * (l - 4) * (l - 5)}
    elif n == 7:
        f = 8 / 35
        a, b, cc = l - 5, l - 6, l - 7
        c = {(0, 0): -f * 2 * e**3, (1, 0): f * 12 * a * e**2, (2, 0): -f * 36 * a * b * e,
             (3, 0): f * 40 * a * b * cc, (2, 1): f * 12 * a * b * e, (3, 1): -f * 24 * a * b * cc}
    elif n == 9:
        f = 16 / 315
        a, b, cc, d = l - 6, l - 7, l - 8, l - 9
        c = {(0, 0): f * 8 * e**4, (1, 0): -f * 64 * a * e**3, (2, 0): f * 288 * a * b * e**2,
             (3, 0): -f * 640 * a * b * cc * e, (4, 0): f * 560 * a * b * cc * d,
             (2, 1): -f * 96 * a * b * e**2, (3, 1): f * 384 * a * b * cc * e,
             (4, 1): -f * 480 * a * b * cc * d, (4, 2): f * 48 * a * b * cc * d}
    else:
        raise ValueError("n must be one of 3, 5, 7, 9")
    return CkjTable(l, n, {k: float(v) for k, v in c.items()})


def extract_ckj(l: int, n: int, tol: float = 1e-7, zeta=None, lam=None) -> CkjTable:
    """Least-squares fit of the ladder output B_{l,l}(h(lam, zeta, 0, 0)) e^{4 pi lam x}."""
    if n not in (3, 5, 7, 9):
        raise ValueError("n must be one of 3, 5, 7, 9")
    zeta = np.linspace(1.1, 2.2, 6) if zeta is None else np.asarray(zeta, dtype=float)
    lam = np.linspace(0.1, 1.0, 5) if lam is None else np.asarray(lam, dtype=float)
    top = bn.ladder_top(l, l - (n - 1), 0, 0.0, zeta, check=False)
    vals = top.values(lam)
    Z, L = np.meshgrid(zeta, lam, indexing="ij")
    x = (Z**2 + Z**-2) / 2
    target = (vals * np.exp(4 * np.pi * L * x)).ravel()
    idx = ckj_indices(n)
    cols = np.stack([(L ** (l - k) * x ** (k - 2 * j)).ravel() for k, j in idx], axis=1)
    scale = np.abs(cols).max(axis=0)
    coef, *_ = np.linalg.lstsq(cols / scale, target, rcond=None)
    coef = coef / scale
    resid = float(np.linalg.norm(cols @ coef - target) / np.linalg.norm(target))
    if resid > tol:
        raise ShapeMismatch(f"fit residual {resid:.3g} exceeds {tol:.1g}")
    if np.abs(coef.imag).max() > 1e-8 * np.abs(coef).max():
        raise ShapeMismatch("fitted coefficients are not real")
    return CkjTable(l, n, {kj: float(c.real) for kj, c in zip(idx, coef)}, resid)


def q_kj(s: complex, k: int, j: int, l: int, r: complex) -> complex:
    """The rational factor relating the (k, j) integral to the (0, 0) Gamma quotient."""
    den = 6 * s + l - 2 * k - 1 + 2 * j
    if abs(den) < 1e-14:
        raise PoleOfQ("6s + l - 2k - 1 + 2j vanishes")
    out = (2.0 ** (3 * k)) * np.pi**k / den
    for t in range(1, k + 1):
        d = (3 * s + l - t - 1 + 0.5j * r) * (3 * s + l - t - 1 - 0.5j * r)
        if abs(d) < 1e-14:
            raise PoleOfQ("product denominator vanishes")
        out *= (3 * s + l / 2 - 0.5 - t) / d
    return complex(out)


def _gamma_quotient(s: complex, l: int, k: int, r: complex) -> complex:
    num = gamma_complex(3 * s + l - k - 1 + 0.5j * r) * gamma_complex(3 * s + l - k - 1 - 0.5j * r)
    return complex(num * rgamma(3 * s + l / 2 - k - 0.5))


def z_kj_closed(s: complex, k: int, j: int, p: ZetaParams | dict) -> complex:
    p = _params(p)
    den = 6 * s + p.l - 2 * k - 1 + 2 * j
    if abs(den) < 1e-14:
        raise PoleOfQ("6s + l - 2k - 1 + 2j vanishes")
    pref = p.c1 * 2.0 ** (-6 * s + 3 - 3 * p.l + 3 * k) * p.D ** (-3 * s) \
        * np.pi ** (-3 * s - p.l + k + 2.5) / den
    return complex(pref * _gamma_quotient(s, p.l, k, p.r))


def _assembly_factor(s: complex, p: ZetaParams) -> complex:
    return complex(p.c1 * 2.0 ** (-6 * s + 3 - 3 * p.l) * p.D ** (-3 * s)
                   * np.pi ** (-3 * s - p.l + 2.5) * _gamma_quotient(s, p.l, 0, p.r))


def z_infinity(s: complex, p: ZetaParams | dict, table: CkjTable) -> complex:
    p = _params(p)
    total = sum(c * q_kj(s, k, j, p.l, p.r) for (k, j), c in table.coeffs.items())
    return complex(total * _assembly_factor(s, p))


def _params(p) -> ZetaParams:
    if isinstance(p, ZetaParams):
        return p
    p = dict(p)
    p.setdefault("n", 3)
    return ZetaParams(**p)


@dataclass(frozen=True)
class QuadratureResult:
    value: complex
    estimate_error: float
    level: int


def z_kj_quadrature(s: complex, k: int, j: int, p: ZetaParams | dict,
                    cfg: QuadratureConfig = DEFAULT.quadrature, detail: bool = False):
    """Double quadrature over lam in (0, inf) and x in (1, inf).

    Both directions use exp-sinh rules; the lam nodes at each x are placed at
    t / (4 pi sqrt(D) x) so the Whittaker factor is sampled on one t grid.
    The step is halved until successive estimates agree to ``cfg.rel_tol``.
    """
    p = _params(p)
    sq = math.sqrt(p.D)
    x_exp = -3 * (s + 0.5) + k - 2 * j
    lam_exp = 3 * (s + 0.5) + p.l - k - 4
    if (6 * s + p.l - 2 * k - 1 + 2 * j).real <= 0 or (lam_exp + 0.5).real <= -1:
        raise DivergentRegion("parameters outside the convergence region of the double integral")
    c = 4 * np.pi * sq
    prev = None
    for level in range(cfg.min_level, cfg.max_level + 1):
        h = 2.0 ** (-level) * 4
        t, wt = exp_sinh_rule(h, -4.0, 3.6)
        t, wt = t[t < 900], wt[t < 900]
        wv = whittaker_w(p.l / 2, 0.5j * p.r, t) * np.exp(-t / 2)
        u, wu = exp_sinh_rule(h, -4.0, 4.0)
        x = 1.0 + u
        lam = t[None, :] / (c * x[:, None])
        jac = (wu / (c * x))[:, None] * wt[None, :]
        integrand = lam ** lam_exp * (x ** x_exp)[:, None] * wv[None, :]
        total = np.sum(integrand * jac)
        val = np.pi * (sq / 2) ** (p.l - k) * p.c1 * p.D ** (-1.5 * (s + 0.5)) * total
        if prev is not None:
            err = abs(val - prev) / max(abs(val), 1e-300)
            if err < cfg.rel_tol:
                res = QuadratureResult(complex(val), float(err), level)
                return res if detail else res.value
        prev = val
    raise QuadratureNotConverged(f"no agreement to {cfg.rel_tol:g} by level {cfg.max_level}")


# convergence of integrals over R\GSp(4) ------------------------------------------

def convergence_predicate(alpha: float, beta: int, gamma: int, delta: float) -> bool:
    """Convergence of the model integral of zeta^a (z2-z-2)^b (z2+z-2)^c lam^d e^{-4 pi lam (z2+z-2)}."""
    return bool(delta > -1 and alpha + 2 * (beta + gamma) < 2 * delta + 1)


@dataclass(frozen=True)
class PartialIntegralCurve:
    """Partial integrals on growing cutoffs 2**k and the verdict read from them."""

    cutoffs: np.ndarray
    values: np.ndarray

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    @property
    def converges(self) -> bool:
        d = np.abs(self.increments[-4:])
        if d[-1] <= 1e-13 * abs(self.values[-1]):
            return True
        ratios = d[1:] / d[:-1]
        return bool(np.all(ratios < 0.85))


def _gl_panels(edges: np.ndarray, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def partial_integral_curve(integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
                           delta: float, n_steps: int = 12, exp_rate: float = 4 * np.pi
                           ) -> PartialIntegralCurve:
    """Partial integrals of F(lam, zeta) over lam in (1/T, inf), zeta in (1, Z) with T = Z = 2**k.

    The lam nodes at each zeta sit at u / (zeta^2 + zeta^-2) with u on a log grid,
    so the exponential factor is resolved for every zeta.  The lower lam cutoff
    only matters when delta <= -1; otherwise it is fixed far below the bulk.
    """
    cutoffs = 2.0 ** np.arange(1, n_steps + 1)
    values = []
    log_u_hi = math.log(60.0 / exp_rate)
    for K in cutoffs:
        lo = -math.log(K) if delta <= -1 else -60.0 / max(delta + 1, 0.05)
        u_edges = np.linspace(lo, log_u_hi, int(max(8, (log_u_hi - lo) * 2)) + 1)
        lu, wu = _gl_panels(u_edges)
        z_edges = np.linspace(0.0, math.log(K), int(max(4, 4 * math.log(K))) + 1)
        lz, wz = _gl_panels(z_edges)
        zeta = np.exp(lz)
        zp = zeta**2 + zeta**-2
        u = np.exp(lu)
        lam = u[None, :] / zp[:, None]
        if delta <= -1:
            keep = lam >= 1.0 / K
        else:
            keep = np.ones_like(lam, dtype=bool)
        vals = np.where(keep, integrand(lam, np.broadcast_to(zeta[:, None], lam.shape)), 0.0)
        w = (wz * zeta)[:, None] * (wu * u)[None, :] / zp[:, None]
        values.append(float(np.sum(vals * w).real))
    return PartialIntegralCurve(cutoffs, np.array(values))


def model_integral_curve(alpha: float, beta: int, gamma: int, delta: float, n_steps: int = 12
                         ) -> PartialIntegralCurve:
    def f(lam, zeta):
        z2 = zeta**2
        return zeta**alpha * (z2 - 1 / z2) ** beta * (z2 + 1 / z2) ** gamma * lam**delta \
            * np.exp(-4 * np.pi * lam * (z2 + 1 / z2))

    return partial_integral_curve(f, delta, n_steps)


@dataclass(frozen=True)
class LpReport:
    convergent: bool
    exponents: tuple[float, int, int, float]
    curve: PartialIntegralCurve

    @property
    def numeric_convergent(self) -> bool:
        return self.curve.converges

    @property
    def label(self) -> str:
        return "convergent" if self.convergent else "divergent"


LP_ANGLES = ((0.3, 0.2), (-0.5, 0.35), (0.9, -0.15), (0.1, -0.6))


def lp_exponents(l: int, lp: int, p: float) -> tuple[float, int, int, float]:
    """Reduced exponents of |B0|^p times the measure, for the model integral."""
    return (p * (l - lp) - 1, 1, 0, p * (l + lp) / 2 - 4)


def lp_norm_check(l: int, lp: int, m: int, p: float, s: complex = 0.0, n_steps: int = 12) -> LpReport:
    """Classify the integral of |B0|^p over R\\GSp(4) and attach a numeric growth curve."""
    if abs(np.real(s)) > 0:
        raise ValueError("s must be purely imaginary")
    exps = lp_exponents(l, lp, p)
    delta = exps[3]

    def f(lam, zeta):
        acc = 0.0
        for phi1, phi2 in LP_ANGLES:
            acc = acc + np.abs(bn.B0_coords((lam, zeta, phi1, phi2), l, lp, m, s)) ** p
        return acc / len(LP_ANGLES) * (zeta - zeta**-3) / lam**4

    curve = partial_integral_curve(f, delta, n_steps, exp_rate=2 * np.pi * p)
    return LpReport(convergence_predicate(*exps), exps, curve)


# scalar products ------------------------------------------------------------------

@dataclass(frozen=True)
class BesselSpec:
    """Word-applied lowest weight vector: word . B0 with B0 of weight (l, lp)."""

    l: int
    lp: int
    m: int = 0
    s: complex = 0.0
    word: tuple[str, ...] = ()


class Divergent:
    """Marker returned when the scalar product is not absolutely convergent."""

    def __repr__(self) -> str:
        return "Divergent"


DIVERGENT = Divergent()


def _spec_values(spec: BesselSpec, lam: np.ndarray, zeta: np.ndarray) -> np.ndarray:
    order = max(1, len(spec.word))
    F0 = bn.reduced_B0(spec.l, spec.lp, spec.m, spec.s, zeta, np.zeros_like(zeta),
                       np.zeros_like(zeta), order)
    F = bn.apply_word(spec.word, F0, spec.s, spec.m)
    return F.values_rows(lam)


def scalar_product(b1: BesselSpec, b2: BesselSpec, rel_tol: float = 1e-8, max_doublings: int = 12):
    """Integral of B1 conj(B2) (zeta - zeta^-3) / lam^4 over lam > 0, zeta > 1 at k = 1.

    Returns DIVERGENT when lp1 + lp2 <= 4.
    """
    if b1.lp + b2.lp <= 4:
        return DIVERGENT
    x, w = np.polynomial.legendre.leggauss(20)
    prev = None
    for K in range(2, max_doublings + 1):
        z_edges = np.linspace(0.0, K * math.log(2), 6 * K + 1)
        a, b = z_edges[:-1, None], z_edges[1:, None]
        lz = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        wz = (0.5 * (b - a) * w).ravel()
        zeta = np.exp(lz)
        zp = zeta**2 + zeta**-2
        u_edges = np.linspace(math.log(1e-6), math.log(12.0), 25)
        au, bu = u_edges[:-1, None], u_edges[1:, None]
        lu = (0.5 * (bu - au) * x + 0.5 * (au + bu)).ravel()
        wu = (0.5 * (bu - au) * w).ravel()
        u = np.exp(lu)
        lam = u[None, :] / zp[:, None]
        v1 = _spec_values(b1, lam, zeta)
        v2 = _spec_values(b2, lam, zeta)
        dens = (zeta - zeta**-3)[:, None] / lam**4
        weights = (wz * zeta)[:, None] * (wu * u)[None, :] / zp[:, None]
        val = complex(np.sum(v1 * np.conj(v2) * dens * weights))
        if prev is not None and abs(val - prev) <= rel_tol * max(abs(val), 1e-300):
            return val
        prev = val
    raise QuadratureNotConverged("scalar product did not settle as the zeta range grew")
