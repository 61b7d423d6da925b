"""Matrix layer for GSp(4,R): multiplier, Siegel action, chart elements, cosets.

Every function that builds or reads matrices is written against a small
duck-typed interface (indexing, ``@``, ``+``, ``*``), so the same code runs on
numpy arrays and on :class:`~gsp4bessel.jets.Jet` matrices.  That is how the
Lie derivatives of group functions and the Newton Jacobian are obtained.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
from scipy.linalg import expm as _expm

from . import jets as jx
from .config import DEFAULT, Tolerances
from .errors import NoConvergence, NotSimilitude, SingularAutomorphyFactor, WrongComponent
from .jets import Jet, stack_matrix

Flavor = Literal["nonsplit", "split"]

J4 = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]], dtype=float)
I_POINT = 1j * np.eye(2)
Z_PRIME = np.diag([-1j, 1j])
T0 = np.array([[1.0, 1.0], [1.0, -1.0]])


@dataclass(frozen=True)
class ChartPoint:
    flavor: Flavor
    lam: float
    zeta: float
    phi1: float = 0.0
    phi2: float = 0.0

    def __post_init__(self):
        if self.flavor not in ("nonsplit", "split"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.lam == 0:
            raise ValueError("lambda must be nonzero")
        if self.flavor == "nonsplit" and not self.zeta > 0:
            raise ValueError("non-split chart needs zeta > 0")

    @property
    def coords(self) -> tuple[float, float, float, float]:
        return (self.lam, self.zeta, self.phi1, self.phi2)


@dataclass(frozen=True)
class CosetCoords:
    """Eleven coset parameters.

    ``torus`` is ``(gamma, delta)`` in the non-split flavor and ``(a, b)`` in the
    split flavor.
    """

    flavor: Flavor
    torus: tuple[float, float]
    x: float
    y: float
    z: float
    chart: ChartPoint
    phi3: float
    phi4: float

    def as_vector(self) -> np.ndarray:
        c = self.chart
        return np.array([*self.torus, self.x, self.y, self.z, c.lam, c.zeta, c.phi1, c.phi2,
                         self.phi3, self.phi4], dtype=float)

    @classmethod
    def from_vector(cls, flavor: Flavor, v) -> "CosetCoords":
        v = [float(t) for t in v]
        return cls(flavor, (v[0], v[1]), v[2], v[3], v[4],
                   ChartPoint(flavor, v[5], v[6], v[7], v[8]), v[9], v[10])


@dataclass(frozen=True)
class GroupElement:
    mat: np.ndarray
    mu2: float

    @classmethod
    def from_matrix(cls, g, tol: float = 1e-12) -> "GroupElement":
        g = np.asarray(g, dtype=float)
        return cls(g, multiplier(g, tol=tol))


def _arr(g):
    return g.mat if isinstance(g, GroupElement) else g


# scalar building blocks --------------------------------------------------

def multiplier(g, tol: float | None = 1e-12):
    """Similitude factor read from one entry of g^T J g.

    With ``tol`` set (and a numeric input), the full relation is checked.
    """
    g = _arr(g)
    mu = g[0, 0] * g[2, 2] + g[1, 0] * g[3, 2] - g[2, 0] * g[0, 2] - g[3, 0] * g[1, 2]
    if tol is not None and not isinstance(g, Jet):
        g = np.asarray(g)
        resid = np.abs(g.T @ J4 @ g - mu * J4).max()
        if resid > tol * max(1.0, np.sum(np.abs(g) ** 2)):
            raise NotSimilitude(f"residual {resid:.3g} of the similitude relation")
        mu = np.real_if_close(mu)
    return mu


def is_similitude(g, tol: float = 1e-12) -> bool:
    try:
        multiplier(g, tol=tol)
    except NotSimilitude:
        return False
    return True


def _blocks(g):
    g = _arr(g)
    return g[:2, :2], g[:2, 2:], g[2:, :2], g[2:, 2:]


def det2(m):
    return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]


def adj2(m):
    return stack_matrix([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])


def trace2(m):
    return m[0, 0] + m[1, 1]


def j_factor(g, z=I_POINT):
    """Automorphy factor CZ + D."""
    _, _, c, d = _blocks(g)
    return c @ np.asarray(z, dtype=complex) + d


def siegel_action(g, z=I_POINT, tol: float = 1e-14):
    """(AZ + B)(CZ + D)^{-1}."""
    a, b, c, d = _blocks(g)
    z = np.asarray(z, dtype=complex)
    num = a @ z + b
    den = c @ z + d
    dt = det2(den)
    if np.any(np.abs(jx.value_of(dt)) <= tol):
        raise SingularAutomorphyFactor("det(CZ + D) vanishes")
    return (num @ adj2(den)) / dt


def w_poly(h):
    """The polynomial w in adjugate form, free of removable singularities."""
    a, b, c, d = _blocks(h)
    jz = c @ Z_PRIME + d
    ji = c @ I_POINT + d
    t1 = trace2((a @ Z_PRIME + b) @ adj2(jz))
    t2 = trace2((a @ I_POINT + b) @ adj2(ji))
    return 1j * (det2(ji) * t1 - det2(jz) * t2)


def group_norm(g) -> float:
    g = np.asarray(_arr(g), dtype=float)
    mu = multiplier(g, tol=None)
    return float(np.sqrt(mu ** -2.0 + np.sum(g * g)))


def expm(x) -> np.ndarray:
    return _expm(np.asarray(x))


# coordinate elements ------------------------------------------------------

def rotation(i: int, phi):
    c, s = jx.cos(phi), jx.sin(phi)
    one, zero = 1.0, 0.0
    if i == 1:
        rows = [[c, s, zero, zero], [-s, c, zero, zero], [zero, zero, c, s], [zero, zero, -s, c]]
    elif i == 2:
        rows = [[c, zero, zero, s], [zero, c, s, zero], [zero, -s, c, zero], [-s, zero, zero, c]]
    elif i == 3:
        rows = [[c, zero, s, zero], [zero, one, zero, zero], [-s, zero, c, zero], [zero, zero, zero, one]]
    elif i == 4:
        rows = [[one, zero, zero, zero], [zero, c, zero, s], [zero, zero, one, zero], [zero, -s, zero, c]]
    else:
        raise ValueError("rotation index must be 1..4")
    return _real(stack_matrix(rows))


def _real(m):
    return m.real if isinstance(m, np.ndarray) and np.iscomplexobj(m) else m


def block_diag(a, d):
    zero = 0.0
    return stack_matrix([
        [a[0, 0], a[0, 1], zero, zero],
        [a[1, 0], a[1, 1], zero, zero],
        [zero, zero, d[0, 0], d[0, 1]],
        [zero, zero, d[1, 0], d[1, 1]],
    ])


def unipotent(x, y, z):
    one, zero = 1.0, 0.0
    return _real(stack_matrix([
        [one, zero, x, y], [zero, one, y, z], [zero, zero, one, zero], [zero, zero, zero, one]
    ]))


def torus_nonsplit(gamma, delta):
    """diag(G, det(G) G^{-T}) with G = gamma * [[cos, sin], [-sin, cos]]."""
    c, s = jx.cos(delta), jx.sin(delta)
    g = stack_matrix([[gamma * c, gamma * s], [-gamma * s, gamma * c]])
    # det(G) G^{-T} = gamma^2 R(-delta)^T = G for a scaled rotation
    return _real(block_diag(g, g))


def torus_split(a, b):
    """diag(g, det(g) g^{-T}) with g = t0 diag(a, b) t0^{-1}."""
    p, q = 0.5 * (a + b), 0.5 * (a - b)
    g = stack_matrix([[p, q], [q, p]])
    ab = a * b
    ginv_t = stack_matrix([[p / ab, -q / ab], [-q / ab, p / ab]])
    return _real(block_diag(g, ab * ginv_t))


def h_diag_nonsplit(lam, zeta):
    zero = 0.0
    return _real(stack_matrix([
        [lam * zeta, zero, zero, zero], [zero, lam / zeta, zero, zero],
        [zero, zero, 1.0 / zeta, zero], [zero, zero, zero, zeta],
    ]))


def h_diag_split(lam, zeta):
    """diag(lam t0 n(zeta), -t0 [[1, 0], [-zeta, 1]])."""
    upper = stack_matrix([[lam, lam * (zeta + 1.0)], [lam, lam * (zeta - 1.0)]])
    lower = stack_matrix([[zeta - 1.0, -1.0], [-zeta - 1.0, 1.0]])
    return _real(block_diag(upper, lower))


def chart_element(p: ChartPoint):
    diag = h_diag_nonsplit if p.flavor == "nonsplit" else h_diag_split
    return diag(p.lam, p.zeta) @ rotation(1, p.phi1) @ rotation(2, p.phi2)


def chart_element_coords(flavor: Flavor, lam, zeta, phi1, phi2):
    """Chart element from raw (possibly jet) coordinates."""
    diag = h_diag_nonsplit if flavor == "nonsplit" else h_diag_split
    return diag(lam, zeta) @ rotation(1, phi1) @ rotation(2, phi2)


def reassemble_vector(flavor: Flavor, v):
    """Matrix t u h r3 r4 (non-split) or u t h r3 r4 (split) from eleven parameters."""
    t1, t2, x, y, z, lam, zeta, p1, p2, p3, p4 = v
    h = chart_element_coords(flavor, lam, zeta, p1, p2)
    k = rotation(3, p3) @ rotation(4, p4)
    if flavor == "nonsplit":
        return torus_nonsplit(t1, t2) @ unipotent(x, y, z) @ h @ k
    return unipotent(x, y, z) @ torus_split(t1, t2) @ h @ k


def reassemble(c: CosetCoords) -> np.ndarray:
    return np.asarray(reassemble_vector(c.flavor, c.as_vector()), dtype=float)


# coset decomposition ------------------------------------------------------

def _k_angles(k: np.ndarray, guess: tuple[float, float] | None) -> tuple[float, float, float, float]:
    """Angles with k = r1 r2 r3 r4, read from the unitary image A + iB."""
    u = k[:2, :2] + 1j * k[:2, 2:]
    ab = u[0, 1] * np.conj(u[1, 1])
    diff = abs(u[1, 1]) ** 2 - abs(u[0, 1]) ** 2
    two_phi1 = np.arctan2(2 * ab.real, diff)
    cos2 = np.hypot(diff, 2 * ab.real)
    two_phi2 = np.arctan2(2 * ab.imag, cos2)
    phi1, phi2 = 0.5 * two_phi1, 0.5 * two_phi2
    if guess is not None:
        phi1 += np.pi * np.round((guess[0] - phi1) / np.pi)
    if cos2 < 1e-12 and guess is not None:
        phi1 = guess[0]
    c1, s1, c2, s2 = np.cos(phi1), np.sin(phi1), np.cos(phi2), np.sin(phi2)
    a = c1 * c2 + 1j * s1 * s2
    b = s1 * c2 + 1j * c1 * s2
    col0 = np.array([a, -np.conj(b)])
    col1 = np.array([b, np.conj(a)])
    phi3 = float(np.angle(np.vdot(col0, u[:, 0])))
    phi4 = float(np.angle(np.vdot(col1, u[:, 1])))
    return float(phi1), float(phi2), phi3, phi4


def _nearest(angle: float, target: float, period: float) -> float:
    return angle + period * np.round((target - angle) / period)


def _seed_nonsplit(g: np.ndarray, guess: CosetCoords | None) -> np.ndarray:
    zg = siegel_action(g, I_POINT)
    jd = det2(j_factor(g, I_POINT))
    gamma = float(np.sqrt(abs(jd)))
    w, v = np.linalg.eigh(zg.imag)
    lam = float(np.sqrt(w[0] * w[1]))
    big = 0 if guess is not None and guess.chart.zeta < 1 else 1
    zeta = float((w[big] / w[1 - big]) ** 0.25)
    delta = float(np.arctan2(-v[1, big], v[0, big]))
    target = guess.torus[1] if guess is not None else 0.0
    if guess is not None and abs(w[1] - w[0]) < 1e-10 * w[1]:
        delta = target
    delta = float(_nearest(delta, target, np.pi))
    rot = np.array([[np.cos(delta), np.sin(delta)], [-np.sin(delta), np.cos(delta)]])
    xm = rot.T @ zg.real @ rot
    x, y, z = xm[0, 0], 0.5 * (xm[0, 1] + xm[1, 0]), xm[1, 1]
    left = torus_nonsplit(gamma, delta) @ unipotent(x, y, z) @ h_diag_nonsplit(lam, zeta)
    k = np.linalg.solve(left, g)
    angles = _k_angles(k, None if guess is None else (guess.chart.phi1, guess.chart.phi2))
    return np.array([gamma, delta, x, y, z, lam, zeta, *angles])


def _seed_split(g: np.ndarray, mu: float, guess: CosetCoords | None) -> np.ndarray:
    zg = siegel_action(g, I_POINT)
    t0inv = T0 / 2.0
    m = t0inv @ zg.imag @ t0inv
    kk = float(np.sign(m[1, 1]) * np.sqrt(max(np.linalg.det(m), 0.0)))
    a = float(np.sqrt(mu / (4.0 * m[1, 1])))
    b = float(m[1, 1] / kk * a)
    zeta = float(m[0, 1] / kk)
    lam = -2.0 * kk
    x, y, z = zg.real[0, 0], 0.5 * (zg.real[0, 1] + zg.real[1, 0]), zg.real[1, 1]
    left = unipotent(x, y, z) @ torus_split(a, b) @ h_diag_split(lam, zeta)
    k = np.linalg.solve(left, g)
    angles = _k_angles(k, None if guess is None else (guess.chart.phi1, guess.chart.phi2))
    return np.array([a, b, x, y, z, lam, zeta, *angles])


def _rel_error(flavor: Flavor, v, g: np.ndarray) -> float:
    r = np.asarray(reassemble_vector(flavor, v), dtype=float) - g
    return float(np.linalg.norm(r) / np.linalg.norm(g))


def _gauss_newton(flavor: Flavor, v0: np.ndarray, g: np.ndarray, tol: Tolerances) -> np.ndarray:
    v = v0.copy()
    err = _rel_error(flavor, v, g)
    space = jx.get_space(11, 1)
    for _ in range(tol.newton_max_iter):
        if err < 1e-14:
            break
        var = [Jet.variable(space, i, v[i]) for i in range(11)]
        m = reassemble_vector(flavor, var)
        resid = (m.value.real - g).ravel()
        jac = np.stack([m.coefficient(tuple(int(j == i) for j in range(11))).real.ravel()
                        for i in range(11)], axis=1)
        step, *_ = np.linalg.lstsq(jac, -resid, rcond=None)
        scale = 1.0
        for _ in range(30):
            trial = v + scale * step
            new = _rel_error(flavor, trial, g)
            if new < err:
                break
            scale *= tol.newton_damping
        else:
            break
        v, err = trial, new
    if err > tol.decompose:
        raise NoConvergence(f"coset decomposition stalled at relative error {err:.3g}")
    return v


def coset_decompose(g, flavor: Flavor = "nonsplit", guess: CosetCoords | None = None,
                    tol: Tolerances = DEFAULT.tol) -> CosetCoords:
    """Recover the eleven coset parameters of ``g``.

    Seeds are closed form: torus, unipotent, lambda and zeta come from the
    Siegel point g<iI>, the angles from the unitary image of the compact
    factor.  A damped Gauss-Newton pass with a jet Jacobian polishes them.
    ``guess`` only selects branches (angles mod pi).
    """
    g = np.asarray(_arr(g), dtype=float)
    mu = float(multiplier(g, tol=1e-10))
    if flavor == "nonsplit":
        if mu <= 0:
            raise WrongComponent("non-split decomposition needs a positive multiplier")
        v = _seed_nonsplit(g, guess)
    else:
        if mu == 0:
            raise WrongComponent("zero multiplier")
        v = _seed_split(g, mu, guess)
    v = _gauss_newton(flavor, v, g, tol)
    return CosetCoords.from_vector(flavor, v)


# sampling -----------------------------------------------------------------

def random_sp4(rng: np.random.Generator, spread: float = 0.5) -> np.ndarray:
    from .lie_algebra import REAL_TAGS, basis_matrix

    x = sum(rng.normal(scale=spread) * basis_matrix(t).real for t in REAL_TAGS)
    return expm(x)


def random_gsp4(rng: np.random.Generator, spread: float = 0.5) -> np.ndarray:
    """Random element with positive multiplier."""
    return np.exp(rng.normal(scale=spread)) * random_sp4(rng, spread)


def with_chart(c: CosetCoords, **kw) -> CosetCoords:
    return replace(c, chart=replace(c.chart, **kw))
