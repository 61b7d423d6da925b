"""Truncated multivariate Taylor jets with numpy batch dimensions.

A :class:`Jet` stores the Taylor coefficients of a complex function of
``nvars`` variables up to a total degree.  Monomials are sorted by degree,
so the space of order ``d - 1`` is a prefix of the space of order ``d``; mixing
jets of different orders truncates to the smaller one.

In multidual mode every variable appears with exponent at most one.  That is
the cheap structure needed for iterated first-order Lie derivatives.

:class:`LambdaPoly` is a finite Laurent polynomial in one extra variable whose
coefficients are jets.  The ladder uses it to keep the dependence on the
radial coordinate exact.
"""

from __future__ import annotations

import itertools
import math
from contextlib import contextmanager
from contextvars import ContextVar
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import sparse

from .errors import SingularConstantTerm

_CHUNK = 4_000_000

_PRECISIONS = {"double": (np.float64, np.complex128), "extended": (np.longdouble, np.clongdouble)}
_active: ContextVar[str] = ContextVar("jet_precision", default="double")


def real_dtype():
    return _PRECISIONS[_active.get()][0]


def complex_dtype():
    return _PRECISIONS[_active.get()][1]


@contextmanager
def precision(name: str):
    """Run jet arithmetic in ``"double"`` or ``"extended"`` (x87 long double) precision."""
    if name not in _PRECISIONS:
        raise ValueError(f"precision must be one of {sorted(_PRECISIONS)}")
    token = _active.set(name)
    try:
        yield
    finally:
        _active.reset(token)


def _monomials(nvars: int, order: int, multidual: bool) -> list[tuple[int, ...]]:
    cap = 1 if multidual else order
    out: list[tuple[int, ...]] = []
    for deg in range(order + 1):
        block = [
            e
            for e in itertools.product(range(min(cap, deg) + 1), repeat=nvars)
            if sum(e) == deg
        ]
        block.sort(reverse=True)
        out.extend(block)
    return out


class JetSpace:
    """Index tables for jets in ``nvars`` variables truncated at ``order``."""

    def __init__(self, nvars: int, order: int, multidual: bool = False):
        if nvars < 0 or order < 0:
            raise ValueError("nvars and order must be non-negative")
        self.nvars = nvars
        self.order = order
        self.multidual = multidual
        self.monomials = _monomials(nvars, order, multidual)
        self.size = len(self.monomials)
        self.index = {e: i for i, e in enumerate(self.monomials)}
        self.degrees = np.array([sum(e) for e in self.monomials], dtype=int)
        self._mul = None
        self._partials: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def __repr__(self) -> str:
        kind = "multidual" if self.multidual else "dense"
        return f"JetSpace(nvars={self.nvars}, order={self.order}, {kind})"

    def lower(self, order: int) -> "JetSpace":
        return get_space(self.nvars, min(order, self.order), self.multidual)

    def prefix(self, order: int) -> int:
        """Number of monomials of degree at most ``order``."""
        return int(np.searchsorted(self.degrees, order, side="right"))

    @property
    def mul_tables(self):
        if self._mul is None:
            left, right, target = [], [], []
            mons = self.monomials
            for i, a in enumerate(mons):
                da = sum(a)
                for j, b in enumerate(mons):
                    if da + sum(b) > self.order:
                        break
                    k = self.index.get(tuple(x + y for x, y in zip(a, b)))
                    if k is not None:
                        left.append(i)
                        right.append(j)
                        target.append(k)
            left = np.array(left, dtype=np.intp)
            right = np.array(right, dtype=np.intp)
            target = np.array(target, dtype=np.intp)
            scatter = sparse.csr_matrix(
                (np.ones(len(target)), (target, np.arange(len(target)))),
                shape=(self.size, len(target)),
            )
            self._mul = (left, right, scatter)
        return self._mul

    def partial_tables(self, var: int) -> tuple[np.ndarray, np.ndarray]:
        """Source indices and factors for d/d(var) into the order-1 space."""
        if var not in self._partials:
            low = self.lower(max(self.order - 1, 0))
            src, fac = [], []
            for e in low.monomials:
                up = list(e)
                up[var] += 1
                k = self.index.get(tuple(up))
                if k is None:
                    src.append(0)
                    fac.append(0.0)
                else:
                    src.append(k)
                    fac.append(float(up[var]))
            self._partials[var] = (np.array(src, dtype=np.intp), np.array(fac))
        return self._partials[var]


@lru_cache(maxsize=None)
def get_space(nvars: int, order: int, multidual: bool = False) -> JetSpace:
    return JetSpace(nvars, order, multidual)


def _scatter(space: JetSpace, prod: np.ndarray) -> np.ndarray:
    _, _, scatter = space.mul_tables
    batch = prod.shape[:-1]
    flat = prod.reshape(-1, prod.shape[-1])
    rows = max(1, _CHUNK // max(1, prod.shape[-1]))
    out = np.empty((flat.shape[0], space.size), dtype=complex_dtype())
    for start in range(0, flat.shape[0], rows):
        block = flat[start : start + rows]
        out[start : start + rows] = (scatter @ block.T).T
    return out.reshape(batch + (space.size,))


class Jet:
    """Batch of truncated Taylor series; ``coeffs[..., k]`` multiplies monomial k."""

    __array_ufunc__ = None
    __array_priority__ = 1000

    def __init__(self, space: JetSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=complex_dtype())
        if coeffs.shape[-1:] != (space.size,):
            raise ValueError("coefficient axis does not match the jet space")
        self.space = space
        self.coeffs = coeffs

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=complex_dtype())
        c = np.zeros(value.shape + (space.size,), dtype=complex_dtype())
        c[..., 0] = value
        return cls(space, c)

    @classmethod
    def variable(cls, space: JetSpace, var: int, value) -> "Jet":
        out = cls.constant(space, value)
        if space.order >= 1:
            unit = tuple(1 if i == var else 0 for i in range(space.nvars))
            out.coeffs[..., space.index[unit]] = 1.0
        return out

    # basic properties ---------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def order(self) -> int:
        return self.space.order

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    @property
    def T(self) -> "Jet":
        return Jet(self.space, np.swapaxes(self.coeffs, -2, -3))

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        if not any(k is Ellipsis for k in key):
            key = key + (Ellipsis,)
        return Jet(self.space, self.coeffs[key + (slice(None),)])

    def __repr__(self) -> str:
        return f"Jet({self.space!r}, shape={self.shape})"

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        low = self.space.lower(order)
        return Jet(low, self.coeffs[..., : low.size])

    def coefficient(self, exponents: Sequence[int]) -> np.ndarray:
        """Taylor coefficient of the given monomial (not the derivative)."""
        return self.coeffs[..., self.space.index[tuple(exponents)]]

    def derivative(self, exponents: Sequence[int]) -> np.ndarray:
        """Mixed partial derivative at the expansion point."""
        scale = math.prod(math.factorial(e) for e in exponents)
        return self.coefficient(exponents) * scale

    def partial(self, var: int) -> "Jet":
        src, fac = self.space.partial_tables(var)
        low = self.space.lower(max(self.order - 1, 0))
        return Jet(low, self.coeffs[..., src] * fac)

    def sum(self, axis: int) -> "Jet":
        if axis < 0:
            axis -= 1
        return Jet(self.space, self.coeffs.sum(axis=axis))

    # arithmetic ---------------------------------------------------------
    def _align(self, other):
        if isinstance(other, Jet):
            if other.space.nvars != self.space.nvars or other.space.multidual != self.space.multidual:
                raise ValueError("incompatible jet spaces")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, None

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            return Jet(a.space, a.coeffs + b.coeffs)
        if isinstance(other, (int, float, complex, np.number, np.ndarray)):
            other = np.asarray(other, dtype=complex_dtype())
            shape = np.broadcast_shapes(self.shape, other.shape)
            c = np.broadcast_to(self.coeffs, shape + (self.space.size,)).copy()
            c[..., 0] += other
            return Jet(self.space, c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.coeffs)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, Jet) or isinstance(other, (int, float, complex, np.number, np.ndarray)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = self._align(other)
            left, right, _ = a.space.mul_tables
            prod = a.coeffs[..., left] * b.coeffs[..., right]
            return Jet(a.space, _scatter(a.space, prod))
        if isinstance(other, (int, float, complex, np.number, np.ndarray)):
            other = np.asarray(other, dtype=complex_dtype())
            return Jet(self.space, self.coeffs * other[..., None])
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, (int, float, complex, np.number, np.ndarray)):
            other = np.asarray(other, dtype=complex_dtype())
            return Jet(self.space, self.coeffs / other[..., None])
        return NotImplemented

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) or (
            isinstance(p, (float, np.floating)) and float(p).is_integer() and abs(p) < 64
        ):
            return self.ipow(int(p))
        return self.cpow(complex(p))

    def __matmul__(self, other):
        if isinstance(other, Jet):
            a = Jet(self.space, self.coeffs[..., :, :, None, :])
            b = Jet(other.space, other.coeffs[..., None, :, :, :])
            return (a * b).sum(axis=-2)
        other = np.asarray(other, dtype=complex_dtype())
        return Jet(self.space, np.einsum("...ikn,kj->...ijn", self.coeffs, other))

    def __rmatmul__(self, other):
        other = np.asarray(other, dtype=complex_dtype())
        return Jet(self.space, np.einsum("ik,...kjn->...ijn", other, self.coeffs))

    # elementary functions ----------------------------------------------
    def _series(self, coeffs: list[np.ndarray]) -> "Jet":
        """Evaluate sum_n coeffs[n] * (self - value)^n by Horner's rule."""
        nil = Jet(self.space, self.coeffs.copy())
        nil.coeffs[..., 0] = 0.0
        out = Jet.constant(self.space, np.broadcast_to(coeffs[-1], self.shape))
        for c in reversed(coeffs[:-1]):
            out = out * nil + c
        return out

    def _nil_degree(self) -> int:
        if self.space.multidual:
            return min(self.order, self.space.nvars)
        return self.order

    def ipow(self, n: int) -> "Jet":
        if n < 0:
            return self.reciprocal().ipow(-n)
        result = Jet.constant(self.space, np.ones(self.shape))
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def cpow(self, p: complex) -> "Jet":
        """Principal branch of ``self ** p``."""
        a0 = self.value
        if np.any(a0 == 0):
            raise SingularConstantTerm("complex power of a jet with zero constant term")
        coeffs = [a0**p]
        for n in range(1, self._nil_degree() + 1):
            coeffs.append(coeffs[-1] * (p - n + 1) / (n * a0))
        return self._series(coeffs)

    def reciprocal(self) -> "Jet":
        a0 = self.value
        if np.any(a0 == 0):
            raise SingularConstantTerm("reciprocal of a jet with zero constant term")
        coeffs = [1.0 / a0]
        for _ in range(self._nil_degree()):
            coeffs.append(-coeffs[-1] / a0)
        return self._series(coeffs)

    def exp(self) -> "Jet":
        a0 = np.exp(self.value)
        coeffs = [a0]
        for n in range(1, self._nil_degree() + 1):
            coeffs.append(coeffs[-1] / n)
        return self._series(coeffs)

    def log(self) -> "Jet":
        a0 = self.value
        if np.any(a0 == 0):
            raise SingularConstantTerm("log of a jet with zero constant term")
        coeffs = [np.log(a0)]
        for n in range(1, self._nil_degree() + 1):
            coeffs.append((-1) ** (n + 1) / (n * a0**n))
        return self._series(coeffs)

    def sqrt(self) -> "Jet":
        return self.cpow(0.5)

    def _trig(self, shift: int) -> "Jet":
        a0 = self.value
        cycle = [np.sin(a0), np.cos(a0), -np.sin(a0), -np.cos(a0)]
        coeffs = []
        fact = 1.0
        for n in range(self._nil_degree() + 1):
            if n:
                fact *= n
            coeffs.append(cycle[(n + shift) % 4] / fact)
        return self._series(coeffs)

    def sin(self) -> "Jet":
        return self._trig(0)

    def cos(self) -> "Jet":
        return self._trig(1)

    def tan(self) -> "Jet":
        return self.sin() / self.cos()

    def conj_real(self) -> "Jet":
        """Complex conjugate for a jet of a function of real variables."""
        return Jet(self.space, np.conj(self.coeffs))


def _dispatch(name: str, fallback: Callable):
    def fn(x):
        if isinstance(x, (Jet, LambdaPoly)):
            return getattr(x, name)()
        return fallback(x)

    fn.__name__ = name
    return fn


exp = _dispatch("exp", np.exp)
log = _dispatch("log", np.log)
sin = _dispatch("sin", np.sin)
cos = _dispatch("cos", np.cos)
tan = _dispatch("tan", np.tan)
sqrt = _dispatch("sqrt", np.sqrt)


def stack_matrix(rows: Sequence[Sequence]) -> "Jet | np.ndarray":
    """Assemble a matrix from scalar entries; a jet result if any entry is a jet.

    Matrix axes become the last two batch axes.
    """
    flat = [e for row in rows for e in row]
    jets_ = [e for e in flat if isinstance(e, Jet)]
    nr, nc = len(rows), len(rows[0])
    if not jets_:
        arr = np.stack(np.broadcast_arrays(*[np.asarray(e) for e in flat]), axis=-1)
        return arr.reshape(arr.shape[:-1] + (nr, nc))
    order = min(j.order for j in jets_)
    space = jets_[0].space.lower(order)
    batch = np.broadcast_shapes(*[np.shape(value_of(e)) for e in flat])
    out = np.zeros(batch + (nr, nc, space.size), dtype=complex_dtype())
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            if isinstance(e, Jet):
                out[..., i, j, :] = e.truncate(order).coeffs
            else:
                out[..., i, j, 0] = e
    return Jet(space, out)


def value_of(x):
    """Constant term of a jet, or the input itself."""
    return x.value if isinstance(x, Jet) else x


def chart_jet(point: Sequence[float], order: int, multidual: bool = False) -> list[Jet]:
    """Independent variables expanded at ``point``; each entry may be an array."""
    space = get_space(len(point), order, multidual)
    return [Jet.variable(space, i, np.asarray(v, dtype=real_dtype())) for i, v in enumerate(point)]


def lie_derivative(func: Callable, g: np.ndarray, word: Sequence[np.ndarray]) -> np.ndarray:
    """Iterated right derivative ``(L_1 (L_2 ... (L_k F)))(g)`` via multidual jets."""
    k = len(word)
    if k == 0:
        return np.asarray(func(np.asarray(g, dtype=complex_dtype())))
    space = get_space(k, k, multidual=True)
    eye = np.eye(g.shape[-1])
    mat = Jet.constant(space, np.asarray(g, dtype=complex_dtype()))
    for i, op in enumerate(word):
        eps = Jet.variable(space, i, 0.0)
        mat = mat @ (eps * np.asarray(op, dtype=complex_dtype()) + eye)
    out = func(mat)
    return out.coefficient((1,) * k)


def lie_gradient(func: Callable, g: np.ndarray, ops: Sequence[np.ndarray]) -> np.ndarray:
    """First right derivatives along each of ``ops``, stacked on the last axis."""
    k = len(ops)
    space = get_space(k, 1, multidual=True)
    step = Jet.constant(space, np.zeros((g.shape[-1], g.shape[-1])))
    for i, op in enumerate(ops):
        step = step + Jet.variable(space, i, 0.0) * np.asarray(op, dtype=complex_dtype())
    out = func(np.asarray(g, dtype=complex_dtype()) @ (step + np.eye(g.shape[-1])))
    return np.stack([out.coefficient(tuple(int(j == i) for j in range(k))) for i in range(k)], axis=-1)


class LambdaPoly:
    """Laurent polynomial ``sum_j coeffs[j] * lam ** (low + j)`` with jet coefficients.

    ``coeffs`` is a :class:`Jet` whose last batch axis indexes powers of ``lam``.
    """

    __array_ufunc__ = None
    __array_priority__ = 1001

    def __init__(self, coeffs: Jet, low: int = 0):
        self.coeffs = coeffs
        self.low = low

    @classmethod
    def lam(cls, like: Jet) -> "LambdaPoly":
        one = Jet.constant(like.space, np.ones(like.shape + (1,)))
        return cls(one, 1)

    @classmethod
    def lift(cls, x, like: "LambdaPoly") -> "LambdaPoly":
        if isinstance(x, LambdaPoly):
            return x
        if isinstance(x, Jet):
            return cls(Jet(x.space, x.coeffs[..., None, :]), 0)
        space = like.coeffs.space
        return cls(Jet.constant(space, np.asarray(x, dtype=complex_dtype())[..., None]), 0)

    @property
    def high(self) -> int:
        return self.low + self.coeffs.shape[-1] - 1

    @property
    def order(self) -> int:
        return self.coeffs.order

    def __add__(self, other):
        if not isinstance(other, (LambdaPoly, Jet, int, float, complex, np.number, np.ndarray)):
            return NotImplemented
        other = LambdaPoly.lift(other, self)
        a, b = self.coeffs, other.coeffs
        order = min(a.order, b.order)
        a, b = a.truncate(order), b.truncate(order)
        low = min(self.low, other.low)
        high = max(self.high, other.high)
        batch = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        c = np.zeros(batch + (high - low + 1, a.space.size), dtype=complex_dtype())
        c[..., self.low - low : self.high - low + 1, :] += a.coeffs
        c[..., other.low - low : other.high - low + 1, :] += b.coeffs
        return LambdaPoly(Jet(a.space, c), low)

    __radd__ = __add__

    def __neg__(self):
        return LambdaPoly(-self.coeffs, self.low)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number, np.ndarray)):
            other = np.asarray(other, dtype=complex_dtype())
            return LambdaPoly(self.coeffs * other[..., None], self.low)
        if isinstance(other, Jet):
            return LambdaPoly(self.coeffs * Jet(other.space, other.coeffs[..., None, :]), self.low)
        if not isinstance(other, LambdaPoly):
            return NotImplemented
        a, b = self, other
        if a.coeffs.shape[-1] > b.coeffs.shape[-1]:
            a, b = b, a
        na, nb = a.coeffs.shape[-1], b.coeffs.shape[-1]
        order = min(a.order, b.order)
        ac, bc = a.coeffs.truncate(order), b.coeffs.truncate(order)
        batch = np.broadcast_shapes(ac.shape[:-1], bc.shape[:-1])
        c = np.zeros(batch + (na + nb - 1, ac.space.size), dtype=complex_dtype())
        for i in range(na):
            c[..., i : i + nb, :] += (ac[..., i : i + 1] * bc).coeffs
        return LambdaPoly(Jet(ac.space, c), a.low + b.low)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LambdaPoly):
            raise TypeError("division by a lambda polynomial is not supported")
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=complex_dtype()))

    def map(self, fn: Callable[[Jet], Jet]) -> "LambdaPoly":
        return LambdaPoly(fn(self.coeffs), self.low)

    def partial(self, var: int) -> "LambdaPoly":
        return self.map(lambda c: c.partial(var))

    def lam_derivative(self) -> "LambdaPoly":
        powers = np.arange(self.low, self.high + 1, dtype=real_dtype())
        return LambdaPoly(self.coeffs * powers, self.low - 1)

    def truncate(self, order: int) -> "LambdaPoly":
        return self.map(lambda c: c.truncate(order))

    def evaluate(self, lam) -> np.ndarray:
        """Constant Taylor terms at ``lam``; the shape of ``lam`` is appended to the batch."""
        lam = np.asarray(lam, dtype=complex_dtype())
        powers = np.arange(self.low, self.high + 1)
        return np.tensordot(self.coeffs.value, lam[..., None] ** powers, axes=([-1], [-1]))

    def coefficient(self, exponents: Sequence[int]) -> np.ndarray:
        return self.coeffs.coefficient(exponents)
