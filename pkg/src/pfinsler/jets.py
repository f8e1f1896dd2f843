"""Truncated multivariate Taylor arithmetic ("jets") with optional batch axes.

A :class:`Jet` stores the Taylor coefficients ``c[alpha] = d^alpha f / alpha!``
of a function of ``nvars`` variables, truncated at total degree ``order``.
Coefficients live on axis 0; any trailing axes are an elementwise batch, so a
single jet can carry the expansion of the same expression at many base points.

Monomials are enumerated by degree, then lexicographically, so the monomials of
a lower order form a prefix of those of a higher one.  Truncation is slicing.

The module also exposes generic ``sqrt``/``exp``/... that work on floats,
numpy arrays and jets alike; the expression compiler and every metric use them.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = [
    "Jet",
    "JetSpace",
    "jet_space",
    "seed_variables",
    "constant_part",
    "sqrt",
    "exp",
    "log",
    "sin",
    "cos",
    "fabs",
    "ipow",
]


def _monomials(nvars: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(order + 1):
        block = []
        for combo in itertools.combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for i in combo:
                e[i] += 1
            block.append(tuple(e))
        out.extend(sorted(block, reverse=True))
    return out


class JetSpace:
    """Index tables for jets in ``nvars`` variables up to total degree ``order``."""

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        self.exponents = _monomials(nvars, order)
        self.size = len(self.exponents)
        self.index = {e: k for k, e in enumerate(self.exponents)}
        self.degree = np.array([sum(e) for e in self.exponents])
        self.factorial = np.array(
            [math.prod(math.factorial(a) for a in e) for e in self.exponents], dtype=float
        )

        # product table: out[k] = sum over (i, j) with e_i + e_j = e_k
        ii, jj, kk = [], [], []
        for i, ei in enumerate(self.exponents):
            for j, ej in enumerate(self.exponents):
                if sum(ei) + sum(ej) > order:
                    continue
                ii.append(i)
                jj.append(j)
                kk.append(self.index[tuple(a + b for a, b in zip(ei, ej))])
        perm = np.argsort(kk, kind="stable")
        self._mul_i = np.asarray(ii)[perm]
        self._mul_j = np.asarray(jj)[perm]
        kk_sorted = np.asarray(kk)[perm]
        self._mul_starts = np.searchsorted(kk_sorted, np.arange(self.size))

        # derivative maps into the space of order - 1
        self._deriv = []
        if order > 0:
            lower = _monomials(nvars, order - 1)
            for var in range(nvars):
                src = []
                fac = []
                for e in lower:
                    up = list(e)
                    up[var] += 1
                    src.append(self.index[tuple(up)])
                    fac.append(up[var])
                self._deriv.append((np.asarray(src), np.asarray(fac, dtype=float)))

    def mul_coeffs(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = a[self._mul_i] * b[self._mul_j]
        return np.add.reduceat(prod, self._mul_starts, axis=0)

    def __repr__(self) -> str:
        return f"JetSpace(nvars={self.nvars}, order={self.order})"


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> JetSpace:
    return JetSpace(nvars, order)


def _bshape(other) -> np.ndarray:
    # batch-shaped constant, broadcast against coefficient arrays (axis 0 = monomial)
    return np.asarray(other, dtype=float)[None, ...]


def _align(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast two coefficient arrays over their batch axes only."""
    if a.shape == b.shape:
        return a, b
    batch = np.broadcast_shapes(a.shape[1:], b.shape[1:])
    a = np.broadcast_to(a.reshape(a.shape[:1] + (1,) * (len(batch) - a.ndim + 1) + a.shape[1:]), a.shape[:1] + batch)
    b = np.broadcast_to(b.reshape(b.shape[:1] + (1,) * (len(batch) - b.ndim + 1) + b.shape[1:]), b.shape[:1] + batch)
    return a, b


class Jet:
    """Truncated Taylor expansion; supports ``+ - * /``, integer powers and the
    elementary functions of this module."""

    __slots__ = ("space", "c")
    __array_priority__ = 1000

    def __init__(self, space: JetSpace, coeffs: np.ndarray):
        self.space = space
        self.c = coeffs

    # -- construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, space: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros((space.size,) + value.shape)
        c[0] = value
        return cls(space, c)

    @property
    def value(self):
        v = self.c[0]
        return float(v) if np.ndim(v) == 0 else v

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.c.shape[1:]

    def __repr__(self) -> str:
        return f"Jet({self.space.nvars} vars, order {self.space.order}, value={self.value})"

    # -- arithmetic -------------------------------------------------------------
    def _coerce(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets from different spaces cannot be combined")
            return other
        return Jet.constant(self.space, other)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _align(self.c, self._coerce(other).c)
            return Jet(self.space, a + b)
        other = np.asarray(other, dtype=float)
        batch = np.broadcast_shapes(self.c.shape[1:], other.shape)
        c = np.array(np.broadcast_to(self.c.reshape(self.c.shape[:1] + (1,) * (len(batch) - self.c.ndim + 1) + self.c.shape[1:]), self.c.shape[:1] + batch))
        c[0] = c[0] + other
        return Jet(self.space, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = _align(self.c, self._coerce(other).c)
            return Jet(self.space, self.space.mul_coeffs(a, b))
        return Jet(self.space, self.c * _bshape(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * _reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise DomainError("division by zero")
        return Jet(self.space, self.c / other[None, ...])

    def __rtruediv__(self, other):
        return _reciprocal(self) * other

    def __pow__(self, k):
        return ipow(self, k)

    # -- calculus ----------------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order > self.space.order:
            raise ValueError("cannot raise the order of a jet")
        sp = jet_space(self.space.nvars, order)
        return Jet(sp, self.c[: sp.size])

    def diff(self, var: int) -> "Jet":
        """Exact partial derivative in variable ``var`` (one order lower)."""
        if self.space.order == 0:
            raise ValueError("order-0 jet has no derivative information")
        src, fac = self.space._deriv[var]
        sp = jet_space(self.space.nvars, self.space.order - 1)
        return Jet(sp, self.c[src] * fac.reshape((-1,) + (1,) * (self.c.ndim - 1)))

    def partial(self, exponent: tuple[int, ...]):
        """Value of the mixed partial ``d^exponent f`` at the base point."""
        k = self.space.index[tuple(exponent)]
        return self.c[k] * self.space.factorial[k]

    def compose(self, taylor) -> "Jet":
        """Return ``f(self)`` given ``taylor[k] = f^(k)(a)/k!`` at ``a = self.value``."""
        h = Jet(self.space, self.c.copy())
        h.c[0] = 0.0
        out = Jet.constant(self.space, taylor[-1])
        for coef in reversed(taylor[:-1]):
            out = out * h + coef
        return out


def constant_part(a):
    """Real (float or array) part of a possibly-jet value."""
    return a.value if isinstance(a, Jet) else a


def seed_variables(space: JetSpace, values) -> list[Jet]:
    """Independent variables ``t_i = values[i] + dt_i`` of ``space``."""
    out = []
    for i, val in enumerate(values):
        jet = Jet.constant(space, val)
        if space.order > 0:
            e = [0] * space.nvars
            e[i] = 1
            jet.c[space.index[tuple(e)]] = 1.0
        out.append(jet)
    return out


# -- elementary functions ---------------------------------------------------------


def _reciprocal(a: Jet) -> Jet:
    a0 = np.asarray(a.c[0])
    if np.any(a0 == 0):
        raise DomainError("division by zero")
    n = a.space.order
    return a.compose([(-1.0) ** k / a0 ** (k + 1) for k in range(n + 1)])


def _check(cond, message: str):
    if np.any(cond):
        raise DomainError(message)


def sqrt(a, where: str = "sqrt"):
    if isinstance(a, Jet):
        a0 = np.asarray(a.c[0])
        _check(a0 <= 0, f"{where}: argument must be positive")
        n = a.space.order
        coefs = []
        binom = 1.0
        for k in range(n + 1):
            coefs.append(binom * a0 ** (0.5 - k))
            binom *= (0.5 - k) / (k + 1)
        return a.compose(coefs)
    _check(np.asarray(a) < 0, f"{where}: argument must be non-negative")
    return np.sqrt(a)


def exp(a, where: str = "exp"):
    if isinstance(a, Jet):
        e0 = np.exp(a.c[0])
        return a.compose([e0 / math.factorial(k) for k in range(a.space.order + 1)])
    return np.exp(a)


def log(a, where: str = "log"):
    if isinstance(a, Jet):
        a0 = np.asarray(a.c[0])
        _check(a0 <= 0, f"{where}: argument must be positive")
        coefs = [np.log(a0)]
        for k in range(1, a.space.order + 1):
            coefs.append((-1.0) ** (k + 1) / (k * a0**k))
        return a.compose(coefs)
    _check(np.asarray(a) <= 0, f"{where}: argument must be positive")
    return np.log(a)


def sin(a, where: str = "sin"):
    if isinstance(a, Jet):
        s, c = np.sin(a.c[0]), np.cos(a.c[0])
        cyc = [s, c, -s, -c]
        return a.compose([cyc[k % 4] / math.factorial(k) for k in range(a.space.order + 1)])
    return np.sin(a)


def cos(a, where: str = "cos"):
    if isinstance(a, Jet):
        s, c = np.sin(a.c[0]), np.cos(a.c[0])
        cyc = [c, -s, -c, s]
        return a.compose([cyc[k % 4] / math.factorial(k) for k in range(a.space.order + 1)])
    return np.cos(a)


def fabs(a, where: str = "abs"):
    if isinstance(a, Jet):
        a0 = np.asarray(a.c[0])
        _check(a0 == 0, f"{where}: abs is not differentiable at 0")
        return a * np.sign(a0)
    return np.abs(a)


def ipow(a, k: int):
    """Integer power by repeated squaring; negative powers go through 1/a."""
    if not isinstance(k, (int, np.integer)):
        raise TypeError("only integer exponents are supported")
    if k < 0:
        if isinstance(a, Jet):
            return ipow(_reciprocal(a), -k)
        _check(np.asarray(a) == 0, "division by zero in negative power")
        return 1.0 / ipow(a, -k)
    if k == 0:
        return a * 0 + 1.0 if isinstance(a, Jet) else np.ones_like(np.asarray(a, dtype=float))[()]
    result = None
    base = a
    while k:
        if k & 1:
            result = base if result is None else result * base
        k >>= 1
        if k:
            base = base * base
    return result
