# MIT License
#
# Copyright (c) 2026 driftcheck contributors
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

"""
Truncated multivariate Taylor arithmetic.

A :class:`Jet` holds the Taylor coefficients c[a] = (d^a f)(p) / a! of a function
around a point, for every multi-index a with |a| <= order. The coefficient array
carries an arbitrary leading batch shape so that one jet describes the same
function around many points at once:

    x, y = Jet.variables([[0.0, 1.0], [1.0, 1.0]], order=3)
    f = jet.exp(x * y)
    f.gradient()   # shape (2, 2)

Arithmetic is exact up to rounding: products are truncated convolutions, and the
elementary functions are composed through their univariate Taylor series.
"""

from __future__ import annotations

import functools
import itertools
import logging as __logging
import math
from typing import Callable, Sequence

import numpy as np

module_logger = __logging.getLogger(__name__)


class DomainViolation(ArithmeticError):
    """Raised when an elementary function is applied outside its domain."""

    def __init__(self, msg: str, *args):
        super().__init__(msg, args)
        self.msg = msg


class MonomialBasis:
    """Graded multi-index enumeration for jets of a fixed dimension and order."""

    def __init__(self, dim: int, order: int):
        if dim < 1:
            raise ValueError("jet dimension must be positive")
        if order < 0:
            raise ValueError("jet order must be non-negative")
        self.dim = dim
        self.order = order
        exponents = []
        for degree in range(order + 1):
            for alpha in itertools.product(range(degree + 1), repeat=dim):
                if sum(alpha) == degree:
                    exponents.append(alpha)
        # graded, then reverse-lexicographic inside a degree: x1 before x2
        exponents.sort(key=lambda a: (sum(a), tuple(-v for v in a)))
        self.exponents = np.array(exponents, dtype=np.int64).reshape(len(exponents), dim)
        self.index = {tuple(int(v) for v in a): i for i, a in enumerate(self.exponents)}
        self.size = len(exponents)
        self.degree = self.exponents.sum(axis=1)
        self.factorial = np.array([math.prod(math.factorial(int(v)) for v in a) for a in self.exponents],
                                  dtype=np.float64)

        product = np.zeros((self.size * self.size, self.size), dtype=np.float64)
        for i, a in enumerate(self.exponents):
            for j, b in enumerate(self.exponents):
                key = tuple(int(v) for v in a + b)
                k = self.index.get(key)
                if k is not None:
                    product[i * self.size + j, k] = 1.0
        self.product = product

    def __repr__(self):
        return f"MonomialBasis(dim={self.dim}, order={self.order})"

    def derivative_table(self, axis: int) -> tuple[np.ndarray, np.ndarray]:
        """Source indices and multipliers mapping coefficients of f to those of d f / d x_axis."""
        lower = basis(self.dim, self.order - 1)
        source = np.empty(lower.size, dtype=np.int64)
        scale = np.empty(lower.size, dtype=np.float64)
        for i, a in enumerate(lower.exponents):
            shifted = [int(v) for v in a]
            shifted[axis] += 1
            source[i] = self.index[tuple(shifted)]
            scale[i] = shifted[axis]
        return source, scale

    def truncation_table(self, order: int) -> np.ndarray:
        lower = basis(self.dim, order)
        return np.array([self.index[tuple(int(v) for v in a)] for a in lower.exponents], dtype=np.int64)


@functools.lru_cache(maxsize=None)
def basis(dim: int, order: int) -> MonomialBasis:
    return MonomialBasis(dim, order)


@functools.lru_cache(maxsize=None)
def _derivative_table(dim: int, order: int, axis: int):
    return basis(dim, order).derivative_table(axis)


@functools.lru_cache(maxsize=None)
def _truncation_table(dim: int, order: int, target: int):
    return basis(dim, order).truncation_table(target)


class Jet:
    __slots__ = ("coeffs", "basis")
    __array_ufunc__ = None

    def __init__(self, coeffs: np.ndarray, mbasis: MonomialBasis):
        coeffs = np.asarray(coeffs, dtype=np.float64)
        if coeffs.shape[-1:] != (mbasis.size,):
            raise ValueError(f"coefficient array of shape {coeffs.shape} does not match {mbasis}")
        self.coeffs = coeffs
        self.basis = mbasis

    # construction

    @classmethod
    def constant(cls, value, dim: int, order: int) -> Jet:
        b = basis(dim, order)
        value = np.asarray(value, dtype=np.float64)
        coeffs = np.zeros(value.shape + (b.size,))
        coeffs[..., 0] = value
        return cls(coeffs, b)

    @classmethod
    def variable(cls, axis: int, points, order: int) -> Jet:
        """The coordinate function x_axis expanded around each of ``points`` (shape (..., dim))."""
        points = np.asarray(points, dtype=np.float64)
        dim = points.shape[-1]
        b = basis(dim, order)
        coeffs = np.zeros(points.shape[:-1] + (b.size,))
        coeffs[..., 0] = points[..., axis]
        if order >= 1:
            unit = [0] * dim
            unit[axis] = 1
            coeffs[..., b.index[tuple(unit)]] = 1.0
        return cls(coeffs, b)

    @classmethod
    def variables(cls, points, order: int) -> list[Jet]:
        points = np.asarray(points, dtype=np.float64)
        return [cls.variable(i, points, order) for i in range(points.shape[-1])]

    # shape

    @property
    def dim(self) -> int:
        return self.basis.dim

    @property
    def order(self) -> int:
        return self.basis.order

    @property
    def shape(self) -> tuple:
        return self.coeffs.shape[:-1]

    def __repr__(self):
        return f"Jet(dim={self.dim}, order={self.order}, shape={self.shape})"

    # derivatives

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def partial(self, *axes: int) -> np.ndarray:
        """Mixed partial derivative d/dx_axes[0] ... at the expansion point."""
        alpha = [0] * self.dim
        for axis in axes:
            alpha[axis] += 1
        if sum(alpha) > self.order:
            raise ValueError(f"partial of degree {sum(alpha)} exceeds jet order {self.order}")
        i = self.basis.index[tuple(alpha)]
        return self.coeffs[..., i] * self.basis.factorial[i]

    def gradient(self) -> np.ndarray:
        return np.stack([self.partial(i) for i in range(self.dim)], axis=-1)

    def hessian(self) -> np.ndarray:
        n = self.dim
        out = np.empty(self.shape + (n, n))
        for i in range(n):
            for j in range(i, n):
                out[..., i, j] = out[..., j, i] = self.partial(i, j)
        return out

    def third(self) -> np.ndarray:
        n = self.dim
        out = np.empty(self.shape + (n, n, n))
        for i, j, k in itertools.product(range(n), repeat=3):
            out[..., i, j, k] = self.partial(*sorted((i, j, k)))
        return out

    def derivative(self, axis: int) -> Jet:
        """The jet of d f / d x_axis; one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        source, scale = _derivative_table(self.dim, self.order, axis)
        return Jet(self.coeffs[..., source] * scale, basis(self.dim, self.order - 1))

    def truncate(self, order: int) -> Jet:
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        return Jet(self.coeffs[..., _truncation_table(self.dim, self.order, order)], basis(self.dim, order))

    # arithmetic

    def _coerce(self, other) -> tuple[Jet, Jet]:
        if isinstance(other, Jet):
            if other.dim != self.dim:
                raise ValueError(f"jet dimensions differ: {self.dim} vs {other.dim}")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(np.asarray(other, dtype=np.float64), self.dim, self.order)

    def __add__(self, other) -> Jet:
        a, b = self._coerce(other)
        return Jet(a.coeffs + b.coeffs, a.basis)

    __radd__ = __add__

    def __sub__(self, other) -> Jet:
        a, b = self._coerce(other)
        return Jet(a.coeffs - b.coeffs, a.basis)

    def __rsub__(self, other) -> Jet:
        a, b = self._coerce(other)
        return Jet(b.coeffs - a.coeffs, a.basis)

    def __neg__(self) -> Jet:
        return Jet(-self.coeffs, self.basis)

    def __mul__(self, other) -> Jet:
        if not isinstance(other, Jet):
            return Jet(self.coeffs * np.asarray(other, dtype=np.float64)[..., None], self.basis)
        a, b = self._coerce(other)
        n = a.basis.size
        outer = a.coeffs[..., :, None] * b.coeffs[..., None, :]
        shape = np.broadcast_shapes(a.shape, b.shape)
        outer = np.broadcast_to(outer, shape + (n, n)).reshape(shape + (n * n,))
        return Jet(outer @ a.basis.product, a.basis)

    __rmul__ = __mul__

    def reciprocal(self) -> Jet:
        u0 = self.value
        if np.any(u0 == 0.0):
            raise DomainViolation("division by zero")
        derivs = []
        for k in range(self.order + 1):
            derivs.append((-1.0) ** k * math.factorial(k) / u0 ** (k + 1))
        return _compose(self, derivs)

    def __truediv__(self, other) -> Jet:
        if isinstance(other, Jet):
            return self * other.reciprocal()
        other = np.asarray(other, dtype=np.float64)
        if np.any(other == 0.0):
            raise DomainViolation("division by zero")
        return self * (1.0 / other)

    def __rtruediv__(self, other) -> Jet:
        return self.reciprocal() * other

    def __pow__(self, exponent: float) -> Jet:
        return power(self, exponent)


def _compose(u: Jet, derivs: Sequence[np.ndarray]) -> Jet:
    """f(u) from the univariate derivatives f^(k)(u0), k = 0..order."""
    delta = Jet(u.coeffs.copy(), u.basis)
    delta.coeffs[..., 0] = 0.0
    result = Jet.constant(np.broadcast_to(derivs[0], u.shape), u.dim, u.order)
    term = None
    for k in range(1, u.order + 1):
        term = delta if term is None else term * delta
        result = result + term * (np.asarray(derivs[k]) / math.factorial(k))
    return result


def exp(u: Jet) -> Jet:
    e = np.exp(u.value)
    return _compose(u, [e] * (u.order + 1))


def log(u: Jet) -> Jet:
    u0 = u.value
    if np.any(u0 <= 0.0):
        raise DomainViolation("log of a non-positive value")
    derivs = [np.log(u0)]
    for k in range(1, u.order + 1):
        derivs.append((-1.0) ** (k - 1) * math.factorial(k - 1) / u0 ** k)
    return _compose(u, derivs)


def sin(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    cycle = [s, c, -s, -c]
    return _compose(u, [cycle[k % 4] for k in range(u.order + 1)])


def cos(u: Jet) -> Jet:
    s, c = np.sin(u.value), np.cos(u.value)
    cycle = [c, -s, -c, s]
    return _compose(u, [cycle[k % 4] for k in range(u.order + 1)])


def power(u: Jet, exponent: float) -> Jet:
    exponent = float(exponent)
    if exponent.is_integer():
        n = int(exponent)
        if n < 0:
            return power(u.reciprocal(), -n)
        result = Jet.constant(np.ones(u.shape), u.dim, u.order)
        base = u
        # square-and-multiply keeps integer powers exact for negative bases
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result
    u0 = u.value
    if np.any(u0 <= 0.0) if u.order > 0 else np.any(u0 < 0.0):
        raise DomainViolation(f"non-integer power {exponent} of a non-positive value")
    derivs = []
    falling = 1.0
    for k in range(u.order + 1):
        derivs.append(falling * u0 ** (exponent - k))
        falling *= exponent - k
    return _compose(u, derivs)


def sqrt(u: Jet) -> Jet:
    return power(u, 0.5)


UNARY_FUNCTIONS: dict[str, Callable[[Jet], Jet]] = {
    "sin": sin,
    "cos": cos,
    "exp": exp,
    "log": log,
    "sqrt": sqrt,
}


def dot(a: Sequence[Jet], b: Sequence[Jet]) -> Jet:
    result = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        result = result + x * y
    return result


def cross(a: Sequence[Jet], b: Sequence[Jet]) -> list[Jet]:
    return [a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0]]
