"""Truncated multivariate Taylor arithmetic and exact field jets.

A :class:`Jet` stores the Taylor coefficients of a function of ``nvars``
variables up to total degree ``order`` around an expansion point.  The
coefficient array has shape ``(n_terms, *batch)`` so one jet can carry a
whole batch of independent evaluations (the quadrature nodes of a
statistical family, for instance).  Arithmetic is exact up to floating-point
rounding; there is no differencing anywhere.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError
from .expr import BinOp, Expr, Neg, Num, Param, Pow, Var, constant_value


class _Layout:
    """Monomial ordering and product/derivative tables for (nvars, order)."""

    def __init__(self, nvars, order):
        self.nvars = nvars
        self.order = order
        monos = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                alpha = [0] * nvars
                for v in combo:
                    alpha[v] += 1
                monos.append(tuple(alpha))
        self.monos = monos
        self.index = {m: k for k, m in enumerate(monos)}
        self.degree = np.array([sum(m) for m in monos])
        self.size = len(monos)

        left, right, out = [], [], []
        for a, ma in enumerate(monos):
            for b, mb in enumerate(monos):
                if self.degree[a] + self.degree[b] <= order:
                    left.append(a)
                    right.append(b)
                    out.append(self.index[tuple(x + y for x, y in zip(ma, mb))])
        self.left = np.array(left, dtype=np.intp)
        self.right = np.array(right, dtype=np.intp)
        self.out = np.array(out, dtype=np.intp)

        # d/dx_v maps the coefficient of alpha to alpha - e_v with factor alpha_v
        self.deriv = []
        for v in range(nvars):
            src, dst, fac = [], [], []
            for k, m in enumerate(monos):
                if m[v] > 0 and self.degree[k] <= order:
                    lower = list(m)
                    lower[v] -= 1
                    src.append(k)
                    dst.append(tuple(lower))
                    fac.append(float(m[v]))
            self.deriv.append((np.array(src, dtype=np.intp), dst, np.array(fac)))

        self.unit = [self.index[tuple(1 if w == v else 0 for w in range(nvars))] for v in range(nvars)] if order >= 1 else []


@lru_cache(maxsize=None)
def layout(nvars: int, order: int) -> _Layout:
    return _Layout(nvars, order)


class Jet:
    """Truncated Taylor polynomial with (optionally batched) coefficients."""

    __slots__ = ("lay", "c")

    def __init__(self, lay: _Layout, coeffs: np.ndarray):
        self.lay = lay
        self.c = coeffs

    # construction -------------------------------------------------------
    @classmethod
    def constant(cls, lay, value):
        value = np.asarray(value, dtype=float)
        c = np.zeros((lay.size,) + value.shape)
        c[0] = value
        return cls(lay, c)

    @classmethod
    def variable(cls, lay, v, value):
        jet = cls.constant(lay, value)
        if lay.order >= 1:
            jet.c[lay.unit[v]] = 1.0
        return jet

    @property
    def value(self):
        return self.c[0]

    @property
    def batch_shape(self):
        return self.c.shape[1:]

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(self.lay, other)

    def _pair(self, other):
        a, b = self.c, self._lift(other).c
        if a.ndim < b.ndim:
            a = a.reshape(a.shape + (1,) * (b.ndim - a.ndim))
        elif b.ndim < a.ndim:
            b = b.reshape(b.shape + (1,) * (a.ndim - b.ndim))
        return a, b

    # ring operations ----------------------------------------------------
    def __add__(self, other):
        a, b = self._pair(other)
        return Jet(self.lay, a + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._pair(other)
        return Jet(self.lay, a - b)

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet(self.lay, -self.c)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if other.ndim:
                return self * Jet.constant(self.lay, other)
            return Jet(self.lay, self.c * other)
        lay = self.lay
        a, b = self._pair(other)
        prods = a[lay.left] * b[lay.right]
        out = np.zeros((lay.size,) + prods.shape[1:])
        np.add.at(out, lay.out, prods)
        return Jet(lay, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            if np.any(other == 0.0):
                raise DomainError("division by zero")
            return Jet(self.lay, self.c / other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    # composition --------------------------------------------------------
    def compose(self, derivs):
        """Return phi(self) given ``derivs[k] = phi^(k)(self.value)``."""
        lay = self.lay
        h = Jet(lay, self.c.copy())
        h.c[0] = 0.0
        fact = math.factorial
        result = Jet.constant(lay, derivs[lay.order] / fact(lay.order))
        for k in range(lay.order - 1, -1, -1):
            result = result * h
            result.c[0] = result.c[0] + derivs[k] / fact(k)
        return result

    def reciprocal(self):
        v = self.value
        if np.any(v == 0.0):
            raise DomainError("division by zero")
        derivs = [(-1.0) ** k * math.factorial(k) / v ** (k + 1) for k in range(self.lay.order + 1)]
        return self.compose(derivs)

    def exp(self):
        e = np.exp(self.value)
        return self.compose([e] * (self.lay.order + 1))

    def log(self):
        v = self.value
        if np.any(v <= 0.0):
            raise DomainError("log of non-positive value")
        derivs = [np.log(v)] + [(-1.0) ** (k - 1) * math.factorial(k - 1) / v ** k for k in range(1, self.lay.order + 1)]
        return self.compose(derivs)

    def sin(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [s, c, -s, -c]
        return self.compose([cycle[k % 4] for k in range(self.lay.order + 1)])

    def cos(self):
        s, c = np.sin(self.value), np.cos(self.value)
        cycle = [c, -s, -c, s]
        return self.compose([cycle[k % 4] for k in range(self.lay.order + 1)])

    def tanh(self):
        t = np.tanh(self.value)
        poly = np.polynomial.Polynomial([0.0, 1.0])
        one_minus_sq = np.polynomial.Polynomial([1.0, 0.0, -1.0])
        derivs = []
        for _ in range(self.lay.order + 1):
            derivs.append(poly(t))
            poly = poly.deriv() * one_minus_sq
        return self.compose(derivs)

    def real_power(self, exponent: float):
        v = self.value
        if np.any(v <= 0.0):
            raise DomainError("non-integer power of non-positive base")
        derivs = []
        coef = 1.0
        for k in range(self.lay.order + 1):
            derivs.append(coef * v ** (exponent - k))
            coef *= exponent - k
        return self.compose(derivs)

    def sqrt(self):
        v = self.value
        if np.any(v < 0.0) or (self.lay.order > 0 and np.any(v == 0.0)):
            raise DomainError("sqrt of negative value" if np.any(v < 0.0) else "sqrt not differentiable at 0")
        return self.real_power(0.5)

    def int_power(self, k: int):
        if k < 0:
            return self.reciprocal().int_power(-k)
        result = Jet.constant(self.lay, np.ones(self.batch_shape))
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    # calculus -----------------------------------------------------------
    def partial(self, v: int) -> "Jet":
        """Exact derivative along variable ``v``; the result has order - 1."""
        lower = layout(self.lay.nvars, self.lay.order - 1)
        src, dst, fac = self.lay.deriv[v]
        out = np.zeros((lower.size,) + self.batch_shape)
        for s, d, f in zip(src, dst, fac):
            out[lower.index[d]] = f * self.c[s]
        return Jet(lower, out)

    def truncate(self, order: int) -> "Jet":
        lower = layout(self.lay.nvars, order)
        return Jet(lower, self.c[: lower.size].copy())

    def weighted_sum(self, weights) -> "Jet":
        """Contract the (single) batch axis against ``weights``."""
        return Jet(self.lay, self.c @ np.asarray(weights, dtype=float))

    def gradient(self):
        return np.array([self.c[k] for k in self.lay.unit])

    def hessian(self):
        lay = self.lay
        n = lay.nvars
        h = np.zeros((n, n) + self.batch_shape)
        for a in range(n):
            for b in range(a, n):
                alpha = [0] * n
                alpha[a] += 1
                alpha[b] += 1
                coef = self.c[lay.index[tuple(alpha)]]
                h[a, b] = 2.0 * coef if a == b else coef
                h[b, a] = h[a, b]
        return h


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def from_jet(cls, jet: Jet) -> "Jet2":
        if jet.lay.order < 2:
            raise ValueError("need an order-2 jet")
        return cls(float(jet.value), jet.gradient().astype(float), jet.hessian().astype(float))


def evaluate(node: Expr, variables: Sequence[Jet], params: Mapping[str, object] = None) -> Jet:
    """Evaluate an expression over jets.  ``params`` values may be arrays (batched)."""
    params = params or {}
    lay = variables[0].lay

    def ev(n):
        if isinstance(n, Num):
            return Jet.constant(lay, n.value)
        if isinstance(n, Var):
            return variables[n.index]
        if isinstance(n, Param):
            return Jet.constant(lay, params[n.name])
        if isinstance(n, Neg):
            return -ev(n.operand)
        try:
            if isinstance(n, BinOp):
                a, b = ev(n.left), ev(n.right)
                if n.op == "+":
                    return a + b
                if n.op == "-":
                    return a - b
                if n.op == "*":
                    return a * b
                return a / b
            if isinstance(n, Pow):
                base = ev(n.base)
                k = constant_value(n.exponent)
                if k is not None and float(k).is_integer():
                    return base.int_power(int(k))
                if k is not None:
                    return base.real_power(k)
                return (ev(n.exponent) * base.log()).exp()
            arg = ev(n.arg)
            return getattr(arg, n.func)()
        except DomainError as exc:
            if exc.subexpression is None:
                raise DomainError(str(exc), n) from None
            raise

    return ev(node)


def point_variables(point: Sequence[float], order: int = 2) -> list:
    lay = layout(len(point), order)
    return [Jet.variable(lay, v, float(x)) for v, x in enumerate(point)]


def eval_jet2(e: Expr, point: Sequence[float], params: Mapping[str, float] = None) -> Jet2:
    """Value, gradient and Hessian of ``e`` at ``point``, exact to rounding."""
    point = [float(x) for x in point]
    params = dict(params or {})
    return Jet2.from_jet(evaluate(e, point_variables(point, 2), params))


def eval_many(exprs, point, params=None, order=2) -> list:
    """Evaluate several expressions sharing the same variable jets."""
    variables = point_variables([float(x) for x in point], order)
    return [evaluate(e, variables, params) for e in exprs]


@dataclass(frozen=True)
class VectorFieldSpec:
    """Contravariant components X^i given as expressions."""

    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dim(self):
        return len(self.components)

    def scaled(self, f: Expr) -> "VectorFieldSpec":
        return VectorFieldSpec(tuple(BinOp("*", f, c) for c in self.components))

    def jets(self, point, params=None):
        """(value[k], grad[k][a], hess[k][a][b]) of the components at ``point``."""
        if len(point) != self.dim:
            raise ValueError("vector field length must equal chart dimension")
        js = [Jet2.from_jet(j) for j in eval_many(self.components, point, params)]
        return (
            np.array([j.value for j in js]),
            np.array([j.grad for j in js]),
            np.array([j.hess for j in js]),
        )
