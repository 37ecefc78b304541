"""Forward-mode jets over the four submanifold coordinates.

``Dual4`` carries a value and its gradient; ``Jet2`` additionally carries the
Hessian so second derivatives (needed for curvature) stay exact.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["Dual4", "Jet2", "DomainError", "NDIM"]

NDIM = 4


class DomainError(ArithmeticError):
    """Evaluation left the domain of a function (sqrt of a negative, x/0, ...)."""

    def __init__(self, message: str, subexpr: str | None = None):
        super().__init__(message if subexpr is None else f"{message} in '{subexpr}'")
        self.subexpr = subexpr


def _scalar(x) -> bool:
    return isinstance(x, (int, float, np.floating, np.integer))


class Dual4:
    __slots__ = ("value", "grad")

    def __init__(self, value, grad=None):
        self.value = float(value)
        self.grad = np.zeros(NDIM) if grad is None else np.asarray(grad, dtype=float)

    @classmethod
    def variable(cls, value: float, index: int) -> "Dual4":
        g = np.zeros(NDIM)
        g[index] = 1.0
        return cls(value, g)

    def _lift(self, other):
        if isinstance(other, Dual4):
            return other
        if _scalar(other):
            return Dual4(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Dual4(self.value + other.value, self.grad + other.grad)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Dual4(self.value - other.value, self.grad - other.grad)

    def __rsub__(self, other):
        return Dual4(other) - self

    def __neg__(self):
        return Dual4(-self.value, -self.grad)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Dual4(self.value * other.value, self.value * other.grad + other.value * self.grad)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        if other.value == 0.0:
            raise DomainError("division by zero")
        inv = 1.0 / other.value
        v = self.value * inv
        return Dual4(v, (self.grad - v * other.grad) * inv)

    def __rtruediv__(self, other):
        return Dual4(other) / self

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n == 0:
            return Dual4(1.0)
        if n < 0:
            if self.value == 0.0:
                raise DomainError("division by zero")
            return Dual4(1.0) / self ** (-n)
        return self._chain(self.value ** n, n * self.value ** (n - 1))

    def _chain(self, f: float, df: float) -> "Dual4":
        return Dual4(f, df * self.grad)

    def sqrt(self):
        if self.value <= 0.0:
            raise DomainError("sqrt of non-positive value (not differentiable)")
        r = math.sqrt(self.value)
        return self._chain(r, 0.5 / r)

    def sin(self):
        return self._chain(math.sin(self.value), math.cos(self.value))

    def cos(self):
        return self._chain(math.cos(self.value), -math.sin(self.value))

    def exp(self):
        e = math.exp(self.value)
        return self._chain(e, e)

    def tanh(self):
        t = math.tanh(self.value)
        return self._chain(t, 1.0 - t * t)

    def sinh(self):
        return self._chain(math.sinh(self.value), math.cosh(self.value))

    def cosh(self):
        return self._chain(math.cosh(self.value), math.sinh(self.value))

    def __repr__(self):
        return f"Dual4({self.value!r}, {self.grad.tolist()!r})"


class Jet2:
    """Second-order truncated Taylor jet: value, gradient and Hessian."""

    __slots__ = ("value", "grad", "hess")

    def __init__(self, value, grad=None, hess=None):
        self.value = float(value)
        self.grad = np.zeros(NDIM) if grad is None else np.asarray(grad, dtype=float)
        self.hess = np.zeros((NDIM, NDIM)) if hess is None else np.asarray(hess, dtype=float)

    @classmethod
    def variable(cls, value: float, index: int) -> "Jet2":
        g = np.zeros(NDIM)
        g[index] = 1.0
        return cls(value, g)

    def _lift(self, other):
        if isinstance(other, Jet2):
            return other
        if _scalar(other):
            return Jet2(other)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Jet2(self.value + other.value, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Jet2(self.value - other.value, self.grad - other.grad, self.hess - other.hess)

    def __rsub__(self, other):
        return Jet2(other) - self

    def __neg__(self):
        return Jet2(-self.value, -self.grad, -self.hess)

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        a, b = self, other
        cross = np.outer(a.grad, b.grad)
        return Jet2(
            a.value * b.value,
            a.value * b.grad + b.value * a.grad,
            a.value * b.hess + b.value * a.hess + cross + cross.T,
        )

    __rmul__ = __mul__

    def _chain(self, f: float, df: float, d2f: float) -> "Jet2":
        return Jet2(f, df * self.grad, df * self.hess + d2f * np.outer(self.grad, self.grad))

    def reciprocal(self) -> "Jet2":
        v = self.value
        if v == 0.0:
            raise DomainError("division by zero")
        return self._chain(1.0 / v, -1.0 / v ** 2, 2.0 / v ** 3)

    def __truediv__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return Jet2(other) * self.reciprocal()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        if n == 0:
            return Jet2(1.0)
        if n < 0:
            return self.reciprocal() ** (-n)
        v = self.value
        d2 = n * (n - 1) * v ** (n - 2) if n >= 2 else 0.0
        return self._chain(v ** n, n * v ** (n - 1), d2)

    def sqrt(self):
        if self.value <= 0.0:
            raise DomainError("sqrt of non-positive value (not differentiable)")
        r = math.sqrt(self.value)
        return self._chain(r, 0.5 / r, -0.25 / (r * self.value))

    def sin(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(s, c, -s)

    def cos(self):
        s, c = math.sin(self.value), math.cos(self.value)
        return self._chain(c, -s, -c)

    def exp(self):
        e = math.exp(self.value)
        return self._chain(e, e, e)

    def tanh(self):
        t = math.tanh(self.value)
        d = 1.0 - t * t
        return self._chain(t, d, -2.0 * t * d)

    def sinh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._chain(s, c, s)

    def cosh(self):
        s, c = math.sinh(self.value), math.cosh(self.value)
        return self._chain(c, s, c)

    def first_order(self) -> Dual4:
        return Dual4(self.value, self.grad)

    def __repr__(self):
        return f"Jet2({self.value!r}, {self.grad.tolist()!r}, ...)"
