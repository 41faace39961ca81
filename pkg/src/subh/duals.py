"""Forward-mode automatic differentiation with dual numbers.

A :class:`Dual` carries a value and one directional derivative.  Both slots
accept floats or numpy arrays of the same trailing shape, and the derivative
slot may itself be a ``Dual``, so nesting one level gives exact second
derivatives (Hessian-vector products).  Only state derivatives are ever
propagated; time enters every Hamiltonian as a plain float or array.
"""

from __future__ import annotations

import numpy as np


class Dual:
    """Value plus directional derivative; supports nesting for 2nd order."""

    __slots__ = ("re", "im")

    # make ndarray <op> Dual defer to the reflected Dual methods instead of
    # broadcasting element-wise into an object array
    __array_ufunc__ = None

    def __init__(self, re, im):
        self.re = re
        self.im = im

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re + other.re, self.im + other.im)
        return Dual(self.re + other, self.im)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re - other.re, self.im - other.im)
        return Dual(self.re - other, self.im)

    def __rsub__(self, other):
        return Dual(other - self.re, -self.im)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re * other.re,
                        self.re * other.im + self.im * other.re)
        return Dual(self.re * other, self.im * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            return Dual(self.re / other.re,
                        (self.im * other.re - self.re * other.im)
                        / (other.re * other.re))
        return Dual(self.re / other, self.im / other)

    def __rtruediv__(self, other):
        return Dual(other / self.re, -other * self.im / (self.re * self.re))

    def __neg__(self):
        return Dual(-self.re, -self.im)

    def __pow__(self, p):
        if isinstance(p, Dual):
            return exp(p * log(self))
        if p == 0:
            return Dual(self.re ** 0, 0.0 * self.im)
        # power rule; for re==0 this yields 0 or inf in the derivative slot,
        # the evaluator's finiteness check turns inf into a domain error
        return Dual(self.re ** p, p * self.re ** (p - 1) * self.im)

    def __rpow__(self, base):
        return exp(self * np.log(base))

    def __repr__(self):
        return f"Dual({self.re!r}, {self.im!r})"


def sin(z):
    if isinstance(z, Dual):
        return Dual(sin(z.re), cos(z.re) * z.im)
    return np.sin(z)


def cos(z):
    if isinstance(z, Dual):
        return Dual(cos(z.re), -sin(z.re) * z.im)
    return np.cos(z)


def exp(z):
    if isinstance(z, Dual):
        e = exp(z.re)
        return Dual(e, e * z.im)
    return np.exp(z)


def log(z):
    if isinstance(z, Dual):
        return Dual(log(z.re), z.im / z.re)
    return np.log(z)


def sqrt(z):
    if isinstance(z, Dual):
        s = sqrt(z.re)
        return Dual(s, 0.5 * z.im / s)
    return np.sqrt(z)


def log1p(z):
    if isinstance(z, Dual):
        return Dual(log1p(z.re), z.im / (1.0 + z.re))
    return np.log1p(z)


def value(z):
    """Strip all derivative structure, returning the underlying value."""
    while isinstance(z, Dual):
        z = z.re
    return z


def derivative(f, x0: float) -> float:
    """First derivative of a scalar callable via a single dual pass."""
    return float(value(f(Dual(x0, 1.0))))
