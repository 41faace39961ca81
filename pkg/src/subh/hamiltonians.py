"""Hamiltonians H(t, x): built-in families and parsed expressions.

Every Hamiltonian is T-periodic in time by construction.  Built-ins:

* ``EXAMPLE_3_1`` — ``theta(t) * ln(1+|x|^2)^(3/2)`` with the half-sine
  profile ``theta`` (zero on the second half period);
* ``EXAMPLE_4_1`` — ``(3/2 + sin(2*pi*t/T)) * ln(1+|x|^2)^(5/2)``;
* ``QUADRATIC``   — ``(lam/2) |x|^2``;
* ``CONSTANT``    — ``h0``.

Gradients and Hessian-vector products are exact forward-mode dual-number
derivatives; time is never differentiated.  Expression bodies may reference
time only inside sin/cos with an argument that is an integer harmonic of
``2*pi*t/T`` (plus the built-in profile), which makes T-periodicity a
construction invariant rather than a runtime check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import duals, expressions as ex
from .duals import Dual
from .errors import ConfigurationError, EvaluationError
from .loops import SystemSpec

BUILTIN_TAGS = ("EXAMPLE_3_1", "EXAMPLE_4_1", "QUADRATIC", "CONSTANT")

# tolerance for recognising integer harmonics in expression time arguments
_HARMONIC_TOL = 1e-9


@dataclass(frozen=True)
class BuiltinBody:
    tag: str
    params: tuple = ()


@dataclass(frozen=True)
class ExpressionBody:
    ast: object
    source: str
    nonsmooth_at_origin: bool = False


@dataclass(frozen=True)
class ReversedBody:
    inner: object


@dataclass(frozen=True)
class HamiltonianSpec:
    """A T-periodic Hamiltonian bound to a phase space."""

    system: SystemSpec
    body: object

    def describe(self) -> str:
        return _describe(self.body)


def _describe(body) -> str:
    if isinstance(body, BuiltinBody):
        if body.params:
            return f"{body.tag}({', '.join(repr(p) for p in body.params)})"
        return body.tag
    if isinstance(body, ExpressionBody):
        return f"expr[{body.source}]"
    if isinstance(body, ReversedBody):
        return f"time_reverse({_describe(body.inner)})"
    raise TypeError(f"unknown Hamiltonian body {body!r}")


# -- constructors -------------------------------------------------------------

def builtin_hamiltonian(system: SystemSpec, tag: str, **params) -> HamiltonianSpec:
    tag = tag.upper()
    if tag == "QUADRATIC":
        lam = float(params.pop("lam", 1.0))
        body = BuiltinBody("QUADRATIC", (lam,))
    elif tag == "CONSTANT":
        h0 = float(params.pop("h0", 0.0))
        body = BuiltinBody("CONSTANT", (h0,))
    elif tag in ("EXAMPLE_3_1", "EXAMPLE_4_1"):
        body = BuiltinBody(tag)
    else:
        raise ConfigurationError(f"unknown builtin Hamiltonian tag {tag!r}")
    if params:
        raise ConfigurationError(f"unexpected parameters {sorted(params)} for {tag}")
    return HamiltonianSpec(system, body)


def expression_hamiltonian(system: SystemSpec, source: str) -> HamiltonianSpec:
    """Parse and validate an expression Hamiltonian."""
    ast = ex.parse_expression(source)
    nmax = ex.max_coordinate(ast)
    if nmax > system.dim:
        raise ConfigurationError(
            f"expression uses x{nmax} but state dimension is {system.dim}")
    _validate_time_dependence(ast, system.period_T)
    body = ExpressionBody(ast, source, nonsmooth_at_origin=ex.has_sqrt_of_state(ast))
    return HamiltonianSpec(system, body)


def _validate_time_dependence(ast, T: float) -> None:
    """Require bare ``t`` to appear only as integer harmonics inside sin/cos."""

    def check(node, inside_trig: bool):
        if isinstance(node, ex.TVar) and not inside_trig:
            raise ConfigurationError(
                "time variable t may appear only inside sin/cos harmonics "
                "of 2*pi*t/T (or through theta_halfsine)")
        if isinstance(node, ex.Fn) and node.name in ("sin", "cos"):
            arg = node.arg
            if ex.depends_on_time(arg):
                if ex.depends_on_state(arg):
                    raise ConfigurationError(
                        "sin/cos argument may not mix time and state")
                _check_harmonic(arg, T)
            for ch in (arg,):
                check(ch, inside_trig=True)
            return
        for ch in (node.arg,) if isinstance(node, (ex.Neg, ex.Fn)) else (
                (node.left, node.right) if isinstance(node, ex.Bin) else ()):
            check(ch, inside_trig)

    check(ast, inside_trig=False)


def _check_harmonic(arg, T: float) -> None:
    """Numerically verify the trig argument is linear in t with slope 2*pi*m/T."""
    def at(tval: float) -> float:
        env = ex.EvalEnv(tval, T, ())
        return float(ex.eval_node(arg, env))

    a0, a1, a2 = at(0.0), at(T / 7.0), at(2 * T / 7.0)
    slope = (a1 - a0) / (T / 7.0)
    if abs((a2 - a1) / (T / 7.0) - slope) > _HARMONIC_TOL * (1 + abs(slope)):
        raise ConfigurationError("trig argument is not linear in t")
    m = slope * T / (2.0 * np.pi)
    if abs(m - round(m)) > _HARMONIC_TOL * (1 + abs(m)):
        raise ConfigurationError(
            f"trig argument slope corresponds to non-integer harmonic {m}")


def time_reverse(H: HamiltonianSpec) -> HamiltonianSpec:
    """The Hamiltonian ``(t, x) -> -H(-t, x)``.

    If ``x(t)`` solves the system for ``H`` then ``x(-t)`` solves it for the
    reversed Hamiltonian.  Applying twice returns to the original: reversing
    a reversed body unwraps it, and a constant flips sign in place.
    """
    body = H.body
    if isinstance(body, ReversedBody):
        return HamiltonianSpec(H.system, body.inner)
    if isinstance(body, BuiltinBody) and body.tag == "CONSTANT":
        return HamiltonianSpec(H.system, BuiltinBody("CONSTANT", (-body.params[0],)))
    return HamiltonianSpec(H.system, ReversedBody(body))


# -- evaluation ---------------------------------------------------------------

def reduce_time(t, T: float):
    """Reduce to [0, T); exact whenever t is an exact multiple-shift."""
    r = np.mod(t, T)
    # np.mod already maps negatives into [0, T)
    return r


def _r2_of(x):
    acc = x[0] * x[0]
    for xi in x[1:]:
        acc = acc + xi * xi
    return acc


def _eval_body(body, t_red, T: float, x):
    """Evaluate H given reduced time and a sequence of coordinate scalars."""
    if isinstance(body, BuiltinBody):
        tag = body.tag
        if tag == "EXAMPLE_3_1":
            theta = ex.theta_halfsine(t_red, T)
            return theta * duals.log1p(_r2_of(x)) ** 1.5
        if tag == "EXAMPLE_4_1":
            phi = 1.5 + np.sin((2.0 * np.pi / T) * t_red)
            return phi * duals.log1p(_r2_of(x)) ** 2.5
        if tag == "QUADRATIC":
            return 0.5 * body.params[0] * _r2_of(x)
        if tag == "CONSTANT":
            h0 = body.params[0]
            return h0 * np.ones_like(t_red) if isinstance(t_red, np.ndarray) else h0
        raise ConfigurationError(f"unknown builtin tag {tag!r}")
    if isinstance(body, ExpressionBody):
        return ex.eval_node(body.ast, ex.EvalEnv(t_red, T, x))
    if isinstance(body, ReversedBody):
        return -_eval_body(body.inner, reduce_time(-t_red, T), T, x)
    raise TypeError(f"unknown Hamiltonian body {body!r}")


def _check_origin(H: HamiltonianSpec, x: np.ndarray) -> None:
    body = H.body
    while isinstance(body, ReversedBody):
        body = body.inner
    if isinstance(body, ExpressionBody) and body.nonsmooth_at_origin:
        if np.any(np.sum(np.atleast_2d(x) ** 2, axis=-1) == 0.0):
            raise EvaluationError(
                "gradient undefined at x = 0 for sqrt-of-state expression", x=x)


def eval_h(H: HamiltonianSpec, t: float, x) -> float:
    """Value of H at a single point; t is reduced modulo the period first."""
    x = np.asarray(x, dtype=float)
    t_red = reduce_time(float(t), H.system.period_T)
    try:
        v = _eval_body(H.body, t_red, H.system.period_T, list(x))
    except EvaluationError as e:
        raise EvaluationError(str(e), t=t, x=x) from e
    v = float(v)
    if not math.isfinite(v):
        raise EvaluationError("non-finite Hamiltonian value", t=t, x=x)
    return v


def grad_h(H: HamiltonianSpec, t: float, x) -> np.ndarray:
    """Exact state gradient at a single point (one vector-seeded dual pass)."""
    x = np.asarray(x, dtype=float)
    _check_origin(H, x)
    d = H.system.dim
    seeds = np.eye(d)
    xs = [Dual(float(x[i]), seeds[i]) for i in range(d)]
    t_red = reduce_time(float(t), H.system.period_T)
    try:
        v = _eval_body(H.body, t_red, H.system.period_T, xs)
    except EvaluationError as e:
        raise EvaluationError(str(e), t=t, x=x) from e
    g = v.im if isinstance(v, Dual) else np.zeros(d)
    g = np.asarray(g, dtype=float) + np.zeros(d)
    if not np.all(np.isfinite(g)):
        raise EvaluationError("non-finite Hamiltonian gradient", t=t, x=x)
    return g


# -- vectorized grid evaluation (hot paths) -----------------------------------

def eval_h_many(H: HamiltonianSpec, t: np.ndarray, X: np.ndarray) -> np.ndarray:
    """H at a batch of points; ``t`` shape (M,), ``X`` shape (M, 2N)."""
    t_red = reduce_time(np.asarray(t, dtype=float), H.system.period_T)
    xs = [X[:, i] for i in range(X.shape[1])]
    try:
        v = _eval_body(H.body, t_red, H.system.period_T, xs)
    except EvaluationError as e:
        raise EvaluationError(str(e)) from e
    v = np.asarray(v, dtype=float) + np.zeros(X.shape[0])
    if not np.all(np.isfinite(v)):
        j = int(np.argmin(np.isfinite(v)))
        raise EvaluationError("non-finite Hamiltonian value",
                              t=float(np.asarray(t).ravel()[j]), x=X[j])
    return v


def grad_h_many(H: HamiltonianSpec, t: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Gradients at a batch of points, shape (M, 2N); single dual pass.

    Derivative seeds are stacked along a leading axis so numpy broadcasting
    carries all coordinate directions simultaneously.
    """
    _check_origin(H, X)
    M, d = X.shape
    t_red = reduce_time(np.asarray(t, dtype=float), H.system.period_T)
    seeds = np.zeros((d, d, M))
    for i in range(d):
        seeds[i, i, :] = 1.0
    xs = [Dual(X[:, i].astype(float), seeds[i]) for i in range(d)]
    try:
        v = _eval_body(H.body, t_red, H.system.period_T, xs)
    except EvaluationError as e:
        raise EvaluationError(str(e)) from e
    if isinstance(v, Dual):
        g = np.asarray(v.im, dtype=float) + np.zeros((d, M))
    else:
        g = np.zeros((d, M))
    if not np.all(np.isfinite(g)):
        j = int(np.argwhere(~np.isfinite(g))[0][1])
        raise EvaluationError("non-finite Hamiltonian gradient",
                              t=float(np.asarray(t).ravel()[j]), x=X[j])
    return g.T


def hess_h_many(H: HamiltonianSpec, t: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Hessians at a batch of points, shape (M, 2N, 2N).

    Column ``s`` is the dual derivative of the gradient in direction ``e_s``
    (nested duals, one pass per direction).
    """
    _check_origin(H, X)
    M, d = X.shape
    t_red = reduce_time(np.asarray(t, dtype=float), H.system.period_T)
    seeds = np.zeros((d, d, M))
    for i in range(d):
        seeds[i, i, :] = 1.0
    zero_seeds = np.zeros((d, M))
    ones = np.ones(M)
    zeros = np.zeros(M)
    out = np.zeros((M, d, d))
    for s in range(d):
        xs = [Dual(Dual(X[:, i].astype(float), seeds[i]),
                   Dual(ones if i == s else zeros, zero_seeds))
              for i in range(d)]
        try:
            v = _eval_body(H.body, t_red, H.system.period_T, xs)
        except EvaluationError as e:
            raise EvaluationError(str(e)) from e
        if isinstance(v, Dual) and isinstance(v.im, Dual):
            col = np.asarray(v.im.im, dtype=float) + np.zeros((d, M))
        else:
            col = np.zeros((d, M))
        out[:, :, s] = col.T
    if not np.all(np.isfinite(out)):
        j = int(np.argwhere(~np.isfinite(out))[0][0])
        raise EvaluationError("non-finite Hamiltonian Hessian",
                              t=float(np.asarray(t).ravel()[j]), x=X[j])
    return out
