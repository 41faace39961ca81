"""Control functions gamma: sublinear gauges bounding gradient growth.

A gauge is a nondecreasing continuous function on the nonnegative reals
carrying claimed constants: a quasi-subadditivity factor ``c``
(``gamma(s+t) <= c*(gamma(s)+gamma(t))``), an envelope ``gamma(t) <=
a*t**alpha + b`` with ``alpha in [0,1)``, and optionally a positive margin
``c0`` for the averaged-growth integral criterion checked by
:func:`gamma_iv_functional`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import expressions as ex
from .errors import ConfigurationError, EvaluationError

GAMMA_KINDS = ("LOG_SQRT", "POWER", "EXPRESSION")


@dataclass(frozen=True)
class GammaSpec:
    """A gauge function with its claimed constants."""

    kind: str
    alpha: float = 0.5       # envelope exponent (and the power for POWER)
    a: float = math.sqrt(2)  # envelope scale
    b: float = 1.0           # envelope offset
    c: float = math.sqrt(2)  # quasi-subadditivity constant
    c0: float | None = None  # claimed margin for the integral criterion
    source: str | None = None
    ast: object = None

    def __post_init__(self):
        if self.kind not in GAMMA_KINDS:
            raise ConfigurationError(f"unknown gamma kind {self.kind!r}")
        if not (0.0 <= self.alpha < 1.0):
            raise ConfigurationError(f"alpha must lie in [0,1), got {self.alpha}")
        if self.a < 0 or self.b < 0:
            raise ConfigurationError("envelope constants a, b must be >= 0")
        if self.c < 1.0:
            raise ConfigurationError("subadditivity constant c must be >= 1")

    def describe(self) -> str:
        if self.kind == "POWER":
            return f"POWER({self.alpha})"
        if self.kind == "EXPRESSION":
            return f"expr[{self.source}]"
        return self.kind


def log_sqrt_gamma(c0: float | None = 1.0) -> GammaSpec:
    """sqrt(ln(1+t^2)); subadditive with factor sqrt(2), envelope sqrt(2)*t^0.5+1."""
    return GammaSpec("LOG_SQRT", alpha=0.5, a=math.sqrt(2), b=1.0,
                     c=math.sqrt(2), c0=c0)


def power_gamma(alpha: float, c0: float | None = None) -> GammaSpec:
    """t^alpha; genuinely subadditive (c = 1), envelope t^alpha exactly."""
    return GammaSpec("POWER", alpha=alpha, a=1.0, b=0.0, c=1.0,
                     c0=c0 if c0 is not None else 1.0 / (2 * alpha) if alpha > 0 else None)


def expression_gamma(source: str, **constants) -> GammaSpec:
    """Gauge from an expression in the radius variable ``t`` (no state, no period)."""
    ast = ex.parse_expression(source)
    if ex.depends_on_state(ast):
        raise ConfigurationError("gamma expression may not reference state")
    for node in ex.walk(ast):
        if isinstance(node, (ex.Theta, ex.PeriodT)):
            raise ConfigurationError("gamma expression may not reference T or profiles")
    return GammaSpec("EXPRESSION", source=source, ast=ast, **constants)


def gamma_eval(spec: GammaSpec, t):
    """gamma(t) for scalar or array t >= 0."""
    if spec.kind == "LOG_SQRT":
        return np.sqrt(np.log1p(np.square(t)))
    if spec.kind == "POWER":
        return np.power(t, spec.alpha)
    env = ex.EvalEnv(np.asarray(t, dtype=float), 1.0, ())
    return np.asarray(ex.eval_node(spec.ast, env), dtype=float)


def gamma_iv_functional(spec: GammaSpec, c: float, r: float) -> float:
    """The scaled averaged-growth gap
    ``(1/gamma(r)^2) * (int_1^r gamma(u)^2/u du - c*ln r)``.

    The integral is computed adaptively in the log substitution ``u = e^v``
    with relative tolerance 1e-8, so radii far beyond float-comfortable
    linear grids remain cheap.
    """
    if r < 1.0:
        raise ConfigurationError(f"radius must be >= 1, got {r}")
    g2 = float(gamma_eval(spec, r)) ** 2
    if g2 == 0.0:
        raise EvaluationError(f"gamma({r}) = 0; functional undefined")
    lnr = math.log(r)
    integral, _ = quad(lambda v: float(gamma_eval(spec, math.exp(v))) ** 2,
                       0.0, lnr, epsrel=1e-8, limit=300)
    return (integral - c * lnr) / g2


# -- sampled property checks (used by the audit module) ----------------------

def check_subadditive(spec: GammaSpec, grid: np.ndarray):
    """gamma(s+t) <= c*(gamma(s)+gamma(t)) on grid x grid; (ok, worst witness)."""
    g = gamma_eval(spec, grid)
    ssum = grid[:, None] + grid[None, :]
    lhs = gamma_eval(spec, ssum)
    rhs = spec.c * (g[:, None] + g[None, :])
    gap = rhs - lhs
    i, j = np.unravel_index(np.argmin(gap), gap.shape)
    ok = bool(gap[i, j] >= -1e-12 * (1.0 + abs(rhs[i, j])))
    return ok, {"s": float(grid[i]), "t": float(grid[j]),
                "lhs": float(lhs[i, j]), "rhs": float(rhs[i, j]),
                "margin": float(gap[i, j])}


def check_envelope(spec: GammaSpec, grid: np.ndarray):
    """gamma(t) <= a*t^alpha + b on the grid; (ok, worst witness)."""
    lhs = gamma_eval(spec, grid)
    rhs = spec.a * np.power(grid, spec.alpha) + spec.b
    gap = rhs - lhs
    i = int(np.argmin(gap))
    ok = bool(gap[i] >= -1e-12 * (1.0 + abs(rhs[i])))
    return ok, {"t": float(grid[i]), "lhs": float(lhs[i]), "rhs": float(rhs[i]),
                "margin": float(gap[i])}
