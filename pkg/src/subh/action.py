"""Action functional on spectral loops and its exact gradient.

For subharmonic index ``k`` the functional is::

    A_k(u) = Q(u) + k * int_0^T H(k*t mod T, u(t)) dt

where ``Q`` is the rotating-frame quadratic form.  Critical points solve the
rescaled system ``u' = k J grad_H(k t, u)``, whose T-periodic solutions map
to ``kT``-periodic solutions of the original system via ``x(t) = u(t/k)``.

The quadratic part is evaluated in closed form; the nonlinear part by the
periodic trapezoid rule (spectrally accurate for smooth Hamiltonians; for
the half-sine profile the two kink points per period limit accuracy to
O(M^-2), which is why the default grid has at least 512 points and no
adaptive splitting is attempted at this scale).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .hamiltonians import HamiltonianSpec, eval_h_many, grad_h_many
from .loops import (SpectralLoop, TimeGrid, analyze, h_half_norm, l2_norm,
                    quadratic_form, synthesize)

log = logging.getLogger(__name__)

MIN_QUAD_POINTS = 512
OVERSAMPLE = 4
ALIAS_REPORT_RATIO = 1e-6


@dataclass(frozen=True)
class ActionConfig:
    """Subharmonic index, quadrature resolution and truncation order."""

    k: int
    quad_points_M: int
    n_max: int

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.quad_points_M < OVERSAMPLE * (2 * self.n_max + 1):
            raise ConfigurationError(
                f"quad_points_M must be >= {OVERSAMPLE*(2*self.n_max+1)} "
                f"for n_max={self.n_max}, got {self.quad_points_M}")


def default_action_config(k: int, n_max: int) -> ActionConfig:
    return ActionConfig(k, max(MIN_QUAD_POINTS, OVERSAMPLE * (2 * n_max + 1)), n_max)


@dataclass(frozen=True)
class ActionValue:
    total: float
    quadratic_part: float
    potential_part: float


def phase_times(cfg: ActionConfig, T: float) -> np.ndarray:
    """Evaluation times ``k*t_j`` reduced modulo T, computed in exact integer
    arithmetic on the grid indices so the kink sides of piecewise profiles are
    sampled consistently."""
    j = np.arange(cfg.quad_points_M)
    return ((j * cfg.k) % cfg.quad_points_M) * (T / cfg.quad_points_M)


def _check(u: SpectralLoop, cfg: ActionConfig) -> None:
    if cfg.n_max != u.n_max:
        raise ConfigurationError(
            f"config n_max={cfg.n_max} does not match loop n_max={u.n_max}")


def velocity_form(u: SpectralLoop) -> SpectralLoop:
    """The loop representing ``J u'``: mode ``m`` scaled by ``-(2*pi/T)*m``."""
    scale = -u.system.omega * u.modes.astype(float)
    return SpectralLoop(u.system, u.n_max, scale[:, None] * u.coeffs)


def action_value(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig) -> ActionValue:
    """Closed-form quadratic part plus trapezoid quadrature of the potential."""
    _check(u, cfg)
    T = u.system.period_T
    grid = TimeGrid(u.system, cfg.quad_points_M)
    samples = synthesize(u, grid)
    hvals = eval_h_many(H, phase_times(cfg, T), samples)
    quad_part = quadratic_form(u)
    pot_part = cfg.k * (T / cfg.quad_points_M) * float(np.sum(hvals))
    return ActionValue(total=quad_part + pot_part,
                       quadratic_part=quad_part, potential_part=pot_part)


def nonlinear_term(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig):
    """Samples of ``k * grad_H(k t mod T, u(t))`` on the quadrature grid."""
    grid = TimeGrid(u.system, cfg.quad_points_M)
    samples = synthesize(u, grid)
    return cfg.k * grad_h_many(H, phase_times(cfg, u.system.period_T), samples), samples


def action_gradient(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig,
                    report_aliasing: bool = False) -> SpectralLoop:
    """L2-representer of the action derivative, truncated to ``|m| <= n_max``.

    Mode ``m`` carries ``-(2*pi/T)*m*c_m`` plus the spectral projection of the
    nonlinear term; the derivative along a truncated direction ``v`` is then
    exactly ``T * sum_m g_m . v_m`` on the discrete quadrature.
    """
    _check(u, cfg)
    nl, _ = nonlinear_term(u, H, cfg)
    nl_loop = analyze(nl, cfg.n_max, u.system)
    g = velocity_form(u) + nl_loop
    if report_aliasing:
        tail = nl - synthesize(nl_loop, TimeGrid(u.system, cfg.quad_points_M))
        T = u.system.period_T
        tail_l2 = float(np.sqrt(T / cfg.quad_points_M * np.sum(tail ** 2)))
        g_l2 = l2_norm(g)
        if g_l2 > 0 and tail_l2 > ALIAS_REPORT_RATIO * g_l2:
            log.warning("aliasing energy above truncation: %.3e (%.1e of gradient)",
                        tail_l2, tail_l2 / g_l2)
    return g


def precondition(g: SpectralLoop) -> SpectralLoop:
    """Equalize mode time scales: mode ``m`` scaled by ``1/max(1, pi*|m|)``."""
    scale = 1.0 / np.maximum(1.0, np.pi * np.abs(g.modes.astype(float)))
    return SpectralLoop(g.system, g.n_max, scale[:, None] * g.coeffs)


def residual_norm(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig) -> float:
    """L2 norm over one period of ``J u' + k grad_H(k t, u)`` on the
    oversampled grid; zero exactly when u solves the rescaled system up to
    truncation."""
    _check(u, cfg)
    grid = TimeGrid(u.system, cfg.quad_points_M)
    vel = synthesize(velocity_form(u), grid)
    nl, _ = nonlinear_term(u, H, cfg)
    R = vel + nl
    T = u.system.period_T
    return float(np.sqrt(T / cfg.quad_points_M * np.sum(R ** 2)))


def directional_derivative(u: SpectralLoop, v: SpectralLoop,
                           H: HamiltonianSpec, cfg: ActionConfig,
                           h: float = 1e-5) -> tuple[float, float]:
    """(central difference, inner product with the gradient) for checking."""
    ap = action_value(u + h * v, H, cfg).total
    am = action_value(u - h * v, H, cfg).total
    fd = (ap - am) / (2 * h)
    g = action_gradient(u, H, cfg)
    ip = u.system.period_T * float(np.sum(g.coeffs * v.coeffs))
    return fd, ip


def gradient_check(H: HamiltonianSpec, k_values=(1, 3), n_max: int = 8,
                   trials: int = 20, seed: int = 0, h: float = 1e-5) -> float:
    """Max relative error of the gradient against central differences."""
    rng = np.random.default_rng(seed)
    system = H.system
    worst = 0.0
    for k in k_values:
        cfg = default_action_config(k, n_max)
        for _ in range(trials):
            cu = rng.standard_normal((2 * n_max + 1, system.dim))
            cv = rng.standard_normal((2 * n_max + 1, system.dim))
            u = SpectralLoop(system, n_max, cu)
            v = SpectralLoop(system, n_max, cv)
            v = v * (1.0 / h_half_norm(v))
            fd, ip = directional_derivative(u, v, H, cfg, h=h)
            err = abs(fd - ip) / max(abs(fd), abs(ip), 1e-8)
            worst = max(worst, err)
    return worst
