"""Saddle-point search for critical points of the loop-space action.

The action's quadratic part is negative definite on the positive modes and
positive definite on the negative modes, so critical points are genuine
saddles.  The search has three ingredients:

* staged truncation: solve in increasing Fourier orders, zero-padding each
  stage's answer as the next stage's start;
* a sign-split preconditioned gradient flow: descent on the constants and
  the negative modes, ascent on the positive modes, with backtracking on the
  preconditioned-gradient norm;
* Newton refinement of the spectral collocation system, with dual-number
  Hessians, SVD-based steps, and residual damping.

Rotation-invariant Hamiltonians (all built-ins depend on the state only
through its norm) make every nonzero critical point part of a phase family,
so the collocation Jacobian always has one structural null direction there.
The SVD step tolerates such symmetry kernels; a near-null space overlapping
the constant modes (e.g. a vanishing Hamiltonian) is instead reported as
DEGENERATE and never regularized silently.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .action import (ActionConfig, action_gradient, action_value,
                     default_action_config, phase_times, precondition,
                     residual_norm)
from .errors import ConfigurationError, FlowError
from .hamiltonians import HamiltonianSpec, hess_h_many
from .loops import (SpectralLoop, SystemSpec, TimeGrid, h_half_norm,
                    loop_from_modes, loop_to_json, pad_to_order, synthesize)

log = logging.getLogger(__name__)

COND_DEGENERATE = 1e12
SVD_RCOND = 1e-12
STEP_FLOOR = 1e-13
DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class SolverOptions:
    galerkin_schedule: tuple = (8, 16, 32, 64)
    flow_tol: float = 1e-4
    newton_tol: float = 1e-10
    max_flow_steps: int = 20000
    max_newton_steps: int = 50
    initial_step: float = 1e-2
    seed: int = 0
    perturbation_scale: float = 1e-2

    def __post_init__(self):
        sched = tuple(int(n) for n in self.galerkin_schedule)
        if not sched or any(b <= a for a, b in zip(sched, sched[1:])):
            raise ConfigurationError("galerkin_schedule must be strictly increasing")
        object.__setattr__(self, "galerkin_schedule", sched)
        for name in ("flow_tol", "newton_tol", "initial_step"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} must be positive")


@dataclass(frozen=True)
class SaddleResult:
    loop: SpectralLoop
    level_Ck: float
    residual: float
    converged: bool
    flow_steps: int
    newton_steps: int
    final_n_max: int
    closure_error: float | None = None
    diagnostics: dict = field(default_factory=dict)


def initial_guess(k: int, system: SystemSpec, seed: int, n_max: int = 8,
                  perturbation_scale: float = 1e-2, attempt: int = 0) -> SpectralLoop:
    """sqrt(k) times the unit mode-(+1) loop, plus a small random component
    on the constants and the negative modes.

    The mode-(+1) loop ``exp((2*pi/T)tJ) e1 / sqrt(pi)`` has unit split-form
    norm, so the unperturbed guess has norm exactly sqrt(k).
    """
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    base = {1: np.zeros(system.dim)}
    base[1][0] = math.sqrt(k) / math.sqrt(math.pi)
    guess = loop_from_modes(system, n_max, base)
    if perturbation_scale > 0:
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFF, k, attempt])
        zeta = np.zeros((2 * n_max + 1, system.dim))
        lo = -min(4, n_max)
        for m in range(lo, 1):
            zeta[m + n_max] = rng.standard_normal(system.dim)
        z = SpectralLoop(system, n_max, zeta)
        nz = h_half_norm(z)
        if nz > 0:
            guess = guess + (perturbation_scale * math.sqrt(k) / nz) * z
    return guess


def flow_direction(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig):
    """Sign-split preconditioned gradient and its norm (the flow merit).

    Positive modes move along the preconditioned gradient (ascent where the
    quadratic form is negative definite), constants and negative modes move
    against it.
    """
    pg = precondition(action_gradient(u, H, cfg))
    merit = h_half_norm(pg)
    signs = np.where(pg.modes > 0, 1.0, -1.0)
    direction = SpectralLoop(u.system, u.n_max, signs[:, None] * pg.coeffs)
    return direction, merit


STEP_RTOL = 1e-2   # per-step local error target (relative to 1 + |u|)
MAX_STEP = 1.0


def flow_search(u0: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig,
                opts: SolverOptions):
    """Sign-split flow with step-doubling local-error control.

    The gradient norm is not monotone along the flow (reaching a high-level
    saddle means climbing through terrain where the gradient first grows),
    so steps are accepted by comparing one Euler step against two half
    steps; the step halves when the discrepancy is large and doubles when it
    is comfortably small.  Stops when the merit (norm of the preconditioned
    gradient) reaches ``flow_tol`` or the evaluation budget runs out, and
    returns ``(loop, merit, steps, reached_tol)`` for the best state seen.
    Non-finite states are a hard error carrying a serialized dump.
    """
    u = u0
    direction, merit = flow_direction(u, H, cfg)
    if not math.isfinite(merit):
        raise FlowError("non-finite flow merit at start", loop_to_json(u0))
    best_u, best_merit = u, merit
    h = opts.initial_step
    steps = 0
    scale0 = 1.0 + h_half_norm(u0)
    while merit > opts.flow_tol and steps < opts.max_flow_steps:
        full = u + h * direction
        half = u + (0.5 * h) * direction
        half_dir, _ = flow_direction(half, H, cfg)
        two_half = half + (0.5 * h) * half_dir
        err = h_half_norm(full - two_half)
        steps += 1
        tol = STEP_RTOL * (1.0 + h_half_norm(u))
        if err <= tol:
            u = two_half
            if not np.all(np.isfinite(u.coeffs)):
                raise FlowError("non-finite flow state", loop_to_json(best_u))
            direction, merit = flow_direction(u, H, cfg)
            steps += 1
            if not math.isfinite(merit):
                raise FlowError("non-finite flow merit", loop_to_json(best_u))
            if merit < best_merit:
                best_u, best_merit = u, merit
            if err <= 0.25 * tol:
                h = min(2.0 * h, MAX_STEP)
            if h_half_norm(u) > DIVERGENCE_FACTOR * scale0:
                log.warning("flow diverging (norm %.3e); stopping", h_half_norm(u))
                break
        else:
            h *= 0.5
            if h < STEP_FLOOR:
                break
    if merit <= opts.flow_tol:
        return u, merit, steps, True
    return best_u, best_merit, steps, False


def _rotation_tensor(modes: np.ndarray, times: np.ndarray, system: SystemSpec):
    """Block rotations exp((2*pi/T) m t J) with shape (M, K, 2N, 2N)."""
    N = system.half_dim_N
    ang = system.omega * np.outer(times, modes.astype(float))
    c, s = np.cos(ang), np.sin(ang)
    eye = np.eye(N)
    M, K = ang.shape
    R = np.empty((M, K, 2 * N, 2 * N))
    R[:, :, :N, :N] = c[:, :, None, None] * eye
    R[:, :, :N, N:] = -s[:, :, None, None] * eye
    R[:, :, N:, :N] = s[:, :, None, None] * eye
    R[:, :, N:, N:] = c[:, :, None, None] * eye
    return R


def collocation_system(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig):
    """Residual coefficients F (the action gradient) and their Jacobian.

    The Jacobian block coupling modes (m, l) is
    ``-(2*pi/T) m I delta_{ml} + (1/M) sum_j R(m,t_j)^T B_j R(l,t_j)`` with
    ``B_j = k Hess_H(k t_j, u(t_j))`` from nested dual numbers.
    """
    system = u.system
    M = cfg.quad_points_M
    grid = TimeGrid(system, M)
    times = grid.times
    samples = synthesize(u, grid)
    B = cfg.k * hess_h_many(H, phase_times(cfg, system.period_T), samples)
    R = _rotation_tensor(u.modes, times, system)
    T1 = np.einsum("jmba,jbc->jmac", R, B, optimize=True)
    A_nl = np.einsum("jmac,jlcd->mald", T1, R, optimize=True) / M
    K = 2 * u.n_max + 1
    d = system.dim
    A = A_nl.reshape(K * d, K * d)
    lin = -system.omega * np.repeat(u.modes.astype(float), d)
    A[np.arange(K * d), np.arange(K * d)] += lin
    F = action_gradient(u, H, cfg).coeffs.reshape(-1)
    return F, A


def _zero_mode_fraction(vec: np.ndarray, n_max: int, dim: int) -> float:
    v = vec.reshape(2 * n_max + 1, dim)
    return float(np.sum(v[n_max] ** 2) / np.sum(v ** 2))


def newton_refine(u: SpectralLoop, H: HamiltonianSpec, cfg: ActionConfig,
                  opts: SolverOptions) -> SaddleResult:
    """Damped Newton on the collocation system.

    Steps are minimal-norm SVD solutions, which ride out the structural
    phase-direction kernel of rotation-invariant problems.  A near-null
    space concentrated on the constant modes means the linearization cannot
    determine the mean of the loop; that is reported as DEGENERATE.
    """
    res = residual_norm(u, H, cfg)
    history = [res]
    diagnostics: dict = {"degenerate": False, "phase_kernel": False}
    steps = 0
    converged = res <= opts.newton_tol * (1.0 + h_half_norm(u))
    while not converged and steps < opts.max_newton_steps:
        F, A = collocation_system(u, H, cfg)
        U, s, Vt = np.linalg.svd(A)
        smax = s[0] if s[0] > 0 else 1.0
        near_null = s < smax / COND_DEGENERATE
        if np.any(near_null):
            fracs = [_zero_mode_fraction(Vt[i], u.n_max, u.system.dim)
                     for i in np.nonzero(near_null)[0]]
            if any(f > 0.5 for f in fracs):
                diagnostics["degenerate"] = True
                diagnostics["note"] = "DEGENERATE: constant modes in Jacobian kernel"
                break
            diagnostics["phase_kernel"] = True
        inv = np.where(s > smax * SVD_RCOND, 1.0 / np.where(s > 0, s, 1.0), 0.0)
        delta = -(Vt.T @ (inv * (U.T @ F)))
        step = SpectralLoop(u.system, u.n_max,
                            delta.reshape(2 * u.n_max + 1, u.system.dim))
        # damping: halve until the residual decreases
        scale = 1.0
        accepted = False
        for _ in range(20):
            cand = u + scale * step
            cand_res = residual_norm(cand, H, cfg)
            if cand_res < res:
                u, res = cand, cand_res
                accepted = True
                break
            scale *= 0.5
        steps += 1
        history.append(res)
        if not accepted:
            break
        converged = res <= opts.newton_tol * (1.0 + h_half_norm(u))
    diagnostics["residual_history"] = history
    level = action_value(u, H, cfg).total
    return SaddleResult(loop=u, level_Ck=level, residual=res, converged=bool(converged),
                        flow_steps=0, newton_steps=steps, final_n_max=u.n_max,
                        diagnostics=diagnostics)


def solve(H: HamiltonianSpec, k: int, opts: SolverOptions | None = None,
          warm_start: SpectralLoop | None = None, attempt: int = 0) -> SaddleResult:
    """Staged flow + Newton search for a critical loop at subharmonic index k.

    ``warm_start`` (typically the previous index's solution) replaces the
    random initial guess.  The result of each stage seeds the next by
    zero-padding; the final stage's loop, level, and residual are returned.
    The reported level is the value of the located critical point; whether it
    realizes any particular minimax level is not determined by this search.
    """
    opts = opts or SolverOptions()
    system = H.system
    schedule = opts.galerkin_schedule
    if warm_start is not None:
        u = pad_to_order(warm_start, schedule[0])
    else:
        u = initial_guess(k, system, opts.seed, n_max=schedule[0],
                          perturbation_scale=opts.perturbation_scale,
                          attempt=attempt)
    total_flow = 0
    total_newton = 0
    stages = []
    result: SaddleResult | None = None
    for n in schedule:
        cfg = default_action_config(k, n)
        u = pad_to_order(u, n)
        u, merit, fsteps, flow_ok = flow_search(u, H, cfg, opts)
        total_flow += fsteps
        result = newton_refine(u, H, cfg, opts)
        total_newton += result.newton_steps
        u = result.loop
        stages.append({"n_max": n, "flow_steps": fsteps, "flow_merit": merit,
                       "flow_reached_tol": flow_ok,
                       "newton_steps": result.newton_steps,
                       "residual": result.residual,
                       "level": result.level_Ck,
                       "converged": result.converged,
                       "degenerate": result.diagnostics.get("degenerate", False)})
        if result.diagnostics.get("degenerate"):
            log.info("stage n=%d degenerate for k=%d", n, k)
    assert result is not None
    diagnostics = dict(result.diagnostics)
    diagnostics["stages"] = stages
    diagnostics["branch_note"] = (
        "critical point located by local saddle search; correspondence to "
        "any particular minimax level is not established")
    return replace(result, flow_steps=total_flow, newton_steps=total_newton,
                   diagnostics=diagnostics)
