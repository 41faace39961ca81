"""Subharmonic sweep: solve over a range of indices, verify, classify.

For each index ``k`` the solver's loop is reparametrized to the long period
(``x(t) = u(t/k)``), verified by an independent fixed-step 4th-order
integration of the original system, and classified by its minimal period:
for a loop with base period ``kT`` the minimal period is ``rT`` with
``r = k / gcd(k, significant mode indices)``, cross-checked by comparing the
loop against its own shift by ``rT``.

Any index whose time dependence is genuinely active (the built-in families
have an explicit first-harmonic time factor) keeps integer ``r``; the sweep
does not attempt to verify that structural property for arbitrary
Hamiltonians.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from math import gcd

import numpy as np

from .action import default_action_config, residual_norm
from .errors import ConfigurationError
from .hamiltonians import HamiltonianSpec, grad_h
from .loops import (SpectralLoop, TimeGrid, h_half_norm, mode_support,
                    rescale_to_long_period, sup_norm, synthesize, time_shift)
from .saddle import SaddleResult, SolverOptions, solve

log = logging.getLogger(__name__)

CLOSURE_DEMOTION = 1e-4
BLOWUP_NORM = 1e12
MAX_RESTARTS = 3
SHIFT_TEST_FACTOR = 100.0


@dataclass(frozen=True)
class ScanConfig:
    k_values: tuple
    solver: SolverOptions = SolverOptions()
    period_tol: float = 1e-8
    rk_steps_per_period: int = 4096
    warm_start: bool = True

    def __post_init__(self):
        ks = tuple(int(k) for k in self.k_values)
        if not ks:
            raise ConfigurationError("k_values must be nonempty")
        if any(k < 1 for k in ks) or list(ks) != sorted(ks):
            raise ConfigurationError("k_values must be positive and ascending")
        object.__setattr__(self, "k_values", ks)

    @property
    def mode_significance_tol(self) -> float:
        # couple the significance threshold to solver accuracy so converged
        # noise modes cannot fake a longer period
        return max(self.period_tol, 10.0 * self.solver.newton_tol)


@dataclass(frozen=True)
class ScanRecord:
    k: int
    level_Ck: float
    sup_norm: float
    residual: float
    minimal_r: int
    closure_error: float
    converged: bool
    restarts: int = 0
    notes: str = ""

    @property
    def level_per_k(self) -> float:
        return self.level_Ck / self.k

    @property
    def t_periodic(self) -> bool:
        return self.minimal_r == 1


@dataclass(frozen=True)
class ScanReport:
    records: tuple
    summary: dict


@dataclass(frozen=True)
class ClosureResult:
    closure_error: float
    max_checkpoint_dev: float
    blew_up: bool = False


def is_prime(k: int) -> bool:
    if k < 2:
        return False
    return all(k % d for d in range(2, int(math.isqrt(k)) + 1))


def primes_up_to(P: int) -> list[int]:
    return [k for k in range(2, P + 1) if is_prime(k)]


def minimal_period(x: SpectralLoop, k: int, tol: float) -> int:
    """Smallest integer r with x exactly rT-periodic, via mode-support gcd.

    ``x`` lives on base period ``kT``; a constant (or zero) orbit returns 0.
    """
    thresh = tol * (1.0 + h_half_norm(x))
    support = mode_support(x, thresh)
    nonzero = [m for m in support if m != 0]
    if not nonzero:
        return 0
    g = k
    for m in nonzero:
        g = gcd(g, abs(m))
    return k // g


def shift_test_period(x: SpectralLoop, k: int, tol: float) -> int:
    """Smallest divisor r of k with ``sup |x(t + rT) - x(t)|`` negligible.

    Independent geometric cross-check of :func:`minimal_period` built on the
    exact coefficient-space shift.
    """
    thresh = tol * (1.0 + h_half_norm(x))
    if not [m for m in mode_support(x, thresh) if m != 0]:
        return 0
    scale = SHIFT_TEST_FACTOR * tol * (1.0 + sup_norm(x))
    base_T = x.system.period_T / k
    grid = TimeGrid(x.system, max(8 * (2 * x.n_max + 1), 64))
    xs = synthesize(x, grid)
    for r in range(1, k + 1):
        if k % r:
            continue
        shifted = synthesize(time_shift(x, r * base_T), grid)
        dev = float(np.max(np.sqrt(np.sum((shifted - xs) ** 2, axis=1))))
        if dev <= scale:
            return r
    return k


def closure_check(x: SpectralLoop, H: HamiltonianSpec, k: int,
                  steps_per_period: int = 4096) -> ClosureResult:
    """Integrate the original system from x(0) across the long period.

    Classical fixed-step 4th-order scheme (reproducibility over adaptivity);
    returns the normalized endpoint defect and the worst deviation from the
    spectral orbit over 64 checkpoints.
    """
    kT = x.system.period_T
    n_steps = int(steps_per_period) * int(k)
    dt = kT / n_steps
    check_every = max(1, n_steps // 64)
    check_steps = list(range(check_every, n_steps + 1, check_every))
    check_times = np.array([i * dt for i in check_steps])
    xref = synthesize_at_times(x, check_times)
    sup = sup_norm(x)

    def rhs(t, y):
        g = grad_h(H, t, y)
        N = len(y) // 2
        return np.concatenate([-g[N:], g[:N]])  # J applied to the gradient

    y = np.array(x.coeffs.sum(axis=0))  # u(0) = sum of rotating coefficients
    y0 = np.array(y)
    max_dev = 0.0
    ci = 0
    for i in range(n_steps):
        t = i * dt
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > BLOWUP_NORM:
            return ClosureResult(float("inf"), float("inf"), blew_up=True)
        if ci < len(check_steps) and i + 1 == check_steps[ci]:
            max_dev = max(max_dev, float(np.linalg.norm(y - xref[ci])))
            ci += 1
    closure = float(np.linalg.norm(y - y0)) / (1.0 + sup)
    return ClosureResult(closure, max_dev)


def synthesize_at_times(x: SpectralLoop, times: np.ndarray) -> np.ndarray:
    """Loop samples at arbitrary times (not necessarily a uniform grid)."""
    from .loops import _from_complex, _phase_matrix, _to_complex
    z = _to_complex(x.coeffs, x.system.half_dim_N)
    E = _phase_matrix(x.modes, np.asarray(times, dtype=float), x.system.period_T)
    return _from_complex(E @ z)


def scan_one(H: HamiltonianSpec, k: int, cfg: ScanConfig,
             warm_start: SpectralLoop | None = None):
    """Solve, verify, and classify a single index.

    A converged orbit at prime k that comes out T-periodic (or constant) is
    retried up to three times from fresh random perturbations before the
    T-periodic branch is accepted.  Returns ``(ScanRecord, SaddleResult|None)``.
    """
    tol = cfg.mode_significance_tol
    res = None
    restarts = 0
    note = ""
    for attempt in range(MAX_RESTARTS + 1):
        warm = warm_start if attempt == 0 else None
        try:
            cand = solve(H, k, cfg.solver, warm_start=warm, attempt=attempt)
        except Exception as exc:  # keep sweeping; record the failure
            log.warning("solve failed for k=%d: %s", k, exc)
            note = f"solve error: {exc}"
            break
        res = cand
        if not cand.converged:
            break
        r = minimal_period(rescale_to_long_period(cand.loop, k), k, tol)
        if is_prime(k) and r in (0, 1) and attempt < MAX_RESTARTS:
            restarts += 1
            continue
        break
    if res is None:
        return ScanRecord(k=k, level_Ck=float("nan"), sup_norm=float("nan"),
                          residual=float("nan"), minimal_r=0,
                          closure_error=float("nan"), converged=False,
                          restarts=restarts, notes=note), None
    x = rescale_to_long_period(res.loop, k)
    r_gcd = minimal_period(x, k, tol)
    r_shift = shift_test_period(x, k, tol)
    if r_gcd != r_shift:
        log.warning("period tests disagree at k=%d: gcd=%d shift=%d",
                    k, r_gcd, r_shift)
        note = (note + "; " if note else "") + \
            f"period test disagreement gcd={r_gcd} shift={r_shift}"
    closure = closure_check(x, H, k, cfg.rk_steps_per_period)
    converged = bool(res.converged)
    if converged and (closure.blew_up or closure.closure_error > CLOSURE_DEMOTION):
        converged = False
        note = (note + "; " if note else "") + \
            f"demoted: closure {closure.closure_error:.3e} above {CLOSURE_DEMOTION:.0e}"
    if res.diagnostics.get("degenerate"):
        note = (note + "; " if note else "") + "DEGENERATE"
    record = ScanRecord(
        k=k, level_Ck=res.level_Ck, sup_norm=sup_norm(x),
        residual=res.residual, minimal_r=r_gcd,
        closure_error=closure.closure_error, converged=converged,
        restarts=restarts, notes=note)
    return record, res


def scan(H: HamiltonianSpec, cfg: ScanConfig) -> ScanReport:
    """Sweep k ascending, warm-starting each index from the previous one,
    and digest the growth trends.  Per-index failures are recorded and the
    sweep continues."""
    records = []
    prev: SpectralLoop | None = None
    for k in cfg.k_values:
        record, res = scan_one(H, k, cfg, warm_start=prev if cfg.warm_start else None)
        records.append(record)
        if record.converged and res is not None:
            prev = res.loop
    return ScanReport(records=tuple(records), summary=_summarize(records))


def _parallel_entry(payload):
    H, k, cfg = payload
    return scan_one(H, k, cfg, warm_start=None)


def scan_parallel(H: HamiltonianSpec, cfg: ScanConfig, max_workers: int) -> ScanReport:
    """Cold-start sweep with the independent indices solved in parallel.

    No warm-start chaining; records are merged in ascending k, so the report
    does not depend on completion order.
    """
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        out = list(pool.map(_parallel_entry, [(H, k, cfg) for k in cfg.k_values]))
    records = [record for record, _ in out]
    return ScanReport(records=tuple(records), summary=_summarize(records))


def _summarize(records) -> dict:
    ok = [r for r in records if r.converged]
    lv = [r.level_per_k for r in ok]
    sp = [r.sup_norm for r in ok]
    return {
        "n_requested": len(records),
        "n_converged": len(ok),
        "level_per_k_increasing": all(b > a for a, b in zip(lv, lv[1:])),
        "sup_norm_increasing": all(b > a for a, b in zip(sp, sp[1:])),
        "level_per_k_first_last": [lv[0], lv[-1]] if lv else None,
        "sup_norm_first_last": [sp[0], sp[-1]] if sp else None,
        "true_subharmonic_primes": [r.k for r in ok
                                    if is_prime(r.k) and r.minimal_r == r.k],
        "branch_note": ("levels are those of the critical points found by the "
                        "local search; trend checks are finite-range evidence, "
                        "not verification of any limit"),
    }


CSV_COLUMNS = ("k", "C_k", "C_k_over_k", "sup_norm", "residual",
               "minimal_r", "closure_error", "converged")


def report_to_csv(report: ScanReport) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for r in report.records:
        lines.append(",".join([
            str(r.k), repr(r.level_Ck), repr(r.level_per_k), repr(r.sup_norm),
            repr(r.residual), str(r.minimal_r), repr(r.closure_error),
            "true" if r.converged else "false",
        ]))
    return "\n".join(lines) + "\n"
