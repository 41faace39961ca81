"""Configuration loading and resolution for the command-line tools.

One JSON document configures everything::

    {
      "system":      {"T": 10.0, "N": 1},
      "hamiltonian": "EXAMPLE_4_1",            # tag, or {"builtin": tag, ...}
                                               # or {"expression": "..."}
      "gamma":       "LOG_SQRT",               # tag or {"kind": ..., constants}
      "solver":      { SolverOptions fields },
      "scan":        {"k_values": [1,2,3], "period_tol": ..., ...},
      "audit":       {"p": "9", "q": "0", "C": [[0, 5]], "f": "0", ...}
    }

Every omitted field takes the documented default; the fully resolved
configuration is recorded in the run manifest.  The default period is large
enough that the k = 1 starting loop of the built-in log-growth families
already lies in the basin of a nontrivial orbit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .audit import AuditConfig
from .errors import ConfigurationError
from .gamma import GammaSpec, expression_gamma, log_sqrt_gamma, power_gamma
from .hamiltonians import (BUILTIN_TAGS, HamiltonianSpec, builtin_hamiltonian,
                           expression_hamiltonian)
from .loops import SystemSpec
from .saddle import SolverOptions

DEFAULT_T = 10.0
DEFAULT_N = 1
DEFAULT_SCAN = {"k_values": None, "period_tol": 1e-8,
                "rk_steps_per_period": 4096, "warm_start": True}


@dataclass(frozen=True)
class ResolvedConfig:
    system: SystemSpec
    hamiltonian: HamiltonianSpec
    gamma: GammaSpec
    solver: SolverOptions
    scan_options: dict
    audit: AuditConfig
    snapshot: dict  # fully resolved values, for the manifest


def _take(raw: dict, allowed: dict, section: str) -> dict:
    out = dict(allowed)
    for key, val in raw.items():
        if key not in allowed:
            raise ConfigurationError(f"unknown key {key!r} in section {section!r}")
        out[key] = val
    return out


def _resolve_hamiltonian(spec, system: SystemSpec) -> HamiltonianSpec:
    if isinstance(spec, str):
        text = spec.strip()
        if text.upper() in BUILTIN_TAGS:
            return builtin_hamiltonian(system, text)
        return expression_hamiltonian(system, text)
    if isinstance(spec, dict):
        spec = dict(spec)
        if "builtin" in spec:
            tag = spec.pop("builtin")
            return builtin_hamiltonian(system, tag, **spec)
        if "expression" in spec:
            return expression_hamiltonian(system, spec["expression"])
    raise ConfigurationError(f"cannot interpret hamiltonian spec {spec!r}")


def _resolve_gamma(spec) -> GammaSpec:
    if isinstance(spec, str):
        kind = spec.strip().upper()
        if kind == "LOG_SQRT":
            return log_sqrt_gamma()
        if kind.startswith("POWER"):
            raise ConfigurationError("POWER gamma needs {'kind': 'POWER', 'alpha': a}")
        raise ConfigurationError(f"unknown gamma tag {spec!r}")
    if isinstance(spec, dict):
        spec = dict(spec)
        kind = str(spec.pop("kind", "LOG_SQRT")).upper()
        if kind == "LOG_SQRT":
            base = log_sqrt_gamma()
            fields = {f: spec.pop(f, getattr(base, f))
                      for f in ("alpha", "a", "b", "c", "c0")}
            _reject_extra(spec, "gamma")
            return GammaSpec("LOG_SQRT", **fields)
        if kind == "POWER":
            alpha = float(spec.pop("alpha"))
            base = power_gamma(alpha)
            fields = {f: spec.pop(f, getattr(base, f)) for f in ("a", "b", "c", "c0")}
            _reject_extra(spec, "gamma")
            return GammaSpec("POWER", alpha=alpha, **fields)
        if kind == "EXPRESSION":
            source = spec.pop("source")
            return expression_gamma(source, **spec)
        raise ConfigurationError(f"unknown gamma kind {kind!r}")
    raise ConfigurationError(f"cannot interpret gamma spec {spec!r}")


def _reject_extra(spec: dict, section: str) -> None:
    if spec:
        raise ConfigurationError(f"unknown key(s) {sorted(spec)} in section {section!r}")


def resolve_config(raw: dict) -> ResolvedConfig:
    raw = dict(raw or {})
    system_raw = _take(raw.pop("system", {}), {"T": DEFAULT_T, "N": DEFAULT_N},
                       "system")
    system = SystemSpec(float(system_raw["T"]), int(system_raw["N"]))

    ham_spec = raw.pop("hamiltonian", "EXAMPLE_4_1")
    H = _resolve_hamiltonian(ham_spec, system)

    gamma_spec = raw.pop("gamma", "LOG_SQRT")
    gamma = _resolve_gamma(gamma_spec)

    base = SolverOptions()
    solver_raw = _take(raw.pop("solver", {}), {
        "galerkin_schedule": list(base.galerkin_schedule),
        "flow_tol": base.flow_tol, "newton_tol": base.newton_tol,
        "max_flow_steps": base.max_flow_steps,
        "max_newton_steps": base.max_newton_steps,
        "initial_step": base.initial_step, "seed": base.seed,
        "perturbation_scale": base.perturbation_scale,
    }, "solver")
    solver = SolverOptions(
        galerkin_schedule=tuple(int(n) for n in solver_raw["galerkin_schedule"]),
        flow_tol=float(solver_raw["flow_tol"]),
        newton_tol=float(solver_raw["newton_tol"]),
        max_flow_steps=int(solver_raw["max_flow_steps"]),
        max_newton_steps=int(solver_raw["max_newton_steps"]),
        initial_step=float(solver_raw["initial_step"]),
        seed=int(solver_raw["seed"]),
        perturbation_scale=float(solver_raw["perturbation_scale"]),
    )

    scan_raw = _take(raw.pop("scan", {}), dict(DEFAULT_SCAN), "scan")

    audit_base = AuditConfig()
    audit_raw = _take(raw.pop("audit", {}), {
        "r_max": audit_base.r_max, "radial_points": audit_base.radial_points,
        "direction_count": audit_base.direction_count,
        "time_points": audit_base.time_points,
        "p": audit_base.p_spec, "q": audit_base.q_spec,
        "C": None, "f": audit_base.lower_bound_f,
        "divergence_threshold": audit_base.divergence_threshold,
        "tail_window": audit_base.tail_window,
    }, "audit")
    subset_C = audit_raw["C"]
    if subset_C is not None:
        subset_C = tuple((float(a), float(b)) for a, b in subset_C)
    audit = AuditConfig(
        r_max=float(audit_raw["r_max"]),
        radial_points=int(audit_raw["radial_points"]),
        direction_count=int(audit_raw["direction_count"]),
        time_points=int(audit_raw["time_points"]),
        p_spec=str(audit_raw["p"]), q_spec=str(audit_raw["q"]),
        subset_C=subset_C, lower_bound_f=str(audit_raw["f"]),
        divergence_threshold=float(audit_raw["divergence_threshold"]),
        tail_window=int(audit_raw["tail_window"]),
    )

    _reject_extra(raw, "<top level>")

    snapshot = {
        "system": {"T": system.period_T, "N": system.half_dim_N},
        "hamiltonian": H.describe(),
        "gamma": {"kind": gamma.kind, "alpha": gamma.alpha, "a": gamma.a,
                  "b": gamma.b, "c": gamma.c, "c0": gamma.c0,
                  "source": gamma.source},
        "solver": {"galerkin_schedule": list(solver.galerkin_schedule),
                   "flow_tol": solver.flow_tol, "newton_tol": solver.newton_tol,
                   "max_flow_steps": solver.max_flow_steps,
                   "max_newton_steps": solver.max_newton_steps,
                   "initial_step": solver.initial_step, "seed": solver.seed,
                   "perturbation_scale": solver.perturbation_scale},
        "scan": dict(scan_raw),
        "audit": {"r_max": audit.r_max, "radial_points": audit.radial_points,
                  "direction_count": audit.direction_count,
                  "time_points": audit.time_points, "p": audit.p_spec,
                  "q": audit.q_spec,
                  "C": [list(iv) for iv in subset_C] if subset_C else None,
                  "f": audit.lower_bound_f,
                  "divergence_threshold": audit.divergence_threshold,
                  "tail_window": audit.tail_window},
    }
    return ResolvedConfig(system=system, hamiltonian=H, gamma=gamma,
                          solver=solver, scan_options=scan_raw, audit=audit,
                          snapshot=snapshot)


def load_config(path: str) -> ResolvedConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path!r} is not valid JSON: {exc}") from exc
    return resolve_config(raw)
