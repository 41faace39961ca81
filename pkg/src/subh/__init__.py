"""subh: spectral saddle-point search for long-period orbits of
time-periodic first-order Hamiltonian systems, with growth-condition audits.
"""

__version__ = "0.1.0"

from .loops import (SystemSpec, SpectralLoop, SplitLoop, TimeGrid,
                    synthesize, analyze, quadratic_form, split, norms,
                    time_shift, rescale_to_long_period)
from .hamiltonians import (HamiltonianSpec, builtin_hamiltonian,
                           expression_hamiltonian, time_reverse,
                           eval_h, grad_h)
from .gamma import GammaSpec, gamma_eval, gamma_iv_functional
from .action import ActionConfig, ActionValue, action_value, action_gradient, \
    precondition, residual_norm
from .saddle import SolverOptions, SaddleResult, initial_guess, flow_search, \
    newton_refine, solve
from .scan import ScanConfig, ScanRecord, ScanReport, minimal_period, \
    closure_check, scan

__all__ = [
    "SystemSpec", "SpectralLoop", "SplitLoop", "TimeGrid",
    "synthesize", "analyze", "quadratic_form", "split", "norms",
    "time_shift", "rescale_to_long_period",
    "HamiltonianSpec", "builtin_hamiltonian", "expression_hamiltonian",
    "time_reverse", "eval_h", "grad_h",
    "GammaSpec", "gamma_eval", "gamma_iv_functional",
    "ActionConfig", "ActionValue", "action_value", "action_gradient",
    "precondition", "residual_norm",
    "SolverOptions", "SaddleResult", "initial_guess", "flow_search",
    "newton_refine", "solve",
    "ScanConfig", "ScanRecord", "ScanReport", "minimal_period",
    "closure_check", "scan",
]
