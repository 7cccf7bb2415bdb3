"""Single change-point solvers."""
from .annealing import (CoolingSchedule, KernelSpec, acceptance_probability, mh_step,
                        sa_solve)
from .mm import BruteForceResult, brute_force, mm_approx, mm_exact
from .state import (SolverState, StoppingRule, check_stop, default_epsilon, initial_thetas,
                    initialize)

__all__ = [
    "BruteForceResult", "CoolingSchedule", "KernelSpec", "SolverState", "StoppingRule",
    "acceptance_probability", "brute_force", "check_stop", "default_epsilon",
    "initial_thetas", "initialize", "mh_step", "mm_approx", "mm_exact", "sa_solve",
]
