"""Least-energy solutions of -div(|grad u_i|^(p-2) grad u_i) = g_i(u) on a grid.

Minimizers of the p-Dirichlet energy under a potential constraint are computed
by projected descent and rescaled to solutions; the ``verify`` module checks
the structural properties such solutions must have.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .field import Field, Grid, from_function, load_field, save_field
from .functionals import ProblemSpec, J, V, action, energy_report, least_energy_value
from .nonlinearity import make as make_nonlinearity
from .solver import SolverConfig, SolverResult, minimize_P0prime, minimize_P1, solve_least_energy

__all__ = [
    "Field", "Grid", "from_function", "load_field", "save_field", "ProblemSpec", "J", "V",
    "action", "energy_report", "least_energy_value", "make_nonlinearity", "SolverConfig",
    "SolverResult", "minimize_P1", "minimize_P0prime", "solve_least_energy",
]
