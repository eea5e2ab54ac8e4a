"""Numerical laboratory for discrete spherical averages and maximal functions on Z^d."""
from .arith import farey_dissection, gauss_identity_residual, gauss_sum, gauss_sum_1d, units_mod
from .grid import GridFunction, load_grid, save_grid
from .lattice import enumerate_shell, shell_count, shell_growth_fit
from .operators import apply_average, hl_maximal, lp_norm, maximal_dyadic, maximal_full
from .symbols import (eval_I, eval_J, eval_symbol_a_circle, eval_symbol_a_exact, eval_symbol_b,
                      eval_symbol_c, residual_symbol)

__version__ = "0.1.0"
