"""Characteristic-grid solver for spherical modes, weighted norms and decay fits."""

from .grid import ForcingSpec, NullGrid, bump, grid_for, make_grid
from .kernels import backend, march
from .solver import (SolutionField, convergence_study, dalembert_oracle, discrete_residual,
                     oracle_refinement, slice_energy, solve_spherical_forward)
from .norms import NormResult, NormSpec, sharpness_scan, weighted_norm, with_weight
from .decay import FitResult, decay_fit, power_fit
