"""Simulation and prediction lab for the spherical SK model with a Curie-Weiss spike."""

from .analytics import (BivariateGaussianLaw, CltParams, Regime, TransitionParams, Q_of_x,
                        clt_params, limiting_free_energy, s_of_x, transition_law)
from .ensembles import EnsembleConfig, EntryDistribution, assemble_deformed, goe, make_two_point, \
    sample_wigner
from .errors import ConvergenceError, RigidityViolation
from .ialpha import I_alpha
from .partition import contour_log_partition, free_energy_breakdown, steepest_descent_logZ
from .spectral import Spectrum, chi_N, eigenvalues

__version__ = "0.1.0"
