"""Homogenization toolkit for prey-taxis systems under a shortwave external signal."""

from .torus import TorusGrid, FastField, TauProfile, XiProfile
from .signal import CosineSignal, TravelingWave, TabulatedSignal, WeightField, build_weight
from .cells import CellOperatorContext, EffectiveMatrix, matrix_M, solve_L, solve_heat
from .effective import EffectiveCoefficients, effective_diffusivity, effective_drift, homogenize
from .kinetics import make_model, find_equilibrium, Equilibrium
from .stability import hat_params, triad, threshold_chat2, eigen_oracle, scan

__version__ = "0.1.0"
