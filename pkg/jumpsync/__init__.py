"""
Front Speeds of Jumping and Synchronizing Particles

A Python library for the critical speed of particle systems driven by
independent forward jumps and synchronization to peers ahead: finite-n
simulation, the associated branching random walk, mean-field dynamics on a
grid and traveling-wave shapes.
"""

__version__ = "1.0.0"
__author__ = "Front Speeds Toolkit"

from .dist import (DeterministicOne, EmpiricalCdf, ExponentialMeanOne, JumpLaw,
                   UniformZeroTwo, law_from_spec)
from .speed import critical, v_of_zeta, zeta_of_v
from .particles import simulate_speed
from .brw import leading_cdf, simulate_brw
from .mfl import GridCdf, bmfl, integrate
from .tws import tws_left_boundary, tws_original, tws_right_boundary
from .optimize import optimize_tradeoff

__all__ = [
    "JumpLaw",
    "ExponentialMeanOne",
    "UniformZeroTwo",
    "DeterministicOne",
    "EmpiricalCdf",
    "law_from_spec",
    "critical",
    "v_of_zeta",
    "zeta_of_v",
    "simulate_speed",
    "simulate_brw",
    "leading_cdf",
    "GridCdf",
    "bmfl",
    "integrate",
    "tws_original",
    "tws_left_boundary",
    "tws_right_boundary",
    "optimize_tradeoff",
]
