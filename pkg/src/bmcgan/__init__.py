"""Brownian motion controller for GAN training dynamics.

Simulation of the controlled Dirac-GAN SDE, its exponential stability bound,
convergence sweeps, and a small neural GAN trained with the matching
stochastic regularizer.
"""
__version__ = "0.1.0"

from .controller import NULL, BmcParams, diffusion, null_controller
from .dynamics import FAMILIES, GAN_LOGSIGMOID, WGAN_LINEAR, State, SystemSpec, drift, gradient_field, lipschitz_check
from .integrator import SdeConfig, Trajectory, integrate, integrate_batch, strong_error
from .noise import NoiseStream
from .stability import (ConvergenceCriterion, StabilityReport, check_condition, detect_convergence, empirical_rate,
                        phi_bound)
from .sweep import SweepGrid, SweepTable, ordering_report, run_sweep
