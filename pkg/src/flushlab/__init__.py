"""Flushing control of Navier-Stokes channel flow: profiles, boundary layers,
correctors, ansatz assembly, Littlewood-Paley tools and a spectral solver."""

from .flush_profile import FlushProfile, build_flush_profile, eval_h, profile_moments
from .boundary_layer import layer_exact, solve_boundary_layer, verify_decay_rate
from .technical_profile import solve_technical_profile
from .band_field import BandField, make_analytic_data
from .ansatz import AnsatzBundle, assemble_fapp, assemble_uapp, build_bundle
from .ns_solver import SolverConfig, solve_navier_stokes, solve_remainder

__version__ = "0.1.0"
