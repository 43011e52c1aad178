"""Pseudo-spectral simulation and diagnostics for the tamed Navier-Stokes equation
on the periodic box [0, 2*pi)^3."""

from .config import SimConfig, parse_config
from .diagnostics import DiagnosticsSample, RunSummary
from .dynamics import Forcing, ForcingMode, recover_pressure, rhs
from .errors import BlowUpError, ConfigurationError
from .integrator import StepPolicy, TimeState, run, simulate, step
from .scenarios import Scenario, make_forcing, make_initial
from .spectral import GridSpec, ScalarSpectralField, SpectralVelocity, leray_project
from .taming import TamingProfile, eval_g, eval_g_prime, eval_g_field

__version__ = "0.1.0"
