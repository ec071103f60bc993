"""Capacity of index modulation: closed forms, reference integrals and ergodic averages."""
from . import channels, core, ergodic, instcap, reference, specfun
from .core import CapacityEstimate, db_to_linear, sigma_vector
from .errors import AccuracyError, DomainError, IMCapError, InvalidInputError, UnsupportedError
from .instcap import capacity_closed_form, closed_form
from .reference import capacity_integral, index_mi_montecarlo, index_mi_quadrature

__version__ = "0.1.0"
