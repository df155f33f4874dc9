"""Relativistic Boltzmann kinematics, collision operators, near-vacuum solvers
and Newtonian-limit experiments."""

from .errors import (ConfigError, DegenerateCollisionError, DivergenceError, DomainError, InvalidTransformError,
                     RelBoltzError, SingularAngleError)
from .frames import Frame

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateCollisionError",
    "DivergenceError",
    "DomainError",
    "Frame",
    "InvalidTransformError",
    "RelBoltzError",
    "SingularAngleError",
]
