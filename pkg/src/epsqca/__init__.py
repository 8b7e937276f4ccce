"""Approximate quantum-cellular-automaton decompositions of 1D spin-chain propagators."""

__version__ = "0.1.0"

from .errors import ComputationError, FitRejectedError, InputError, ResourceError  # noqa: E402,F401
