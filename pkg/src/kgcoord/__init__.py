"""Canonical bases for quantum symmetric pairs and coordinate rings of symmetric spaces."""
from .errors import KgError, VerificationError
from .qring import LaurentInt, RatFunc, LatticeId, Q, ONE, ZERO

__all__ = [
    "KgError", "VerificationError", "LaurentInt", "RatFunc", "LatticeId", "Q", "ONE", "ZERO",
]

__version__ = "0.1.0"
