"""Quasi-metrics, almost isometries, Randers/Fermat metrics and conformal lifts."""
from .errors import CapExceeded, InputError, MathFailure
from .qmetric import FiniteQuasiMetric, validate

__all__ = ["CapExceeded", "FiniteQuasiMetric", "InputError", "MathFailure", "validate"]
__version__ = "0.1.0"
