"""Rate-distortion-equivocation tradeoffs for private release of database attributes."""

from .model import EncodedSet, SourceModel
from .probcore import BudgetError, Channel, JointPmf, Pmf, UsageError, ValidationError

__all__ = ["EncodedSet", "SourceModel", "BudgetError", "Channel", "JointPmf", "Pmf",
           "UsageError", "ValidationError"]
__version__ = "0.1.0"
