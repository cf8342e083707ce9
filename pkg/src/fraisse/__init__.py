"""Fraisse limits built as chains of finite structures, with the genericity machinery."""
from .core import (ContractViolation, Embedding, FraisseClass, FraisseError, LabelRanges,
                   Structure, fresh_labels)

__all__ = ["ContractViolation", "Embedding", "FraisseClass", "FraisseError", "LabelRanges",
           "Structure", "fresh_labels"]
