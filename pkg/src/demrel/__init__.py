"""Demonic relational calculus toolkit."""

from .relations import (
    Base,
    BaseMismatch,
    MissingBottom,
    NoCommonRefinement,
    Relation,
)

__all__ = [
    "Base",
    "BaseMismatch",
    "MissingBottom",
    "NoCommonRefinement",
    "Relation",
]

__version__ = "0.1.0"
