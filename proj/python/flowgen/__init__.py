"""Python bindings for the flowgen response generator."""

from ._core import (
    AlignmentError,
    CoverageError,
    Error,
    ExecutionError,
    Grammar,
    InvalidGrammar,
    RemoteError,
    Session,
    SyntaxError,
    bleu4,
    normalize,
    recall_at_k,
    rouge_l,
)

__all__ = [
    "AlignmentError",
    "CoverageError",
    "Error",
    "ExecutionError",
    "Grammar",
    "InvalidGrammar",
    "RemoteError",
    "Session",
    "SyntaxError",
    "bleu4",
    "normalize",
    "recall_at_k",
    "rouge_l",
]
