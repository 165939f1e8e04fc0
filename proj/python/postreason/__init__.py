"""Python bindings for the postreason evaluation core."""

import json as _json

from ._core import (
    Error,
    UndefinedDeltaError,
    answers_match,
    extract_answer,
    format_fixed2,
    mock_token_count,
    relative_delta,
    size_bucket,
    strip_thinking,
    truncate_at_answer,
    validate_trace,
)
from . import _core


def build_sft_record(id, question, gold, trace, system_text=""):
    """Masked training record as a dict with ``id``, ``segments`` and ``meta``."""
    return _json.loads(_core.build_sft_record(id, question, gold, trace, system_text))


def summarize_csv(path, registry="", claims=""):
    return _json.loads(_core.summarize_csv(path, registry, claims))


__all__ = [
    "Error",
    "UndefinedDeltaError",
    "answers_match",
    "build_sft_record",
    "extract_answer",
    "format_fixed2",
    "mock_token_count",
    "relative_delta",
    "size_bucket",
    "strip_thinking",
    "summarize_csv",
    "truncate_at_answer",
    "validate_trace",
]
