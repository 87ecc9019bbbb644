"""Uniform client layer over chat-completion backends, prompt templates, and
stage-output parsing, with a deterministic mock backend for tests."""

from .client import ChatClient, Completion, GatewayError, MockTranscript, ProtocolError, request_key
from .config import BackendConfig, backend_from_dict, load_backends
from .parsing import (
    ParsedClarification,
    StageParseError,
    Verdict,
    parse_stage_output,
    parse_verdict,
    strip_clarification,
)
from .prompts import PromptError, PromptTemplate, Stage, get_template, render_prompt

__all__ = [
    "BackendConfig",
    "ChatClient",
    "Completion",
    "GatewayError",
    "MockTranscript",
    "ParsedClarification",
    "PromptError",
    "PromptTemplate",
    "ProtocolError",
    "Stage",
    "StageParseError",
    "Verdict",
    "backend_from_dict",
    "get_template",
    "load_backends",
    "parse_stage_output",
    "parse_verdict",
    "render_prompt",
    "request_key",
    "strip_clarification",
]
