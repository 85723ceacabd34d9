"""LLM access: prompt templates, providers and transcripts."""
from .gateway import (
    GatewayError,
    HttpProvider,
    Provider,
    ProviderConfig,
    ReplayProvider,
    ScriptGapError,
    Transcript,
    TranscriptEntry,
    TransportError,
    complete,
    embed,
    make_provider,
    replay_provider,
)
from .prompts import PLACEHOLDERS, ChatRequest, PromptError, render_prompt

__all__ = [
    "GatewayError", "HttpProvider", "Provider", "ProviderConfig", "ReplayProvider",
    "ScriptGapError", "Transcript", "TranscriptEntry", "TransportError", "complete", "embed",
    "make_provider", "replay_provider", "PLACEHOLDERS", "ChatRequest", "PromptError", "render_prompt",
]
