"""Staged LLM detection pipeline: providers, phases, caching, cost ledger."""

from .cache import ResponseCache
from .ledger import CostLedger, LedgerRecord, call_cost
from .phases import (
    NOT_SECRET,
    PHASE_A1,
    PHASE_A2,
    PHASE_B1,
    PHASE_B1_CONTEXTUAL,
    PHASE_B2,
    CandidateSecret,
    LabeledSecret,
    PipelineSession,
    extract_json,
)
from .prompts import TEMPLATE_NAMES, load_templates, render, template_version
from .providers import (
    EXAMPLE_COMPLETION_PRICE,
    EXAMPLE_PROMPT_PRICE,
    TOKEN_ENV_VAR,
    HttpProvider,
    MockProvider,
    MockRules,
    PromptPayload,
    Provider,
    ProviderResponse,
    ProviderSpec,
    RateLimiter,
)
from .runner import ScanMode, ScanSettings, run_pipeline

__all__ = [
    "CandidateSecret",
    "CostLedger",
    "EXAMPLE_COMPLETION_PRICE",
    "EXAMPLE_PROMPT_PRICE",
    "HttpProvider",
    "LabeledSecret",
    "LedgerRecord",
    "MockProvider",
    "MockRules",
    "NOT_SECRET",
    "PHASE_A1",
    "PHASE_A2",
    "PHASE_B1",
    "PHASE_B1_CONTEXTUAL",
    "PHASE_B2",
    "PipelineSession",
    "PromptPayload",
    "Provider",
    "ProviderResponse",
    "ProviderSpec",
    "RateLimiter",
    "ResponseCache",
    "ScanMode",
    "ScanSettings",
    "TEMPLATE_NAMES",
    "TOKEN_ENV_VAR",
    "call_cost",
    "extract_json",
    "load_templates",
    "render",
    "run_pipeline",
    "template_version",
]
