"""The staged detection protocol.

Resource strings go through identification over the whole document (A1) and
per-candidate labeling (A2); code strings go through batched identification
(B1) and per-candidate labeling with class context (B2).  Labeling phases
may answer NOT-SECRET, which discards the candidate.  An opt-in variant
replaces B1 with one contextual call per string.

Identification responses are matched back to the extracted inputs by exact
value (or list number); anything the model returns that is not actually
present counts as a hallucination and is dropped, so no fabricated value
can ever reach a report.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from ..apk_ingest import (
    DOCUMENT_FOOTER,
    DOCUMENT_HEADER,
    element_line,
    render_strings_document,
)
from ..errors import MalformedResponse
from ..types import CodeSite, ExtractedString, StringSource
from ..validators import normalize_label
from . import prompts
from .cache import ResponseCache
from .ledger import CostLedger
from .providers import PromptPayload, Provider, ProviderResponse

PHASE_A1 = "A1"
PHASE_A2 = "A2"
PHASE_B1 = "B1"
PHASE_B2 = "B2"
PHASE_B1_CONTEXTUAL = "B1C"

NOT_SECRET = "NOT-SECRET"

# Completion-side headroom reserved when packing prompts against the
# provider's context size.
_RESPONSE_MARGIN_TOKENS = 512

_REPAIR_SUFFIX = ("\n\nYour previous reply could not be parsed. "
                  "Respond with only the requested JSON and nothing else.")


@dataclass(frozen=True)
class CandidateSecret:
    value: str
    source: StringSource
    origin: str | CodeSite          # resource entry name, or primary code site
    phase_found: str
    extra_sites: int = 0


@dataclass(frozen=True)
class LabeledSecret:
    candidate: CandidateSecret
    raw_label: str
    canonical_label: str
    is_secret: bool
    phase_labeled: str


def _is_not_secret(raw_label: str) -> bool:
    return re.sub(r"[\s_]+", "-", raw_label.strip().upper()) == NOT_SECRET


def make_labeled(candidate: CandidateSecret, raw_label: str,
                 phase: str) -> LabeledSecret:
    raw_label = raw_label.strip()
    if _is_not_secret(raw_label):
        return LabeledSecret(candidate, raw_label, "", False, phase)
    return LabeledSecret(candidate, raw_label, normalize_label(raw_label), True, phase)


def extract_json(text: str):
    """Parse the JSON body of a model reply, tolerating surrounding prose."""
    try:
        return json.loads(text)
    except ValueError:
        pass
    for opener, closer in (("[", "]"), ("{", "}")):
        start = text.find(opener)
        while start != -1:
            depth = 0
            for i in range(start, len(text)):
                if text[i] == opener:
                    depth += 1
                elif text[i] == closer:
                    depth -= 1
                    if depth == 0:
                        try:
                            return json.loads(text[start:i + 1])
                        except ValueError:
                            break
            start = text.find(opener, start + 1)
    raise ValueError("no parseable JSON in response")


class PipelineSession:
    """Shared per-app state: provider, cache, ledger and quality counters."""

    def __init__(self, provider: Provider, app_sha256: str,
                 cache: ResponseCache | None = None,
                 ledger: CostLedger | None = None):
        self.provider = provider
        self.spec = provider.spec
        self.app_sha256 = app_sha256
        self.cache = cache or ResponseCache(None)
        self.ledger = ledger or CostLedger()
        self.hallucinations = 0
        self.cache_hits = 0

    # -- provider plumbing -------------------------------------------------

    def _call(self, phase: str, prompt: str, payload: PromptPayload) -> str:
        key = ResponseCache.key(self.app_sha256, self.spec.model_id,
                                prompts.template_version(), phase, prompt)
        cached = self.cache.get(key)
        if cached is not None:
            self.cache_hits += 1
            return cached["text"]
        resp: ProviderResponse = self.provider.complete(prompt, phase, payload)
        self.ledger.record(phase, resp.prompt_tokens, resp.completion_tokens,
                           resp.latency_ms, self.spec)
        self.cache.put(key, {
            "text": resp.text,
            "prompt_tokens": resp.prompt_tokens,
            "completion_tokens": resp.completion_tokens,
        })
        return resp.text

    def _structured(self, phase: str, prompt: str, payload: PromptPayload):
        text = self._call(phase, prompt, payload)
        try:
            return extract_json(text)
        except ValueError:
            pass
        text = self._call(phase, prompt + _REPAIR_SUFFIX, payload)
        try:
            return extract_json(text)
        except ValueError as exc:
            raise MalformedResponse(f"{phase}: {exc}") from exc

    def _prompt_budget_chars(self, template_name: str) -> int:
        overhead = self.spec.estimate_tokens(prompts.render(template_name))
        budget_tokens = self.spec.max_context_tokens - overhead - _RESPONSE_MARGIN_TOKENS
        return max(1, budget_tokens) * self.spec.token_divisor

    # -- phase A: resource strings -----------------------------------------

    def _document_chunks(self, entries: list[ExtractedString]
                         ) -> list[tuple[str, list[ExtractedString]]]:
        """Split entries on element boundaries into minimally many documents.

        Each chunk is re-rendered as a canonical document that fits the
        prompt budget (single oversized elements still form a chunk of one).
        """
        budget = self._prompt_budget_chars("a1_identify.txt")
        full = render_strings_document(
            [(e.entry_name, e.value) for e in entries])
        if len(full) <= budget:
            return [(full, list(entries))]

        wrap_len = sum(len(s) + 1 for s in DOCUMENT_HEADER + DOCUMENT_FOOTER)
        ordered = sorted(entries, key=lambda e: (e.entry_name, e.value))
        chunks: list[tuple[str, list[ExtractedString]]] = []
        current: list[ExtractedString] = []
        current_len = wrap_len

        def flush() -> None:
            if current:
                doc = render_strings_document(
                    [(e.entry_name, e.value) for e in current])
                chunks.append((doc, list(current)))

        for entry in ordered:
            line_len = len(element_line(entry.entry_name, entry.value)) + 1
            if current and current_len + line_len > budget:
                flush()
                current, current_len = [], wrap_len
            current.append(entry)
            current_len += line_len
        flush()
        return chunks

    def phase_a1_identify(self, document: str,
                          entries: list[ExtractedString]) -> list[CandidateSecret]:
        if not document or not entries:
            return []
        by_value: dict[str, ExtractedString] = {}
        for e in entries:
            by_value.setdefault(e.value, e)

        candidates: dict[str, CandidateSecret] = {}
        for chunk_doc, chunk_entries in self._document_chunks(entries):
            payload = PromptPayload(
                kind="identify",
                values=tuple(e.value for e in chunk_entries),
            )
            prompt = prompts.render("a1_identify.txt", document=chunk_doc)
            reply = self._structured(PHASE_A1, prompt, payload)
            if not isinstance(reply, list):
                raise MalformedResponse(f"{PHASE_A1}: expected a JSON array")
            for item in reply:
                value = item if isinstance(item, str) else None
                entry = by_value.get(value) if value else None
                if entry is None:
                    self.hallucinations += 1
                    continue
                candidates.setdefault(value, CandidateSecret(
                    value=value, source=StringSource.XML,
                    origin=entry.entry_name, phase_found=PHASE_A1))
        return list(candidates.values())

    def phase_a2_label(self, candidate: CandidateSecret,
                       entries: list[ExtractedString],
                       document: str) -> LabeledSecret:
        context_doc = document
        chunks = self._document_chunks(entries)
        if len(chunks) > 1:
            for chunk_doc, chunk_entries in chunks:
                if any(e.value == candidate.value for e in chunk_entries):
                    context_doc = chunk_doc
                    break
        prompt = prompts.render("a2_label.txt", candidate=candidate.value,
                                document=context_doc)
        payload = PromptPayload(kind="label", candidate=candidate.value,
                                context=context_doc)
        reply = self._structured(PHASE_A2, prompt, payload)
        label = reply.get("label") if isinstance(reply, dict) else None
        if not isinstance(label, str) or not label:
            raise MalformedResponse(f"{PHASE_A2}: missing label field")
        return make_labeled(candidate, label, PHASE_A2)

    # -- phase B: code strings ----------------------------------------------

    def _string_list_chunks(self, kept: list[ExtractedString]
                            ) -> list[list[tuple[int, ExtractedString]]]:
        """Greedy partition of the numbered list against the token budget."""
        budget = self._prompt_budget_chars("b1_identify.txt")
        numbered = list(enumerate(kept, start=1))
        chunks: list[list[tuple[int, ExtractedString]]] = []
        current: list[tuple[int, ExtractedString]] = []
        current_len = 0
        for num, s in numbered:
            line_len = len(f"{num}. {s.value}") + 1
            if current and current_len + line_len > budget:
                chunks.append(current)
                current, current_len = [], 0
            current.append((num, s))
            current_len += line_len
        if current:
            chunks.append(current)
        return chunks

    def phase_b1_identify(self, kept: list[ExtractedString]) -> list[CandidateSecret]:
        if not kept:
            return []
        by_value: dict[str, ExtractedString] = {}
        for s in kept:
            by_value.setdefault(s.value, s)

        candidates: dict[str, CandidateSecret] = {}

        def add(s: ExtractedString) -> None:
            site = s.primary_site
            candidates.setdefault(s.value, CandidateSecret(
                value=s.value, source=StringSource.CODE, origin=site,
                phase_found=PHASE_B1, extra_sites=s.extra_site_count))

        for chunk in self._string_list_chunks(kept):
            listing = "\n".join(f"{num}. {s.value}" for num, s in chunk)
            by_number = {num: s for num, s in chunk}
            prompt = prompts.render("b1_identify.txt", strings=listing)
            payload = PromptPayload(
                kind="identify",
                values=tuple(s.value for _, s in chunk),
                numbering=tuple(num for num, _ in chunk),
            )
            reply = self._structured(PHASE_B1, prompt, payload)
            if not isinstance(reply, list):
                raise MalformedResponse(f"{PHASE_B1}: expected a JSON array")
            for item in reply:
                if isinstance(item, bool):
                    self.hallucinations += 1
                elif isinstance(item, int):
                    if item in by_number:
                        add(by_number[item])
                    else:
                        self.hallucinations += 1
                elif isinstance(item, str):
                    if item in by_value:
                        add(by_value[item])
                    else:
                        self.hallucinations += 1
                else:
                    self.hallucinations += 1
        return list(candidates.values())

    def phase_b2_label(self, candidate: CandidateSecret,
                       class_context: str) -> LabeledSecret:
        prompt = prompts.render("b2_label.txt", candidate=candidate.value,
                                context=class_context)
        payload = PromptPayload(kind="label", candidate=candidate.value,
                                context=class_context)
        reply = self._structured(PHASE_B2, prompt, payload)
        label = reply.get("label") if isinstance(reply, dict) else None
        if not isinstance(label, str) or not label:
            raise MalformedResponse(f"{PHASE_B2}: missing label field")
        return make_labeled(candidate, label, PHASE_B2)

    def phase_b1_contextual(self, string: ExtractedString,
                            class_context: str) -> bool:
        prompt = prompts.render("b1_contextual.txt", candidate=string.value,
                                context=class_context)
        payload = PromptPayload(kind="contextual", candidate=string.value,
                                context=class_context)
        reply = self._structured(PHASE_B1_CONTEXTUAL, prompt, payload)
        verdict = reply.get("secret") if isinstance(reply, dict) else None
        if not isinstance(verdict, bool):
            raise MalformedResponse(f"{PHASE_B1_CONTEXTUAL}: missing secret field")
        return verdict
