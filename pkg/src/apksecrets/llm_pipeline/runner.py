"""End-to-end scan of one app: extraction, filtering, staged detection,
validation and report assembly.

Phase failures are isolated: a provider outage during the resource phases
still lets the code phases run, and vice versa; everything that went wrong
is recorded on the report.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .. import report as report_mod
from ..apk_ingest import ApkArtifact, extract_xml_strings, open_apk
from ..dex_extract import (
    DEFAULT_CHAR_BUDGET,
    DEFAULT_WINDOW,
    DexLayout,
    extract_code_strings,
    parse_dex,
    render_class_context,
)
from ..errors import (
    ApkError,
    ClassNotFound,
    DexError,
    MalformedResponse,
    ProviderError,
)
from ..prefilter import PrefilterConfig, prefilter
from ..types import CodeSite, ExtractedString, StringSource
from ..validators import Catalog, ValidationStatus, base64_rescan, catalog_load, validate
from . import prompts
from .cache import ResponseCache
from .ledger import CostLedger
from .phases import (
    PHASE_A1,
    PHASE_A2,
    PHASE_B1,
    PHASE_B1_CONTEXTUAL,
    PHASE_B2,
    CandidateSecret,
    LabeledSecret,
    PipelineSession,
)
from .providers import Provider

logger = logging.getLogger(__name__)


class ScanMode(str, Enum):
    STANDARD = "STANDARD"
    CONTEXTUAL_B1 = "CONTEXTUAL_B1"


@dataclass(frozen=True)
class ScanSettings:
    mode: ScanMode = ScanMode.STANDARD
    prefilter: PrefilterConfig = field(default_factory=PrefilterConfig)
    cache_dir: str | Path | None = None
    redact: bool = True
    context_window: int = DEFAULT_WINDOW
    context_char_budget: int = DEFAULT_CHAR_BUDGET

    def effective_prefilter(self) -> PrefilterConfig:
        """Contextual identification re-admits UUID-shaped strings."""
        if self.mode is ScanMode.CONTEXTUAL_B1 and self.prefilter.drop_uuid_like:
            return PrefilterConfig(
                min_length=self.prefilter.min_length,
                max_length=self.prefilter.max_length,
                max_space_ratio=self.prefilter.max_space_ratio,
                drop_uuid_like=False,
                min_charset_classes=self.prefilter.min_charset_classes,
                allowlist_prefixes=self.prefilter.allowlist_prefixes,
            )
        return self.prefilter


def _load_layouts(artifact: ApkArtifact) -> tuple[list[DexLayout], list[str]]:
    layouts: list[DexLayout] = []
    errors: list[str] = []
    for name in artifact.dex_entries:
        try:
            layouts.append(parse_dex(artifact.read_dex(name)))
        except (DexError, ApkError, KeyError, OSError) as exc:
            errors.append(f"{name}: {exc}")
    return layouts, errors


def _context_for_site(layouts: list[DexLayout], site: CodeSite,
                      settings: ScanSettings) -> str:
    for layout in layouts:
        if site.class_name in layout.classes_by_name:
            try:
                ctx = render_class_context(
                    layout, site.class_name, [site],
                    window=settings.context_window,
                    char_budget=settings.context_char_budget)
                return ctx.text
            except (DexError, ClassNotFound):
                return ""
    return ""


def _finding_from(labeled: LabeledSecret, validation) -> report_mod.Finding:
    cand = labeled.candidate
    if cand.source is StringSource.XML:
        origin = {"entry": cand.origin}
    elif isinstance(cand.origin, CodeSite):
        origin = cand.origin.as_dict()
        origin["extra_sites"] = cand.extra_sites
    else:
        origin = {"entry": str(cand.origin)}
    return report_mod.Finding(
        value=cand.value,
        source=cand.source.value,
        origin=origin,
        raw_label=labeled.raw_label,
        canonical_label=labeled.canonical_label,
        validation=validation.as_dict(),
        phases=(cand.phase_found, labeled.phase_labeled),
    )


def run_pipeline(artifact: ApkArtifact | str | Path, settings: ScanSettings,
                 provider: Provider, catalog: Catalog | None = None
                 ) -> report_mod.ScanReport:
    """Scan one app and assemble its report."""
    if not isinstance(artifact, ApkArtifact):
        artifact = open_apk(artifact)
    catalog = catalog or catalog_load()

    session = PipelineSession(
        provider, artifact.sha256,
        cache=ResponseCache(settings.cache_dir),
    )
    errors: list[str] = []
    warnings: list[str] = list(artifact.warnings)
    skipped: list[str] = []
    labeled_results: list[LabeledSecret] = []

    # --- resource strings -------------------------------------------------
    xml = extract_xml_strings(artifact)
    errors.extend(f"resource table: {e}" for e in xml.errors)
    if not xml.document:
        skipped.extend([PHASE_A1, PHASE_A2])
    else:
        try:
            xml_candidates = session.phase_a1_identify(xml.document, xml.strings)
            for cand in xml_candidates:
                labeled_results.append(
                    session.phase_a2_label(cand, xml.strings, xml.document))
        except (ProviderError, MalformedResponse) as exc:
            errors.append(f"resource phases: {exc}")

    # --- code strings ------------------------------------------------------
    layouts, dex_errors = _load_layouts(artifact)
    errors.extend(f"dex: {e}" for e in dex_errors)
    kept_count = 0
    drop_counts: dict[str, int] = {}
    if not layouts:
        skipped.extend([PHASE_B1, PHASE_B2] if settings.mode is ScanMode.STANDARD
                       else [PHASE_B1_CONTEXTUAL, PHASE_B2])
    else:
        code = extract_code_strings(layouts)
        errors.extend(f"dex walk: {e}" for e in code.errors)
        filtered = prefilter(code.strings, settings.effective_prefilter())
        kept_count = len(filtered.kept)
        drop_counts = filtered.drop_counts
        try:
            code_candidates = _identify_code_candidates(
                session, filtered.kept, layouts, settings)
            for cand in code_candidates:
                context = ""
                if isinstance(cand.origin, CodeSite):
                    context = _context_for_site(layouts, cand.origin, settings)
                labeled_results.append(session.phase_b2_label(cand, context))
        except (ProviderError, MalformedResponse) as exc:
            errors.append(f"code phases: {exc}")

    # --- validation and assembly -------------------------------------------
    findings = []
    for labeled in labeled_results:
        if not labeled.is_secret:
            continue
        validation = validate(labeled.candidate.value, catalog)
        if validation.status is ValidationStatus.UNCONFIRMED:
            rescanned = base64_rescan(labeled.candidate.value, catalog)
            if rescanned.status is not ValidationStatus.UNCONFIRMED:
                validation = rescanned
        findings.append(_finding_from(labeled, validation))

    fingerprint = {
        "model_id": provider.spec.model_id,
        "template_version": prompts.template_version(),
        "rules_hash": catalog.rules_hash,
        "mode": settings.mode.value,
        "temperature": provider.spec.temperature,
        "prefilter": settings.effective_prefilter().as_dict(),
    }
    return report_mod.assemble(
        app_sha256=artifact.sha256,
        package_name=xml.package_name,
        mode=settings.mode.value,
        findings=findings,
        skipped_phases=skipped,
        prefilter_kept=kept_count,
        prefilter_dropped=drop_counts,
        hallucinations=session.hallucinations,
        cache_hits=session.cache_hits,
        errors=errors,
        warnings=warnings,
        ledger=session.ledger.as_dict(),
        timings_ms=session.ledger.phase_latency_ms(),
        fingerprint=fingerprint,
        redact=settings.redact,
    )


def _identify_code_candidates(session: PipelineSession,
                              kept: list[ExtractedString],
                              layouts: list[DexLayout],
                              settings: ScanSettings) -> list[CandidateSecret]:
    if settings.mode is ScanMode.STANDARD:
        return session.phase_b1_identify(kept)
    candidates = []
    for s in kept:
        context = ""
        if s.primary_site is not None:
            context = _context_for_site(layouts, s.primary_site, settings)
        if session.phase_b1_contextual(s, context):
            candidates.append(CandidateSecret(
                value=s.value, source=StringSource.CODE, origin=s.primary_site,
                phase_found=PHASE_B1_CONTEXTUAL, extra_sites=s.extra_site_count))
    return candidates
