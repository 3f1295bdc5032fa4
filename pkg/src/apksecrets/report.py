"""Report assembly, corpus aggregation, baseline comparison, disclosure export.

The machine format is versioned JSON that round-trips exactly; the human
format is an aligned table.  Secret values are redacted by default (first
four plus last two characters survive) and disclosure documents never carry
values at all.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import GroundTruthParseError, InvalidParams, NoFindings

SCHEMA_VERSION = 1

_Z_SCORES = {
    0.90: 1.6448536269514722,
    0.95: 1.959963984540054,
    0.99: 2.5758293035489004,
}

REDACT_KEEP_PREFIX = 4
REDACT_KEEP_SUFFIX = 2


def redact_value(value: str) -> str:
    """Keep the first four and last two characters, mask the rest."""
    if len(value) <= REDACT_KEEP_PREFIX + REDACT_KEEP_SUFFIX:
        return "*" * len(value)
    masked = len(value) - REDACT_KEEP_PREFIX - REDACT_KEEP_SUFFIX
    return value[:REDACT_KEEP_PREFIX] + "*" * masked + value[-REDACT_KEEP_SUFFIX:]


@dataclass(frozen=True)
class Finding:
    value: str                     # redacted when the report is redacted
    source: str                    # XML | CODE
    origin: dict                   # entry name or code-site fields
    raw_label: str
    canonical_label: str
    validation: dict               # status / service / decoded_form
    phases: tuple[str, ...]

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "source": self.source,
            "origin": self.origin,
            "raw_label": self.raw_label,
            "canonical_label": self.canonical_label,
            "validation": self.validation,
            "phases": list(self.phases),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Finding":
        return cls(
            value=d["value"],
            source=d["source"],
            origin=d["origin"],
            raw_label=d["raw_label"],
            canonical_label=d["canonical_label"],
            validation=d["validation"],
            phases=tuple(d["phases"]),
        )


@dataclass(frozen=True)
class ScanReport:
    app_sha256: str
    package_name: str
    mode: str
    redacted: bool
    findings: tuple[Finding, ...]
    skipped_phases: tuple[str, ...]
    prefilter_kept: int
    prefilter_dropped: dict
    hallucinations: int
    cache_hits: int
    errors: tuple[str, ...]
    warnings: tuple[str, ...]
    ledger: dict
    timings_ms: dict
    fingerprint: dict
    schema_version: int = SCHEMA_VERSION

    def to_json(self) -> str:
        doc = {
            "schema_version": self.schema_version,
            "app": {"sha256": self.app_sha256, "package_name": self.package_name},
            "mode": self.mode,
            "redacted": self.redacted,
            "findings": [f.as_dict() for f in self.findings],
            "skipped_phases": list(self.skipped_phases),
            "prefilter": {"kept": self.prefilter_kept,
                          "dropped": self.prefilter_dropped},
            "hallucinations": self.hallucinations,
            "cache_hits": self.cache_hits,
            "errors": list(self.errors),
            "warnings": list(self.warnings),
            "ledger": self.ledger,
            "timings_ms": self.timings_ms,
            "fingerprint": self.fingerprint,
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScanReport":
        doc = json.loads(text)
        return cls(
            schema_version=doc["schema_version"],
            app_sha256=doc["app"]["sha256"],
            package_name=doc["app"]["package_name"],
            mode=doc["mode"],
            redacted=doc["redacted"],
            findings=tuple(Finding.from_dict(f) for f in doc["findings"]),
            skipped_phases=tuple(doc["skipped_phases"]),
            prefilter_kept=doc["prefilter"]["kept"],
            prefilter_dropped=doc["prefilter"]["dropped"],
            hallucinations=doc["hallucinations"],
            cache_hits=doc["cache_hits"],
            errors=tuple(doc["errors"]),
            warnings=tuple(doc.get("warnings", [])),
            ledger=doc["ledger"],
            timings_ms=doc["timings_ms"],
            fingerprint=doc["fingerprint"],
        )


def assemble(*, app_sha256: str, package_name: str, mode: str,
             findings: list[Finding], skipped_phases: list[str],
             prefilter_kept: int, prefilter_dropped: dict,
             hallucinations: int, cache_hits: int, errors: list[str],
             warnings: list[str], ledger: dict, timings_ms: dict,
             fingerprint: dict, redact: bool = True) -> ScanReport:
    """Freeze one app's results, applying the redaction policy."""
    out_findings = []
    for f in findings:
        if redact:
            validation = dict(f.validation)
            if validation.get("decoded_form"):
                validation["decoded_form"] = redact_value(validation["decoded_form"])
            f = Finding(
                value=redact_value(f.value),
                source=f.source, origin=f.origin, raw_label=f.raw_label,
                canonical_label=f.canonical_label, validation=validation,
                phases=f.phases,
            )
        out_findings.append(f)
    return ScanReport(
        app_sha256=app_sha256,
        package_name=package_name,
        mode=mode,
        redacted=redact,
        findings=tuple(out_findings),
        skipped_phases=tuple(skipped_phases),
        prefilter_kept=prefilter_kept,
        prefilter_dropped=dict(prefilter_dropped),
        hallucinations=hallucinations,
        cache_hits=cache_hits,
        errors=tuple(errors),
        warnings=tuple(warnings),
        ledger=ledger,
        timings_ms=timings_ms,
        fingerprint=fingerprint,
    )


def _align(rows: list[list[str]]) -> str:
    if not rows:
        return ""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
        for row in rows)


def human_table(report: ScanReport) -> str:
    """Aligned-column summary; values always shown redacted."""
    header = [
        f"app: {report.package_name or report.app_sha256}",
        f"sha256: {report.app_sha256}",
        f"mode: {report.mode}",
        f"findings: {len(report.findings)}",
    ]
    rows = [["LABEL", "SOURCE", "ORIGIN", "STATUS", "VALUE"]]
    for f in report.findings:
        origin = f.origin.get("entry") or f.origin.get("class", "")
        value = f.value if report.redacted else redact_value(f.value)
        rows.append([f.canonical_label, f.source, str(origin),
                     f.validation.get("status", ""), value])
    body = _align(rows) if len(rows) > 1 else "(no findings)"
    return "\n".join(header) + "\n\n" + body + "\n"


@dataclass
class CorpusSummary:
    total_apps: int
    apps_with_findings: int
    prevalence: float
    by_label: dict
    by_status: dict
    by_service: dict
    total_findings: int

    def as_dict(self) -> dict:
        return {
            "total_apps": self.total_apps,
            "apps_with_findings": self.apps_with_findings,
            "prevalence": self.prevalence,
            "total_findings": self.total_findings,
            "by_label": self.by_label,
            "by_status": self.by_status,
            "by_service": self.by_service,
        }

    def to_text(self) -> str:
        lines = [
            f"apps scanned:        {self.total_apps}",
            f"apps with findings:  {self.apps_with_findings} "
            f"({self.prevalence * 100:.1f}%)",
            f"total findings:      {self.total_findings}",
            "",
            "findings by label:",
        ]
        rows = [[label, str(n)] for label, n in self.by_label.items()]
        lines.append(_align(rows) if rows else "  (none)")
        lines.append("")
        lines.append("findings by validation status:")
        rows = [[status, str(n)] for status, n in self.by_status.items()]
        lines.append(_align(rows) if rows else "  (none)")
        lines.append("")
        lines.append("confirmed findings by service:")
        rows = [[service, str(n)] for service, n in self.by_service.items()]
        lines.append(_align(rows) if rows else "  (none)")
        return "\n".join(lines) + "\n"


def aggregate(reports: list[ScanReport]) -> CorpusSummary:
    """Order-independent corpus statistics over per-app reports."""
    with_findings = sum(1 for r in reports if r.findings)
    by_label: Counter = Counter()
    by_status: Counter = Counter()
    by_service: Counter = Counter()
    total = 0
    for r in reports:
        for f in r.findings:
            total += 1
            by_label[f.canonical_label] += 1
            status = f.validation.get("status", "UNCONFIRMED")
            by_status[status] += 1
            service = f.validation.get("service")
            if service and status in ("CONFIRMED", "CONFIRMED_AFTER_BASE64"):
                by_service[service] += 1
    return CorpusSummary(
        total_apps=len(reports),
        apps_with_findings=with_findings,
        prevalence=(with_findings / len(reports)) if reports else 0.0,
        by_label=dict(sorted(by_label.items())),
        by_status=dict(sorted(by_status.items())),
        by_service=dict(sorted(by_service.items())),
        total_findings=total,
    )


@dataclass(frozen=True)
class GroundTruthEntry:
    app_sha256: str
    secret_value: str
    category: str


def load_ground_truth(path: str | Path) -> list[GroundTruthEntry]:
    """Read the ``sha256,value,category`` CSV."""
    entries = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or \
                    [c.strip() for c in reader.fieldnames] != ["sha256", "value", "category"]:
                raise GroundTruthParseError(
                    f"{path}: expected header sha256,value,category")
            for i, row in enumerate(reader, start=2):
                value = (row.get("value") or "").strip()
                sha = (row.get("sha256") or "").strip().lower()
                if not value or not sha:
                    raise GroundTruthParseError(f"{path}:{i}: empty sha256 or value")
                entries.append(GroundTruthEntry(sha, value, (row.get("category") or "").strip()))
    except OSError as exc:
        raise GroundTruthParseError(str(exc)) from exc
    return entries


@dataclass
class OverlapSummary:
    both: int
    only_ours: int
    only_baseline: int
    recall: float
    flags: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "both": self.both,
            "only_ours": self.only_ours,
            "only_baseline": self.only_baseline,
            "recall": self.recall,
            "flags": self.flags,
        }


def compare_with_baseline(reports: list[ScanReport],
                          ground_truth: list[GroundTruthEntry]
                          ) -> tuple[OverlapSummary, list[dict]]:
    """Three-way overlap between scan findings and a baseline secret list.

    Matching key is (app sha256, exact value); findings confirmed through
    Base64 decoding match on their decoded form.  Requires unredacted
    reports, since redacted values can never compare equal.
    """
    for r in reports:
        if r.redacted and r.findings:
            raise ValueError(
                f"report {r.app_sha256[:12]} is redacted; comparison needs "
                "machine reports produced with redaction disabled")

    ours: set[tuple[str, str]] = set()
    for r in reports:
        for f in r.findings:
            key_value = f.validation.get("decoded_form") or f.value
            ours.add((r.app_sha256, key_value))
    base = {(g.app_sha256, g.secret_value) for g in ground_truth}

    both_keys = ours & base
    only_ours_keys = ours - base
    only_base_keys = base - ours

    flags: list[str] = []
    if not base:
        recall = 1.0
        flags.append("EMPTY_BASELINE")
    else:
        recall = len(both_keys) / (len(both_keys) + len(only_base_keys))

    dispositions = (
        [{"sha256": s, "value": v, "disposition": "both"} for s, v in sorted(both_keys)]
        + [{"sha256": s, "value": v, "disposition": "only_ours"}
           for s, v in sorted(only_ours_keys)]
        + [{"sha256": s, "value": v, "disposition": "only_baseline"}
           for s, v in sorted(only_base_keys)]
    )
    summary = OverlapSummary(
        both=len(both_keys),
        only_ours=len(only_ours_keys),
        only_baseline=len(only_base_keys),
        recall=recall,
        flags=flags,
    )
    return summary, dispositions


_LABEL_WORDS = {
    "GOOGLE_API_KEY": "Google API key",
    "GOOGLE_OAUTH": "Google OAuth client credential",
    "OPENAI_API_KEY": "OpenAI API key",
    "JWT_TOKEN": "JSON Web Token",
    "RSA_PRIVATE_KEY": "RSA private key",
    "AWS_ACCESS_KEY_ID": "AWS access key id",
    "GITHUB_PAT": "GitHub personal access token",
}


def _leaks(doc: str, secrets: list[str], min_len: int = 6) -> bool:
    for s in secrets:
        if len(s) < min_len:
            continue
        for i in range(len(s) - min_len + 1):
            if s[i:i + min_len] in doc:
                return True
    return False


def disclosure_export(report: ScanReport, contact: str | None = None) -> str:
    """Render a notification document that names types and counts only.

    By construction no secret value (nor any fragment of one) is embedded;
    a final self-check falls back to generic wording in the pathological
    case where a label or app name collides with a finding value.
    """
    if not report.findings:
        raise NoFindings("nothing to disclose")

    secrets = [f.value for f in report.findings]
    secrets += [f.validation.get("decoded_form") or "" for f in report.findings]
    app_name = report.package_name or f"app {report.app_sha256[:12]}"
    label_counts = Counter(f.canonical_label for f in report.findings)

    def build(generic: bool, identifier: str) -> str:
        lines = [
            f"Subject: Potential hardcoded credentials in {identifier}",
            "",
            "Hello,",
            "",
            "During an automated security review of publicly distributed Android",
            f"applications we identified {len(report.findings)} potential hardcoded",
            f"credential(s) inside {identifier}.",
            "",
            "Detected credential types:",
        ]
        if generic:
            lines.append(f"  - credential (type withheld): "
                         f"{len(report.findings)} occurrence(s)")
        else:
            for label, count in sorted(label_counts.items()):
                human = _LABEL_WORDS.get(label, label.replace("_", " ").lower())
                lines.append(f"  - {human}: {count} occurrence(s)")
        lines += [
            "",
            "For safety this notification does not include the credential values",
            "themselves. We recommend rotating the affected credentials, moving",
            "them out of the shipped application (for example behind a backend",
            "endpoint or a remote configuration service), and reviewing your",
            "release pipeline for further embedded secrets.",
            "",
        ]
        if contact:
            lines.append(f"Contact for questions: {contact}")
            lines.append("")
        return "\n".join(lines)

    doc = build(generic=False, identifier=app_name)
    if _leaks(doc, secrets):
        doc = build(generic=True, identifier=f"app {report.app_sha256[:12]}")
    return doc


def sample_plan(population_size: int, confidence: float, margin: float) -> int:
    """Sample size for a proportion at p=0.5 with finite-population correction.

    Rounded up and capped at the population size.
    """
    if population_size < 1:
        raise InvalidParams("population must be at least 1")
    if confidence not in _Z_SCORES:
        raise InvalidParams(f"confidence must be one of {sorted(_Z_SCORES)}")
    if not 0.0 < margin < 1.0:
        raise InvalidParams("margin must be in (0, 1)")
    z = _Z_SCORES[confidence]
    n0 = (z * z * 0.25) / (margin * margin)
    corrected = n0 / (1 + (n0 - 1) / population_size)
    return min(population_size, math.ceil(corrected))


def write_report_files(report: ScanReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    machine = out / f"report_{report.app_sha256}.json"
    human = out / f"report_{report.app_sha256}.txt"
    machine.write_text(report.to_json(), encoding="utf-8")
    human.write_text(human_table(report), encoding="utf-8")
    return machine, human


def load_reports(directory: str | Path) -> list[ScanReport]:
    reports = []
    for path in sorted(Path(directory).glob("report_*.json")):
        reports.append(ScanReport.from_json(path.read_text(encoding="utf-8")))
    return reports
