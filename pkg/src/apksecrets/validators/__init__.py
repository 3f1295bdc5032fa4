"""Candidate confirmation: regex catalog, Base64 rescan, label canonicalization.

The catalog loads three versioned rule files in a fixed order (benchmark,
extended, artifact) and confirmation is strictly first-match-wins across
that order.  A second route recovers secrets hidden behind plain Base64 by
decoding and re-running the same catalog on the decoded text.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

from ..errors import RuleParseError

DEFAULT_RULE_FILES = ("benchmark.rules", "extended.rules", "artifact.rules")

_STANDARD_B64 = re.compile(r"[A-Za-z0-9+/]+={0,2}")
_URLSAFE_B64 = re.compile(r"[A-Za-z0-9_\-]+={0,2}")
_SEPARATORS = re.compile(r"[\s\-./:]+")
_MIN_B64_LENGTH = 16


class Tier(str, Enum):
    CONFIRMING = "CONFIRMING"
    INDICATIVE = "INDICATIVE"


class Provenance(str, Enum):
    PAPER_BENCHMARK = "PAPER_BENCHMARK"
    PAPER_EXTENDED = "PAPER_EXTENDED"
    ARTIFACT = "ARTIFACT"


class ValidationStatus(str, Enum):
    CONFIRMED = "CONFIRMED"
    CONFIRMED_AFTER_BASE64 = "CONFIRMED_AFTER_BASE64"
    PUBLIC_OR_TEST = "PUBLIC_OR_TEST"
    UNCONFIRMED = "UNCONFIRMED"


@dataclass(frozen=True)
class RegexRule:
    rule_id: str
    service: str
    tier: Tier
    provenance: Provenance
    full_match: bool
    public: bool           # matches downgrade to PUBLIC_OR_TEST
    pattern_text: str
    pattern: re.Pattern

    def matches(self, value: str) -> bool:
        if self.full_match:
            return self.pattern.fullmatch(value) is not None
        return self.pattern.search(value) is not None


@dataclass(frozen=True)
class ValidationResult:
    status: ValidationStatus
    matched_service: str | None = None
    decoded_form: str | None = None

    def as_dict(self) -> dict:
        return {
            "status": self.status.value,
            "service": self.matched_service,
            "decoded_form": self.decoded_form,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValidationResult":
        return cls(ValidationStatus(d["status"]), d.get("service"),
                   d.get("decoded_form"))


UNCONFIRMED = ValidationResult(ValidationStatus.UNCONFIRMED)


@dataclass(frozen=True)
class Catalog:
    rules: tuple[RegexRule, ...]
    rules_hash: str

    @property
    def services(self) -> tuple[str, ...]:
        return tuple(r.service for r in self.rules)

    def rules_for_service(self, service: str) -> list[RegexRule]:
        return [r for r in self.rules if r.service == service]


def _parse_rule_line(line: str, source: str, lineno: int) -> RegexRule:
    parts = line.split("\t")
    if len(parts) != 7:
        raise RuleParseError(
            f"{source}:{lineno}: expected 7 tab-separated columns, got {len(parts)}")
    rule_id, service, tier, provenance, match_mode, visibility, pattern_text = parts
    if not rule_id or not service:
        raise RuleParseError(f"{source}:{lineno}: empty id or service")
    try:
        tier_v = Tier(tier)
        prov_v = Provenance(provenance)
    except ValueError as exc:
        raise RuleParseError(f"{source}:{lineno}: {exc}") from exc
    if match_mode not in ("full", "find"):
        raise RuleParseError(f"{source}:{lineno}: bad match mode {match_mode!r}")
    if visibility not in ("secret", "public"):
        raise RuleParseError(f"{source}:{lineno}: bad visibility {visibility!r}")
    try:
        compiled = re.compile(pattern_text)
    except re.error as exc:
        raise RuleParseError(f"{source}:{lineno}: bad pattern: {exc}") from exc
    return RegexRule(
        rule_id=rule_id,
        service=service,
        tier=tier_v,
        provenance=prov_v,
        full_match=(match_mode == "full"),
        public=(visibility == "public"),
        pattern_text=pattern_text,
        pattern=compiled,
    )


def _default_rule_sources() -> list[tuple[str, str]]:
    pkg = resources.files(__package__) / "rules"
    return [(name, (pkg / name).read_text(encoding="utf-8"))
            for name in DEFAULT_RULE_FILES]


def catalog_load(rule_files: list[str | Path] | None = None) -> Catalog:
    """Build the rule catalog from rule files (packaged defaults when None).

    File order defines match precedence.  Duplicate rule or service ids
    anywhere in the set are a hard error.
    """
    if rule_files is None:
        sources = _default_rule_sources()
    else:
        sources = [(str(p), Path(p).read_text(encoding="utf-8")) for p in rule_files]

    rules: list[RegexRule] = []
    seen_ids: set[str] = set()
    seen_services: set[str] = set()
    digest = hashlib.sha256()
    for source, text in sources:
        digest.update(text.encode("utf-8"))
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            rule = _parse_rule_line(line, source, lineno)
            if rule.rule_id in seen_ids:
                raise RuleParseError(f"{source}:{lineno}: duplicate rule id "
                                     f"{rule.rule_id!r}")
            if rule.service in seen_services:
                raise RuleParseError(f"{source}:{lineno}: duplicate service id "
                                     f"{rule.service!r}")
            seen_ids.add(rule.rule_id)
            seen_services.add(rule.service)
            rules.append(rule)
    return Catalog(rules=tuple(rules), rules_hash=digest.hexdigest()[:16])


def validate(candidate_value: str, catalog: Catalog) -> ValidationResult:
    """First-match confirmation of one value against the catalog."""
    for rule in catalog.rules:
        if rule.tier is not Tier.CONFIRMING:
            continue
        if rule.matches(candidate_value):
            status = (ValidationStatus.PUBLIC_OR_TEST if rule.public
                      else ValidationStatus.CONFIRMED)
            return ValidationResult(status, rule.service)
    return UNCONFIRMED


def _decode_base64(value: str) -> str | None:
    """Decoded text if ``value`` is plausible Base64 of printable text."""
    if len(value) < _MIN_B64_LENGTH:
        return None
    if _STANDARD_B64.fullmatch(value):
        altchars = None
    elif _URLSAFE_B64.fullmatch(value):
        altchars = b"-_"
    else:
        return None
    body = value.rstrip("=")
    if len(body) % 4 == 1:
        return None  # no padding can make this decodable
    padded = body + "=" * (-len(body) % 4)
    try:
        raw = base64.b64decode(padded, altchars=altchars, validate=True)
        text = raw.decode("utf-8")
    except (binascii.Error, ValueError, UnicodeDecodeError):
        return None
    if not text or not all(c.isprintable() or c in "\r\n\t" for c in text):
        return None
    return text


def base64_rescan(candidate_value: str, catalog: Catalog) -> ValidationResult:
    """Decode plausible Base64 and re-run confirmation on the decoded text."""
    decoded = _decode_base64(candidate_value)
    if decoded is None:
        return UNCONFIRMED
    inner = validate(decoded, catalog)
    if inner.status is ValidationStatus.CONFIRMED:
        return ValidationResult(ValidationStatus.CONFIRMED_AFTER_BASE64,
                                inner.matched_service, decoded)
    if inner.status is ValidationStatus.PUBLIC_OR_TEST:
        return ValidationResult(ValidationStatus.PUBLIC_OR_TEST,
                                inner.matched_service)
    return UNCONFIRMED


def _load_synonyms() -> dict[str, str]:
    text = (resources.files(__package__) / "rules" / "labels.synonyms") \
        .read_text(encoding="utf-8")
    table: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise RuleParseError(f"labels.synonyms:{lineno}: expected 2 columns")
        table[parts[0]] = parts[1]
    return table


_SYNONYMS: dict[str, str] | None = None


def _synonyms() -> dict[str, str]:
    global _SYNONYMS
    if _SYNONYMS is None:
        _SYNONYMS = _load_synonyms()
    return _SYNONYMS


def normalize_label(raw_label: str) -> str:
    """Canonicalize a model-assigned label.

    Uppercases, collapses separators to underscores, then folds known
    synonyms.  Labels outside the synonym table pass through in normalized
    form: the vocabulary stays open for unseen secret types.
    """
    norm = _SEPARATORS.sub("_", raw_label.strip().upper())
    norm = re.sub(r"_+", "_", norm).strip("_")
    return _synonyms().get(norm, norm)
