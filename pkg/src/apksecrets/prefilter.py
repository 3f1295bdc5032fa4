"""Heuristic reduction of code strings before the identification phase.

The rules run in a fixed order (length, allowlist bypass, whitespace,
character-class mix, UUID shape) and every dropped string carries exactly
one reason code: the first rule it failed.  Defaults are deliberately
permissive; downstream labeling discards what slips through.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyString
from .types import ExtractedString

UUID_RE = re.compile(
    r"[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}")


class DropReason(str, Enum):
    TOO_SHORT = "TOO_SHORT"
    TOO_LONG = "TOO_LONG"
    WHITESPACE = "WHITESPACE"
    CHARSET = "CHARSET"
    UUID_LIKE = "UUID_LIKE"


@dataclass(frozen=True)
class PrefilterConfig:
    min_length: int = 10
    max_length: int = 4096
    max_space_ratio: float = 0.0
    drop_uuid_like: bool = True
    min_charset_classes: int = 2
    allowlist_prefixes: tuple[str, ...] = ("-----BEGIN", "eyJ")

    def __post_init__(self):
        if self.min_length > self.max_length:
            raise ValueError("min_length exceeds max_length")
        if not 0.0 <= self.max_space_ratio <= 1.0:
            raise ValueError("max_space_ratio outside [0, 1]")

    def as_dict(self) -> dict:
        return {
            "min_length": self.min_length,
            "max_length": self.max_length,
            "max_space_ratio": self.max_space_ratio,
            "drop_uuid_like": self.drop_uuid_like,
            "min_charset_classes": self.min_charset_classes,
            "allowlist_prefixes": list(self.allowlist_prefixes),
        }


@dataclass
class PrefilterResult:
    kept: list[ExtractedString] = field(default_factory=list)
    dropped: list[tuple[ExtractedString, DropReason]] = field(default_factory=list)

    @property
    def drop_counts(self) -> dict[str, int]:
        counts = Counter(reason.value for _, reason in self.dropped)
        return dict(sorted(counts.items()))


def _charset_classes(value: str) -> int:
    classes = 0
    if any(c.islower() for c in value):
        classes += 1
    if any(c.isupper() for c in value):
        classes += 1
    if any(c.isdigit() for c in value):
        classes += 1
    if any(not c.isalnum() and not c.isspace() for c in value):
        classes += 1
    return classes


def classify(value: str, cfg: PrefilterConfig) -> DropReason | None:
    """First failing rule for one string, or None if it should be kept."""
    if len(value) < cfg.min_length:
        return DropReason.TOO_SHORT
    if len(value) > cfg.max_length:
        return DropReason.TOO_LONG
    if any(value.startswith(p) for p in cfg.allowlist_prefixes):
        return None
    spaces = sum(1 for c in value if c.isspace())
    if spaces / len(value) > cfg.max_space_ratio:
        return DropReason.WHITESPACE
    if _charset_classes(value) < cfg.min_charset_classes:
        return DropReason.CHARSET
    if cfg.drop_uuid_like and UUID_RE.fullmatch(value):
        return DropReason.UUID_LIKE
    return None


def prefilter(strings: list[ExtractedString],
              cfg: PrefilterConfig | None = None) -> PrefilterResult:
    """Partition strings into kept candidates and dropped-with-reason."""
    cfg = cfg or PrefilterConfig()
    result = PrefilterResult()
    for s in strings:
        reason = classify(s.value, cfg)
        if reason is None:
            result.kept.append(s)
        else:
            result.dropped.append((s, reason))
    return result


def entropy(value: str) -> float:
    """Shannon entropy in bits per byte over the UTF-8 encoding."""
    if not value:
        raise EmptyString("entropy of empty string is undefined")
    raw = value.encode("utf-8")
    counts = Counter(raw)
    n = len(raw)
    return -sum((c / n) * math.log2(c / n) for c in counts.values())
