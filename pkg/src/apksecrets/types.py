"""Core record types shared between extraction, filtering and the pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class StringSource(str, Enum):
    XML = "XML"
    CODE = "CODE"


class SiteKind(str, Enum):
    CODE = "code"
    STATIC_VALUE = "static_value"


@dataclass(frozen=True)
class CodeSite:
    """Where a string constant is loaded inside a DEX file.

    ``insn_offset`` is the code-unit offset of the loading instruction for
    ``kind=CODE`` sites, and the byte offset of the encoded value inside the
    class's static-values array for ``kind=STATIC_VALUE`` sites.
    """

    class_name: str
    method_signature: str
    insn_offset: int
    kind: SiteKind = SiteKind.CODE

    def as_dict(self) -> dict:
        return {
            "class": self.class_name,
            "method": self.method_signature,
            "offset": self.insn_offset,
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CodeSite":
        return cls(d["class"], d["method"], int(d["offset"]), SiteKind(d["kind"]))


@dataclass(frozen=True)
class ExtractedString:
    """One recovered string constant plus its provenance.

    XML strings carry the resource entry name; code strings carry every
    code site that loads them, first site being the primary one.
    """

    value: str
    source: StringSource
    entry_name: str = ""
    sites: tuple[CodeSite, ...] = field(default=())

    @property
    def primary_site(self) -> CodeSite | None:
        return self.sites[0] if self.sites else None

    @property
    def extra_site_count(self) -> int:
        return max(0, len(self.sites) - 1)
