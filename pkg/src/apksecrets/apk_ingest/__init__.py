"""APK container handling: open the archive, recover string resources.

An APK is a ZIP archive; the stdlib reader parses the central directory and
defers decompression until an entry is actually read.  Resource strings come
from the compiled resource table (``resources.arsc``) via the native parser
in :mod:`apksecrets.apk_ingest.arsc`.
"""

from __future__ import annotations

import hashlib
import io
import re
import struct
import zipfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from ..errors import IoError, NotAnArchive
from ..types import ExtractedString, StringSource
from .arsc import ResourceString, ResourceTable, parse_resource_table

__all__ = [
    "ApkArtifact",
    "ResourceString",
    "ResourceTable",
    "XmlExtraction",
    "open_apk",
    "parse_resource_table",
    "extract_xml_strings",
    "render_strings_document",
]

_DEX_NAME = re.compile(r"^classes(\d*)\.dex$")

# Everything a corrupt archive can throw at us through the stdlib reader.
_ZIP_READ_ERRORS = (zipfile.BadZipFile, zlib.error, OSError, ValueError,
                    EOFError, NotImplementedError, struct.error, KeyError)

# Refuse to inflate any single archive member beyond this many bytes.
MAX_MEMBER_BYTES = 256 * 1024 * 1024

WARN_NO_DEX = "no classes*.dex entries; code phases will be skipped"


def _dex_sort_key(name: str) -> int:
    suffix = _DEX_NAME.match(name).group(1)
    return 1 if suffix == "" else int(suffix)


@dataclass(frozen=True)
class ApkArtifact:
    """Parsed APK container.

    Immutable after construction; DEX payloads are decompressed lazily via
    :meth:`read_dex`, which re-opens ``path`` (the file must stay in place
    for the duration of a scan).
    """

    path: Path
    sha256: str
    size_bytes: int
    dex_entries: tuple[str, ...]
    resource_table: bytes | None
    warnings: tuple[str, ...] = ()

    @property
    def has_dex(self) -> bool:
        return bool(self.dex_entries)

    def read_dex(self, name: str) -> bytes:
        if name not in self.dex_entries:
            raise KeyError(name)
        try:
            with zipfile.ZipFile(self.path) as zf:
                return _read_member(zf, name)
        except NotAnArchive:
            raise
        except _ZIP_READ_ERRORS as exc:
            raise NotAnArchive(f"member {name} unreadable: {exc}") from exc


def _read_member(zf: zipfile.ZipFile, name: str) -> bytes:
    info = zf.getinfo(name)
    if info.file_size > MAX_MEMBER_BYTES:
        raise NotAnArchive(f"member {name} declares {info.file_size} bytes")
    with zf.open(name) as fh:
        data = fh.read(MAX_MEMBER_BYTES + 1)
    if len(data) > MAX_MEMBER_BYTES:
        raise NotAnArchive(f"member {name} inflates beyond cap")
    return data


def open_apk(path: str | Path) -> ApkArtifact:
    """Open an APK, hash it and index its scannable entries.

    A missing ``classes*.dex`` set is a warning on the artifact, not an
    error: resource-only scans are still possible.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise IoError(str(exc)) from exc

    digest = hashlib.sha256(raw).hexdigest()
    try:
        zf = zipfile.ZipFile(io.BytesIO(raw))
    except (*_ZIP_READ_ERRORS, UnicodeDecodeError, IndexError,
            OverflowError) as exc:
        raise NotAnArchive(f"{path}: {exc}") from exc

    with zf:
        names = zf.namelist()
        dex_entries = tuple(sorted(
            (n for n in names if _DEX_NAME.match(n)), key=_dex_sort_key))
        resource_table = None
        warnings: list[str] = []
        if "resources.arsc" in names:
            try:
                resource_table = _read_member(zf, "resources.arsc")
            except (NotAnArchive, *_ZIP_READ_ERRORS) as exc:
                warnings.append(f"resources.arsc unreadable: {exc}")
        if not dex_entries:
            warnings.append(WARN_NO_DEX)

    return ApkArtifact(
        path=path,
        sha256=digest,
        size_bytes=len(raw),
        dex_entries=dex_entries,
        resource_table=resource_table,
        warnings=tuple(warnings),
    )


DOCUMENT_HEADER = ('<?xml version="1.0" encoding="utf-8"?>', "<resources>")
DOCUMENT_FOOTER = ("</resources>",)


def element_line(name: str, value: str) -> str:
    return f"    <string name={quoteattr(name)}>{escape(value)}</string>"


def render_strings_document(entries: list[tuple[str, str]]) -> str:
    """Render resource entries as a canonical XML document.

    One ``<string>`` element per entry, sorted by entry name (then value),
    byte-for-byte deterministic regardless of input order.  Zero entries
    render as the empty string.
    """
    if not entries:
        return ""
    lines = list(DOCUMENT_HEADER)
    lines.extend(element_line(name, value) for name, value in sorted(entries))
    lines.extend(DOCUMENT_FOOTER)
    return "\n".join(lines) + "\n"


@dataclass
class XmlExtraction:
    """Default-config resource strings plus the rendered prompt payload."""

    strings: list[ExtractedString]
    document: str
    package_name: str
    all_resources: list[ResourceString]
    errors: list[str]


def extract_xml_strings(artifact: ApkArtifact) -> XmlExtraction:
    """Recover default-config string resources and their canonical document.

    Non-default configurations (translations etc.) are parsed and kept on
    ``all_resources`` but excluded from the document and the returned
    extraction set, so they never reach the identification prompt.
    """
    if artifact.resource_table is None:
        return XmlExtraction([], "", "", [], [])

    table = parse_resource_table(artifact.resource_table)
    default = [r for r in table.strings if r.config_qualifier == ""]
    default.sort(key=lambda r: (r.entry_name, r.value))
    extracted = [
        ExtractedString(value=r.value, source=StringSource.XML, entry_name=r.entry_name)
        for r in default
    ]
    document = render_strings_document([(r.entry_name, r.value) for r in default])
    package = table.package_names[0] if table.package_names else ""
    return XmlExtraction(extracted, document, package, table.strings, list(table.errors))
