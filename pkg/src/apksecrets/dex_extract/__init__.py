"""Recover statically defined string constants from DEX bytecode.

Two site kinds are indexed: ``const-string``/``const-string/jumbo``
instructions inside method bodies, and string entries inside class
static-value initializer arrays.  Interned strings with no site of either
kind (type descriptors, member names) never reach the candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import DexError, TruncatedFile
from ..types import CodeSite, ExtractedString, SiteKind, StringSource
from . import bytecode
from .context import (
    DEFAULT_CHAR_BUDGET,
    DEFAULT_WINDOW,
    ClassContext,
    render_class_context,
)
from .layout import (
    DexLayout,
    descriptor_to_binary_name,
    method_signature,
    parse_class_data,
    parse_code_item,
    parse_dex,
    read_string_table,
)
from .mutf8 import decode_mutf8, read_string_data, read_uleb128

__all__ = [
    "DexLayout",
    "ClassContext",
    "StringRefIndex",
    "CodeExtraction",
    "parse_dex",
    "read_string_table",
    "index_string_references",
    "extract_code_strings",
    "render_class_context",
    "decode_mutf8",
    "read_string_data",
    "read_uleb128",
    "DEFAULT_WINDOW",
    "DEFAULT_CHAR_BUDGET",
]

_VALUE_STRING = 0x17
_VALUE_ARRAY = 0x1C
_VALUE_ANNOTATION = 0x1D
_VALUE_NULL = 0x1E
_VALUE_BOOLEAN = 0x1F
_SIZED_VALUE_TYPES = {0x00, 0x02, 0x03, 0x04, 0x06, 0x10, 0x11,
                      0x15, 0x16, _VALUE_STRING, 0x18, 0x19, 0x1A, 0x1B}


@dataclass
class StringRefIndex:
    """Map string index -> every site loading it, plus per-method errors."""

    sites: dict[int, list[CodeSite]] = field(default_factory=dict)
    method_errors: list[str] = field(default_factory=list)

    def add(self, string_idx: int, site: CodeSite) -> None:
        self.sites.setdefault(string_idx, []).append(site)


def _iter_encoded_values(data: bytes, pos: int, depth: int = 0):
    """Yield (byte offset, string index) for strings in an encoded_value."""
    if depth > 8 or pos >= len(data):
        raise TruncatedFile("encoded value nesting or offset out of range")
    header = data[pos]
    start = pos
    pos += 1
    vtype = header & 0x1F
    varg = header >> 5
    if vtype in _SIZED_VALUE_TYPES:
        size = varg + 1
        if pos + size > len(data):
            raise TruncatedFile("encoded value payload truncated")
        if vtype == _VALUE_STRING:
            idx = int.from_bytes(data[pos:pos + size], "little")
            yield start, idx
        pos += size
    elif vtype == _VALUE_ARRAY:
        count, pos = read_uleb128(data, pos)
        for _ in range(min(count, len(data))):
            for item in _iter_encoded_values(data, pos, depth + 1):
                yield item
            pos = _skip_encoded_value(data, pos, depth + 1)
    elif vtype == _VALUE_ANNOTATION:
        _, pos = read_uleb128(data, pos)
        count, pos = read_uleb128(data, pos)
        for _ in range(min(count, len(data))):
            _, pos = read_uleb128(data, pos)  # element name index
            for item in _iter_encoded_values(data, pos, depth + 1):
                yield item
            pos = _skip_encoded_value(data, pos, depth + 1)
    elif vtype in (_VALUE_NULL, _VALUE_BOOLEAN):
        pass
    else:
        raise TruncatedFile(f"unknown encoded value type 0x{vtype:02x}")


def _skip_encoded_value(data: bytes, pos: int, depth: int = 0) -> int:
    if depth > 8 or pos >= len(data):
        raise TruncatedFile("encoded value nesting or offset out of range")
    header = data[pos]
    pos += 1
    vtype = header & 0x1F
    varg = header >> 5
    if vtype in _SIZED_VALUE_TYPES:
        return pos + varg + 1
    if vtype == _VALUE_ARRAY:
        count, pos = read_uleb128(data, pos)
        for _ in range(min(count, len(data))):
            pos = _skip_encoded_value(data, pos, depth + 1)
        return pos
    if vtype == _VALUE_ANNOTATION:
        _, pos = read_uleb128(data, pos)
        count, pos = read_uleb128(data, pos)
        for _ in range(min(count, len(data))):
            _, pos = read_uleb128(data, pos)
            pos = _skip_encoded_value(data, pos, depth + 1)
        return pos
    if vtype in (_VALUE_NULL, _VALUE_BOOLEAN):
        return pos
    raise TruncatedFile(f"unknown encoded value type 0x{vtype:02x}")


def _static_value_strings(data: bytes, off: int):
    """Yield (byte offset, string index) for a class static-values array."""
    count, pos = read_uleb128(data, off)
    for _ in range(min(count, len(data))):
        yield from _iter_encoded_values(data, pos)
        pos = _skip_encoded_value(data, pos)


def index_string_references(layout: DexLayout) -> StringRefIndex:
    """Locate every loading site of every interned string.

    One undecodable method body is skipped and flagged; the walk over the
    rest of the file always completes.
    """
    index = StringRefIndex()
    for class_def in layout.class_defs:
        try:
            class_name = descriptor_to_binary_name(
                layout.type_descriptor(class_def.class_idx))
        except DexError:
            index.method_errors.append(
                f"class_idx {class_def.class_idx}: unresolvable name")
            continue
        try:
            class_data = parse_class_data(layout, class_def)
        except DexError as exc:
            index.method_errors.append(f"{class_name}: class_data: {exc}")
            continue

        for em in class_data.all_methods:
            if em.code_off == 0:
                continue
            try:
                sig = method_signature(layout, em.method_idx)
            except (DexError, IndexError):
                index.method_errors.append(
                    f"{class_name}: method_idx {em.method_idx}: bad signature")
                continue
            try:
                code = parse_code_item(layout, em.code_off)
                for off, unit, _ in bytecode.iter_instructions(code.insns):
                    sref = bytecode.string_ref_at(code.insns, off, unit)
                    if sref is not None:
                        index.add(sref, CodeSite(class_name, sig, off))
            except DexError as exc:
                index.method_errors.append(f"{class_name}.{sig}: {exc}")

        if class_def.static_values_off:
            try:
                for off, sref in _static_value_strings(
                        layout.data, class_def.static_values_off):
                    index.add(sref, CodeSite(
                        class_name, "<static-values>", off, SiteKind.STATIC_VALUE))
            except DexError as exc:
                index.method_errors.append(f"{class_name}: static values: {exc}")
    return index


@dataclass
class CodeExtraction:
    strings: list[ExtractedString]
    errors: list[str]


def extract_code_strings(layouts: list[DexLayout]) -> CodeExtraction:
    """Union of referenced string constants across all DEX files of an app.

    Duplicates by value are merged into one record that retains every site;
    table entries with zero sites are excluded.
    """
    merged: dict[str, list[CodeSite]] = {}
    errors: list[str] = []
    for layout in layouts:
        index = index_string_references(layout)
        errors.extend(index.method_errors)
        for string_idx in sorted(index.sites):
            if string_idx >= len(layout.strings):
                errors.append(f"string index {string_idx} out of table range")
                continue
            value = layout.strings[string_idx]
            merged.setdefault(value, []).extend(index.sites[string_idx])
    strings = [
        ExtractedString(value=value, source=StringSource.CODE, sites=tuple(sites))
        for value, sites in merged.items()
    ]
    return CodeExtraction(strings, errors)
