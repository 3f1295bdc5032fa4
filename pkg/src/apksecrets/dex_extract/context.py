"""Textual class context for the code labeling phase.

Renders a compact, deterministic summary of one class: names, signatures,
the string constants each method loads, and a small disassembly window
around every candidate site.  Serves as the "surrounding code" payload
for per-candidate labeling prompts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from ..errors import ClassNotFound, DexError
from ..types import CodeSite, SiteKind
from . import bytecode
from .layout import (
    NO_INDEX,
    DexLayout,
    descriptor_to_human,
    interface_type_indices,
    method_signature,
    parse_class_data,
    parse_code_item,
)

DEFAULT_WINDOW = 8
DEFAULT_CHAR_BUDGET = 12_000
TRUNCATION_MARKER = "\n...[context truncated]"


@dataclass(frozen=True)
class ClassContext:
    class_name: str
    superclass_name: str
    field_summaries: tuple[str, ...]
    method_summaries: tuple[str, ...]
    string_constants: tuple[tuple[str, tuple[str, ...]], ...]  # (method, values)
    disasm_windows: tuple[str, ...]
    text: str


def _quote(value: str, limit: int = 80) -> str:
    flat = value.replace("\\", "\\\\").replace("\n", "\\n").replace('"', '\\"')
    if len(flat) > limit:
        flat = flat[:limit] + "..."
    return f'"{flat}"'


def _render_window(layout: DexLayout, insns, site_offset: int, window: int) -> list[str]:
    decoded = list(bytecode.iter_instructions(insns))
    site_idx = next((i for i, (off, _, _) in enumerate(decoded) if off == site_offset), None)
    if site_idx is None:
        return ["    (site offset not found in method body)"]
    lines = []
    for off, unit, _ in decoded[max(0, site_idx - window):site_idx + window + 1]:
        text = bytecode.mnemonic(unit)
        sref = bytecode.string_ref_at(insns, off, unit)
        if sref is not None and sref < len(layout.strings):
            text += f" {_quote(layout.string(sref))}"
        marker = "  <== candidate" if off == site_offset else ""
        lines.append(f"    0x{off:04x}: {text}{marker}")
    return lines


def render_class_context(layout: DexLayout, class_name: str,
                         candidate_sites: Iterable[CodeSite],
                         window: int = DEFAULT_WINDOW,
                         char_budget: int = DEFAULT_CHAR_BUDGET) -> ClassContext:
    """Build the deterministic context text for one class.

    ``candidate_sites`` selects which loading sites get a +/-``window``
    instruction listing.  Total text is capped at ``char_budget`` characters
    with a tail truncation marker.
    """
    class_def = layout.classes_by_name.get(class_name)
    if class_def is None:
        raise ClassNotFound(class_name)

    super_name = "(none)" if class_def.superclass_idx == NO_INDEX else \
        descriptor_to_human(layout.type_descriptor(class_def.superclass_idx))
    interfaces = [
        descriptor_to_human(layout.type_descriptor(t))
        for t in interface_type_indices(layout, class_def.interfaces_off)
    ]
    class_data = parse_class_data(layout, class_def)

    fields = []
    for ef in class_data.all_fields:
        fid = layout.field_ids[ef.field_idx]
        fields.append(f"{layout.string(fid.name_idx)}: "
                      f"{descriptor_to_human(layout.type_descriptor(fid.type_idx))}")

    methods = []
    per_method_strings: list[tuple[str, tuple[str, ...]]] = []
    code_by_signature: dict[str, tuple] = {}
    for em in class_data.all_methods:
        sig = method_signature(layout, em.method_idx)
        methods.append(sig)
        if em.code_off == 0:
            continue
        try:
            code = parse_code_item(layout, em.code_off)
            loaded = []
            for off, unit, _ in bytecode.iter_instructions(code.insns):
                sref = bytecode.string_ref_at(code.insns, off, unit)
                if sref is not None and sref < len(layout.strings):
                    loaded.append(layout.string(sref))
            code_by_signature[sig] = code.insns
            if loaded:
                per_method_strings.append((sig, tuple(loaded)))
        except DexError:
            continue  # unreadable method bodies are simply absent from context

    windows = []
    for site in sorted(set(candidate_sites),
                       key=lambda s: (s.method_signature, s.insn_offset)):
        if site.kind is not SiteKind.CODE:
            windows.append(f"  static value of {site.class_name} "
                           f"[{site.method_signature}]")
            continue
        insns = code_by_signature.get(site.method_signature)
        header = f"  {site.method_signature} @0x{site.insn_offset:04x}"
        if insns is None:
            windows.append(header + "\n    (method body unavailable)")
        else:
            body = _render_window(layout, insns, site.insn_offset, window)
            windows.append("\n".join([header] + body))

    lines = [f"class {class_name} extends {super_name}"]
    if interfaces:
        lines.append("implements " + ", ".join(interfaces))
    lines.append("fields:")
    lines.extend(f"  {f}" for f in fields)
    lines.append("methods:")
    lines.extend(f"  {m}" for m in methods)
    if per_method_strings:
        lines.append("string constants:")
        for sig, values in per_method_strings:
            lines.append(f"  {sig}")
            lines.extend(f"    {_quote(v)}" for v in values)
    if windows:
        lines.append("code near candidates:")
        lines.extend(windows)

    text = "\n".join(lines)
    if len(text) > char_budget:
        text = text[:max(0, char_budget - len(TRUNCATION_MARKER))] + TRUNCATION_MARKER

    return ClassContext(
        class_name=class_name,
        superclass_name=super_name,
        field_summaries=tuple(fields),
        method_summaries=tuple(methods),
        string_constants=tuple(per_method_strings),
        disasm_windows=tuple(windows),
        text=text,
    )
