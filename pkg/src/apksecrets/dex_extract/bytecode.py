"""Dalvik instruction stream walking.

Every opcode maps to a fixed width in 16-bit code units, except the three
NOP-encoded payload pseudo-instructions (packed-switch, sparse-switch,
fill-array-data) whose width is derived from their headers.  The walker
yields one entry per instruction and is guaranteed to consume exactly
``insns_size`` code units or raise.
"""

from __future__ import annotations

from typing import Iterator, Sequence

from ..errors import InstructionWalkError

OP_CONST_STRING = 0x1A        # format 21c, 2 units, string@16
OP_CONST_STRING_JUMBO = 0x1B  # format 31c, 3 units, string@32

_PACKED_SWITCH_IDENT = 0x0100
_SPARSE_SWITCH_IDENT = 0x0200
_FILL_ARRAY_IDENT = 0x0300


def _build_opcode_table() -> list[tuple[str, int]]:
    table: list[tuple[str, int]] = [("unused", 1)] * 256

    def put(spec: dict[int, tuple[str, int]]):
        for op, entry in spec.items():
            table[op] = entry

    put({
        0x00: ("nop", 1),
        0x01: ("move", 1), 0x02: ("move/from16", 2), 0x03: ("move/16", 3),
        0x04: ("move-wide", 1), 0x05: ("move-wide/from16", 2), 0x06: ("move-wide/16", 3),
        0x07: ("move-object", 1), 0x08: ("move-object/from16", 2),
        0x09: ("move-object/16", 3),
        0x0A: ("move-result", 1), 0x0B: ("move-result-wide", 1),
        0x0C: ("move-result-object", 1), 0x0D: ("move-exception", 1),
        0x0E: ("return-void", 1), 0x0F: ("return", 1),
        0x10: ("return-wide", 1), 0x11: ("return-object", 1),
        0x12: ("const/4", 1), 0x13: ("const/16", 2), 0x14: ("const", 3),
        0x15: ("const/high16", 2), 0x16: ("const-wide/16", 2),
        0x17: ("const-wide/32", 3), 0x18: ("const-wide", 5),
        0x19: ("const-wide/high16", 2),
        0x1A: ("const-string", 2), 0x1B: ("const-string/jumbo", 3),
        0x1C: ("const-class", 2),
        0x1D: ("monitor-enter", 1), 0x1E: ("monitor-exit", 1),
        0x1F: ("check-cast", 2), 0x20: ("instance-of", 2),
        0x21: ("array-length", 1), 0x22: ("new-instance", 2),
        0x23: ("new-array", 2), 0x24: ("filled-new-array", 3),
        0x25: ("filled-new-array/range", 3), 0x26: ("fill-array-data", 3),
        0x27: ("throw", 1), 0x28: ("goto", 1), 0x29: ("goto/16", 2),
        0x2A: ("goto/32", 3), 0x2B: ("packed-switch", 3), 0x2C: ("sparse-switch", 3),
        0x2D: ("cmpl-float", 2), 0x2E: ("cmpg-float", 2), 0x2F: ("cmpl-double", 2),
        0x30: ("cmpg-double", 2), 0x31: ("cmp-long", 2),
    })
    for i, name in enumerate(["if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le"]):
        table[0x32 + i] = (name, 2)
    for i, name in enumerate(["if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez"]):
        table[0x38 + i] = (name, 2)
    array_kinds = ["", "-wide", "-object", "-boolean", "-byte", "-char", "-short"]
    for i, kind in enumerate(array_kinds):
        table[0x44 + i] = (f"aget{kind}", 2)
        table[0x4B + i] = (f"aput{kind}", 2)
    for i, kind in enumerate(array_kinds):
        table[0x52 + i] = (f"iget{kind}", 2)
        table[0x59 + i] = (f"iput{kind}", 2)
        table[0x60 + i] = (f"sget{kind}", 2)
        table[0x67 + i] = (f"sput{kind}", 2)
    for i, name in enumerate(["virtual", "super", "direct", "static", "interface"]):
        table[0x6E + i] = (f"invoke-{name}", 3)
        table[0x74 + i] = (f"invoke-{name}/range", 3)
    unops = [
        "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double",
        "int-to-long", "int-to-float", "int-to-double", "long-to-int",
        "long-to-float", "long-to-double", "float-to-int", "float-to-long",
        "float-to-double", "double-to-int", "double-to-long", "double-to-float",
        "int-to-byte", "int-to-char", "int-to-short",
    ]
    for i, name in enumerate(unops):
        table[0x7B + i] = (name, 1)
    binops = (
        [f"{op}-int" for op in ("add", "sub", "mul", "div", "rem", "and", "or",
                                "xor", "shl", "shr", "ushr")]
        + [f"{op}-long" for op in ("add", "sub", "mul", "div", "rem", "and", "or",
                                   "xor", "shl", "shr", "ushr")]
        + [f"{op}-float" for op in ("add", "sub", "mul", "div", "rem")]
        + [f"{op}-double" for op in ("add", "sub", "mul", "div", "rem")]
    )
    for i, name in enumerate(binops):
        table[0x90 + i] = (name, 2)
        table[0xB0 + i] = (f"{name}/2addr", 1)
    lit16 = ["add-int/lit16", "rsub-int", "mul-int/lit16", "div-int/lit16",
             "rem-int/lit16", "and-int/lit16", "or-int/lit16", "xor-int/lit16"]
    for i, name in enumerate(lit16):
        table[0xD0 + i] = (name, 2)
    lit8 = ["add-int/lit8", "rsub-int/lit8", "mul-int/lit8", "div-int/lit8",
            "rem-int/lit8", "and-int/lit8", "or-int/lit8", "xor-int/lit8",
            "shl-int/lit8", "shr-int/lit8", "ushr-int/lit8"]
    for i, name in enumerate(lit8):
        table[0xD8 + i] = (name, 2)
    put({
        0xFA: ("invoke-polymorphic", 4), 0xFB: ("invoke-polymorphic/range", 4),
        0xFC: ("invoke-custom", 3), 0xFD: ("invoke-custom/range", 3),
        0xFE: ("const-method-handle", 2), 0xFF: ("const-method-type", 2),
    })
    for op in range(256):
        if table[op] == ("unused", 1):
            table[op] = (f"unused-{op:02x}", 1)
    return table


OPCODES: tuple[tuple[str, int], ...] = tuple(_build_opcode_table())


def _payload_width(insns: Sequence[int], pos: int, ident: int) -> int:
    if ident == _PACKED_SWITCH_IDENT:
        if pos + 1 >= len(insns):
            raise InstructionWalkError("packed-switch payload header truncated")
        return insns[pos + 1] * 2 + 4
    if ident == _SPARSE_SWITCH_IDENT:
        if pos + 1 >= len(insns):
            raise InstructionWalkError("sparse-switch payload header truncated")
        return insns[pos + 1] * 4 + 2
    # fill-array-data: u16 element width, u32 element count, packed data
    if pos + 3 >= len(insns):
        raise InstructionWalkError("fill-array-data payload header truncated")
    elem_width = insns[pos + 1]
    count = insns[pos + 2] | (insns[pos + 3] << 16)
    return (count * elem_width + 1) // 2 + 4


def iter_instructions(insns: Sequence[int]) -> Iterator[tuple[int, int, int]]:
    """Walk a code-unit array, yielding (offset, first_unit, width).

    Payload pseudo-instructions are yielded as single entries spanning their
    whole extent so the walk can never misalign inside them.
    """
    pos = 0
    n = len(insns)
    while pos < n:
        unit = insns[pos]
        op = unit & 0xFF
        if op == 0x00 and unit in (_PACKED_SWITCH_IDENT, _SPARSE_SWITCH_IDENT,
                                   _FILL_ARRAY_IDENT):
            width = _payload_width(insns, pos, unit)
        else:
            width = OPCODES[op][1]
        if pos + width > n:
            raise InstructionWalkError(
                f"instruction 0x{op:02x} at unit {pos} crosses insns end")
        yield pos, unit, width
        pos += width


def mnemonic(unit: int) -> str:
    op = unit & 0xFF
    if op == 0x00:
        if unit == _PACKED_SWITCH_IDENT:
            return "packed-switch-payload"
        if unit == _SPARSE_SWITCH_IDENT:
            return "sparse-switch-payload"
        if unit == _FILL_ARRAY_IDENT:
            return "fill-array-data-payload"
    return OPCODES[op][0]


def string_ref_at(insns: Sequence[int], pos: int, unit: int) -> int | None:
    """String-table index loaded at ``pos``, if the instruction is one."""
    op = unit & 0xFF
    if op == OP_CONST_STRING:
        return insns[pos + 1]
    if op == OP_CONST_STRING_JUMBO:
        return insns[pos + 1] | (insns[pos + 2] << 16)
    return None
