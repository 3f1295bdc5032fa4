"""Native parser for the compiled Android resource table (``resources.arsc``).

Only enough of the format is decoded to recover ``string``-type resources:
the chunk sequence is table header -> global string pool -> packages, where
each package carries a type-name pool, a key-name pool and per-configuration
``type`` chunks holding the actual entries.  All offsets and counts are
validated against the chunk bounds before use; a malformed chunk aborts the
walk and the entries decoded so far are returned together with an error flag.

Layout reference: the public little-endian resource-table chunk format
(ResChunk_header / ResStringPool_header / ResTable_package / ResTable_type).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..errors import MalformedChunk

RES_STRING_POOL_TYPE = 0x0001
RES_TABLE_TYPE = 0x0002
RES_TABLE_PACKAGE_TYPE = 0x0200
RES_TABLE_TYPE_TYPE = 0x0201
RES_TABLE_TYPE_SPEC_TYPE = 0x0202

_POOL_UTF8_FLAG = 1 << 8

_ENTRY_FLAG_COMPLEX = 0x0001
_ENTRY_FLAG_COMPACT = 0x0008
_TYPE_FLAG_SPARSE = 0x01
_TYPE_FLAG_OFFSET16 = 0x02
_NO_ENTRY = 0xFFFFFFFF
_NO_ENTRY16 = 0xFFFF

_VALUE_TYPE_STRING = 0x03

# Hard cap applied to every count field before allocation.
_MAX_ITEMS = 1 << 20

_DENSITY_NAMES = {
    120: "ldpi", 160: "mdpi", 213: "tvdpi", 240: "hdpi",
    320: "xhdpi", 480: "xxhdpi", 640: "xxxhdpi",
    0xFFFF: "nodpi", 0xFFFE: "anydpi",
}
_ORIENTATION_NAMES = {1: "port", 2: "land", 3: "square"}


@dataclass(frozen=True)
class ResourceString:
    """One decoded ``string`` resource entry.

    ``config_qualifier`` is empty for the default configuration; ``flagged``
    marks values whose string-pool bytes did not decode cleanly.
    """

    entry_name: str
    value: str
    config_qualifier: str = ""
    flagged: bool = False


@dataclass
class ResourceTable:
    strings: list[ResourceString] = field(default_factory=list)
    package_names: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)


class _Reader:
    """Bounds-checked little-endian cursor over a byte window."""

    __slots__ = ("data", "pos", "end")

    def __init__(self, data: bytes, start: int = 0, end: int | None = None):
        self.data = data
        self.pos = start
        self.end = len(data) if end is None else end
        if not (0 <= start <= self.end <= len(data)):
            raise MalformedChunk("window outside buffer")

    def need(self, n: int) -> None:
        if n < 0 or self.pos + n > self.end:
            raise MalformedChunk(
                f"read of {n} bytes at {self.pos} crosses end {self.end}")

    def u8(self) -> int:
        self.need(1)
        v = self.data[self.pos]
        self.pos += 1
        return v

    def u16(self) -> int:
        self.need(2)
        v = struct.unpack_from("<H", self.data, self.pos)[0]
        self.pos += 2
        return v

    def u32(self) -> int:
        self.need(4)
        v = struct.unpack_from("<I", self.data, self.pos)[0]
        self.pos += 4
        return v

    def take(self, n: int) -> bytes:
        self.need(n)
        v = bytes(self.data[self.pos:self.pos + n])
        self.pos += n
        return v

    def seek(self, pos: int) -> None:
        if not (0 <= pos <= self.end):
            raise MalformedChunk(f"seek to {pos} outside window")
        self.pos = pos


@dataclass(frozen=True)
class _ChunkHeader:
    type: int
    header_size: int
    size: int
    start: int

    @property
    def payload_start(self) -> int:
        return self.start + self.header_size

    @property
    def end(self) -> int:
        return self.start + self.size


def _read_chunk_header(r: _Reader) -> _ChunkHeader:
    start = r.pos
    ctype = r.u16()
    header_size = r.u16()
    size = r.u32()
    if header_size < 8 or size < header_size or start + size > r.end:
        raise MalformedChunk(
            f"chunk 0x{ctype:04x} at {start}: header_size={header_size} size={size}")
    return _ChunkHeader(ctype, header_size, size, start)


class _StringPool:
    """Decoded string pool; per-string ``flagged`` marks dirty decodes."""

    def __init__(self, items: list[tuple[str, bool]]):
        self._items = items

    def __len__(self) -> int:
        return len(self._items)

    def get(self, idx: int) -> tuple[str, bool]:
        if 0 <= idx < len(self._items):
            return self._items[idx]
        raise MalformedChunk(f"string pool index {idx} out of range")


def _decode_pool_utf8_length(data: bytes, pos: int, end: int) -> tuple[int, int]:
    if pos >= end:
        raise MalformedChunk("utf8 length prefix truncated")
    b0 = data[pos]
    if b0 & 0x80:
        if pos + 1 >= end:
            raise MalformedChunk("utf8 length prefix truncated")
        return ((b0 & 0x7F) << 8) | data[pos + 1], pos + 2
    return b0, pos + 1


def _decode_pool_utf16_length(data: bytes, pos: int, end: int) -> tuple[int, int]:
    if pos + 2 > end:
        raise MalformedChunk("utf16 length prefix truncated")
    w0 = struct.unpack_from("<H", data, pos)[0]
    if w0 & 0x8000:
        if pos + 4 > end:
            raise MalformedChunk("utf16 length prefix truncated")
        w1 = struct.unpack_from("<H", data, pos + 2)[0]
        return ((w0 & 0x7FFF) << 16) | w1, pos + 4
    return w0, pos + 2


def _parse_string_pool(data: bytes, chunk: _ChunkHeader) -> _StringPool:
    r = _Reader(data, chunk.start + 8, chunk.end)
    string_count = r.u32()
    style_count = r.u32()
    flags = r.u32()
    strings_start = r.u32()
    r.u32()  # styles_start, unused here
    del style_count

    if string_count > _MAX_ITEMS or string_count * 4 > chunk.size:
        raise MalformedChunk(f"string pool count {string_count} exceeds chunk")

    r.seek(chunk.payload_start)
    offsets = [r.u32() for _ in range(string_count)]

    base = chunk.start + strings_start
    if base > chunk.end:
        raise MalformedChunk("strings_start outside pool chunk")

    is_utf8 = bool(flags & _POOL_UTF8_FLAG)
    items: list[tuple[str, bool]] = []
    for off in offsets:
        pos = base + off
        if pos < chunk.start or pos >= chunk.end:
            raise MalformedChunk(f"string offset {off} outside pool")
        if is_utf8:
            _, pos = _decode_pool_utf8_length(data, pos, chunk.end)
            nbytes, pos = _decode_pool_utf8_length(data, pos, chunk.end)
            if pos + nbytes > chunk.end:
                raise MalformedChunk("utf8 string data truncated")
            raw = bytes(data[pos:pos + nbytes])
            try:
                items.append((raw.decode("utf-8"), False))
            except UnicodeDecodeError:
                items.append((raw.decode("utf-8", "replace"), True))
        else:
            nchars, pos = _decode_pool_utf16_length(data, pos, chunk.end)
            nbytes = nchars * 2
            if pos + nbytes > chunk.end:
                raise MalformedChunk("utf16 string data truncated")
            raw = bytes(data[pos:pos + nbytes])
            try:
                items.append((raw.decode("utf-16-le"), False))
            except UnicodeDecodeError:
                items.append((raw.decode("utf-16-le", "replace"), True))
    return _StringPool(items)


def _decode_packed_language(code: int, base: int) -> str:
    if code == 0:
        return ""
    if code & 0x8000:
        # Three-letter code packed as (MSB) 1tttttss sssfffff.
        return "".join(chr(base + ((code >> shift) & 0x1F)) for shift in (0, 5, 10))
    return (chr(code & 0xFF) + chr(code >> 8)).rstrip("\x00")


def _config_qualifier(cfg: bytes) -> str:
    """Approximate the resource-directory qualifier for a config blob.

    Covers mcc/mnc, locale, orientation, density and SDK version; dimensions
    this scanner never filters on are ignored.  Default config renders "".
    """
    def u16(off):
        return struct.unpack_from("<H", cfg, off)[0] if off + 2 <= len(cfg) else 0

    def u32(off):
        return struct.unpack_from("<I", cfg, off)[0] if off + 4 <= len(cfg) else 0

    parts: list[str] = []
    mcc, mnc = u16(0), u16(2)
    if mcc:
        parts.append(f"mcc{mcc}")
    if mnc:
        parts.append(f"mnc{mnc}")
    locale = u32(4)
    lang = _decode_packed_language(locale & 0xFFFF, ord("a"))
    region = _decode_packed_language(locale >> 16, ord("0"))
    if lang:
        parts.append(lang + (f"-r{region}" if region else ""))
    screen_type = u32(8)
    orient = screen_type & 0xFF
    if orient in _ORIENTATION_NAMES:
        parts.append(_ORIENTATION_NAMES[orient])
    density = (screen_type >> 16) & 0xFFFF
    if density:
        parts.append(_DENSITY_NAMES.get(density, f"{density}dpi"))
    sdk = u16(20)
    if sdk:
        parts.append(f"v{sdk}")
    return "-".join(parts)


def _parse_type_chunk(data: bytes, chunk: _ChunkHeader, type_pool: _StringPool,
                      key_pool: _StringPool, global_pool: _StringPool,
                      out: ResourceTable) -> None:
    r = _Reader(data, chunk.start + 8, chunk.end)
    type_id = r.u8()
    flags = r.u8()
    r.u16()  # reserved
    entry_count = r.u32()
    entries_start = r.u32()
    cfg_size = r.u32()
    if cfg_size < 4 or r.pos - 4 + cfg_size > chunk.end:
        raise MalformedChunk("config blob crosses chunk end")
    cfg = bytes(data[r.pos:r.pos - 4 + cfg_size])

    type_name, _ = type_pool.get(type_id - 1)
    if type_name != "string":
        return
    if entry_count > _MAX_ITEMS or entry_count * 2 > chunk.size:
        raise MalformedChunk(f"type chunk entry count {entry_count} exceeds chunk")

    qualifier = _config_qualifier(cfg)
    entries_base = chunk.start + entries_start
    if entries_base > chunk.end:
        raise MalformedChunk("entries_start outside type chunk")

    r.seek(chunk.payload_start)
    offsets: list[tuple[int, int]] = []  # (entry index, byte offset)
    if flags & _TYPE_FLAG_SPARSE:
        for _ in range(entry_count):
            idx = r.u16()
            off = r.u16() * 4
            offsets.append((idx, off))
    elif flags & _TYPE_FLAG_OFFSET16:
        for i in range(entry_count):
            off = r.u16()
            if off != _NO_ENTRY16:
                offsets.append((i, off * 4))
    else:
        for i in range(entry_count):
            off = r.u32()
            if off != _NO_ENTRY:
                offsets.append((i, off))

    for _, off in offsets:
        er = _Reader(data, entries_base + off, chunk.end)
        er.u16()  # entry struct size
        eflags = er.u16()
        key_idx = er.u32()
        if eflags & _ENTRY_FLAG_COMPACT:
            out.errors.append("compact resource entries are not supported")
            continue
        if eflags & _ENTRY_FLAG_COMPLEX:
            continue
        er.u16()  # Res_value size
        er.u8()   # res0
        dtype = er.u8()
        value_data = er.u32()
        if dtype != _VALUE_TYPE_STRING:
            continue
        name, name_flagged = key_pool.get(key_idx)
        value, value_flagged = global_pool.get(value_data)
        out.strings.append(ResourceString(
            entry_name=name,
            value=value,
            config_qualifier=qualifier,
            flagged=name_flagged or value_flagged,
        ))


def _parse_package(data: bytes, chunk: _ChunkHeader, global_pool: _StringPool,
                   out: ResourceTable) -> None:
    r = _Reader(data, chunk.start + 8, chunk.end)
    r.u32()  # package id
    raw_name = r.take(256)
    name = raw_name.decode("utf-16-le", "replace").split("\x00", 1)[0]
    out.package_names.append(name)

    type_pool: _StringPool | None = None
    key_pool: _StringPool | None = None
    pos = chunk.payload_start
    while pos + 8 <= chunk.end:
        r.seek(pos)
        child = _read_chunk_header(r)
        if child.end > chunk.end:
            raise MalformedChunk("package child chunk crosses package end")
        if child.type == RES_STRING_POOL_TYPE:
            pool = _parse_string_pool(data, child)
            if type_pool is None:
                type_pool = pool
            elif key_pool is None:
                key_pool = pool
        elif child.type == RES_TABLE_TYPE_TYPE:
            if type_pool is None or key_pool is None:
                raise MalformedChunk("type chunk before package string pools")
            _parse_type_chunk(data, child, type_pool, key_pool, global_pool, out)
        elif child.type == RES_TABLE_TYPE_SPEC_TYPE:
            pass  # spec flags are irrelevant to value extraction
        pos = child.end


def parse_resource_table(data: bytes) -> ResourceTable:
    """Decode every ``string``-type resource entry from raw ARSC bytes.

    Never raises: malformed input degrades to the entries parsed so far plus
    a populated ``errors`` list, so one broken chunk cannot kill an app scan.
    """
    out = ResourceTable()
    try:
        r = _Reader(data)
        table = _read_chunk_header(r)
        if table.type != RES_TABLE_TYPE:
            raise MalformedChunk(f"not a resource table (type 0x{table.type:04x})")
        r.u32()  # package count; actual walk is bounds-driven

        global_pool: _StringPool | None = None
        pos = table.payload_start
        while pos + 8 <= table.end:
            r.seek(pos)
            chunk = _read_chunk_header(r)
            if chunk.type == RES_STRING_POOL_TYPE and global_pool is None:
                global_pool = _parse_string_pool(data, chunk)
            elif chunk.type == RES_TABLE_PACKAGE_TYPE:
                if global_pool is None:
                    raise MalformedChunk("package chunk before global string pool")
                _parse_package(data, chunk, global_pool, out)
            pos = chunk.end
    except MalformedChunk as exc:
        out.errors.append(str(exc))
    return out
