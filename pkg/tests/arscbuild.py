"""Test-side ARSC encoder.

Writes compiled resource tables from a known entry map, independently of the
parser under test: the forward direction is implemented from the public
chunk format, so parse(build(entries)) == entries is a real dual-route check.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

RES_STRING_POOL_TYPE = 0x0001
RES_TABLE_TYPE = 0x0002
RES_TABLE_PACKAGE_TYPE = 0x0200
RES_TABLE_TYPE_TYPE = 0x0201
RES_TABLE_TYPE_SPEC_TYPE = 0x0202

UTF8_FLAG = 1 << 8
NO_ENTRY = 0xFFFFFFFF
TYPE_STRING_VALUE = 0x03


@dataclass(frozen=True)
class Config:
    """Subset of ResTable_config dimensions the scanner renders."""

    lang: str = ""
    region: str = ""
    density: int = 0
    sdk: int = 0
    orientation: int = 0

    def qualifier(self) -> str:
        density_names = {120: "ldpi", 160: "mdpi", 213: "tvdpi", 240: "hdpi",
                         320: "xhdpi", 480: "xxhdpi", 640: "xxxhdpi"}
        orientation_names = {1: "port", 2: "land", 3: "square"}
        parts = []
        if self.lang:
            parts.append(self.lang + (f"-r{self.region}" if self.region else ""))
        if self.orientation:
            parts.append(orientation_names[self.orientation])
        if self.density:
            parts.append(density_names.get(self.density, f"{self.density}dpi"))
        if self.sdk:
            parts.append(f"v{self.sdk}")
        return "-".join(parts)

    def blob(self) -> bytes:
        locale = 0
        if self.lang:
            locale |= ord(self.lang[0]) | (ord(self.lang[1]) << 8)
        if self.region:
            locale |= (ord(self.region[0]) | (ord(self.region[1]) << 8)) << 16
        screen_type = (self.orientation & 0xFF) | ((self.density & 0xFFFF) << 16)
        version = self.sdk & 0xFFFF
        body = struct.pack("<7I", 0, locale, screen_type, 0, 0, version, 0)
        return struct.pack("<I", len(body) + 4) + body


DEFAULT = Config()


def _chunk(ctype: int, header_extra: bytes, payload: bytes) -> bytes:
    header_size = 8 + len(header_extra)
    size = header_size + len(payload)
    return struct.pack("<2HI", ctype, header_size, size) + header_extra + payload


def _pad4(data: bytearray) -> None:
    while len(data) % 4:
        data.append(0)


def build_string_pool(strings: list[str], utf8: bool = True) -> bytes:
    offsets: list[int] = []
    blob = bytearray()
    for s in strings:
        offsets.append(len(blob))
        if utf8:
            encoded = s.encode("utf-8")
            utf16_units = sum(2 if ord(c) > 0xFFFF else 1 for c in s)
            for length in (utf16_units, len(encoded)):
                if length > 0x7F:
                    blob.append(0x80 | (length >> 8))
                    blob.append(length & 0xFF)
                else:
                    blob.append(length)
            blob.extend(encoded)
            blob.append(0)
        else:
            units = s.encode("utf-16-le")
            nchars = len(units) // 2
            if nchars >= 0x8000:
                blob.extend(struct.pack("<2H", 0x8000 | (nchars >> 16),
                                        nchars & 0xFFFF))
            else:
                blob.extend(struct.pack("<H", nchars))
            blob.extend(units)
            blob.extend(b"\x00\x00")
    _pad4(blob)

    header_extra = bytearray()
    offsets_blob = b"".join(struct.pack("<I", o) for o in offsets)
    # strings_start is relative to the chunk start (28-byte pool header).
    strings_start = 28 + len(offsets_blob)
    header_extra += struct.pack(
        "<5I", len(strings), 0, UTF8_FLAG if utf8 else 0, strings_start, 0)
    return _chunk(RES_STRING_POOL_TYPE, bytes(header_extra),
                  offsets_blob + bytes(blob))


@dataclass
class ArscBuilder:
    """Assemble a resource table holding ``string`` entries (and optionally
    entries of another resource type, to exercise type filtering)."""

    package_name: str = "com.example.app"
    utf8_pool: bool = True
    # (entry_name, value, config); same entry may repeat under configs
    entries: list[tuple[str, str, Config]] = field(default_factory=list)
    extra_type: str | None = None   # e.g. "color", given one dummy entry

    def add(self, name: str, value: str, config: Config = DEFAULT) -> "ArscBuilder":
        self.entries.append((name, value, config))
        return self

    def build(self) -> bytes:
        values: list[str] = []
        value_idx: dict[str, int] = {}
        for _, value, _ in self.entries:
            if value not in value_idx:
                value_idx[value] = len(values)
                values.append(value)
        global_pool = build_string_pool(values, self.utf8_pool)

        type_names = ["string"] + ([self.extra_type] if self.extra_type else [])
        type_pool = build_string_pool(type_names, self.utf8_pool)

        keys: list[str] = []
        key_idx: dict[str, int] = {}
        for name, _, _ in self.entries:
            if name not in key_idx:
                key_idx[name] = len(keys)
                keys.append(name)
        key_pool = build_string_pool(keys, self.utf8_pool)

        configs: list[Config] = []
        for _, _, config in self.entries:
            if config not in configs:
                configs.append(config)

        chunks = bytearray()
        chunks += self._type_spec_chunk(type_id=1, entry_count=len(keys))
        for config in configs:
            chunks += self._type_chunk(config, keys, key_idx, value_idx)
        if self.extra_type:
            chunks += self._type_spec_chunk(type_id=2, entry_count=1)
            chunks += self._extra_type_chunk()

        name_utf16 = self.package_name.encode("utf-16-le")[:254]
        name_field = name_utf16 + b"\x00" * (256 - len(name_utf16))
        package_header = struct.pack("<I", 0x7F) + name_field + struct.pack(
            "<5I",
            288,                        # typeStrings offset (package header size)
            len(type_names),
            288 + len(type_pool),       # keyStrings offset
            len(keys),
            0)                          # typeIdOffset
        package = _chunk(RES_TABLE_PACKAGE_TYPE, package_header,
                         type_pool + key_pool + bytes(chunks))

        return _chunk(RES_TABLE_TYPE, struct.pack("<I", 1), global_pool + package)

    def _type_spec_chunk(self, type_id: int, entry_count: int) -> bytes:
        header_extra = struct.pack("<2B H I", type_id, 0, 0, entry_count)
        payload = struct.pack(f"<{entry_count}I", *([0] * entry_count)) \
            if entry_count else b""
        return _chunk(RES_TABLE_TYPE_SPEC_TYPE, header_extra, payload)

    def _type_chunk(self, config: Config, keys: list[str],
                    key_idx: dict[str, int], value_idx: dict[str, int]) -> bytes:
        cfg_blob = config.blob()
        rows = {key_idx[name]: value_idx[value]
                for name, value, c in self.entries if c == config}

        entries_blob = bytearray()
        offsets = []
        for i in range(len(keys)):
            if i not in rows:
                offsets.append(NO_ENTRY)
                continue
            offsets.append(len(entries_blob))
            entries_blob += struct.pack("<HHI", 8, 0, i)          # ResTable_entry
            entries_blob += struct.pack("<HBBI", 8, 0, TYPE_STRING_VALUE, rows[i])

        header_extra = struct.pack("<2B H 2I", 1, 0, 0, len(keys),
                                   20 + len(cfg_blob) + 4 * len(keys)) + cfg_blob
        offsets_blob = b"".join(struct.pack("<I", o) for o in offsets)
        return _chunk(RES_TABLE_TYPE_TYPE, header_extra,
                      offsets_blob + bytes(entries_blob))

    def _extra_type_chunk(self) -> bytes:
        # One integer-typed entry under the extra type; must never surface.
        cfg_blob = DEFAULT.blob()
        entries_blob = struct.pack("<HHI", 8, 0, 0) + struct.pack(
            "<HBBI", 8, 0, 0x10, 42)  # TYPE_INT_DEC
        header_extra = struct.pack("<2B H 2I", 2, 0, 0, 1,
                                   20 + len(cfg_blob) + 4) + cfg_blob
        return _chunk(RES_TABLE_TYPE_TYPE, header_extra,
                      struct.pack("<I", 0) + entries_blob)
