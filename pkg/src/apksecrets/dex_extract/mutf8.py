"""MUTF-8 and ULEB128 decoding for DEX string data.

MUTF-8 differs from UTF-8 in two ways: U+0000 is stored as the two-byte
sequence ``C0 80``, and supplementary characters are stored as CESU-8
surrogate pairs (two three-byte units) rather than one four-byte sequence.
"""

from __future__ import annotations

from ..errors import MutfDecodeError, TruncatedFile


def read_uleb128(data: bytes, pos: int) -> tuple[int, int]:
    """Decode one unsigned LEB128 value; returns (value, next position)."""
    result = 0
    for i in range(5):  # DEX caps ULEB128 at 5 bytes (32-bit values)
        if pos + i >= len(data):
            raise TruncatedFile("uleb128 runs past end of buffer")
        byte = data[pos + i]
        result |= (byte & 0x7F) << (7 * i)
        if not byte & 0x80:
            return result, pos + i + 1
    raise MutfDecodeError("uleb128 longer than 5 bytes")


def decode_mutf8(raw: bytes) -> str:
    """Decode a MUTF-8 payload into a normal string.

    Raises :class:`MutfDecodeError` on any invalid sequence; callers that
    need partial recovery catch it and substitute a replacement marker.
    """
    out: list[str] = []
    pending_high: int | None = None  # high surrogate awaiting its pair
    i = 0
    n = len(raw)

    def flush_surrogate() -> None:
        nonlocal pending_high
        if pending_high is not None:
            out.append(chr(pending_high))
            pending_high = None

    while i < n:
        b0 = raw[i]
        if b0 == 0x00:
            raise MutfDecodeError("raw NUL byte inside MUTF-8 data")
        if b0 < 0x80:
            flush_surrogate()
            out.append(chr(b0))
            i += 1
            continue
        if b0 & 0xE0 == 0xC0:
            if i + 1 >= n or raw[i + 1] & 0xC0 != 0x80:
                raise MutfDecodeError(f"bad 2-byte sequence at {i}")
            cp = ((b0 & 0x1F) << 6) | (raw[i + 1] & 0x3F)
            flush_surrogate()
            out.append(chr(cp))
            i += 2
            continue
        if b0 & 0xF0 == 0xE0:
            if i + 2 >= n or raw[i + 1] & 0xC0 != 0x80 or raw[i + 2] & 0xC0 != 0x80:
                raise MutfDecodeError(f"bad 3-byte sequence at {i}")
            cp = ((b0 & 0x0F) << 12) | ((raw[i + 1] & 0x3F) << 6) | (raw[i + 2] & 0x3F)
            i += 3
            if 0xD800 <= cp <= 0xDBFF:
                flush_surrogate()
                pending_high = cp
            elif 0xDC00 <= cp <= 0xDFFF:
                if pending_high is None:
                    out.append(chr(cp))  # lone low surrogate, kept verbatim
                else:
                    combined = 0x10000 + ((pending_high - 0xD800) << 10) + (cp - 0xDC00)
                    out.append(chr(combined))
                    pending_high = None
            else:
                flush_surrogate()
                out.append(chr(cp))
            continue
        raise MutfDecodeError(f"invalid lead byte 0x{b0:02x} at {i}")

    flush_surrogate()
    return "".join(out)


def read_string_data(data: bytes, offset: int) -> str:
    """Decode one ``string_data_item``: ULEB128 UTF-16 length, payload, NUL."""
    if offset >= len(data):
        raise TruncatedFile("string_data offset past end")
    utf16_len, pos = read_uleb128(data, offset)
    end = data.find(b"\x00", pos)
    if end < 0:
        raise TruncatedFile("unterminated string_data payload")
    text = decode_mutf8(data[pos:end])
    # utf16 length counts code units: supplementary characters count twice.
    units = sum(2 if ord(c) > 0xFFFF else 1 for c in text)
    if units != utf16_len:
        raise MutfDecodeError(
            f"declared utf16 length {utf16_len} != decoded {units}")
    return text
