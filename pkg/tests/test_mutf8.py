"""MUTF-8 decoder equivalence against an independent stdlib-codec route."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apksecrets.dex_extract import decode_mutf8, read_string_data, read_uleb128
from apksecrets.errors import MutfDecodeError, TruncatedFile

from .dexbuild import encode_mutf8, encode_uleb128, string_data_item


def reference_decode(raw: bytes) -> str:
    """Independent decode path built from stdlib codecs.

    In valid MUTF-8 the byte pair C0 80 can only encode U+0000 (C0 is never
    a continuation byte), surrogatepass recovers the CESU-8 pieces, and a
    UTF-16 round trip recombines surrogate pairs exactly like a JVM would.
    """
    plain = raw.replace(b"\xc0\x80", b"\x00")
    text = plain.decode("utf-8", "surrogatepass")
    return text.encode("utf-16-le", "surrogatepass") \
        .decode("utf-16-le", "surrogatepass")


# Includes NUL, all BMP ranges, lone surrogates and supplementary planes.
any_utf16_text = st.text(
    alphabet=st.characters(min_codepoint=0, max_codepoint=0x10FFFF),
    max_size=40)


class TestDecodeMutf8:
    @settings(max_examples=400, deadline=None)
    @given(any_utf16_text)
    def test_agrees_with_reference_decoder(self, text):
        encoded = encode_mutf8(text)
        assert decode_mutf8(encoded) == reference_decode(encoded)

    @settings(max_examples=200, deadline=None)
    @given(st.text(max_size=40))  # hypothesis default excludes surrogates
    def test_round_trip_without_lone_surrogates(self, text):
        assert decode_mutf8(encode_mutf8(text)) == text

    def test_two_byte_nul(self):
        assert decode_mutf8(b"\xc0\x80") == "\x00"

    def test_surrogate_pair_recombines(self):
        assert decode_mutf8(encode_mutf8("\U0001F511")) == "\U0001F511"

    @pytest.mark.parametrize("bad", [
        b"\x00",             # raw NUL is never valid inside MUTF-8
        b"\xc0",             # truncated 2-byte sequence
        b"\xe0\x80",         # truncated 3-byte sequence
        b"\xff\x80\x80",     # invalid lead byte
        b"\xf0\x90\x80\x80",  # 4-byte UTF-8 is not MUTF-8
        b"\x80",             # bare continuation byte
    ])
    def test_invalid_sequences_raise(self, bad):
        with pytest.raises(MutfDecodeError):
            decode_mutf8(bad)


class TestStringData:
    def test_nul_item(self):
        assert read_string_data(b"\x01\xc0\x80\x00", 0) == "\x00"

    @settings(max_examples=200, deadline=None)
    @given(any_utf16_text)
    def test_item_round_trip(self, text):
        data = string_data_item(text)
        decoded = read_string_data(data, 0)
        assert decoded == reference_decode(encode_mutf8(text))

    def test_length_mismatch_raises(self):
        # declared utf16 length 5, actual 2
        with pytest.raises(MutfDecodeError):
            read_string_data(b"\x05ab\x00", 0)

    def test_unterminated_raises(self):
        with pytest.raises(TruncatedFile):
            read_string_data(b"\x02ab", 0)


class TestUleb128:
    @settings(max_examples=300, deadline=None)
    @given(st.integers(min_value=0, max_value=0xFFFFFFFF))
    def test_round_trip(self, value):
        data = encode_uleb128(value)
        decoded, pos = read_uleb128(data, 0)
        assert decoded == value
        assert pos == len(data)

    def test_multibyte_example(self):
        assert read_uleb128(b"\xf0\x01", 0) == (240, 2)

    def test_truncated(self):
        with pytest.raises(TruncatedFile):
            read_uleb128(b"\x80\x80", 0)
