"""Container opening, resource-table decoding and canonical rendering."""

from __future__ import annotations

import string
import zipfile

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apksecrets.apk_ingest import (
    WARN_NO_DEX,
    extract_xml_strings,
    open_apk,
    parse_resource_table,
    render_strings_document,
)
from apksecrets.errors import NotAnArchive
from apksecrets.types import StringSource

from .apkbuild import build_apk
from .arscbuild import ArscBuilder, Config
from .conftest import GOOGLE_KEY
from .dexbuild import ClassSpec, DexBuilder, MethodSpec


def _tiny_dex() -> bytes:
    return DexBuilder().add_class(ClassSpec(
        methods=[MethodSpec("run", [("return-void",)])])).build()


class TestOpenApk:
    def test_multidex_and_resources(self, tmp_path):
        arsc = ArscBuilder().add("api_key", GOOGLE_KEY).build()
        path = build_apk(tmp_path / "app.apk",
                         dex_files=[_tiny_dex(), _tiny_dex()], resources=arsc)
        artifact = open_apk(path)
        assert artifact.dex_entries == ("classes.dex", "classes2.dex")
        assert artifact.resource_table == arsc
        assert artifact.size_bytes == path.stat().st_size
        assert len(artifact.sha256) == 64
        assert not artifact.warnings

    def test_dex_entries_numeric_order(self, tmp_path):
        import io
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            for name in ["classes10.dex", "classes2.dex", "classes.dex"]:
                zf.writestr(name, _tiny_dex())
        path = tmp_path / "multi.apk"
        path.write_bytes(buf.getvalue())
        artifact = open_apk(path)
        assert artifact.dex_entries == ("classes.dex", "classes2.dex",
                                        "classes10.dex")

    def test_no_dex_is_warning_not_error(self, tmp_path):
        arsc = ArscBuilder().add("name", "x").build()
        path = build_apk(tmp_path / "nodex.apk", resources=arsc)
        artifact = open_apk(path)
        assert artifact.dex_entries == ()
        assert WARN_NO_DEX in artifact.warnings
        assert artifact.resource_table is not None

    def test_text_file_is_not_an_archive(self, tmp_path):
        path = tmp_path / "fake.apk"
        path.write_text("this is not a zip file at all")
        with pytest.raises(NotAnArchive):
            open_apk(path)

    def test_sha256_matches_file_bytes(self, tmp_path):
        import hashlib
        path = build_apk(tmp_path / "h.apk", dex_files=[_tiny_dex()])
        artifact = open_apk(path)
        assert artifact.sha256 == hashlib.sha256(path.read_bytes()).hexdigest()

    def test_read_dex_roundtrip(self, tmp_path):
        dex = _tiny_dex()
        path = build_apk(tmp_path / "r.apk", dex_files=[dex])
        artifact = open_apk(path)
        assert artifact.read_dex("classes.dex") == dex


class TestParseResourceTable:
    def test_single_default_entry(self):
        table = parse_resource_table(
            ArscBuilder().add("api_key", GOOGLE_KEY).build())
        assert not table.errors
        assert [(r.entry_name, r.value, r.config_qualifier)
                for r in table.strings] == [("api_key", GOOGLE_KEY, "")]
        assert table.package_names == ["com.example.app"]

    def test_round_trip_many_entries(self):
        entries = {
            "app_name": "Demo",
            "api_key": GOOGLE_KEY,
            "escaped": 'va<l&ue>"x"',
            "unicode": "héllo wörld ☃",
            "empty": "",
        }
        builder = ArscBuilder()
        for name, value in entries.items():
            builder.add(name, value)
        table = parse_resource_table(builder.build())
        assert not table.errors
        assert {(r.entry_name, r.value) for r in table.strings} == set(entries.items())

    @pytest.mark.parametrize("utf8", [True, False])
    def test_both_pool_encodings(self, utf8):
        data = ArscBuilder(utf8_pool=utf8).add("k", "värde 中文").build()
        table = parse_resource_table(data)
        assert not table.errors
        assert table.strings[0].value == "värde 中文"

    def test_config_qualifiers(self):
        builder = (ArscBuilder()
                   .add("greeting", "Hello")
                   .add("greeting", "Bonjour", Config(lang="fr"))
                   .add("greeting", "Hallo", Config(lang="de", region="AT")))
        table = parse_resource_table(builder.build())
        got = {(r.config_qualifier, r.value) for r in table.strings}
        assert got == {("", "Hello"), ("fr", "Bonjour"), ("de-rAT", "Hallo")}

    def test_non_string_types_excluded(self):
        data = ArscBuilder(extra_type="color").add("k", "v").build()
        table = parse_resource_table(data)
        assert [(r.entry_name, r.value) for r in table.strings] == [("k", "v")]

    def test_zero_string_entries(self):
        data = ArscBuilder(extra_type="color").build()
        table = parse_resource_table(data)
        assert table.strings == []
        assert not table.errors

    def test_malformed_chunk_partial_result(self):
        data = bytearray(ArscBuilder().add("k", "v").build())
        data = data[:60]  # cut inside the global pool
        table = parse_resource_table(bytes(data))
        assert table.errors

    def test_not_a_table(self):
        table = parse_resource_table(b"\x01\x00\x08\x00\x10\x00\x00\x00crap")
        assert table.strings == []
        assert table.errors


class TestCanonicalDocument:
    def test_sorted_and_escaped(self):
        doc = render_strings_document([("key", "sk-<secret>&x"), ("app_name", "Demo")])
        lines = doc.splitlines()
        assert lines[0] == '<?xml version="1.0" encoding="utf-8"?>'
        assert lines[1] == "<resources>"
        assert lines[2] == '    <string name="app_name">Demo</string>'
        assert lines[3] == '    <string name="key">sk-&lt;secret&gt;&amp;x</string>'
        assert lines[4] == "</resources>"

    def test_empty_is_empty(self):
        assert render_strings_document([]) == ""

    @settings(max_examples=100)
    @given(st.lists(st.tuples(
        st.text(alphabet=string.ascii_lowercase + "_", min_size=1, max_size=12),
        st.text(max_size=30)), max_size=12))
    def test_order_independent_and_idempotent(self, entries):
        import random
        shuffled = entries[:]
        random.Random(0).shuffle(shuffled)
        assert render_strings_document(entries) == render_strings_document(shuffled)


class TestExtractXmlStrings:
    def test_default_config_only(self, tmp_path):
        arsc = (ArscBuilder()
                .add("app_name", "Demo")
                .add("key", "sk-value")
                .add("app_name", "Démo", Config(lang="fr"))
                .build())
        artifact = open_apk(build_apk(tmp_path / "x.apk",
                                      dex_files=[_tiny_dex()], resources=arsc))
        xml = extract_xml_strings(artifact)
        assert [(e.entry_name, e.value) for e in xml.strings] == [
            ("app_name", "Demo"), ("key", "sk-value")]
        assert all(e.source is StringSource.XML for e in xml.strings)
        assert "Démo" not in xml.document
        assert len(xml.all_resources) == 3
        assert xml.package_name == "com.example.app"

    def test_without_resource_table(self, tmp_path):
        artifact = open_apk(build_apk(tmp_path / "no.apk", dex_files=[_tiny_dex()]))
        xml = extract_xml_strings(artifact)
        assert xml.strings == []
        assert xml.document == ""

    def test_document_matches_render(self, tmp_path):
        arsc = ArscBuilder().add("b", "2").add("a", "1").build()
        artifact = open_apk(build_apk(tmp_path / "d.apk",
                                      dex_files=[_tiny_dex()], resources=arsc))
        xml = extract_xml_strings(artifact)
        assert xml.document == render_strings_document([("a", "1"), ("b", "2")])
