"""Assemble fixture APKs (ZIP containers) from built ARSC/DEX payloads."""

from __future__ import annotations

import io
import zipfile
from pathlib import Path


def build_apk(path: Path, *, dex_files: list[bytes] | None = None,
              resources: bytes | None = None,
              extra_entries: dict[str, bytes] | None = None,
              compress: bool = True) -> Path:
    method = zipfile.ZIP_DEFLATED if compress else zipfile.ZIP_STORED
    buf = io.BytesIO()
    with zipfile.ZipFile(buf, "w", compression=method) as zf:
        for i, dex in enumerate(dex_files or []):
            name = "classes.dex" if i == 0 else f"classes{i + 1}.dex"
            zf.writestr(name, dex)
        if resources is not None:
            zf.writestr("resources.arsc", resources)
        zf.writestr("AndroidManifest.xml", b"\x03\x00\x08\x00placeholder")
        for name, payload in (extra_entries or {}).items():
            zf.writestr(name, payload)
    path.write_bytes(buf.getvalue())
    return path
