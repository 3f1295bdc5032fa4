"""Content-addressed response cache.

One file per provider call, keyed over (app digest, model, template version,
phase, payload), so a re-run of the same app under the same configuration
replays responses without any provider traffic.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path


class ResponseCache:
    def __init__(self, directory: str | Path | None):
        self.directory = Path(directory) if directory else None
        if self.directory:
            self.directory.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(app_sha256: str, model_id: str, template_version: str,
            phase: str, payload: str) -> str:
        material = "\x00".join([app_sha256, model_id, template_version, phase, payload])
        return hashlib.sha256(material.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def get(self, key: str) -> dict | None:
        if not self.directory:
            return None
        path = self._path(key)
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError):
            return None

    def put(self, key: str, envelope: dict) -> None:
        if not self.directory:
            return
        path = self._path(key)
        # Atomic publish so concurrent writers can never expose partial files.
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(envelope, fh)
            os.replace(tmp, path)
        except OSError:
            try:
                os.unlink(tmp)
            except OSError:
                pass
