"""Prompt templates: versioned text files shipped with the package.

The template-version hash is embedded in every report and in every cache
key, so editing a template invalidates cached responses and marks reports
produced under different wording.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from importlib import resources

TEMPLATE_NAMES = (
    "a1_identify.txt",
    "a2_label.txt",
    "b1_identify.txt",
    "b2_label.txt",
    "b1_contextual.txt",
)


@lru_cache(maxsize=1)
def load_templates() -> dict[str, str]:
    base = resources.files(__package__) / "templates"
    return {name: (base / name).read_text(encoding="utf-8")
            for name in TEMPLATE_NAMES}


@lru_cache(maxsize=1)
def template_version() -> str:
    digest = hashlib.sha256()
    templates = load_templates()
    for name in sorted(templates):
        digest.update(name.encode())
        digest.update(b"\x00")
        digest.update(templates[name].encode("utf-8"))
    return digest.hexdigest()[:12]


def render(name: str, **fields: str) -> str:
    text = load_templates()[name]
    for key, value in fields.items():
        text = text.replace("{" + key + "}", value)
    return text
