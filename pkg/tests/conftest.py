"""Shared fixtures: one synthetic app with planted secrets used across suites."""

from __future__ import annotations

import random
import string

import pytest

from .apkbuild import build_apk
from .arscbuild import ArscBuilder, Config
from .dexbuild import ClassSpec, DexBuilder, MethodSpec

GOOGLE_KEY = "AIza" + "SyB5f3c9d1e2a4b6c8d0e1f2a3b4c5d6e8f"  # 4 + 35 chars
assert len(GOOGLE_KEY) == 39

JWT = ("eyJhbGciOiJIUzI1NiIsInR5cCI6IkpXVCJ9"
       ".eyJzdWIiOiIxMjM0NTY3ODkwIiwibmFtZSI6IkFwcCJ9"
       ".c2lnbmF0dXJlLXBhcnQ")

UUID_KEY = "123e4567-e89b-12d3-a456-426614174000"


def base64_of(value: str) -> str:
    import base64
    return base64.b64encode(value.encode()).decode()


def benign_code_strings(n: int = 50, seed: int = 7) -> list[str]:
    """Deterministic non-secret strings of assorted shapes."""
    rng = random.Random(seed)
    out = []
    templates = [
        "https://example.com/api/v{}/data",
        "content://com.example.provider/item{}",
        "SELECT * FROM table_{} WHERE id = ?",
        "error code {}: resource unavailable",
        "com.example.module.Feature{}Manager",
        "font/Roboto-Medium{}.ttf",
    ]
    for i in range(n):
        template = templates[i % len(templates)]
        out.append(template.format(rng.randint(0, 999)))
    return out


@pytest.fixture(scope="session")
def planted_apk(tmp_path_factory):
    """APK with one XML secret, a Base64 code secret, a JWT, a UUID-shaped
    analytics key inside an analytics-flavored class, and benign noise."""
    arsc = (
        ArscBuilder(package_name="com.example.demo")
        .add("app_name", "Demo Application")
        .add("api_key", GOOGLE_KEY)
        .add("welcome", "Hello and welcome")
        .build()
    )
    noise = benign_code_strings(50)
    main_ops = [("const-string", 0, base64_of(GOOGLE_KEY)),
                ("const-string", 0, JWT),
                ("return-void",)]
    noise_ops = [("const-string", 0, s) for s in noise] + [("return-void",)]
    dex = (
        DexBuilder()
        .add_class(ClassSpec(
            name="com.example.demo.ApiClient",
            methods=[
                MethodSpec("init", main_ops),
                MethodSpec("noise", noise_ops),
            ],
        ))
        .add_class(ClassSpec(
            name="com.example.demo.AnalyticsTracker",
            methods=[MethodSpec("startMetricaSession", [
                ("const-string", 0, UUID_KEY),
                ("const-string", 0, "analytics session started"),
                ("return-void",),
            ])],
        ))
        .build()
    )
    path = tmp_path_factory.mktemp("apk") / "planted.apk"
    return build_apk(path, dex_files=[dex], resources=arsc)
