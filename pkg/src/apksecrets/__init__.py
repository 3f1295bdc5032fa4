"""apksecrets: hardcoded-credential detection for Android APKs.

Native ZIP/ARSC/DEX parsers recover string constants, a staged LLM pipeline
identifies and labels candidate secrets, and a regex catalog plus Base64
rescan confirm the findings.
"""

from .apk_ingest import ApkArtifact, extract_xml_strings, open_apk, parse_resource_table
from .dex_extract import (
    extract_code_strings,
    index_string_references,
    parse_dex,
    read_string_table,
    render_class_context,
)
from .llm_pipeline import (
    MockProvider,
    MockRules,
    ProviderSpec,
    ScanMode,
    ScanSettings,
    run_pipeline,
)
from .prefilter import PrefilterConfig, entropy, prefilter
from .report import (
    ScanReport,
    aggregate,
    compare_with_baseline,
    disclosure_export,
    sample_plan,
)
from .validators import base64_rescan, catalog_load, normalize_label, validate

__version__ = "0.1.0"

__all__ = [
    "ApkArtifact",
    "MockProvider",
    "MockRules",
    "PrefilterConfig",
    "ProviderSpec",
    "ScanMode",
    "ScanReport",
    "ScanSettings",
    "aggregate",
    "base64_rescan",
    "catalog_load",
    "compare_with_baseline",
    "disclosure_export",
    "entropy",
    "extract_code_strings",
    "extract_xml_strings",
    "index_string_references",
    "normalize_label",
    "open_apk",
    "parse_dex",
    "parse_resource_table",
    "prefilter",
    "read_string_table",
    "render_class_context",
    "run_pipeline",
    "sample_plan",
    "validate",
]
