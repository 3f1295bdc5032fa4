"""Command-line entry point: scan / corpus / validate / compare workflows."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path

import requests

from . import report as report_mod
from .errors import (
    ApkError,
    ConfigError,
    GroundTruthParseError,
    HashMismatch,
    RuleParseError,
    ScanError,
)
from .llm_pipeline import (
    HttpProvider,
    MockProvider,
    MockRules,
    Provider,
    ProviderSpec,
    RateLimiter,
    ScanMode,
    ScanSettings,
    run_pipeline,
)
from .prefilter import PrefilterConfig
from .validators import Catalog, base64_rescan, catalog_load, validate

EXIT_OK = 0
EXIT_ERRORS = 1
EXIT_FATAL = 2

_SHA256_HEX = 64


@dataclass
class RunConfig:
    provider: ProviderSpec = field(default_factory=lambda: ProviderSpec(
        model_id="mock-model", endpoint="mock"))
    prefilter: PrefilterConfig = field(default_factory=PrefilterConfig)
    mode: ScanMode = ScanMode.STANDARD
    concurrency: int = 1
    cache_dir: str | None = None
    rules_dir: str | None = None
    redact: bool = True
    out_dir: str = "reports"
    offline: bool = False
    use_mock: bool = False
    mock_rules: MockRules = field(default_factory=MockRules)
    requests_per_minute: int | None = None
    tokens_per_minute: int | None = None

    def __post_init__(self):
        if self.concurrency < 1:
            raise ConfigError("concurrency must be at least 1")


def _provider_spec_from_dict(d: dict) -> ProviderSpec:
    kwargs: dict = {}
    for key in ("model_id", "endpoint"):
        if key in d:
            kwargs[key] = d[key]
    for key in ("price_per_1k_prompt_tokens", "price_per_1k_completion_tokens"):
        if key in d:
            kwargs[key] = Decimal(str(d[key]))
    for key in ("max_context_tokens", "max_retries", "token_divisor"):
        if key in d:
            kwargs[key] = int(d[key])
    for key in ("request_timeout", "temperature"):
        if key in d:
            kwargs[key] = float(d[key])
    kwargs.setdefault("model_id", "mock-model")
    return ProviderSpec(**kwargs)


def _mock_rules_from_dict(d: dict) -> MockRules:
    kwargs: dict = {}
    if "marker_prefixes" in d:
        kwargs["marker_prefixes"] = tuple(d["marker_prefixes"])
    if "label_rules" in d:
        kwargs["label_rules"] = tuple((p, l) for p, l in d["label_rules"])
    if "context_rules" in d:
        kwargs["context_rules"] = tuple((k, l) for k, l in d["context_rules"])
    if "hallucinate" in d:
        kwargs["hallucinate"] = tuple(d["hallucinate"])
    if "respond_with_indices" in d:
        kwargs["respond_with_indices"] = bool(d["respond_with_indices"])
    return MockRules(**kwargs)


def load_config_file(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    cfg = RunConfig()
    if "provider" in doc:
        cfg.provider = _provider_spec_from_dict(doc["provider"])
    if "prefilter" in doc:
        p = doc["prefilter"]
        cfg.prefilter = PrefilterConfig(
            min_length=int(p.get("min_length", 10)),
            max_length=int(p.get("max_length", 4096)),
            max_space_ratio=float(p.get("max_space_ratio", 0.0)),
            drop_uuid_like=bool(p.get("drop_uuid_like", True)),
            min_charset_classes=int(p.get("min_charset_classes", 2)),
            allowlist_prefixes=tuple(p.get("allowlist_prefixes",
                                           ("-----BEGIN", "eyJ"))),
        )
    if "mode" in doc:
        cfg.mode = ScanMode(doc["mode"])
    for key in ("concurrency",):
        if key in doc:
            cfg.concurrency = int(doc[key])
    for key in ("cache_dir", "rules_dir", "out_dir"):
        if key in doc and doc[key] is not None:
            setattr(cfg, key, str(doc[key]))
    if "redact" in doc:
        cfg.redact = bool(doc["redact"])
    if "mock_rules" in doc:
        cfg.mock_rules = _mock_rules_from_dict(doc["mock_rules"])
    if "requests_per_minute" in doc:
        cfg.requests_per_minute = doc["requests_per_minute"]
    if "tokens_per_minute" in doc:
        cfg.tokens_per_minute = doc["tokens_per_minute"]
    return cfg


def _apply_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.model:
        cfg.provider = _provider_spec_from_dict(
            {**_spec_as_dict(cfg.provider), "model_id": args.model})
    if args.endpoint:
        cfg.provider = _provider_spec_from_dict(
            {**_spec_as_dict(cfg.provider), "endpoint": args.endpoint})
    if args.mock:
        cfg.use_mock = True
    if args.offline:
        cfg.offline = True
    if args.contextual_b1:
        cfg.mode = ScanMode.CONTEXTUAL_B1
    if args.concurrency is not None:
        cfg.concurrency = args.concurrency
    if args.cache_dir:
        cfg.cache_dir = args.cache_dir
    if args.rules_dir:
        cfg.rules_dir = args.rules_dir
    if args.no_redact:
        cfg.redact = False
    if getattr(args, "out", None):
        cfg.out_dir = args.out
    return cfg


def _spec_as_dict(spec: ProviderSpec) -> dict:
    return {
        "model_id": spec.model_id,
        "endpoint": spec.endpoint,
        "price_per_1k_prompt_tokens": str(spec.price_per_1k_prompt_tokens),
        "price_per_1k_completion_tokens": str(spec.price_per_1k_completion_tokens),
        "max_context_tokens": spec.max_context_tokens,
        "request_timeout": spec.request_timeout,
        "max_retries": spec.max_retries,
        "temperature": spec.temperature,
        "token_divisor": spec.token_divisor,
    }


def build_provider(cfg: RunConfig) -> Provider:
    if cfg.use_mock or cfg.provider.endpoint == "mock":
        return MockProvider(cfg.provider, cfg.mock_rules)
    if cfg.offline:
        raise ConfigError(
            "--offline requires the mock provider; no network backend allowed")
    limiter = None
    if cfg.requests_per_minute or cfg.tokens_per_minute:
        limiter = RateLimiter(cfg.requests_per_minute, cfg.tokens_per_minute)
    return HttpProvider(cfg.provider, rate_limiter=limiter)


def build_catalog(cfg: RunConfig) -> Catalog:
    if cfg.rules_dir is None:
        return catalog_load()
    files = sorted(Path(cfg.rules_dir).glob("*.rules"))
    if not files:
        raise RuleParseError(f"no .rules files in {cfg.rules_dir}")
    return catalog_load([str(f) for f in files])


def _settings(cfg: RunConfig) -> ScanSettings:
    return ScanSettings(
        mode=cfg.mode,
        prefilter=cfg.prefilter,
        cache_dir=cfg.cache_dir,
        redact=cfg.redact,
    )


def _warn_contextual(cfg: RunConfig) -> None:
    if cfg.mode is ScanMode.CONTEXTUAL_B1:
        print("warning: contextual identification issues one provider call per "
              "string; expect orders of magnitude more time and cost per app",
              file=sys.stderr)


def cmd_scan(apk_path: str, cfg: RunConfig) -> int:
    _warn_contextual(cfg)
    provider = build_provider(cfg)
    catalog = build_catalog(cfg)
    try:
        rep = run_pipeline(apk_path, _settings(cfg), provider, catalog)
    except ApkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    machine, human = report_mod.write_report_files(rep, cfg.out_dir)
    print(report_mod.human_table(rep))
    print(f"machine report: {machine}")
    print(f"human report:   {human}")
    return EXIT_ERRORS if rep.errors else EXIT_OK


@dataclass
class ManifestRow:
    path: Path | None = None
    sha256: str = ""
    url: str = ""


def parse_manifest(path: str | Path) -> list[ManifestRow]:
    rows = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "," in line:
            sha, url = (part.strip() for part in line.split(",", 1))
            if len(sha) != _SHA256_HEX or not all(
                    c in "0123456789abcdefABCDEF" for c in sha):
                raise ConfigError(f"manifest row has invalid sha256: {line!r}")
            rows.append(ManifestRow(sha256=sha.lower(), url=url))
        else:
            rows.append(ManifestRow(path=Path(line)))
    return rows


def _fetch_row(row: ManifestRow, dest_dir: Path) -> Path:
    resp = requests.get(row.url, timeout=120)
    resp.raise_for_status()
    digest = hashlib.sha256(resp.content).hexdigest()
    if digest != row.sha256:
        quarantine = dest_dir / "quarantine"
        quarantine.mkdir(parents=True, exist_ok=True)
        (quarantine / f"{digest}.apk").write_bytes(resp.content)
        raise HashMismatch(f"{row.url}: expected {row.sha256}, got {digest}")
    path = dest_dir / f"{row.sha256}.apk"
    path.write_bytes(resp.content)
    return path


def cmd_corpus(manifest_path: str, cfg: RunConfig) -> int:
    _warn_contextual(cfg)
    provider = build_provider(cfg)
    catalog = build_catalog(cfg)
    settings = _settings(cfg)
    rows = parse_manifest(manifest_path)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fetch_dir = Path(tempfile.mkdtemp(prefix="apksecrets-fetch-"))

    failures: list[str] = []

    def scan_row(row: ManifestRow):
        try:
            path = row.path if row.path is not None else _fetch_row(row, fetch_dir)
            rep = run_pipeline(path, settings, provider, catalog)
            report_mod.write_report_files(rep, out_dir)
            return rep
        except (ScanError, requests.RequestException, OSError) as exc:
            failures.append(f"{row.path or row.url}: {exc}")
            return None

    if cfg.concurrency == 1:
        results = [scan_row(r) for r in rows]
    else:
        with ThreadPoolExecutor(max_workers=cfg.concurrency) as pool:
            results = list(pool.map(scan_row, rows))

    reports = [r for r in results if r is not None]
    summary = report_mod.aggregate(reports)
    (out_dir / "summary.json").write_text(
        json.dumps(summary.as_dict(), indent=2) + "\n", encoding="utf-8")
    (out_dir / "summary.txt").write_text(summary.to_text(), encoding="utf-8")
    print(summary.to_text())
    for failure in failures:
        print(f"failed: {failure}", file=sys.stderr)
    return EXIT_ERRORS if failures else EXIT_OK


def cmd_validate(strings_path: str, cfg: RunConfig) -> int:
    catalog = build_catalog(cfg)
    rows = [["VALUE", "STATUS", "SERVICE"]]
    try:
        lines = Path(strings_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    for line in lines:
        value = line.strip()
        if not value:
            continue
        result = validate(value, catalog)
        if result.status.value == "UNCONFIRMED":
            rescanned = base64_rescan(value, catalog)
            if rescanned.status.value != "UNCONFIRMED":
                result = rescanned
        shown = value if not cfg.redact else report_mod.redact_value(value)
        rows.append([shown, result.status.value, result.matched_service or "-"])
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    for row in rows:
        print("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return EXIT_OK


def cmd_compare(reports_dir: str, ground_truth_path: str, cfg: RunConfig) -> int:
    try:
        reports = report_mod.load_reports(reports_dir)
        truth = report_mod.load_ground_truth(ground_truth_path)
        summary, dispositions = report_mod.compare_with_baseline(reports, truth)
    except (GroundTruthParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "overlap.json").write_text(
        json.dumps(summary.as_dict(), indent=2) + "\n", encoding="utf-8")
    (out_dir / "dispositions.json").write_text(
        json.dumps(dispositions, indent=2) + "\n", encoding="utf-8")
    print(f"both:          {summary.both}")
    print(f"only ours:     {summary.only_ours}")
    print(f"only baseline: {summary.only_baseline}")
    print(f"recall:        {summary.recall:.3f}"
          + (f"  [{', '.join(summary.flags)}]" if summary.flags else ""))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apksecrets",
        description="Detect hardcoded credentials in Android APKs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", metavar="FILE", help="JSON config file")
        p.add_argument("--model", help="provider model id")
        p.add_argument("--endpoint", help="chat-completions URL or 'mock'")
        p.add_argument("--mock", action="store_true",
                       help="use the offline mock provider")
        p.add_argument("--offline", action="store_true",
                       help="forbid network providers")
        p.add_argument("--contextual-b1", action="store_true",
                       help="identify each code string with its class context")
        p.add_argument("--concurrency", type=int, metavar="N")
        p.add_argument("--cache-dir", metavar="DIR")
        p.add_argument("--rules-dir", metavar="DIR")
        p.add_argument("--no-redact", action="store_true",
                       help="write full secret values to machine reports")
        p.add_argument("--out", metavar="DIR", help="output directory")

    p_scan = sub.add_parser("scan", help="scan one APK")
    p_scan.add_argument("apk", help="path to the APK file")
    common(p_scan)

    p_corpus = sub.add_parser("corpus", help="scan a manifest of APKs")
    p_corpus.add_argument("manifest",
                          help="file of APK paths or sha256,url rows")
    common(p_corpus)

    p_validate = sub.add_parser("validate",
                                help="offline regex/Base64 validation")
    p_validate.add_argument("strings_file", help="one candidate per line")
    common(p_validate)

    p_compare = sub.add_parser("compare", help="compare reports to a baseline")
    p_compare.add_argument("reports_dir")
    p_compare.add_argument("ground_truth", help="CSV: sha256,value,category")
    common(p_compare)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config_file(args.config) if args.config else RunConfig()
        cfg = _apply_flags(cfg, args)
        if args.command == "scan":
            return cmd_scan(args.apk, cfg)
        if args.command == "corpus":
            return cmd_corpus(args.manifest, cfg)
        if args.command == "validate":
            return cmd_validate(args.strings_file, cfg)
        if args.command == "compare":
            return cmd_compare(args.reports_dir, args.ground_truth, cfg)
        raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, RuleParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
