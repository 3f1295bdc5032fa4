"""Mutation fuzz harness over the three binary entry points.

Each input is a seeded mutation (byte flips, truncation, splices, count/size
field scribbles) of a valid fixture; the harness verifies that the parsers
only ever raise their declared error types, return within the per-input time
bound, and never balloon process memory.
"""

from __future__ import annotations

import random
import resource
import time
from dataclasses import dataclass, field
from pathlib import Path

from apksecrets.apk_ingest import open_apk, parse_resource_table
from apksecrets.dex_extract import extract_code_strings, parse_dex
from apksecrets.errors import ScanError

PER_INPUT_BUDGET_S = 2.0
MAX_RSS_GROWTH_KB = 512 * 1024  # half a gigabyte of headroom


@dataclass
class FuzzStats:
    inputs: int = 0
    rejected: int = 0          # raised a declared ScanError
    parsed: int = 0            # degraded or clean parse
    slowest_s: float = 0.0
    crashes: list[str] = field(default_factory=list)

    def merge(self, other: "FuzzStats") -> None:
        self.inputs += other.inputs
        self.rejected += other.rejected
        self.parsed += other.parsed
        self.slowest_s = max(self.slowest_s, other.slowest_s)
        self.crashes.extend(other.crashes)


def mutate(data: bytes, rng: random.Random) -> bytes:
    buf = bytearray(data)
    roll = rng.random()
    if roll < 0.08 and len(buf) > 1:
        return bytes(buf[:rng.randrange(len(buf))])
    if roll < 0.12:
        return bytes(buf) + bytes(rng.randrange(256)
                                  for _ in range(rng.randint(1, 32)))
    if roll < 0.20 and len(buf) > 8:
        # scribble over a 32-bit field with an interesting value
        pos = rng.randrange(len(buf) - 4)
        value = rng.choice([0, 1, 0x7FFFFFFF, 0xFFFFFFFF, len(buf),
                            rng.randrange(1 << 32)])
        buf[pos:pos + 4] = value.to_bytes(4, "little")
        return bytes(buf)
    for _ in range(rng.randint(1, 12)):
        if buf:
            buf[rng.randrange(len(buf))] = rng.randrange(256)
    return bytes(buf)


def _drive(n: int, rng: random.Random, make_input, run, label: str) -> FuzzStats:
    stats = FuzzStats()
    for i in range(n):
        payload = make_input(rng)
        start = time.perf_counter()
        try:
            run(payload)
            stats.parsed += 1
        except ScanError:
            stats.rejected += 1
        except Exception as exc:  # undeclared escape = finding
            stats.crashes.append(f"{label}[{i}]: {type(exc).__name__}: {exc}")
        elapsed = time.perf_counter() - start
        stats.slowest_s = max(stats.slowest_s, elapsed)
        if elapsed > PER_INPUT_BUDGET_S:
            stats.crashes.append(f"{label}[{i}]: hang ({elapsed:.2f}s)")
        stats.inputs += 1
    return stats


def fuzz_arsc(base: bytes, n: int, seed: int = 101) -> FuzzStats:
    rng = random.Random(seed)

    def run(data: bytes) -> None:
        table = parse_resource_table(data)
        for r in table.strings:
            assert isinstance(r.value, str)

    return _drive(n, rng, lambda r: mutate(base, r), run, "arsc")


def fuzz_dex(base: bytes, n: int, seed: int = 202) -> FuzzStats:
    rng = random.Random(seed)

    def run(data: bytes) -> None:
        layout = parse_dex(data)
        extract_code_strings([layout])

    return _drive(n, rng, lambda r: mutate(base, r), run, "dex")


def fuzz_apk(base: bytes, n: int, workdir: Path, seed: int = 303) -> FuzzStats:
    rng = random.Random(seed)
    target = workdir / "fuzz-input.apk"

    def make(r: random.Random) -> Path:
        target.write_bytes(mutate(base, r))
        return target

    def run(path: Path) -> None:
        artifact = open_apk(path)
        if artifact.resource_table is not None:
            parse_resource_table(artifact.resource_table)
        for name in artifact.dex_entries:
            try:
                parse_dex(artifact.read_dex(name))
            except ScanError:
                pass

    return _drive(n, rng, make, run, "apk")


def rss_kb() -> int:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
