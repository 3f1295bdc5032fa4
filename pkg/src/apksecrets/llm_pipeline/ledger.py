"""Per-call cost accounting in exact fixed-point currency units."""

from __future__ import annotations

import threading
from dataclasses import dataclass
from decimal import Decimal

from .providers import ProviderSpec


@dataclass(frozen=True)
class LedgerRecord:
    phase: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: float
    cost: Decimal

    def as_dict(self) -> dict:
        return {
            "phase": self.phase,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "latency_ms": self.latency_ms,
            "cost": str(self.cost),
        }


def call_cost(spec: ProviderSpec, prompt_tokens: int, completion_tokens: int) -> Decimal:
    """Exact cost of one call: tokens/1000 times the per-1k price."""
    return (Decimal(prompt_tokens) * spec.price_per_1k_prompt_tokens
            + Decimal(completion_tokens) * spec.price_per_1k_completion_tokens) \
        / Decimal(1000)


class CostLedger:
    """Append-only call log; totals are exact Decimal sums of the records."""

    def __init__(self):
        self._lock = threading.Lock()
        self._records: list[LedgerRecord] = []

    def record(self, phase: str, prompt_tokens: int, completion_tokens: int,
               latency_ms: float, spec: ProviderSpec) -> LedgerRecord:
        rec = LedgerRecord(
            phase=phase,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=latency_ms,
            cost=call_cost(spec, prompt_tokens, completion_tokens),
        )
        with self._lock:
            self._records.append(rec)
        return rec

    @property
    def records(self) -> tuple[LedgerRecord, ...]:
        with self._lock:
            return tuple(self._records)

    @property
    def total_cost(self) -> Decimal:
        return sum((r.cost for r in self.records), Decimal(0))

    @property
    def call_count(self) -> int:
        return len(self.records)

    def phase_latency_ms(self) -> dict[str, float]:
        totals: dict[str, float] = {}
        for r in self.records:
            totals[r.phase] = totals.get(r.phase, 0.0) + r.latency_ms
        return totals

    def phase_calls(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for r in self.records:
            counts[r.phase] = counts.get(r.phase, 0) + 1
        return counts

    def as_dict(self) -> dict:
        records = self.records
        return {
            "records": [r.as_dict() for r in records],
            "totals": {
                "calls": len(records),
                "prompt_tokens": sum(r.prompt_tokens for r in records),
                "completion_tokens": sum(r.completion_tokens for r in records),
                "cost": str(sum((r.cost for r in records), Decimal(0))),
            },
        }
