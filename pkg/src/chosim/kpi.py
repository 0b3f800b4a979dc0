"""Handover KPIs: CBRA rate, normalized event rates and average handover delay."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .cho import Event, EventKind

NO_HANDOVERS = None  # r_cbra / d_ho marker for runs without a completed handover


@dataclass(frozen=True)
class LatencyComponent:
    name: str
    minimum: float
    average: float


DEFAULT_COMPONENTS = (
    LatencyComponent("RA scheduling period", 0.5, 2.5),
    LatencyComponent("RA preamble transmission", 1.0, 1.0),
    LatencyComponent("preamble detection and RAR transmission", 3.0, 5.0),
    LatencyComponent("UE processing delay (UL grant)", 5.0, 5.0),
    LatencyComponent("Msg3 transmission", 1.0, 1.0),
    LatencyComponent("BS processing delay", 4.0, 4.0),
    LatencyComponent("contention resolution transmission", 1.0, 1.0),
)
CFRA_COMPONENTS = 3  # CFRA completes after the first three components


@dataclass(frozen=True)
class LatencyTable:
    components: tuple[LatencyComponent, ...] = DEFAULT_COMPONENTS

    @property
    def cfra_min(self) -> float:
        return math.fsum(c.minimum for c in self.components[:CFRA_COMPONENTS])

    @property
    def cfra_avg(self) -> float:
        return math.fsum(c.average for c in self.components[:CFRA_COMPONENTS])

    @property
    def cbra_min(self) -> float:
        return math.fsum(c.minimum for c in self.components)

    @property
    def cbra_avg(self) -> float:
        return math.fsum(c.average for c in self.components)


@dataclass
class KpiAccumulator:
    n_ues: int
    sim_time: float  # seconds over which events are counted
    n_cbra: int = 0
    n_cfra: int = 0
    n_hof: int = 0
    n_update: int = 0
    n_pp: int = 0
    n_exec: int = 0

    _FIELD = {
        EventKind.CBRA: "n_cbra",
        EventKind.CFRA: "n_cfra",
        EventKind.HOF: "n_hof",
        EventKind.UPDATE_COMMIT: "n_update",
        EventKind.PP: "n_pp",
        EventKind.EXEC: "n_exec",
    }

    def add(self, kind: EventKind) -> None:
        name = self._FIELD.get(kind)
        if name is not None:
            setattr(self, name, getattr(self, name) + 1)

    def counts(self) -> dict:
        return {k: getattr(self, k) for k in ("n_cbra", "n_cfra", "n_hof", "n_update", "n_pp", "n_exec")}


def accumulate_events(events: Iterable[Event], n_ues: int, sim_time: float, warmup: float = 0.0) -> KpiAccumulator:
    """Recount every KPI counter from an event log (times in ms, warm-up in s)."""
    acc = KpiAccumulator(n_ues, sim_time - warmup)
    start = warmup * 1000.0
    for ev in events:
        if ev.time >= start:
            acc.add(ev.kind)
    return acc


def cbra_rate(n_cbra: int, n_cfra: int) -> Optional[float]:
    """Percentage of CBRA handovers; None when no handover completed."""
    if n_cbra < 0 or n_cfra < 0:
        raise ValueError("counts must be non-negative")
    total = n_cbra + n_cfra
    if total == 0:
        return NO_HANDOVERS
    return 100.0 * n_cbra / total


def avg_ho_delay(r_cbra: float, n: int, ho_cfra: float = 80.0, d_cbra_avg: float = 19.5) -> float:
    """Mean handover delay (ms) with ``n`` CBRA retransmissions; ``r_cbra`` is a fraction."""
    if not 0.0 <= r_cbra <= 1.0:
        raise ValueError("r_cbra must be a fraction in [0, 1]")
    if n < 0:
        raise ValueError("n must be >= 0")
    return r_cbra * (ho_cfra + n * d_cbra_avg) + (1.0 - r_cbra) * ho_cfra


def normalize_rate(count: int, n_ues: int, sim_time: float) -> float:
    """Events per UE per minute."""
    if n_ues <= 0 or sim_time <= 0:
        raise ValueError("normalization needs n_ues > 0 and sim_time > 0")
    return count / (n_ues * sim_time / 60.0)


@dataclass
class KpiReport:
    r_cbra: Optional[float]
    hof_rate: float
    update_rate: float
    pp_rate: float
    d_ho: dict[int, Optional[float]]
    counts: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def no_handovers(self) -> bool:
        return self.r_cbra is NO_HANDOVERS


def build_report(
    acc: KpiAccumulator,
    latency: LatencyTable = LatencyTable(),
    n_values=(0, 1, 2, 3, 4),
    ho_cfra: float = 80.0,
    config: Optional[dict] = None,
) -> KpiReport:
    r = cbra_rate(acc.n_cbra, acc.n_cfra)

    def rate(x):
        # an empty population has nothing to normalize; report zero
        return normalize_rate(x, acc.n_ues, acc.sim_time) if acc.n_ues > 0 else 0.0

    d_ho = {
        int(n): (None if r is None else avg_ho_delay(r / 100.0, n, ho_cfra, latency.cbra_avg))
        for n in n_values
    }
    return KpiReport(
        r_cbra=r,
        hof_rate=rate(acc.n_hof),
        update_rate=rate(acc.n_update),
        pp_rate=rate(acc.n_pp),
        d_ho=d_ho,
        counts=acc.counts(),
        config=dict(config or {}),
    )
