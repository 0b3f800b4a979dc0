"""Parameter sweeps over a :class:`SweepGrid`.

Grid points sharing a channel (seed and radio parameters) are run as one
lockstep task, so paired arms see the same mobility and shadowing by
construction. Tasks are farmed out to worker processes; row order in the
resulting table is the grid order regardless of parallelism.
"""

from __future__ import annotations

import itertools
import logging
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .config import GRID_KEYS, ConfigError, SimConfig, SweepGrid
from .engine import simulate
from .kpi import KpiReport

log = logging.getLogger(__name__)

METRICS = ("r_cbra", "hof_rate", "update_rate", "pp_rate")


@dataclass
class PointResult:
    index: int
    params: dict  # varied parameter values of this row
    seed: int
    config: Optional[SimConfig]
    report: Optional[KpiReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepTable:
    varied: list[str]
    rows: list[PointResult] = field(default_factory=list)

    @property
    def failures(self) -> list[PointResult]:
        return [r for r in self.rows if not r.ok]

    def metric(self, row: PointResult, name: str):
        rep = row.report
        if name.startswith("d_ho_n"):
            return rep.d_ho.get(int(name[6:]))
        return getattr(rep, name)

    def summary(self) -> list[dict]:
        """Across-seed mean/std per grid point (None-valued r_cbra/d_ho rows are skipped)."""
        groups: dict[tuple, list[PointResult]] = {}
        for r in self.rows:
            if r.ok:
                groups.setdefault(tuple(r.params[k] for k in self.varied), []).append(r)
        names = list(METRICS)
        if self.rows and any(r.ok for r in self.rows):
            first = next(r for r in self.rows if r.ok)
            names += [f"d_ho_n{n}" for n in sorted(first.report.d_ho)]
        out = []
        for key, rows in groups.items():
            rec = dict(zip(self.varied, key))
            rec["n_seeds"] = len(rows)
            for name in names:
                vals = [v for v in (self.metric(r, name) for r in rows) if v is not None]
                rec[f"{name}_mean"] = math.fsum(vals) / len(vals) if vals else None
                rec[f"{name}_std"] = statistics.stdev(vals) if len(vals) > 1 else (0.0 if vals else None)
            out.append(rec)
        return out


def grid_points(base: SimConfig, grid: SweepGrid, seeds: Optional[Sequence[int]] = None):
    """Enumerate (params, seed, config or ConfigError) in canonical grid order.

    Seeds come from the grid if it lists them, else from ``seeds``, else
    the base config; seed varies fastest.
    """
    seed_list = list(grid.values.get("seed") or seeds or [base.seed])
    keys = grid.varied
    out = []
    for combo in itertools.product(*(grid.values[k] for k in keys)):
        params = dict(zip(keys, combo))
        for s in seed_list:
            data = base.to_dict()
            data.update(params)
            data["seed"] = s
            try:
                cfg = SimConfig.from_dict(data)
            except ConfigError as exc:
                out.append((params, int(s), exc))
            else:
                out.append(({k: getattr(cfg, k) for k in keys}, cfg.seed, cfg))
    return out


def _run_group(configs: list[SimConfig]) -> list:
    """Worker entry: lockstep run of one channel group; falls back to single runs on failure."""
    try:
        return [("ok", r.report) for r in simulate(configs)]
    except Exception:
        if len(configs) == 1:
            raise
    out = []
    for c in configs:
        try:
            out.append(("ok", simulate([c])[0].report))
        except Exception as exc:  # report per point, keep going
            out.append(("error", f"{type(exc).__name__}: {exc}"))
    return out


def run_sweep(
    base: SimConfig,
    grid: SweepGrid,
    parallelism: int = 1,
    seeds: Optional[Sequence[int]] = None,
) -> SweepTable:
    points = grid_points(base, grid, seeds)
    if not points:
        raise ValueError("empty sweep grid")
    table = SweepTable(grid.varied)
    groups: dict[tuple, list[int]] = {}
    for i, (params, seed, cfg) in enumerate(points):
        if isinstance(cfg, ConfigError):
            table.rows.append(PointResult(i, params, seed, None, error=str(cfg)))
            continue
        table.rows.append(PointResult(i, params, seed, cfg))
        groups.setdefault(cfg.channel_key(), []).append(i)

    tasks = [[table.rows[i].config for i in idx] for idx in groups.values()]
    if parallelism > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(parallelism, len(tasks))) as pool:
            futures = [pool.submit(_run_group, t) for t in tasks]
            results = []
            for f in futures:
                try:
                    results.append(f.result())
                except Exception as exc:
                    results.append(exc)
    else:
        results = []
        for t in tasks:
            try:
                results.append(_run_group(t))
            except Exception as exc:
                results.append(exc)

    for idx, res in zip(groups.values(), results):
        for j, i in enumerate(idx):
            row = table.rows[i]
            if isinstance(res, Exception):
                row.error = f"{type(res).__name__}: {res}"
            else:
                status, payload = res[j]
                if status == "ok":
                    row.report = payload
                else:
                    row.error = payload
            if row.error:
                log.error("sweep point %s seed %d failed: %s", row.params, row.seed, row.error)
    return table


__all__ = ["GRID_KEYS", "PointResult", "SweepTable", "grid_points", "run_sweep"]
