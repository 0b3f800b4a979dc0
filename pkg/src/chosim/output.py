"""CSV tables, SVG figures and debug dumps."""

from __future__ import annotations

import csv
import tempfile
from pathlib import Path
from typing import Iterable, Optional

from .cho import Event
from .sweep import METRICS, SweepTable

COUNT_COLUMNS = ("n_cbra", "n_cfra", "n_hof", "n_update", "n_pp", "n_exec")
NA = "NA"
FIGURES = ("fig4_rcbra.svg", "fig5_updates.svg", "fig6_hof.svg", "fig7_delay.svg")


def ensure_writable(out_dir: str | Path) -> Path:
    """Create ``out_dir`` if needed and prove a file can be written there."""
    p = Path(out_dir)
    try:
        p.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=p, prefix=".probe"):
            pass
    except OSError as exc:
        raise OSError(f"output directory {p} is not writable: {exc}") from exc
    return p


def fmt(v) -> str:
    if v is None:
        return NA
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def result_columns(varied: list[str], n_values: Iterable[int]) -> list[str]:
    return [*varied, "seed", *METRICS, *(f"d_ho_n{n}" for n in n_values), *COUNT_COLUMNS, "error"]


def _n_values(table: SweepTable) -> list[int]:
    for r in table.rows:
        if r.config is not None:
            return sorted(r.config.n_values)
    return []


def write_results(table: SweepTable, path: str | Path) -> Path:
    cols = result_columns(table.varied, _n_values(table))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in table.rows:
            rec = dict(r.params, seed=r.seed, error=r.error or "")
            if r.ok:
                rep = r.report
                rec.update({m: getattr(rep, m) for m in METRICS})
                rec.update({f"d_ho_n{n}": v for n, v in rep.d_ho.items()})
                rec.update(rep.counts)
            w.writerow([fmt(rec.get(c)) for c in cols])
    return Path(path)


def write_summary(table: SweepTable, path: str | Path) -> Path:
    rows = table.summary()
    cols = list(rows[0]) if rows else [*table.varied, "n_seeds"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in rows:
            w.writerow([fmt(rec.get(c)) for c in cols])
    return Path(path)


def write_events(events: Iterable[Event], path: str | Path) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_ms", "ue", "kind", "cell", "beam"])
        for e in events:
            w.writerow([fmt(float(e.time)), e.ue, e.kind.value, e.cell, e.beam])
    return Path(path)


class TraceWriter:
    """Per-step debug dumps: UE trajectory and per-cell RSRP."""

    def __init__(self, out_dir: Path, ues: Optional[list[int]] = None, motion=True, rsrp=True):
        self.ues = ues
        self._files, self._writers = [], {}
        if motion:
            self._open(out_dir / "trajectory.csv", "motion", ["time_ms", "ue", "x", "y"])
        if rsrp:
            self._open(out_dir / "rsrp_trace.csv", "rsrp", ["time_ms", "ue", "cell", "rsrp_filtered", "rsrp_raw"])

    def _open(self, path, key, header):
        fh = open(path, "w", newline="")
        self._files.append(fh)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        self._writers[key] = w

    def __call__(self, ch) -> None:
        n = len(ch.fleet)
        ues = range(n) if self.ues is None else [u for u in self.ues if u < n]
        t = fmt(float(ch.now))
        mw, rw = self._writers.get("motion"), self._writers.get("rsrp")
        for u in ues:
            if mw is not None:
                x, y = ch.fleet.pos[u]
                mw.writerow([t, u, fmt(float(x)), fmt(float(y))])
            if rw is not None:
                for c in range(ch.cell_filt.shape[1]):
                    rw.writerow([t, u, c, fmt(float(ch.cell_filt[u, c])), fmt(float(ch.cell_raw[u, c]))])

    def close(self) -> None:
        for fh in self._files:
            fh.close()


# ---------------------------------------------------------------- figures

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "chosim"
    plt.rcParams["svg.fonttype"] = "none"
    return plt


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    return path


def _arm_label(rec: dict, keys: list[str]) -> str:
    parts = []
    for k in keys:
        v = rec[k]
        if k == "update_enabled":
            parts.append("with update" if v else "without update")
        else:
            parts.append(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}")
    return ", ".join(parts) or "all"


def _curves(summary: list[dict], varied: list[str], x: str, value: str):
    """Group summary rows into curves along ``x``; other varied keys label the curves."""
    others = [k for k in varied if k != x]
    curves: dict[tuple, list] = {}
    for rec in summary:
        curves.setdefault(tuple(rec[k] for k in others), []).append(rec)
    out = []
    for key, recs in curves.items():
        recs = sorted(recs, key=lambda r: r[x])
        pts = [(r[x], r[f"{value}_mean"], r[f"{value}_std"]) for r in recs if r[f"{value}_mean"] is not None]
        out.append((_arm_label(dict(zip(others, key)), others), pts))
    return out


def _line_figure(plt, summary, varied, value, ylabel, path, title):
    x = "thr_cfra" if "thr_cfra" in varied else (varied[0] if varied else None)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    if x is None:
        rec = summary[0]
        ax.bar([0], [rec[f"{value}_mean"] or 0.0])
        ax.set_xticks([0], ["single point"])
    else:
        for label, pts in _curves(summary, varied, x, value):
            if pts:
                xs, ys, es = zip(*pts)
                ax.errorbar([float(v) for v in xs], ys, yerr=es, marker="o", capsize=2, label=label)
        ax.set_xlabel("Thr_CFRA [dBm]" if x == "thr_cfra" else x)
        if ax.get_legend_handles_labels()[0]:
            ax.legend(fontsize=7)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
    return path


def plot_figures(table: SweepTable, out_dir: str | Path) -> list[Path]:
    summary = table.summary()
    if not summary:
        return []
    plt = _pyplot()
    out = Path(out_dir)
    varied = table.varied
    paths = [
        _line_figure(plt, summary, varied, "r_cbra", "R_CBRA [%]", out / FIGURES[0], "CBRA rate"),
    ]

    # update counts as grouped bars: o_prep groups, one bar per remaining combination
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    group_key = "o_prep" if "o_prep" in varied else None
    others = [k for k in varied if k != group_key]
    groups = sorted({rec[group_key] for rec in summary}, reverse=True) if group_key else [None]
    series: dict[tuple, dict] = {}
    for rec in summary:
        series.setdefault(tuple(rec[k] for k in others), {})[rec[group_key] if group_key else None] = rec
    width = 0.8 / max(len(series), 1)
    for j, (key, by_group) in enumerate(series.items()):
        ys = [(by_group.get(g) or {}).get("update_rate_mean") or 0.0 for g in groups]
        es = [(by_group.get(g) or {}).get("update_rate_std") or 0.0 for g in groups]
        ax.bar([i + j * width for i in range(len(groups))], ys, width, yerr=es, capsize=2,
               label=_arm_label(dict(zip(others, key)), others))
    ax.set_xticks([i + 0.4 - width / 2 for i in range(len(groups))],
                  [f"o_prep={g:g} dB" if g is not None else "all" for g in groups])
    ax.set_ylabel("N_update [per UE per minute]")
    ax.set_title("CFRA resource updates")
    if len(series) > 1:
        ax.legend(fontsize=6)
    fig.tight_layout()
    paths.append(_save(fig, out / FIGURES[1]))
    plt.close(fig)

    paths.append(_line_figure(plt, summary, varied, "hof_rate", "N_HOF [per UE per minute]", out / FIGURES[2], "Handover failures"))

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    x = "thr_cfra" if "thr_cfra" in varied else (varied[0] if varied else None)
    n_values = _n_values(table)
    if x is None:
        ys = [summary[0][f"d_ho_n{n}_mean"] for n in n_values]
        ax.plot(n_values, [float("nan") if y is None else y for y in ys], marker="o")
        ax.set_xlabel("CBRA retransmissions n")
    else:
        for n in n_values:
            for label, pts in _curves(summary, varied, x, f"d_ho_n{n}"):
                if pts:
                    xs, ys, _ = zip(*pts)
                    style = "--" if "without" in label else "-"
                    ax.plot([float(v) for v in xs], ys, style, color=f"C{n}", marker=".", label=f"n={n}, {label}")
        ax.set_xlabel("Thr_CFRA [dBm]" if x == "thr_cfra" else str(x))
    ax.set_ylabel("D_HO [ms]")
    ax.set_title("Average handover delay")
    ax.grid(True, alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=5, ncol=2)
    fig.tight_layout()
    paths.append(_save(fig, out / FIGURES[3]))
    plt.close(fig)
    return paths


def emit_outputs(table: SweepTable, out_dir: str | Path, plots: bool = False) -> list[Path]:
    if not table.rows:
        raise ValueError("nothing to write: empty sweep table")
    out = ensure_writable(out_dir)
    paths = [write_results(table, out / "results.csv"), write_summary(table, out / "summary.csv")]
    if plots:
        paths += plot_figures(table, out)
    return paths


__all__ = [
    "COUNT_COLUMNS", "FIGURES", "NA", "TraceWriter", "emit_outputs", "ensure_writable", "fmt",
    "plot_figures", "result_columns", "write_events", "write_results", "write_summary",
]
