"""Command line entry point: ``run``, ``sweep`` and ``validate``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, SweepGrid, load_config, with_overrides
from .engine import layout_for, simulate
from .kernels import BACKEND
from .output import TraceWriter, emit_outputs, ensure_writable, write_events
from .sweep import PointResult, SweepTable, run_sweep

log = logging.getLogger("chosim")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chosim", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", default="out")
    r.add_argument("--events", action="store_true", help="write the event log (events.csv)")
    r.add_argument("--plots", action="store_true")
    r.add_argument("--dump-layout", action="store_true", help="write layout.csv")
    r.add_argument("--trace-rsrp", action="store_true", help="write per-step cell RSRP (rsrp_trace.csv)")
    r.add_argument("--trace-motion", action="store_true", help="write per-step UE positions (trajectory.csv)")
    r.add_argument("--trace-ues", type=int, nargs="+", metavar="UE", help="restrict traces to these UEs")

    s = sub.add_parser("sweep", help="run a parameter grid")
    s.add_argument("--config", required=True)
    s.add_argument("--grid", required=True)
    s.add_argument("--parallel", type=int, default=1)
    s.add_argument("--out", default="out")
    s.add_argument("--plots", action="store_true")

    v = sub.add_parser("validate", help="check a configuration file")
    v.add_argument("--config", required=True)
    v.add_argument("--grid")
    return p


def _print_config_error(path, exc: ConfigError) -> None:
    print(f"invalid configuration {path}:", file=sys.stderr)
    for name, msg in exc.errors:
        print(f"  {name}: {msg}", file=sys.stderr)


def _cmd_run(a) -> int:
    cfg = load_config(a.config)
    if a.seed is not None:
        cfg = with_overrides(cfg, seed=a.seed)
    cfg.validate()
    out = ensure_writable(a.out)
    layout = layout_for(cfg)
    if a.dump_layout:
        layout.dump_csv(out / "layout.csv")
    tracer = None
    if a.trace_rsrp or a.trace_motion:
        tracer = TraceWriter(out, a.trace_ues, motion=a.trace_motion, rsrp=a.trace_rsrp)
    t0 = time.perf_counter()
    try:
        res = simulate([cfg], on_step=tracer, layout=layout)[0]
    finally:
        if tracer is not None:
            tracer.close()
    log.info("simulated %d UEs x %g s in %.1f s", cfg.n_ues, cfg.sim_time, time.perf_counter() - t0)
    table = SweepTable([], [PointResult(0, {}, cfg.seed, cfg, res.report)])
    emit_outputs(table, out, plots=a.plots)
    if a.events:
        write_events(res.events, out / "events.csv")
    rep = res.report
    r = "NA" if rep.r_cbra is None else f"{rep.r_cbra:.2f} %"
    print(f"R_CBRA {r}; N_HOF {rep.hof_rate:.4f}, N_update {rep.update_rate:.4f}, "
          f"N_PP {rep.pp_rate:.4f} per UE per minute; results in {out}")
    return 0


def _cmd_sweep(a) -> int:
    base = load_config(a.config)
    grid = SweepGrid.load(a.grid)
    out = ensure_writable(a.out)
    t0 = time.perf_counter()
    table = run_sweep(base, grid, max(1, a.parallel))
    emit_outputs(table, out, plots=a.plots)
    bad = table.failures
    print(f"{len(table.rows) - len(bad)}/{len(table.rows)} points in {time.perf_counter() - t0:.1f} s; results in {out}")
    for r in bad:
        print(f"FAILED {r.params} seed {r.seed}: {r.error}", file=sys.stderr)
    return 1 if bad else 0


def _cmd_validate(a) -> int:
    cfg = load_config(a.config)
    cfg.validate()
    if a.grid:
        from .sweep import grid_points

        errs = [(p, s, c) for p, s, c in grid_points(cfg, SweepGrid.load(a.grid)) if isinstance(c, ConfigError)]
        for p, s, c in errs:
            print(f"grid point {p} seed {s}: {c}", file=sys.stderr)
        if errs:
            return 2
    print(f"{a.config}: ok ({cfg.n_ues} UEs, {cfg.sim_time:g} s, seed {cfg.seed})")
    return 0


def main(argv=None) -> int:
    a = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(a.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}[a.cmd](a)
    except ConfigError as exc:
        _print_config_error(getattr(a, "grid", None) if "grid" in str(exc) else a.config, exc)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
