"""Compiled vs NumPy channel kernel, plus one end-to-end desk run per backend.

    python3 benchmarks/bench_kernels.py [--ues 60 420] [--repeat 50]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from chosim import _kernels_py
from chosim.config import SimConfig
from chosim.deployment import build_layout

try:
    from chosim import _kernels
except ImportError:
    _kernels = None


def _inputs(n_ues, cfg, rng):
    lay = build_layout(cfg.isd, n_beams=cfg.n_beams, sector_span=cfg.sector_span, hpbw=cfg.hpbw,
                       max_gain=cfg.max_gain, front_to_back=cfg.front_to_back)
    bm = lay.beam_arrays()
    c, b = lay.n_cells, lay.n_beams
    ue = np.ascontiguousarray(rng.uniform(-300, 300, (n_ues, 2)))
    args = (
        ue, np.ascontiguousarray(lay.cell_positions()), bm["boresight"], bm["hpbw"], bm["max_gain"],
        bm["front_to_back"], bm["tx_power"], (rng.random((n_ues, c)) < 0.5).astype(np.uint8),
        rng.normal(0, 6, (n_ues, c)), rng.normal(0, 4, (n_ues, c, b)),
        cfg.fc, cfg.h_bs, cfg.h_ut, cfg.noise_floor_clip, 0.5,
    )
    outs = lambda: (np.zeros((n_ues, c, b)), np.zeros((n_ues, c, b)), np.empty((n_ues, c)), np.empty((n_ues, c)))
    return args, outs


def _time(fn, args, outs, repeat):
    o = outs()
    fn(*args, *o)
    t = time.perf_counter()
    for _ in range(repeat):
        fn(*args, *o)
    return (time.perf_counter() - t) / repeat, o


def _end_to_end(pure: bool) -> float:
    env = dict(os.environ, CHOSIM_PURE_PYTHON="1" if pure else "")
    code = (
        "import time; from chosim import preset, simulate, BACKEND; from chosim.config import with_overrides;"
        "base, _ = preset('desk'); t = time.perf_counter();"
        "simulate([with_overrides(base, thr_cfra=-79.0, update_enabled=u) for u in (True, False)]);"
        "print(BACKEND, time.perf_counter() - t)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.split()[1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ues", type=int, nargs="+", default=[60, 420])
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--no-e2e", action="store_true")
    a = ap.parse_args()
    cfg = SimConfig()
    rng = np.random.default_rng(0)
    print(f"{'UEs':>5} {'numpy ms':>10} {'compiled ms':>12} {'speedup':>8} {'max |diff| dB':>14}")
    for n in a.ues:
        args, outs = _inputs(n, cfg, rng)
        tp, op = _time(_kernels_py.channel_step, args, outs, a.repeat)
        if _kernels is None:
            print(f"{n:>5} {tp * 1e3:>10.3f} {'n/a':>12}")
            continue
        tc, oc = _time(_kernels.channel_step, args, outs, a.repeat)
        diff = max(float(np.max(np.abs(x - y))) for x, y in zip(op, oc))
        print(f"{n:>5} {tp * 1e3:>10.3f} {tc * 1e3:>12.3f} {tp / tc:>8.2f} {diff:>14.2e}")
    if not a.no_e2e:
        print("desk preset, one seed, two arms (s):")
        for pure in (True, False):
            if pure or _kernels is not None:
                print(f"  {'numpy' if pure else 'compiled':>8}: {_end_to_end(pure):.2f}")


if __name__ == "__main__":
    main()
