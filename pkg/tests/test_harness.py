import csv
import math

import pytest

from chosim.cli import main
from chosim.config import SimConfig, SweepGrid, dump_config, with_overrides
from chosim.engine import run_simulation
from chosim.output import FIGURES, emit_outputs, fmt, result_columns
from chosim.sweep import grid_points, run_sweep

BASE = SimConfig(n_ues=12, sim_time=2.0)

GOLDEN_HEADER = (
    "thr_cfra,update_enabled,seed,r_cbra,hof_rate,update_rate,pp_rate,"
    "d_ho_n0,d_ho_n1,d_ho_n2,d_ho_n3,d_ho_n4,"
    "n_cbra,n_cfra,n_hof,n_update,n_pp,n_exec,error"
)


def test_golden_header():
    assert ",".join(result_columns(["thr_cfra", "update_enabled"], (0, 1, 2, 3, 4))) == GOLDEN_HEADER


def test_fmt():
    assert fmt(None) == "NA"
    assert fmt(True) == "true"
    assert fmt(0.1) == "0.1"
    assert fmt(-math.inf) == "-inf"
    assert fmt(3) == "3"


def test_single_point_grid_matches_run():
    g = SweepGrid({"thr_cfra": [-79.0]})
    t = run_sweep(BASE, g)
    assert len(t.rows) == 1
    assert t.rows[0].report == run_simulation(with_overrides(BASE, thr_cfra=-79.0)).report


def test_fig4_grid_shape(tmp_path):
    g = SweepGrid.threshold_range(update_enabled=[True, False], seed=[0, 1])
    t = run_sweep(BASE, g)
    assert len(t.rows) == 40 and not t.failures
    emit_outputs(t, tmp_path, plots=True)
    rows = list(csv.DictReader(open(tmp_path / "results.csv")))
    assert len(rows) == 40
    assert sum(r["seed"] == "0" for r in rows) == 20
    assert open(tmp_path / "results.csv").readline().strip() == GOLDEN_HEADER
    for f in FIGURES:
        assert (tmp_path / f).read_text().lstrip().startswith("<?xml")


def test_summary_is_mean_of_rows():
    g = SweepGrid({"thr_cfra": [-79.0], "seed": [0, 1, 2]})
    t = run_sweep(BASE, g)
    s = t.summary()
    assert len(s) == 1 and s[0]["n_seeds"] == 3
    vals = [r.report.update_rate for r in t.rows]
    assert s[0]["update_rate_mean"] == pytest.approx(sum(vals) / 3, abs=1e-12)


def test_failed_point_reported_and_sweep_continues():
    g = SweepGrid({"o_prep": [10.0, -1.0]})
    t = run_sweep(BASE, g)
    assert [r.ok for r in t.rows] == [True, False]
    assert "o_prep" in t.rows[1].error


def test_parallel_matches_serial(tmp_path):
    g = SweepGrid({"thr_cfra": [-85.0, -76.0], "update_enabled": [True, False], "seed": [0, 1, 2]})
    a = run_sweep(BASE, g, parallelism=1)
    b = run_sweep(BASE, g, parallelism=3)
    emit_outputs(a, tmp_path / "a")
    emit_outputs(b, tmp_path / "b")
    assert (tmp_path / "a/results.csv").read_bytes() == (tmp_path / "b/results.csv").read_bytes()


def test_grid_points_seed_fallback():
    pts = grid_points(BASE, SweepGrid({"thr_cfra": [-79.0]}), seeds=[4, 5])
    assert [s for _, s, _ in pts] == [4, 5]


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        emit_outputs(run_sweep(BASE, SweepGrid({"seed": [0]})), blocker / "sub")


# ---------------------------------------------------------------- CLI

@pytest.fixture
def cfg_file(tmp_path):
    f = tmp_path / "c.yaml"
    dump_config(BASE, f)
    return f


def test_cli_validate(cfg_file, tmp_path, capsys):
    assert main(["validate", "--config", str(cfg_file)]) == 0
    bad = tmp_path / "bad.yaml"
    bad.write_text("isd: -5\nbogus: 1\n")
    assert main(["validate", "--config", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "isd" in err or "bogus" in err


def test_cli_run_with_dumps(cfg_file, tmp_path):
    out = tmp_path / "run"
    rc = main(["run", "--config", str(cfg_file), "--seed", "2", "--out", str(out), "--events", "--plots",
               "--dump-layout", "--trace-rsrp", "--trace-motion", "--trace-ues", "0", "1"])
    assert rc == 0
    for name in ("results.csv", "summary.csv", "events.csv", "layout.csv", "rsrp_trace.csv", "trajectory.csv", *FIGURES):
        assert (out / name).exists(), name
    assert open(out / "results.csv").readline().startswith("seed,r_cbra,")
    traj = list(csv.DictReader(open(out / "trajectory.csv")))
    assert {r["ue"] for r in traj} == {"0", "1"}
    assert len(traj) == 2 * (BASE.n_steps + 1)


def test_cli_sweep(cfg_file, tmp_path):
    grid = tmp_path / "g.yaml"
    grid.write_text("thr_cfra: [-88, -79]\nupdate_enabled: [true, false]\nseed: [0, 1]\n")
    out = tmp_path / "sw"
    assert main(["sweep", "--config", str(cfg_file), "--grid", str(grid), "--parallel", "2", "--out", str(out)]) == 0
    assert len((out / "results.csv").read_text().splitlines()) == 1 + 8


def test_cli_unwritable_out(cfg_file, tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("")
    assert main(["run", "--config", str(cfg_file), "--out", str(blocker / "x")]) != 0


def test_figures_are_reproducible(tmp_path):
    t = run_sweep(BASE, SweepGrid({"thr_cfra": [-88.0, -79.0], "update_enabled": [True, False]}))
    emit_outputs(t, tmp_path / "a", plots=True)
    emit_outputs(t, tmp_path / "b", plots=True)
    for f in FIGURES:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_results_use_coerced_grid_values(tmp_path):
    t = run_sweep(BASE, SweepGrid({"thr_cfra": [-79]}))
    emit_outputs(t, tmp_path)
    assert open(tmp_path / "results.csv").read().splitlines()[1].startswith("-79.0,0,")


def test_shipped_configs_validate():
    from pathlib import Path

    root = Path(__file__).resolve().parents[1] / "configs"
    for f in sorted(root.glob("*.yaml")):
        assert main(["validate", "--config", str(f)]) == 0
    for g in sorted((root / "grids").glob("*.yaml")):
        assert main(["validate", "--config", str(root / "desk.yaml"), "--grid", str(g)]) == 0
