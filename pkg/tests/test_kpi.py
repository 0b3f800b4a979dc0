import pytest

from chosim.cho import Event, EventKind
from chosim.kpi import (
    DEFAULT_COMPONENTS, KpiAccumulator, LatencyTable, accumulate_events, avg_ho_delay,
    build_report, cbra_rate, normalize_rate,
)


def test_latency_sums_exact():
    t = LatencyTable()
    assert (t.cfra_min, t.cfra_avg, t.cbra_min, t.cbra_avg) == (4.5, 8.5, 15.5, 19.5)
    assert len(DEFAULT_COMPONENTS) == 7


def test_cbra_rate():
    assert cbra_rate(3, 7) == pytest.approx(30.0, abs=1e-12)
    assert cbra_rate(0, 5) == 0.0
    assert cbra_rate(5, 0) == 100.0
    assert cbra_rate(0, 0) is None
    with pytest.raises(ValueError):
        cbra_rate(-1, 2)


def test_avg_ho_delay():
    assert avg_ho_delay(0.0, 4) == 80.0
    assert avg_ho_delay(0.5, 2) == pytest.approx(99.5, abs=1e-9)
    assert avg_ho_delay(0.615, 4) == pytest.approx(127.97, abs=1e-9)
    assert avg_ho_delay(1.0, 0) == 80.0
    with pytest.raises(ValueError):
        avg_ho_delay(1.5, 1)
    with pytest.raises(ValueError):
        avg_ho_delay(0.5, -1)


def test_normalize_rate():
    assert normalize_rate(10, 420, 30) == pytest.approx(10 / 210, abs=1e-12)
    assert normalize_rate(0, 5, 1) == 0.0
    with pytest.raises(ValueError):
        normalize_rate(1, 0, 30)


def test_accumulator_and_replay():
    evs = [
        Event(5.0, 0, EventKind.CBRA, 1, 0),
        Event(2000.0, 0, EventKind.CFRA, 2, 3),
        Event(2000.0, 0, EventKind.PP, 2),
        Event(2500.0, 1, EventKind.UPDATE_COMMIT, 4, 1),
        Event(2600.0, 1, EventKind.HOF, 4, 1),
        Event(2600.0, 1, EventKind.PREP, 5, 1),
    ]
    acc = accumulate_events(evs, n_ues=2, sim_time=10.0, warmup=1.0)
    assert acc.counts() == dict(n_cbra=0, n_cfra=1, n_hof=1, n_update=1, n_pp=1, n_exec=0)
    assert acc.sim_time == 9.0
    full = accumulate_events(evs, 2, 10.0)
    assert full.n_cbra == 1


def test_build_report():
    acc = KpiAccumulator(n_ues=60, sim_time=10.0, n_cbra=4, n_cfra=6, n_hof=1, n_update=20, n_pp=2, n_exec=11)
    r = build_report(acc)
    assert r.r_cbra == pytest.approx(40.0)
    assert r.update_rate == pytest.approx(2.0)
    assert r.hof_rate == pytest.approx(0.1)
    assert r.d_ho[4] == pytest.approx(0.4 * (80 + 4 * 19.5) + 0.6 * 80)
    assert sorted(r.d_ho) == [0, 1, 2, 3, 4]


def test_report_no_handovers():
    r = build_report(KpiAccumulator(n_ues=10, sim_time=1.0))
    assert r.no_handovers and r.d_ho[4] is None and r.update_rate == 0.0
    r0 = build_report(KpiAccumulator(n_ues=0, sim_time=1.0))
    assert r0.hof_rate == 0.0
