import numpy as np
import pytest

from chosim.cho import (
    CandidateEntry, CandidateSet, EventKind, HandoverRecord, PendingUpdate, ProtocolParams,
    RaAttemptState, RaType, TttState, UeProtocol, apply_mr, check_execution, check_mr_trigger,
    check_preparation, commit_pending_updates, is_ping_pong, prepare_candidate, ra_tick,
    run_random_access, select_ra_type,
)


def params(**kw):
    base = dict(
        o_prep=10.0, o_exec=3.0, max_candidates=3, thr_cfra=-79.0, t_update=30.0, mr_offset=3.0,
        update_enabled=True, ttt=0.0, t304=100.0, ra_interval=10.0, outage_limit=-8.0,
        release_hysteresis=2.0, replace_hysteresis=3.0, pp_window=1000.0, noise_power=-85.0,
    )
    base.update(kw)
    return ProtocolParams(**base)


@pytest.mark.parametrize("s,c,o,want", [(-80, -90, 10, True), (-80, -90.1, 10, False), (-80, -80, 0, True)])
def test_check_preparation(s, c, o, want):
    assert check_preparation(s, c, o) is want


def test_prepare_empty_set_uses_best_beam():
    cs = CandidateSet(3)
    added, ev = prepare_candidate(cs, 4, np.array([-90.0, -70.0, -80.0]), 100.0, {4: -70.0})
    assert ev is None and added.cfra_beam_id == 1 and added.prepared_at == 100.0 and added.mr_armed
    assert cs.cell_ids() == [4]
    with pytest.raises(ValueError):
        prepare_candidate(cs, 4, np.array([-90.0]), 110.0, {4: -70.0})


def test_prepare_full_set_replacement():
    cs = CandidateSet(1, [CandidateEntry(2, 0, 0.0)])
    added, ev = prepare_candidate(cs, 5, np.array([-75.0]), 10.0, {2: -80.0, 5: -75.0})
    assert added.cell_id == 5 and ev.cell_id == 2 and cs.cell_ids() == [5]


def test_prepare_full_set_unchanged():
    cs = CandidateSet(1, [CandidateEntry(2, 0, 0.0)])
    added, ev = prepare_candidate(cs, 5, np.array([-79.0]), 10.0, {2: -80.0, 5: -79.0})
    assert added is None and ev is None and cs.cell_ids() == [2]


def test_mr_trigger():
    e = CandidateEntry(1, 0, 0.0)
    assert check_mr_trigger(e, np.array([-80.0, -75.0, -77.0]), 3.0) == 1
    assert check_mr_trigger(e, np.array([-80.0, -78.0]), 3.0) is None
    # the CFRA beam itself never qualifies
    assert check_mr_trigger(e, np.array([-60.0, -90.0]), 0.0) is None
    assert check_mr_trigger(CandidateEntry(1, 0, 0.0), np.array([-80.0]), 0.0) is None


def test_mr_trigger_requires_armed():
    e = apply_mr(CandidateEntry(1, 0, 0.0), 1, 1000.0, 30.0)
    with pytest.raises(ValueError):
        check_mr_trigger(e, np.array([-80.0, -70.0]), 3.0)


def test_apply_mr():
    e = apply_mr(CandidateEntry(1, 0, 0.0), 2, 1000.0, 30.0)
    assert e.pending_update == PendingUpdate(2, 1030.0) and not e.mr_armed
    with pytest.raises(ValueError):
        apply_mr(e, 1, 1010.0, 30.0)


def test_commit_boundaries():
    cs = CandidateSet(3, [
        apply_mr(CandidateEntry(1, 0, 0.0), 2, 970.0, 30.0),
        apply_mr(CandidateEntry(2, 0, 0.0), 3, 971.0, 30.0),
    ])
    assert [e.cell_id for e in commit_pending_updates(cs, 1000.0)] == [1]
    assert cs.get(1).cfra_beam_id == 2 and cs.get(1).mr_armed and cs.get(1).pending_update is None
    assert cs.get(2).pending_update is not None
    assert len(commit_pending_updates(cs, 1001.0)) == 1


def test_commit_two_due():
    cs = CandidateSet(3, [apply_mr(CandidateEntry(c, 0, 0.0), 1, 0.0, 30.0) for c in (1, 2)])
    assert len(commit_pending_updates(cs, 30.0)) == 2


def test_zero_t_update_commits_next_tick():
    e = apply_mr(CandidateEntry(1, 0, 0.0), 1, 500.0, 0.0)
    assert len(commit_pending_updates(CandidateSet(3, [e]), 510.0)) == 1


def test_check_execution():
    t = TttState()
    assert check_execution(-90, -87, 3, t, 0, 0.0)
    assert not check_execution(-90, -88, 3, TttState(), 0, 0.0)
    t = TttState()
    assert not check_execution(-90, -80, 3, t, 100, 0.0)
    assert not check_execution(-90, -80, 3, t, 100, 50.0)
    assert check_execution(-90, -80, 3, t, 100, 100.0)
    # a dip resets the timer
    assert not check_execution(-90, -95, 3, t, 100, 110.0)
    assert not check_execution(-90, -80, 3, t, 100, 120.0)
    assert t.entered == {0: 120.0}


def test_select_ra_type():
    e = CandidateEntry(1, 0, 0.0)
    assert select_ra_type(e, np.array([-78.0, -60.0]), -79.0, 0.0) == (RaType.CFRA, 0)
    assert select_ra_type(e, np.array([-80.0, -60.0, -70.0]), -79.0, 0.0) == (RaType.CBRA, 1)


def test_race_update_in_flight_is_dropped():
    e = CandidateEntry(1, 0, 0.0)
    apply_mr(e, 1, 1000.0, 30.0)
    ra, beam = select_ra_type(e, np.array([-85.0, -70.0]), -79.0, 1020.0)
    assert (ra, beam) == (RaType.CBRA, 1)
    assert e.cfra_beam_id == 0 and e.pending_update is None
    assert commit_pending_updates(CandidateSet(3, [e]), 1030.0) == []


def _attempt(t304=100.0):
    return RaAttemptState(3, 0.0, RaType.CFRA, 0, t304)


def test_ra_immediate_success():
    assert run_random_access(_attempt(), lambda t: -5.0, -8.0, 10.0, 10.0) == ("success", 0.0)


def test_ra_hof():
    a = _attempt()
    assert run_random_access(a, lambda t: -10.0, -8.0, 10.0, 10.0) == ("hof", 100.0)
    assert a.attempts_made == 10


def test_ra_success_on_attempt_grid():
    sinr = lambda t: -5.0 if t >= 40.0 else -12.0
    assert run_random_access(_attempt(), sinr, -8.0, 10.0, 10.0) == ("success", 40.0)
    sinr = lambda t: -5.0 if t >= 35.0 else -12.0
    assert run_random_access(_attempt(), sinr, -8.0, 20.0, 5.0) == ("success", 40.0)


def test_ping_pong():
    last = HandoverRecord(4500.0, source=7, target=9)
    assert is_ping_pong(last, 7, 5000.0, 1000.0)
    assert not is_ping_pong(last, 7, 5500.0, 1000.0)
    assert not is_ping_pong(last, 8, 5000.0, 1000.0)
    assert not is_ping_pong(None, 7, 5000.0, 1000.0)


# ---------------------------------------------------------------- scripted UE

class Script:
    """Hand-driven measurements for a 3-cell, 2-beam toy world."""

    def __init__(self):
        self.beam = np.full((3, 2), -120.0)
        self.sinr = 0.0
        self.log = []

    def set(self, cell, b0, b1):
        self.beam[cell] = (b0, b1)

    def step(self, ue, now, p):
        ue.step(now, p, self.beam.max(axis=1), self.beam, lambda c, b: self.sinr, self.log)

    def kinds(self):
        return [(e.time, e.kind, e.cell, e.beam) for e in self.log]


def test_race_scenario_old_beam_used_and_no_update_counted():
    p = params(o_exec=3.0)
    ue = UeProtocol(0, serving=0, candidates=CandidateSet(3))
    w = Script()
    w.set(0, -75.0, -80.0)
    w.set(1, -78.0, -84.0)
    w.step(ue, 980.0, p)
    assert ue.candidates.get(1).cfra_beam_id == 0
    w.set(1, -80.0, -76.5)  # beam 1 overtakes by 3.5 dB: MR at 1000
    w.step(ue, 1000.0, p)
    assert ue.candidates.get(1).pending_update == PendingUpdate(1, 1030.0)
    w.step(ue, 1010.0, p)
    w.set(1, -82.0, -71.0)  # execution at 1020, before the update lands
    w.step(ue, 1020.0, p)
    ev = w.kinds()
    assert (1020.0, EventKind.EXEC, 1, -1) in ev
    assert (1020.0, EventKind.CBRA, 1, 1) in ev  # old beam 0 is below -79
    assert not any(k is EventKind.UPDATE_COMMIT for _, k, _, _ in ev)
    assert ue.serving == 1


def test_update_committed_before_execution_gives_cfra():
    p = params()
    ue = UeProtocol(0, serving=0, candidates=CandidateSet(3))
    w = Script()
    w.set(0, -75.0, -80.0)
    w.set(1, -78.0, -84.0)
    w.step(ue, 980.0, p)
    w.set(1, -80.0, -76.5)
    w.step(ue, 1000.0, p)
    for t in (1010.0, 1020.0, 1030.0):
        w.step(ue, t, p)
    w.set(1, -82.0, -71.0)
    w.step(ue, 1040.0, p)
    kinds = [k for _, k, _, _ in w.kinds()]
    assert kinds.count(EventKind.UPDATE_COMMIT) == 1
    assert (1040.0, EventKind.CFRA, 1, 1) in w.kinds()


def test_update_disabled_never_reports():
    p = params(update_enabled=False)
    ue = UeProtocol(0, serving=0, candidates=CandidateSet(3))
    w = Script()
    w.set(0, -75.0, -80.0)
    w.set(1, -78.0, -84.0)
    w.step(ue, 0.0, p)
    w.set(1, -90.0, -76.0)
    w.step(ue, 10.0, p)
    assert ue.candidates.get(1).pending_update is None
    assert not any(k is EventKind.MR for _, k, _, _ in w.kinds())


def test_release_and_ping_pong_and_hof():
    p = params()
    ue = UeProtocol(0, serving=0, candidates=CandidateSet(3))
    w = Script()
    w.set(0, -75.0, -80.0)
    w.set(1, -84.0, -90.0)
    w.step(ue, 0.0, p)
    assert ue.candidates.cell_ids() == [1]
    w.set(1, -87.5, -90.0)  # below serving - o_prep - 2
    w.step(ue, 10.0, p)
    assert ue.candidates.cell_ids() == []
    # hand over 0 -> 1, then back 1 -> 0 within a second
    w.set(1, -70.0, -90.0)
    w.step(ue, 20.0, p)
    w.step(ue, 30.0, p)
    assert ue.serving == 1
    w.set(0, -60.0, -90.0)
    w.step(ue, 40.0, p)
    assert ue.serving == 0
    assert (40.0, EventKind.PP, 0, -1) in w.kinds()
    # target SINR never clears the outage limit
    w.sinr = -20.0
    w.set(2, -50.0, -90.0)
    t = 60.0
    while ue.serving == 0 and t < 400:
        w.step(ue, t, p)
        t += 10.0
    hofs = [e for e in w.log if e.kind is EventKind.HOF]
    execs = [e for e in w.log if e.kind is EventKind.EXEC and e.cell == 2]
    assert len(hofs) == 1 and hofs[0].time - execs[0].time == 100.0
    assert ue.serving == 2 and ue.ra is None and len(ue.candidates) == 0
