"""Conditional handover with beam-triggered CFRA resource updating.

Per-UE building blocks: candidate preparation and release, the beam-level
measurement report trigger, delayed CFRA reassignment (which can lose the
race against execution), execution triggering, CFRA/CBRA selection and the
T304-bounded random access. :class:`UeProtocol` chains them for one UE and
one time step; the engine decides which UEs need a step at all.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class RaType(str, enum.Enum):
    CFRA = "CFRA"
    CBRA = "CBRA"


class EventKind(str, enum.Enum):
    PREP = "PREP"
    RELEASE = "RELEASE"
    MR = "MR"
    UPDATE_COMMIT = "UPDATE_COMMIT"
    EXEC = "EXEC"
    CFRA = "CFRA"
    CBRA = "CBRA"
    HOF = "HOF"
    PP = "PP"


@dataclass(frozen=True)
class Event:
    time: float  # ms
    ue: int
    kind: EventKind
    cell: int
    beam: int = -1


@dataclass
class PendingUpdate:
    new_beam_id: int
    effective_at: float


@dataclass
class CandidateEntry:
    cell_id: int
    cfra_beam_id: int
    prepared_at: float
    pending_update: Optional[PendingUpdate] = None
    mr_armed: bool = True


@dataclass
class CandidateSet:
    max_size: int
    entries: list[CandidateEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def full(self) -> bool:
        return len(self.entries) >= self.max_size

    def cell_ids(self) -> list[int]:
        return [e.cell_id for e in self.entries]

    def get(self, cell_id: int) -> Optional[CandidateEntry]:
        for e in self.entries:
            if e.cell_id == cell_id:
                return e
        return None

    def remove(self, cell_id: int) -> CandidateEntry:
        for i, e in enumerate(self.entries):
            if e.cell_id == cell_id:
                return self.entries.pop(i)
        raise KeyError(cell_id)

    def clear(self) -> None:
        self.entries.clear()


@dataclass
class RaAttemptState:
    target_cell_id: int
    started_at: float
    ra_type: RaType
    access_beam: int
    t304: float
    attempts_made: int = 0


@dataclass
class TttState:
    """Start times (ms) of a currently holding execution condition, per candidate cell."""
    entered: dict[int, float] = field(default_factory=dict)

    def clear(self) -> None:
        self.entered.clear()


# ---------------------------------------------------------------- predicates

def check_preparation(serving_rsrp: float, candidate_rsrp: float, o_prep: float) -> bool:
    return candidate_rsrp >= serving_rsrp - o_prep


def prepare_candidate(
    cset: CandidateSet,
    cell_id: int,
    beam_rsrps: np.ndarray,
    now: float,
    cell_rsrp,
    replace_hysteresis: float = 3.0,
) -> tuple[Optional[CandidateEntry], Optional[CandidateEntry]]:
    """Prepare ``cell_id`` with CFRA on its currently strongest beam.

    ``cell_rsrp`` maps cell id to current cell-level RSRP and is used to
    find the weakest prepared cell when the set is full. Returns
    ``(added, evicted)``; both are None when a full set is left unchanged.
    """
    if cset.get(cell_id) is not None:
        raise ValueError(f"cell {cell_id} is already prepared")
    entry = CandidateEntry(cell_id, int(np.argmax(beam_rsrps)), now)
    if not cset.full:
        cset.entries.append(entry)
        return entry, None
    weakest = min(cset.entries, key=lambda e: (cell_rsrp[e.cell_id], e.cell_id))
    if cell_rsrp[cell_id] >= cell_rsrp[weakest.cell_id] + replace_hysteresis:
        cset.remove(weakest.cell_id)
        cset.entries.append(entry)
        return entry, weakest
    return None, None


def check_mr_trigger(entry: CandidateEntry, beam_rsrps: np.ndarray, offset: float) -> Optional[int]:
    """Strongest non-CFRA beam exceeding the CFRA beam by ``offset``, else None."""
    if not entry.mr_armed or entry.pending_update is not None:
        raise ValueError("MR trigger evaluated on a disarmed candidate")
    ref = beam_rsrps[entry.cfra_beam_id]
    best, best_val = None, -np.inf
    for k, p in enumerate(beam_rsrps):
        if k != entry.cfra_beam_id and p > best_val:
            best, best_val = k, p
    if best is not None and best_val >= ref + offset:
        return best
    return None


def apply_mr(entry: CandidateEntry, new_beam: int, now: float, t_update: float) -> CandidateEntry:
    if entry.pending_update is not None:
        raise ValueError("candidate already has a pending CFRA update")
    entry.pending_update = PendingUpdate(int(new_beam), now + t_update)
    entry.mr_armed = False
    return entry


def commit_pending_updates(cset: CandidateSet, now: float) -> list[CandidateEntry]:
    """Apply every update whose ``effective_at <= now``; returns the committed entries."""
    done = []
    for e in cset.entries:
        p = e.pending_update
        if p is not None and p.effective_at <= now:
            e.cfra_beam_id = p.new_beam_id
            e.pending_update = None
            e.mr_armed = True
            done.append(e)
    return done


def check_execution(
    serving_rsrp: float,
    candidate_rsrp: float,
    o_exec: float,
    ttt: TttState,
    ttt_len: float,
    now: float,
    cell_id: int = 0,
) -> bool:
    """Execution condition held continuously for ``ttt_len`` ms (updates ``ttt``)."""
    if candidate_rsrp >= serving_rsrp + o_exec:
        start = ttt.entered.setdefault(cell_id, now)
        return now - start >= ttt_len
    ttt.entered.pop(cell_id, None)
    return False


def select_ra_type(
    entry: CandidateEntry, beam_rsrps: np.ndarray, thr_cfra: float, now: float
) -> tuple[RaType, int]:
    """CFRA on the assigned beam if it clears ``thr_cfra`` at execution, else CBRA on the best beam.

    An update still in flight at ``now`` is dropped: execution is never held
    back for it.
    """
    if entry.pending_update is not None and entry.pending_update.effective_at > now:
        entry.pending_update = None
        entry.mr_armed = True
    if beam_rsrps[entry.cfra_beam_id] >= thr_cfra:
        return RaType.CFRA, entry.cfra_beam_id
    return RaType.CBRA, int(np.argmax(beam_rsrps))


def ra_tick(
    attempt: RaAttemptState, sinr: float, now: float, outage_limit: float, ra_interval: float
) -> Optional[str]:
    """One time step of random access: "success", "hof" or None (still running)."""
    elapsed = now - attempt.started_at
    if elapsed >= attempt.t304:
        return "hof"
    if elapsed % ra_interval == 0:
        attempt.attempts_made += 1
        if sinr >= outage_limit:
            return "success"
    return None


def run_random_access(
    attempt: RaAttemptState,
    sinr_at: Callable[[float], float],
    outage_limit: float,
    ra_interval: float,
    dt: float,
) -> tuple[str, float]:
    """Drive :func:`ra_tick` on the ``dt`` grid; returns (outcome, time)."""
    now = attempt.started_at
    while True:
        out = ra_tick(attempt, sinr_at(now), now, outage_limit, ra_interval)
        if out is not None:
            return out, now
        now += dt


@dataclass
class HandoverRecord:
    time: float
    source: int
    target: int


def is_ping_pong(last: Optional[HandoverRecord], target: int, now: float, pp_window: float) -> bool:
    return last is not None and target == last.source and now - last.time < pp_window


# ---------------------------------------------------------------- per-UE machine

@dataclass
class ProtocolParams:
    o_prep: float
    o_exec: float
    max_candidates: int
    thr_cfra: float
    t_update: float
    mr_offset: float
    update_enabled: bool
    ttt: float
    t304: float
    ra_interval: float
    outage_limit: float
    release_hysteresis: float
    replace_hysteresis: float
    pp_window: float
    noise_power: float


@dataclass
class UeProtocol:
    ue: int
    serving: int
    candidates: CandidateSet
    ttt: TttState = field(default_factory=TttState)
    ra: Optional[RaAttemptState] = None
    last_ho: Optional[HandoverRecord] = None

    def step(
        self,
        now: float,
        p: ProtocolParams,
        cell_rsrp: np.ndarray,
        beam_rsrp: np.ndarray,
        sinr_of: Callable[[int, int], float],
        log: list,
    ) -> None:
        """Advance this UE by one tick.

        ``cell_rsrp`` (cells) and ``beam_rsrp`` (cells x beams) are filtered
        measurements; ``sinr_of(cell, beam)`` gives the instantaneous SINR
        of a target beam.
        """
        if self.ra is not None:
            self._progress_ra(now, p, cell_rsrp, sinr_of, log)
            return

        for e in commit_pending_updates(self.candidates, now):
            log.append(Event(now, self.ue, EventKind.UPDATE_COMMIT, e.cell_id, e.cfra_beam_id))

        serving_rsrp = cell_rsrp[self.serving]
        release_below = serving_rsrp - p.o_prep - p.release_hysteresis
        for e in list(self.candidates):
            if cell_rsrp[e.cell_id] < release_below:
                self.candidates.remove(e.cell_id)
                self.ttt.entered.pop(e.cell_id, None)
                log.append(Event(now, self.ue, EventKind.RELEASE, e.cell_id))

        prepared = set(self.candidates.cell_ids())
        for c in np.argsort(-cell_rsrp, kind="stable"):
            c = int(c)
            if c == self.serving or c in prepared:
                continue
            if not check_preparation(serving_rsrp, cell_rsrp[c], p.o_prep):
                break
            added, evicted = prepare_candidate(
                self.candidates, c, beam_rsrp[c], now, cell_rsrp, p.replace_hysteresis
            )
            if added is None:
                break
            if evicted is not None:
                self.ttt.entered.pop(evicted.cell_id, None)
                log.append(Event(now, self.ue, EventKind.RELEASE, evicted.cell_id))
            log.append(Event(now, self.ue, EventKind.PREP, c, added.cfra_beam_id))

        if p.update_enabled:
            for e in self.candidates:
                if e.mr_armed and e.pending_update is None:
                    b = check_mr_trigger(e, beam_rsrp[e.cell_id], p.mr_offset)
                    if b is not None:
                        apply_mr(e, b, now, p.t_update)
                        log.append(Event(now, self.ue, EventKind.MR, e.cell_id, b))

        target = None
        for e in self.candidates:
            if check_execution(serving_rsrp, cell_rsrp[e.cell_id], p.o_exec, self.ttt, p.ttt, now, e.cell_id):
                if target is None or cell_rsrp[e.cell_id] > cell_rsrp[target.cell_id]:
                    target = e
        if target is None:
            return

        log.append(Event(now, self.ue, EventKind.EXEC, target.cell_id))
        ra_type, beam = select_ra_type(target, beam_rsrp[target.cell_id], p.thr_cfra, now)
        for e in self.candidates:
            e.pending_update = None  # in-flight updates of other candidates are moot now
            e.mr_armed = True
        self.ttt.clear()
        self.ra = RaAttemptState(target.cell_id, now, ra_type, beam, p.t304)
        self._progress_ra(now, p, cell_rsrp, sinr_of, log)

    def _progress_ra(self, now, p: ProtocolParams, cell_rsrp, sinr_of, log) -> None:
        ra = self.ra
        out = ra_tick(ra, sinr_of(ra.target_cell_id, ra.access_beam), now, p.outage_limit, p.ra_interval)
        if out == "success":
            self.on_handover_complete(now, p, log)
        elif out == "hof":
            log.append(Event(now, self.ue, EventKind.HOF, ra.target_cell_id, ra.access_beam))
            self.serving = int(np.argmax(cell_rsrp))
            self.candidates.clear()
            self.ttt.clear()
            self.ra = None
            self.last_ho = None

    def on_handover_complete(self, now: float, p: ProtocolParams, log: list) -> None:
        ra = self.ra
        kind = EventKind.CFRA if ra.ra_type is RaType.CFRA else EventKind.CBRA
        log.append(Event(now, self.ue, kind, ra.target_cell_id, ra.access_beam))
        if is_ping_pong(self.last_ho, ra.target_cell_id, now, p.pp_window):
            log.append(Event(now, self.ue, EventKind.PP, ra.target_cell_id))
        self.last_ho = HandoverRecord(now, self.serving, ra.target_cell_id)
        self.serving = ra.target_cell_id
        self.candidates.clear()
        self.ttt.clear()
        self.ra = None
