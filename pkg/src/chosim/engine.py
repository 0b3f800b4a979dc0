"""Fixed-step simulation engine.

Motion and channel do not depend on protocol decisions, so several
protocol configurations that share a channel (same seed and radio
parameters) are advanced in lockstep over a single channel realization.
A single run is the one-element case of the same loop.

Seeding: ``SeedSequence(seed).spawn(n_ues)`` gives one sequence per UE,
each spawning ``(environment, protocol)``; the environment sequence spawns
``(mobility, shadowing, los, beam fading)`` generators. The CHO state machine is
deterministic given its measurements, so the protocol stream is derived
but currently draws nothing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .cho import (
    CandidateSet, Event, ProtocolParams, UeProtocol,
)
from .config import SimConfig
from .deployment import Layout, build_layout
from .kpi import KpiAccumulator, KpiReport, LatencyTable, build_report
from .mobility import Fleet, spawn_ues
from .radio import l3_coefficient, los_probability

log = logging.getLogger(__name__)

SHADOW_CHUNK = 128


def layout_for(config: SimConfig) -> Layout:
    return build_layout(
        config.isd, config.layout_rotation,
        n_beams=config.n_beams, sector_span=config.sector_span, hpbw=config.hpbw,
        max_gain=config.max_gain, front_to_back=config.front_to_back,
        tx_power=config.tx_power, h_bs=config.h_bs, h_ut=config.h_ut,
    )


def ue_streams(seed: int, n_ues: int):
    """Per-UE (mobility, shadowing, los, beam fading, protocol) generators."""
    out = []
    for ss in np.random.SeedSequence(seed).spawn(n_ues):
        env, proto = ss.spawn(2)
        out.append(tuple(np.random.default_rng(s) for s in (*env.spawn(4), proto)))
    return out


class _NormalStream:
    """Standard normals of shape (n_ues, *shape) per step, drawn per UE in chunks."""

    def __init__(self, rngs, shape):
        self.rngs = rngs
        self.shape = tuple(shape)
        self.buf = np.empty((0, len(rngs), *self.shape))
        self.idx = 0

    def next(self) -> np.ndarray:
        if self.idx >= len(self.buf):
            self.buf = np.empty((SHADOW_CHUNK, len(self.rngs), *self.shape))
            for u, rng in enumerate(self.rngs):
                self.buf[:, u] = rng.standard_normal((SHADOW_CHUNK, *self.shape))
            self.idx = 0
        g = self.buf[self.idx]
        self.idx += 1
        return g


class Channel:
    """Motion, shadowing, LOS state and filtered beam RSRP for every UE-cell-beam link."""

    def __init__(self, config: SimConfig, layout: Optional[Layout] = None):
        self.cfg = config
        self.layout = layout or layout_for(config)
        lay = self.layout
        n, c, b = config.n_ues, lay.n_cells, lay.n_beams
        streams = ue_streams(config.seed, n)
        self.mob_rng = [s[0] for s in streams]
        self.shd_rng = [s[1] for s in streams]
        self.los_rng = [s[2] for s in streams]
        self.fade_rng = [s[3] for s in streams]
        self.proto_rng = [s[4] for s in streams]

        self.fleet = Fleet(spawn_ues(n, lay, config.speed, self.mob_rng), lay, self.mob_rng)
        self.cell_xy = np.ascontiguousarray(lay.cell_positions())
        self._beams = lay.beam_arrays()
        self.sigma = np.array([config.sigma_nlos, config.sigma_los])
        self.dcorr = np.array([config.dcorr_nlos, config.dcorr_los])
        self.alpha = l3_coefficient(config.l3_k)

        # shadowing/LOS links: one per site (sectors share) or one per cell
        if config.shadowing_scope == "site":
            self.link_of_cell = np.array([cl.site_index for cl in lay.cells], dtype=np.intp)
            self.link_xy = lay.sites
        else:
            self.link_of_cell = np.arange(c, dtype=np.intp)
            self.link_xy = self.cell_xy
        n_links = len(self.link_xy)
        self.link_los = np.zeros((n, n_links), dtype=np.uint8)
        self.los_anchor = self.fleet.pos.copy()
        for u in range(n):
            self.link_los[u] = self._draw_los(u)
        self._normals = _NormalStream(self.shd_rng, (n_links,))
        self.link_shadow = self.sigma[self.link_los] * self._normals.next()
        self._expand()

        # beam-specific fading on top of the link shadowing; shared nothing across beams
        self._fade_normals = _NormalStream(self.fade_rng, (c, b))
        if config.beam_sigma > 0:
            self.beam_fade = config.beam_sigma * self._fade_normals.next()
        else:
            self.beam_fade = np.zeros((n, c, b))

        self.raw = np.empty((n, c, b))
        self.filt = np.empty((n, c, b))
        self.cell_filt = np.empty((n, c))
        self.cell_raw = np.empty((n, c))
        self.step_index = 0
        self._measure(1.0)

    @property
    def now(self) -> float:
        return self.step_index * self.cfg.dt

    def _expand(self) -> None:
        self.los = np.ascontiguousarray(self.link_los[:, self.link_of_cell])
        self.shadow = np.ascontiguousarray(self.link_shadow[:, self.link_of_cell])

    def _draw_los(self, u: int) -> np.ndarray:
        d = self.fleet.pos[u] - self.link_xy
        p = los_probability(np.hypot(d[:, 0], d[:, 1]))
        return (self.los_rng[u].random(len(p)) < p).astype(np.uint8)

    def _measure(self, alpha: float) -> None:
        bm = self._beams
        kernels.channel_step(
            self.fleet.pos, self.cell_xy, bm["boresight"], bm["hpbw"], bm["max_gain"],
            bm["front_to_back"], bm["tx_power"], self.los, self.shadow, self.beam_fade,
            self.cfg.fc, self.cfg.h_bs, self.cfg.h_ut, self.cfg.noise_floor_clip, alpha,
            self.raw, self.filt, self.cell_filt, self.cell_raw,
        )

    def step(self) -> None:
        cfg = self.cfg
        prev = self.fleet.pos.copy()
        self.fleet.step(cfg.dt / 1000.0)
        self.step_index += 1
        if len(self.fleet) == 0:
            return

        moved_far = np.hypot(*(self.fleet.pos - self.los_anchor).T) >= cfg.los_resample_distance
        for u in np.flatnonzero(moved_far):
            new = self._draw_los(u)
            flip = new != self.link_los[u]
            old_sigma = self.sigma[self.link_los[u][flip]]
            scale = np.divide(self.sigma[new[flip]], old_sigma, out=np.zeros_like(old_sigma), where=old_sigma > 0)
            self.link_shadow[u, flip] *= scale
            self.link_los[u] = new
            self.los_anchor[u] = self.fleet.pos[u]

        dd = np.hypot(*(self.fleet.pos - prev).T)
        rho = np.exp(-dd[:, None] / self.dcorr[self.link_los])
        g = self._normals.next()
        self.link_shadow = rho * self.link_shadow + np.sqrt(1.0 - rho * rho) * self.sigma[self.link_los] * g
        self._expand()
        if cfg.beam_sigma > 0:
            rb = np.exp(-dd / cfg.beam_dcorr)[:, None, None]
            self.beam_fade = np.ascontiguousarray(
                rb * self.beam_fade + np.sqrt(1.0 - rb * rb) * cfg.beam_sigma * self._fade_normals.next()
            )
        self._measure(self.alpha)

    def sinr(self, u: int, cell: int, beam: int) -> float:
        """SINR (dB) of ``beam`` of ``cell`` at UE ``u`` against all other cells' strongest beams."""
        lin = np.power(10.0, self.cell_raw[u] / 10.0)
        s = lin[cell]
        i = lin.sum() - s
        s_beam = 10.0 ** (self.raw[u, cell, beam] / 10.0)
        n = 10.0 ** (self.cfg.noise_power / 10.0)
        return float(10.0 * np.log10(s_beam / (n + i)))


def protocol_params(c: SimConfig) -> ProtocolParams:
    return ProtocolParams(
        o_prep=c.o_prep, o_exec=c.o_exec, max_candidates=c.max_candidates, thr_cfra=c.thr_cfra,
        t_update=c.t_update, mr_offset=c.mr_offset, update_enabled=c.update_enabled, ttt=c.ttt,
        t304=c.t304, ra_interval=c.ra_interval, outage_limit=c.outage_limit,
        release_hysteresis=c.release_hysteresis, replace_hysteresis=c.replace_hysteresis,
        pp_window=c.pp_window, noise_power=c.noise_power,
    )


class ProtocolRun:
    """All UE state machines of one configuration plus its KPI counters.

    Before each step a vectorized screen marks the UEs that could possibly
    produce an event; only those run :meth:`UeProtocol.step`. The screen
    uses the very same comparisons, so with ``screen=False`` (every UE
    stepped) the event log is identical.
    """

    def __init__(self, config: SimConfig, channel: Channel, screen: bool = True):
        self.cfg = config
        self.p = protocol_params(config)
        self.screen = screen
        n, m = config.n_ues, config.max_candidates
        serving = np.argmax(channel.cell_filt, axis=1) if n else np.zeros(0, dtype=int)
        self.ues = [UeProtocol(u, int(serving[u]), CandidateSet(m)) for u in range(n)]
        self.events: list[Event] = []
        self.acc = KpiAccumulator(n, config.sim_time - config.warmup)
        self._warm_ms = config.warmup * 1000.0

        self.serving = serving.astype(np.intp)
        self.cand = np.full((n, m), -1, dtype=np.intp)
        self.cfra = np.zeros((n, m), dtype=np.intp)
        self.armed = np.zeros((n, m), dtype=bool)
        self.pend = np.full((n, m), np.inf)
        self.busy = np.zeros(n, dtype=bool)  # RA running or TTT bookkeeping

    def _sync(self, u: int) -> None:
        ue = self.ues[u]
        self.serving[u] = ue.serving
        self.cand[u] = -1
        self.armed[u] = False
        self.pend[u] = np.inf
        for j, e in enumerate(ue.candidates.entries):
            self.cand[u, j] = e.cell_id
            self.cfra[u, j] = e.cfra_beam_id
            self.armed[u, j] = e.mr_armed and e.pending_update is None
            if e.pending_update is not None:
                self.pend[u, j] = e.pending_update.effective_at
        self.busy[u] = ue.ra is not None or bool(ue.ttt.entered)

    def _active(self, now: float, ch: Channel) -> np.ndarray:
        p = self.p
        n = len(self.ues)
        rows = np.arange(n)
        cf = ch.cell_filt
        sr = cf[rows, self.serving]
        valid = self.cand >= 0
        cc = np.where(valid, self.cand, 0)
        crs = cf[rows[:, None], cc]

        act = self.busy.copy()
        act |= np.any(valid & (self.pend <= now), axis=1)
        act |= np.any(valid & (crs < (sr - p.o_prep - p.release_hysteresis)[:, None]), axis=1)
        act |= np.any(valid & (crs >= (sr + p.o_exec)[:, None]), axis=1)

        if p.update_enabled:
            bm = ch.filt[rows[:, None], cc]  # (n, m, beams)
            ref = np.take_along_axis(bm, self.cfra[:, :, None], axis=2)[:, :, 0]
            np.put_along_axis(bm, self.cfra[:, :, None], -np.inf, axis=2)
            act |= np.any(valid & self.armed & (bm.max(axis=2) >= ref + p.mr_offset), axis=1)

        masked = cf.copy()
        masked[rows, self.serving] = -np.inf
        vr, vc = np.nonzero(valid)
        masked[vr, self.cand[vr, vc]] = -np.inf
        best_new = masked.max(axis=1)
        weakest = np.where(valid, crs, np.inf).min(axis=1)
        room = valid.sum(axis=1) < p.max_candidates
        act |= (best_new >= sr - p.o_prep) & (room | (best_new >= weakest + p.replace_hysteresis))
        return np.flatnonzero(act)

    def step(self, ch: Channel) -> None:
        now = ch.now
        idx = self._active(now, ch) if self.screen else range(len(self.ues))
        for u in idx:
            u = int(u)
            start = len(self.events)
            self.ues[u].step(
                now, self.p, ch.cell_filt[u], ch.filt[u],
                lambda cell, beam, u=u: ch.sinr(u, cell, beam), self.events,
            )
            if now >= self._warm_ms:
                for ev in self.events[start:]:
                    self.acc.add(ev.kind)
            self._sync(u)

    def report(self, latency: LatencyTable = LatencyTable()) -> KpiReport:
        return build_report(self.acc, latency, self.cfg.n_values, self.cfg.ho_cfra, self.cfg.to_dict())


@dataclass
class RunResult:
    config: SimConfig
    report: KpiReport
    events: list[Event]


def simulate(
    configs: list[SimConfig],
    *,
    screen: bool = True,
    on_step: Optional[Callable[[Channel], None]] = None,
    layout: Optional[Layout] = None,
) -> list[RunResult]:
    """Run protocol configurations that share one channel realization in lockstep."""
    if not configs:
        return []
    for c in configs:
        c.validate()
    key = configs[0].channel_key()
    if any(c.channel_key() != key for c in configs[1:]):
        raise ValueError("lockstep runs must share every channel parameter and the seed")
    ch = Channel(configs[0], layout)
    runs = [ProtocolRun(c, ch, screen) for c in configs]
    if on_step is not None:
        on_step(ch)
    for _ in range(configs[0].n_steps):
        ch.step()
        for r in runs:
            r.step(ch)
        if on_step is not None:
            on_step(ch)
    return [RunResult(r.cfg, r.report(), r.events) for r in runs]


def run_simulation(config: SimConfig, **kw) -> RunResult:
    return simulate([config], **kw)[0]
