"""Simulation configuration, validation, presets and sweep grids.

Config files are YAML mappings over exactly the :class:`SimConfig` field
names; unknown keys are rejected. ``.inf`` / ``-.inf`` are accepted for
the threshold and offset sentinels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists ``(field, message)`` pairs."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.errors))


@dataclass(frozen=True)
class SimConfig:
    # deployment and channel
    isd: float = 200.0
    n_sites: int = 7
    tx_power: float = 30.0
    fc: float = 28.0
    n_beams: int = 12
    sector_span: float = 110.0
    hpbw: float = 12.5
    max_gain: float = 11.25
    front_to_back: float = 25.0
    layout_rotation: float = 0.0
    h_bs: float = 10.0
    h_ut: float = 1.5
    sigma_los: float = 4.0
    sigma_nlos: float = 7.82
    dcorr_los: float = 10.0
    dcorr_nlos: float = 13.0
    shadowing_scope: str = "site"
    beam_sigma: float = 4.0
    beam_dcorr: float = 10.0
    los_resample_distance: float = 50.0
    noise_power: float = -85.0
    noise_floor_clip: float = -140.0
    l3_k: float = 4.0
    # population and time
    n_ues: int = 420
    speed: float = 30.0 / 3.6
    sim_time: float = 30.0  # s
    dt: float = 10.0  # ms
    warmup: float = 0.0  # s
    seed: int = 0
    # CHO protocol
    o_prep: float = 10.0
    o_exec: float = 3.0
    max_candidates: int = 3
    cfra_beams_per_candidate: int = 1
    thr_cfra: float = -79.0
    t_update: float = 30.0  # ms
    mr_offset: float = 3.0
    update_enabled: bool = True
    ttt: float = 160.0  # ms
    t304: float = 100.0  # ms
    ra_interval: float = 10.0  # ms
    outage_limit: float = -8.0
    release_hysteresis: float = 2.0
    replace_hysteresis: float = 3.0
    pp_window: float = 1000.0  # ms
    # delay post-processing
    ho_cfra: float = 80.0  # ms
    n_values: tuple[int, ...] = (0, 1, 2, 3, 4)

    def validate(self) -> "SimConfig":
        errs = validation_errors(self)
        if errs:
            raise ConfigError(errs)
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_values"] = list(self.n_values)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError([(k, "unknown key") for k in unknown])
        errs = []
        kw = {}
        for f in fields(cls):
            if f.name not in data:
                continue
            v = data[f.name]
            try:
                kw[f.name] = _coerce(f.name, v)
            except (TypeError, ValueError) as exc:
                errs.append((f.name, str(exc)))
        if errs:
            raise ConfigError(errs)
        return cls(**kw)

    @property
    def n_steps(self) -> int:
        return int(round(self.sim_time * 1000.0 / self.dt))

    def protocol_key(self):
        return tuple(getattr(self, k) for k in PROTOCOL_FIELDS)

    def channel_key(self):
        """Fields that shape the radio environment; runs sharing it share the channel."""
        return tuple(getattr(self, f.name) for f in fields(self) if f.name not in PROTOCOL_FIELDS)


# fields that never influence motion, shadowing or RSRP
PROTOCOL_FIELDS = (
    "o_prep", "o_exec", "max_candidates", "cfra_beams_per_candidate", "thr_cfra", "t_update",
    "mr_offset", "update_enabled", "ttt", "t304", "ra_interval", "outage_limit",
    "release_hysteresis", "replace_hysteresis", "pp_window", "ho_cfra", "n_values", "warmup",
)

_INT_FIELDS = {"n_sites", "n_beams", "n_ues", "seed", "max_candidates", "cfra_beams_per_candidate"}
_INF_OK = {"thr_cfra", "mr_offset"}


def _coerce(name, v):
    if name == "n_values":
        if not isinstance(v, (list, tuple)):
            raise TypeError("expected a list of integers")
        return tuple(_as_int(x) for x in v)
    if name == "shadowing_scope":
        if v not in ("site", "cell"):
            raise ValueError("expected 'site' or 'cell'")
        return v
    if name == "update_enabled":
        if not isinstance(v, bool):
            raise TypeError("expected true/false")
        return v
    if name in _INT_FIELDS:
        return _as_int(v)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError(f"expected a number, got {v!r}")
    return float(v)


def _as_int(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or float(v) != int(v):
        raise TypeError(f"expected an integer, got {v!r}")
    return int(v)


def validation_errors(c: SimConfig) -> list[tuple[str, str]]:
    e = []

    def need(ok, name, msg):
        if not ok:
            e.append((name, msg))

    for name in (f.name for f in fields(c)):
        v = getattr(c, name)
        if isinstance(v, float) and math.isnan(v):
            e.append((name, "must not be NaN"))
        elif isinstance(v, float) and math.isinf(v) and name not in _INF_OK:
            e.append((name, "must be finite"))
    need(c.isd > 0, "isd", "must be > 0")
    need(c.n_sites == 7, "n_sites", "only the 7-site layout is supported")
    need(c.fc > 0, "fc", "must be > 0")
    need(c.n_beams >= 1, "n_beams", "must be >= 1")
    need(0 < c.sector_span <= 120, "sector_span", "must be in (0, 120]")
    need(c.hpbw > 0, "hpbw", "must be > 0")
    need(c.max_gain >= 0, "max_gain", "must be >= 0")
    need(c.front_to_back > 0, "front_to_back", "must be > 0")
    need(c.h_bs > c.h_ut > 0, "h_bs", "need h_bs > h_ut > 0")
    for n in ("sigma_los", "sigma_nlos", "beam_sigma"):
        need(getattr(c, n) >= 0, n, "must be >= 0")
    for n in ("dcorr_los", "dcorr_nlos", "beam_dcorr", "los_resample_distance"):
        need(getattr(c, n) > 0, n, "must be > 0")
    need(c.l3_k >= 0, "l3_k", "must be >= 0")
    need(c.n_ues >= 0, "n_ues", "must be >= 0")
    need(c.speed >= 0, "speed", "must be >= 0")
    need(c.dt > 0, "dt", "must be > 0")
    need(c.sim_time > 0, "sim_time", "must be > 0")
    if c.dt > 0 and c.sim_time > 0:
        need(abs(c.sim_time * 1000.0 / c.dt - c.n_steps) < 1e-9, "sim_time", "must be a multiple of dt")
    need(0 <= c.warmup < c.sim_time, "warmup", "must be in [0, sim_time)")
    need(c.seed >= 0, "seed", "must be >= 0")
    need(c.o_prep >= 0, "o_prep", "must be >= 0")
    need(1 <= c.max_candidates, "max_candidates", "must be >= 1")
    need(c.cfra_beams_per_candidate == 1, "cfra_beams_per_candidate", "only one CFRA beam per candidate is modelled")
    need(c.t_update >= 0, "t_update", "must be >= 0")
    need(c.mr_offset >= 0, "mr_offset", "must be >= 0")
    need(c.ttt >= 0, "ttt", "must be >= 0")
    need(c.t304 > 0, "t304", "must be > 0")
    need(c.ra_interval > 0, "ra_interval", "must be > 0")
    if c.dt > 0:
        for n in ("t_update", "ttt", "t304", "ra_interval", "pp_window"):
            v = getattr(c, n)
            need(math.isfinite(v) and v % c.dt == 0, n, "must be a multiple of dt")
    need(c.release_hysteresis >= 0, "release_hysteresis", "must be >= 0")
    need(c.replace_hysteresis >= 0, "replace_hysteresis", "must be >= 0")
    need(c.ho_cfra >= 0, "ho_cfra", "must be >= 0")
    need(all(n >= 0 for n in c.n_values), "n_values", "retransmission counts must be >= 0")
    return e


def load_config(path: str | Path) -> SimConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError([("<file>", "top level must be a mapping")])
    return SimConfig.from_dict(data)


def dump_config(config: SimConfig, path: str | Path | None = None) -> str:
    text = yaml.safe_dump(config.to_dict(), sort_keys=False)
    if path is not None:
        Path(path).write_text(text)
    return text


PRESETS = {
    "full": (SimConfig(), (0,)),
    "desk": (SimConfig(n_ues=60, sim_time=10.0), (0, 1, 2, 3, 4)),
}


def preset(name: str) -> tuple[SimConfig, tuple[int, ...]]:
    """Base config and seed list of a named preset ("desk" or "full")."""
    return PRESETS[name]


# ---------------------------------------------------------------- sweeps

GRID_KEYS = ("thr_cfra", "o_prep", "max_candidates", "update_enabled", "seed", "mr_offset", "speed")


@dataclass(frozen=True)
class SweepGrid:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        bad = [k for k in self.values if k not in GRID_KEYS]
        if bad:
            raise ConfigError([(k, f"not sweepable (allowed: {', '.join(GRID_KEYS)})") for k in bad])
        for k, v in self.values.items():
            if not isinstance(v, (list, tuple)) or len(v) == 0:
                raise ConfigError([(k, "expected a non-empty list")])

    @property
    def varied(self) -> list[str]:
        """Swept parameter names in canonical order, seed excluded."""
        return [k for k in GRID_KEYS if k in self.values and k != "seed"]

    def points(self, base: SimConfig) -> list[SimConfig]:
        """Cartesian product in canonical key order (last key varies fastest)."""
        keys = [k for k in GRID_KEYS if k in self.values]
        out = []
        for combo in itertools.product(*(self.values[k] for k in keys)):
            data = base.to_dict()
            data.update(dict(zip(keys, combo)))
            out.append(SimConfig.from_dict(data))
        return out

    @classmethod
    def load(cls, path: str | Path) -> "SweepGrid":
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        if not isinstance(data, dict):
            raise ConfigError([("<grid>", "top level must be a mapping")])
        return cls(dict(data))

    @classmethod
    def threshold_range(cls, lo: float = -97.0, hi: float = -70.0, step: float = 3.0, **more) -> "SweepGrid":
        n = int(round((hi - lo) / step)) + 1
        return cls({"thr_cfra": [lo + i * step for i in range(n)], **more})


def with_overrides(config: SimConfig, **kw) -> SimConfig:
    return replace(config, **kw)
