"""Static 7-site, 3-sector hexagonal deployment with a per-cell grid of beams."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

N_SITES = 7
SECTORS_PER_SITE = 3


@dataclass(frozen=True)
class Beam:
    beam_id: int
    cell_id: int
    boresight_azimuth: float
    hpbw: float
    max_gain: float
    front_to_back: float

    def __post_init__(self):
        if not self.hpbw > 0:
            raise ValueError(f"hpbw must be positive, got {self.hpbw}")
        if self.max_gain < 0:
            raise ValueError(f"max_gain must be >= 0, got {self.max_gain}")
        if not self.front_to_back > 0:
            raise ValueError(f"front_to_back must be positive, got {self.front_to_back}")


@dataclass(frozen=True)
class Cell:
    cell_id: int
    site_index: int
    azimuth: float
    beams: tuple[Beam, ...]
    tx_power: float


@dataclass(frozen=True, eq=False)
class Layout:
    sites: np.ndarray  # (7, 2)
    cells: tuple[Cell, ...]
    isd: float
    bounds: np.ndarray  # (k, 2) convex polygon, counter-clockwise
    h_bs: float = 10.0
    h_ut: float = 1.5
    _arrays: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_beams(self) -> int:
        return len(self.cells[0].beams)

    def cell_positions(self) -> np.ndarray:
        """Site coordinates of every cell, shape (n_cells, 2)."""
        return self._cached("cell_xy", lambda: self.sites[[c.site_index for c in self.cells]])

    def beam_arrays(self) -> dict[str, np.ndarray]:
        """Per-beam parameters as contiguous (n_cells, n_beams) float arrays."""

        def build():
            get = lambda attr: np.ascontiguousarray(
                [[getattr(b, attr) for b in c.beams] for c in self.cells], dtype=np.float64
            )
            return {
                "boresight": get("boresight_azimuth"),
                "hpbw": get("hpbw"),
                "max_gain": get("max_gain"),
                "front_to_back": get("front_to_back"),
                "tx_power": np.array([c.tx_power for c in self.cells], dtype=np.float64),
            }

        return self._cached("beams", build)

    def _cached(self, key, factory):
        if key not in self._arrays:
            self._arrays[key] = factory()
        return self._arrays[key]

    def contains(self, point) -> bool:
        """True if `point` lies inside (or on) the convex bounds polygon."""
        x, y = float(point[0]), float(point[1])
        poly = self.bounds
        nxt = np.roll(poly, -1, axis=0)
        cross = (nxt[:, 0] - poly[:, 0]) * (y - poly[:, 1]) - (nxt[:, 1] - poly[:, 1]) * (x - poly[:, 0])
        return bool(np.all(cross >= -1e-9))

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform point in bounds by rejection from the bounding box."""
        lo = self.bounds.min(axis=0)
        hi = self.bounds.max(axis=0)
        while True:
            p = lo + (hi - lo) * rng.random(2)
            if self.contains(p):
                return p

    def dump_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["cell_id", "site_index", "site_x", "site_y", "azimuth", "beam_boresights"])
            for c in self.cells:
                x, y = self.sites[c.site_index]
                w.writerow([
                    c.cell_id, c.site_index, repr(float(x)), repr(float(y)), repr(c.azimuth),
                    ";".join(repr(b.boresight_azimuth) for b in c.beams),
                ])


def wrap_degrees(angle):
    """Map angles to (-180, 180]."""
    a = np.mod(np.asarray(angle, dtype=np.float64) + 180.0, 360.0) - 180.0
    a = np.where(a == -180.0, 180.0, a)
    return float(a) if np.ndim(a) == 0 else a


def beam_boresights(cell_azimuth: float, n_beams: int, sector_span: float) -> list[float]:
    """Evenly spaced beam azimuths centred on the cell azimuth.

    With ``n_beams`` beams the outermost boresights sit at +-span/2, e.g.
    8 beams over 105 degrees are 15 degrees apart.
    """
    if n_beams < 1:
        raise ValueError("n_beams must be >= 1")
    if not 0 < sector_span <= 120:
        raise ValueError("sector_span must be in (0, 120]")
    if n_beams == 1:
        return [float(cell_azimuth)]
    step = sector_span / (n_beams - 1)
    return [float(cell_azimuth - sector_span / 2 + i * step) for i in range(n_beams)]


def antenna_gain(beam: Beam, direction_azimuth) -> float | np.ndarray:
    """Beam gain in dBi toward an absolute azimuth (degrees)."""
    return gain_pattern(
        wrap_degrees(np.asarray(direction_azimuth) - beam.boresight_azimuth),
        beam.hpbw, beam.max_gain, beam.front_to_back,
    )


def gain_pattern(delta, hpbw, max_gain, front_to_back):
    """Parabolic-in-dB main lobe clamped at the front-to-back ratio."""
    delta = np.asarray(delta, dtype=np.float64)
    g = max_gain - np.minimum(12.0 * (delta / hpbw) ** 2, front_to_back)
    return float(g) if g.ndim == 0 else g


def build_layout(
    isd: float = 200.0,
    seed_rotation: float = 0.0,
    *,
    n_beams: int = 12,
    sector_span: float = 110.0,
    hpbw: float = 12.5,
    max_gain: float = 11.25,
    front_to_back: float = 25.0,
    tx_power: float = 30.0,
    h_bs: float = 10.0,
    h_ut: float = 1.5,
) -> Layout:
    if not isd > 0:
        raise ValueError("isd must be positive")
    sites = [(0.0, 0.0)]
    for k in range(6):
        a = math.radians(seed_rotation + 60.0 * k)
        sites.append((isd * math.cos(a), isd * math.sin(a)))
    sites_arr = np.array(sites, dtype=np.float64)
    # exact zeros keep the symmetric examples bit-clean
    sites_arr[np.abs(sites_arr) < 1e-9 * isd] = 0.0

    cells = []
    for s in range(N_SITES):
        for k in range(SECTORS_PER_SITE):
            cid = s * SECTORS_PER_SITE + k
            az = float(wrap_degrees(seed_rotation + 120.0 * k))
            beams = tuple(
                Beam(j, cid, float(wrap_degrees(bz)), hpbw, max_gain, front_to_back)
                for j, bz in enumerate(beam_boresights(az, n_beams, sector_span))
            )
            cells.append(Cell(cid, s, az, beams, tx_power))

    # outer-site hexagon pushed out by isd/2 along each edge normal
    r = isd + (isd / 2) / math.cos(math.radians(30.0))
    bounds = np.array(
        [
            (r * math.cos(math.radians(seed_rotation + 60.0 * k)),
             r * math.sin(math.radians(seed_rotation + 60.0 * k)))
            for k in range(6)
        ]
    )
    return Layout(sites_arr, tuple(cells), float(isd), bounds, h_bs, h_ut)
