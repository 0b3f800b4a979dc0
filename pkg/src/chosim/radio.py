"""UMi link budget: path loss, correlated shadowing, beam RSRP, L3 filtering, SINR."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .deployment import Beam, Cell, antenna_gain


def path_loss(d2d, fc: float, los, h_bs: float = 10.0, h_ut: float = 1.5, *, clamp: bool = False):
    """UMi street-canyon path loss in dB (single-slope LOS, NLOS floored by LOS).

    Distances below 1 m are outside the model. By default they raise; with
    ``clamp=True`` they are lifted to 1 m and a warning is issued.
    """
    if fc <= 0:
        raise ValueError("fc must be positive")
    d = np.asarray(d2d, dtype=np.float64)
    if np.any(d < 1.0):
        if not clamp:
            raise ValueError("path loss undefined for d2d < 1 m")
        warnings.warn("d2d < 1 m clamped to 1 m", RuntimeWarning, stacklevel=2)
        d = np.maximum(d, 1.0)
    d3d = np.sqrt(d * d + (h_bs - h_ut) ** 2)
    pl_los = 32.4 + 21.0 * np.log10(d3d) + 20.0 * math.log10(fc)
    pl_nlos = 35.3 * np.log10(d3d) + 22.4 + 21.3 * math.log10(fc) - 0.3 * (h_ut - 1.5)
    pl = np.where(np.asarray(los, dtype=bool), pl_los, np.maximum(pl_los, pl_nlos))
    return float(pl) if pl.ndim == 0 else pl


def los_probability(d2d):
    """UMi LOS probability as a function of 2-D distance."""
    d = np.maximum(np.asarray(d2d, dtype=np.float64), 1e-9)
    near = np.minimum(18.0 / d, 1.0)
    p = near + np.exp(-d / 36.0) * (1.0 - near)
    return float(p) if p.ndim == 0 else p


@dataclass(frozen=True)
class LinkShadowState:
    value: float
    last_update_pos: tuple[float, float]
    los: bool
    last_los_sample_pos: tuple[float, float]


def shadow_correlation(distance: float, d_corr: float) -> float:
    return math.exp(-distance / d_corr)


def update_shadowing(
    state: LinkShadowState, new_pos, sigma: float, d_corr: float, rng: np.random.Generator
) -> LinkShadowState:
    """Gauss-Markov step of the shadowing process along the UE track.

    A zero displacement returns the state untouched and consumes no random
    numbers, so a parked UE keeps its shadowing.
    """
    if sigma < 0 or d_corr <= 0:
        raise ValueError("need sigma >= 0 and d_corr > 0")
    new_pos = (float(new_pos[0]), float(new_pos[1]))
    dd = math.hypot(new_pos[0] - state.last_update_pos[0], new_pos[1] - state.last_update_pos[1])
    if dd == 0.0:
        return state
    rho = shadow_correlation(dd, d_corr)
    g = rng.standard_normal()
    value = rho * state.value + math.sqrt(1.0 - rho * rho) * sigma * g
    return replace(state, value=value, last_update_pos=new_pos)


def beam_rsrp(
    ue_pos,
    cell: Cell,
    beam: Beam,
    site_pos,
    shadow: float,
    fc: float,
    los: bool,
    noise_floor_clip: float = -140.0,
    h_bs: float = 10.0,
    h_ut: float = 1.5,
) -> float:
    """Received beam reference power in dBm at ``ue_pos`` (clipped from below)."""
    dx = float(ue_pos[0]) - float(site_pos[0])
    dy = float(ue_pos[1]) - float(site_pos[1])
    d2d = max(math.hypot(dx, dy), 1.0)
    az = math.degrees(math.atan2(dy, dx))
    rsrp = cell.tx_power + antenna_gain(beam, az) - path_loss(d2d, fc, los, h_bs, h_ut) + shadow
    return max(rsrp, noise_floor_clip)


def l3_coefficient(k: float) -> float:
    if k < 0:
        raise ValueError("filter coefficient k must be >= 0")
    return 1.0 / 2.0 ** (k / 4.0)


def l3_filter(prev, sample, k: float):
    """Layer-3 exponential filter; ``prev=None`` initializes to the sample."""
    if prev is None:
        return sample
    a = l3_coefficient(k)
    return (1.0 - a) * prev + a * sample


def db_to_lin(x):
    return np.power(10.0, np.asarray(x, dtype=np.float64) / 10.0)


def lin_to_db(x):
    return 10.0 * np.log10(x)


def downlink_sinr(
    serving_power: float, interferer_powers, noise_power: float
) -> float:
    """SINR in dB from the serving beam power and per-cell interferer powers (all dBm).

    Each interfering cell contributes its strongest beam toward the UE.
    """
    i_lin = float(np.sum(db_to_lin(np.asarray(interferer_powers, dtype=np.float64))))
    s_lin = 10.0 ** (serving_power / 10.0)
    n_lin = 10.0 ** (noise_power / 10.0)
    return float(10.0 * math.log10(s_lin / (n_lin + i_lin)))


def beam_sinr(cell_best_raw: np.ndarray, target_cell: int, target_beam_power: float, noise_power: float) -> float:
    """SINR of one beam of ``target_cell`` against the strongest beams of all other cells."""
    others = np.delete(cell_best_raw, target_cell)
    return downlink_sinr(target_beam_power, others, noise_power)
