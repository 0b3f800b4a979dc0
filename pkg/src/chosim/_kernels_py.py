"""NumPy implementation of the per-step channel kernel.

Mirrors ``_kernels.pyx`` argument for argument; used when the compiled
extension is unavailable or ``CHOSIM_PURE_PYTHON`` is set.
"""

import numpy as np


def channel_step(
    ue_xy, cell_xy, boresight, hpbw, max_gain, front_to_back, tx_power,
    los, shadow, beam_fade, fc, h_bs, h_ut, clip, alpha,
    raw, filt, cell_filt, cell_raw,
):
    dx = ue_xy[:, 0:1] - cell_xy[None, :, 0]
    dy = ue_xy[:, 1:2] - cell_xy[None, :, 1]
    d2d = np.maximum(np.sqrt(dx * dx + dy * dy), 1.0)
    d3d = np.sqrt(d2d * d2d + (h_bs - h_ut) ** 2)
    lg = np.log10(d3d)
    pl_los = 32.4 + 21.0 * lg + 20.0 * np.log10(fc)
    pl_nlos = np.maximum(pl_los, 35.3 * lg + 22.4 + 21.3 * np.log10(fc) - 0.3 * (h_ut - 1.5))
    pl = np.where(los != 0, pl_los, pl_nlos)

    az = np.degrees(np.arctan2(dy, dx))
    delta = np.mod(az[:, :, None] - boresight[None, :, :] + 180.0, 360.0) - 180.0
    gain = max_gain[None] - np.minimum(12.0 * (delta / hpbw[None]) ** 2, front_to_back[None])

    np.maximum(tx_power[None, :, None] + gain - pl[:, :, None] + shadow[:, :, None] + beam_fade, clip, out=raw)
    if alpha == 1.0:
        filt[...] = raw
    else:
        filt *= 1.0 - alpha
        filt += alpha * raw
    np.max(filt, axis=2, out=cell_filt)
    np.max(raw, axis=2, out=cell_raw)
