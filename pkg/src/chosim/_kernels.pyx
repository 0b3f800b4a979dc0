# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-step channel kernel (fused link budget + L3 filter)."""

from libc.math cimport atan2, fmod, log10, sqrt, fmax, fmin, M_PI


def channel_step(
    const double[:, ::1] ue_xy,
    const double[:, ::1] cell_xy,
    const double[:, ::1] boresight,
    const double[:, ::1] hpbw,
    const double[:, ::1] max_gain,
    const double[:, ::1] front_to_back,
    const double[::1] tx_power,
    const unsigned char[:, ::1] los,
    const double[:, ::1] shadow,
    const double[:, :, ::1] beam_fade,
    double fc, double h_bs, double h_ut, double clip, double alpha,
    double[:, :, ::1] raw,
    double[:, :, ::1] filt,
    double[:, ::1] cell_filt,
    double[:, ::1] cell_raw,
):
    cdef Py_ssize_t n_ue = ue_xy.shape[0]
    cdef Py_ssize_t n_cell = cell_xy.shape[0]
    cdef Py_ssize_t n_beam = boresight.shape[1]
    cdef Py_ssize_t u, c, b
    cdef double dx, dy, d2d, d3d, lg, pl, pl_n, az, delta, x, g, r, f, best_f, best_r
    cdef double dh2 = (h_bs - h_ut) * (h_bs - h_ut)
    cdef double fc_los = 20.0 * log10(fc)
    cdef double fc_nlos = 21.3 * log10(fc) - 0.3 * (h_ut - 1.5)
    cdef double keep = 1.0 - alpha
    cdef bint init = alpha == 1.0

    with nogil:
        for u in range(n_ue):
            for c in range(n_cell):
                dx = ue_xy[u, 0] - cell_xy[c, 0]
                dy = ue_xy[u, 1] - cell_xy[c, 1]
                d2d = fmax(sqrt(dx * dx + dy * dy), 1.0)
                d3d = sqrt(d2d * d2d + dh2)
                lg = log10(d3d)
                pl = 32.4 + 21.0 * lg + fc_los
                if los[u, c] == 0:
                    pl_n = 35.3 * lg + 22.4 + fc_nlos
                    pl = fmax(pl, pl_n)
                az = atan2(dy, dx) * (180.0 / M_PI)
                best_f = -1e300
                best_r = -1e300
                for b in range(n_beam):
                    delta = fmod(az - boresight[c, b] + 180.0, 360.0)
                    if delta < 0:
                        delta += 360.0
                    delta -= 180.0
                    x = delta / hpbw[c, b]
                    g = max_gain[c, b] - fmin(12.0 * x * x, front_to_back[c, b])
                    r = fmax(tx_power[c] + g - pl + shadow[u, c] + beam_fade[u, c, b], clip)
                    raw[u, c, b] = r
                    if init:
                        f = r
                    else:
                        f = keep * filt[u, c, b] + alpha * r
                    filt[u, c, b] = f
                    if f > best_f:
                        best_f = f
                    if r > best_r:
                        best_r = r
                cell_filt[u, c] = best_f
                cell_raw[u, c] = best_r
