"""Compiled inner loops for transfer-matrix products along a rotation orbit.

Every loop here works one phase at a time, so results for a phase do not
depend on which other phases share the call.  That is what makes block-wise
threading bit-reproducible.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# kernel status codes
OK = 0
NEAR_SINGULAR = 1
DEGENERATE = 2


@njit(cache=True, nogil=True, error_model="numpy")
def series_value(const, cos_c, sin_c, x):
    v = const
    for k in range(cos_c.shape[0]):
        v += cos_c[k] * math.cos(TWO_PI * (k + 1) * x)
    for k in range(sin_c.shape[0]):
        v += sin_c[k] * math.sin(TWO_PI * (k + 1) * x)
    return v


@njit(cache=True, nogil=True, error_model="numpy")
def opnorm(m11, m12, m21, m22):
    f = m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22
    det = m11 * m22 - m12 * m21
    disc = f * f - 4.0 * det * det
    if disc < 0.0:
        disc = 0.0
    return math.sqrt(0.5 * (f + math.sqrt(disc)))


@njit(cache=True, nogil=True, error_model="numpy")
def advance(x, omega):
    y = x + omega
    return y - math.floor(y)


@njit(cache=True, nogil=True, error_model="numpy")
def scalar_product(x, omega, a_c, a_cos, a_sin, b_c, b_cos, b_sin, energy, n, floor, divide_by_b):
    """Product of n one-step matrices starting at phase x.

    divide_by_b=False multiplies the B factors (T_n), True multiplies the
    A = B / b(x+omega) factors (M_n).

    Returns (status, step, u11, u12, u21, u22, log_scale, log_abs_det, det_sign,
    half_log_bb_sum, log_b_tail_sum, bad_value).  log_b_tail_sum is the sum of
    log|b(x+k omega)| for k = 1..n.
    """
    x = x - math.floor(x)
    b_cur = series_value(b_c, b_cos, b_sin, x)
    u11, u12, u21, u22 = 1.0, 0.0, 0.0, 1.0
    log_scale = 0.0
    log_abs_det = 0.0
    det_sign = 1.0
    half_bb = 0.0
    tail = 0.0
    if abs(b_cur) < floor:
        return NEAR_SINGULAR, 0, u11, u12, u21, u22, log_scale, log_abs_det, det_sign, half_bb, tail, b_cur
    for k in range(n):
        a_k = series_value(a_c, a_cos, a_sin, x)
        x_next = advance(x, omega)
        b_next = series_value(b_c, b_cos, b_sin, x_next)
        if abs(b_next) < floor:
            return (NEAR_SINGULAR, k + 1, u11, u12, u21, u22, log_scale, log_abs_det,
                    det_sign, half_bb, tail, b_next)
        f11 = a_k - energy
        f12 = -b_cur
        f21 = b_next
        if divide_by_b:
            f11 = f11 / b_next
            f12 = f12 / b_next
            f21 = 1.0
        f_det = -f12 * f21
        n11 = f11 * u11 + f12 * u21
        n12 = f11 * u12 + f12 * u22
        n21 = f21 * u11
        n22 = f21 * u12
        s = opnorm(n11, n12, n21, n22)
        if s == 0.0:
            return (DEGENERATE, k, u11, u12, u21, u22, log_scale, log_abs_det,
                    det_sign, half_bb, tail, 0.0)
        u11 = n11 / s
        u12 = n12 / s
        u21 = n21 / s
        u22 = n22 / s
        ls = math.log(s)
        log_scale += ls
        log_abs_det += math.log(abs(f_det)) - 2.0 * ls
        if f_det < 0.0:
            det_sign = -det_sign
        half_bb += 0.5 * (math.log(abs(b_cur)) + math.log(abs(b_next)))
        tail += math.log(abs(b_next))
        x = x_next
        b_cur = b_next
    return OK, n, u11, u12, u21, u22, log_scale, log_abs_det, det_sign, half_bb, tail, 0.0


@njit(cache=True, nogil=True, error_model="numpy")
def batch_log_norms(x0, omega, a_c, a_cos, a_sin, b_c, b_cos, b_sin, energies, checkpoints,
                    floor, out_log_t, out_half_bb, out_valid):
    """log||T_n(x, E)|| for every phase x in x0, energy E and checkpoint n.

    out_log_t has shape (C, E, P); out_half_bb (C, P) receives
    0.5 * sum_{k<n} log|b(x_k) b(x_{k+1})|; out_valid (C, P) is False where the
    orbit met |b| < floor at some index 0..n or the product collapsed.
    """
    n_phase = x0.shape[0]
    n_energy = energies.shape[0]
    n_check = checkpoints.shape[0]
    n_max = checkpoints[n_check - 1]
    u11 = np.empty(n_energy)
    u12 = np.empty(n_energy)
    u21 = np.empty(n_energy)
    u22 = np.empty(n_energy)
    logs = np.empty(n_energy)
    for p in range(n_phase):
        for e in range(n_energy):
            u11[e] = 1.0
            u12[e] = 0.0
            u21[e] = 0.0
            u22[e] = 1.0
            logs[e] = 0.0
        x = x0[p] - math.floor(x0[p])
        b_cur = series_value(b_c, b_cos, b_sin, x)
        ok = abs(b_cur) >= floor
        half_bb = 0.0
        ci = 0
        k = 0
        while ok and k < n_max:
            a_k = series_value(a_c, a_cos, a_sin, x)
            x_next = advance(x, omega)
            b_next = series_value(b_c, b_cos, b_sin, x_next)
            if abs(b_next) < floor:
                ok = False
                break
            for e in range(n_energy):
                d = a_k - energies[e]
                n11 = d * u11[e] - b_cur * u21[e]
                n12 = d * u12[e] - b_cur * u22[e]
                n21 = b_next * u11[e]
                n22 = b_next * u12[e]
                s = opnorm(n11, n12, n21, n22)
                if s == 0.0:
                    ok = False
                    s = 1.0
                u11[e] = n11 / s
                u12[e] = n12 / s
                u21[e] = n21 / s
                u22[e] = n22 / s
                logs[e] += math.log(s)
            if not ok:
                break
            half_bb += 0.5 * (math.log(abs(b_cur)) + math.log(abs(b_next)))
            x = x_next
            b_cur = b_next
            k += 1
            if k == checkpoints[ci]:
                for e in range(n_energy):
                    out_log_t[ci, e, p] = logs[e]
                out_half_bb[ci, p] = half_bb
                out_valid[ci, p] = True
                ci += 1
        while ci < n_check:
            for e in range(n_energy):
                out_log_t[ci, e, p] = np.nan
            out_half_bb[ci, p] = np.nan
            out_valid[ci, p] = False
            ci += 1


@njit(cache=True, nogil=True, error_model="numpy")
def batch_log_b_sums(x0, omega, b_c, b_cos, b_sin, checkpoints, floor, out_half_bb, out_valid):
    """Only the 0.5 * sum log|b(x_k) b(x_{k+1})| part of batch_log_norms."""
    n_phase = x0.shape[0]
    n_check = checkpoints.shape[0]
    n_max = checkpoints[n_check - 1]
    for p in range(n_phase):
        x = x0[p] - math.floor(x0[p])
        b_cur = series_value(b_c, b_cos, b_sin, x)
        ok = abs(b_cur) >= floor
        half_bb = 0.0
        ci = 0
        k = 0
        while ok and k < n_max:
            x_next = advance(x, omega)
            b_next = series_value(b_c, b_cos, b_sin, x_next)
            if abs(b_next) < floor:
                ok = False
                break
            half_bb += 0.5 * (math.log(abs(b_cur)) + math.log(abs(b_next)))
            x = x_next
            b_cur = b_next
            k += 1
            if k == checkpoints[ci]:
                out_half_bb[ci, p] = half_bb
                out_valid[ci, p] = True
                ci += 1
        while ci < n_check:
            out_half_bb[ci, p] = np.nan
            out_valid[ci, p] = False
            ci += 1
