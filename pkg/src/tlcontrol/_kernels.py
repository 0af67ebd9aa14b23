"""Compiled per-particle integration loops.

Each kernel advances one particle through its pre-generated noise row and
fills per-particle accumulator slots. Keeping the noise generation outside
(one PCG64DXSM stream per particle, spawned from the run seed) and reducing
the per-particle slots in fixed index order makes every statistic
bit-identical regardless of how many worker threads execute the kernels.
"""

from __future__ import annotations

import numba
import numpy as np

# accumulator slot layout, shared by driver and kernels
TLC_ACC = {"sum_x": 0, "sum_x2": 1, "n_trans": 2, "n_hist": 3, "n_oor": 4}
LIN_ACC = {
    "sum_x": 0,
    "sum_x2": 1,
    "sum_z": 2,
    "sum_z2": 3,
    "sum_xz": 4,
    "sum_abs_u": 5,
    "sum_u2": 6,
    "n_hist": 7,
    "n_oor": 8,
    "diverged": 9,
}


@numba.njit(cache=True, nogil=True)
def run_tlc_particle(noise, sig, drift_dt, d, n_warmup, stride, hist_lo, inv_bin, counts, acc):
    """Integrate one switched-rule particle.

    noise:    float32 standard normals, one per step
    sig:      sqrt(c2*dt)
    drift_dt: per-level position increment, indexed by level+1
              (level -1 -> +alpha*h*dt, level 0 -> 0, level +1 -> -alpha*h*dt)
    counts:   int64[3, nbins] histogram, rows ordered (-h, 0, +h)
    acc:      float64[5] output slots per TLC_ACC
    """
    x = 0.0
    level = 0
    sum_x = 0.0
    sum_x2 = 0.0
    n_trans = 0
    n_hist = 0
    n_oor = 0
    tick = stride
    nbins = counts.shape[1]
    for k in range(noise.shape[0]):
        x += drift_dt[level + 1] + sig * noise[k]
        if level == 0:
            if x >= d:
                level = 1
                if k >= n_warmup:
                    n_trans += 1
            elif x <= -d:
                level = -1
                if k >= n_warmup:
                    n_trans += 1
        elif level == 1:
            if x <= 0.0:
                level = 0
                if k >= n_warmup:
                    n_trans += 1
        else:
            if x >= 0.0:
                level = 0
                if k >= n_warmup:
                    n_trans += 1
        if k >= n_warmup:
            sum_x += x
            sum_x2 += x * x
            tick -= 1
            if tick == 0:
                tick = stride
                t = (x - hist_lo) * inv_bin
                # guard the sign before truncating: int() rounds toward zero,
                # which would fold the band just below hist_lo into bin 0
                if 0.0 <= t < nbins:
                    counts[level + 1, int(t)] += 1
                    n_hist += 1
                else:
                    n_oor += 1
    acc[0] = sum_x
    acc[1] = sum_x2
    acc[2] = n_trans
    acc[3] = n_hist
    acc[4] = n_oor


@numba.njit(cache=True, nogil=True)
def run_linear_particle(
    noise, sig, alpha_dt, k1, k2, dt, n_warmup, stride, hist_lo, inv_bin, big, counts, acc
):
    """Integrate one linear-rule particle from the origin.

    Euler update with the control evaluated at the pre-update state:
    u_n = -k1*x_n - k2*z_n; x_{n+1} = x_n + alpha*z_n*dt + sig*N;
    z_{n+1} = z_n + u_n*dt. Sets the diverged flag and stops when |x|
    exceeds big.

    counts: int64[1, nbins]; acc: float64[10] per LIN_ACC.
    """
    x = 0.0
    z = 0.0
    sum_x = 0.0
    sum_x2 = 0.0
    sum_z = 0.0
    sum_z2 = 0.0
    sum_xz = 0.0
    sum_abs_u = 0.0
    sum_u2 = 0.0
    n_hist = 0
    n_oor = 0
    tick = stride
    nbins = counts.shape[1]
    for k in range(noise.shape[0]):
        u = -k1 * x - k2 * z
        x_new = x + alpha_dt * z + sig * noise[k]
        z = z + u * dt
        x = x_new
        if abs(x) > big:
            acc[9] = 1.0
            break
        if k >= n_warmup:
            sum_x += x
            sum_x2 += x * x
            sum_z += z
            sum_z2 += z * z
            sum_xz += x * z
            sum_abs_u += abs(u)
            sum_u2 += u * u
            tick -= 1
            if tick == 0:
                tick = stride
                t = (x - hist_lo) * inv_bin
                if 0.0 <= t < nbins:
                    counts[0, int(t)] += 1
                    n_hist += 1
                else:
                    n_oor += 1
    acc[0] = sum_x
    acc[1] = sum_x2
    acc[2] = sum_z
    acc[3] = sum_z2
    acc[4] = sum_xz
    acc[5] = sum_abs_u
    acc[6] = sum_u2
    acc[7] = n_hist
    acc[8] = n_oor
