"""Hot inner loops, each in a numba and a pure-numpy flavour.

Every public name at the bottom resolves to one flavour according to
``levytrap._accel.BACKEND``; both flavours stay importable so tests and the
benchmark can compare them directly.
"""
import numpy as np
from scipy.signal import fftconvolve

from ._accel import BACKEND, njit


# -- symmetric Toeplitz products: out_i = sum_j w[|i-j|] f_j -----------------

@njit(cache=True)
def _toeplitz_matvec_numba(w, f):
    n = f.size
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            k = i - j
            if k < 0:
                k = -k
            acc += w[k] * f[j]
        out[i] = acc
    return out


def _toeplitz_matvec_numpy(w, f, block=512):
    n = f.size
    out = np.empty(n)
    cols = np.arange(n)
    for start in range(0, n, block):
        rows = np.arange(start, min(start + block, n))
        out[rows] = w[np.abs(rows[:, None] - cols[None, :])] @ f
    return out


def toeplitz_matvec_fft(w, f):
    """Same product through zero-padded FFT convolution (exact linear, no wrap)."""
    n = f.size
    kernel = np.concatenate((w[n - 1:0:-1], w[:n]))
    return fftconvolve(f, kernel, mode="same")


# -- explicit Brownian transport: rho <- N(rho - dt * s * H(rho / s)) ----------

@njit(cache=True)
def _brownian_transport_numba(rho, s, v, shift, h, dt, nsteps, active, neg_tol):
    n = rho.size
    psi = np.zeros(n)
    new = np.empty(n)
    inv_h2 = 1.0 / (h * h)
    flagged = 0
    clipped_mass = 0.0
    for _ in range(nsteps):
        peak = 0.0
        for i in range(n):
            if active[i]:
                psi[i] = rho[i] / s[i]
            else:
                psi[i] = 0.0
            if rho[i] > peak:
                peak = rho[i]
        total = 0.0
        for i in range(n):
            if active[i]:
                left = psi[i - 1] if i > 0 else 0.0
                right = psi[i + 1] if i < n - 1 else 0.0
                hpsi = -(left - 2.0 * psi[i] + right) * inv_h2 + (v[i] - shift) * psi[i]
                val = rho[i] - dt * s[i] * hpsi
            else:
                val = rho[i]
            if val < 0.0:
                if val < -neg_tol * peak:
                    flagged += 1
                clipped_mass -= val * h
                val = 0.0
            new[i] = val
            total += val
        total = h * (total - 0.5 * (new[0] + new[n - 1]))
        for i in range(n):
            rho[i] = new[i] / total
    return rho, flagged, clipped_mass


def _brownian_transport_numpy(rho, s, v, shift, h, dt, nsteps, active, neg_tol):
    rho = rho.copy()
    psi = np.zeros_like(rho)
    lap = np.empty_like(rho)
    coef = np.where(active, s, 0.0)
    pot = v - shift
    flagged = 0
    clipped_mass = 0.0
    for _ in range(nsteps):
        peak = rho.max()
        np.divide(rho, s, out=psi, where=active)
        psi[~active] = 0.0
        lap[1:-1] = psi[2:] - 2.0 * psi[1:-1] + psi[:-2]
        lap[0] = psi[1] - 2.0 * psi[0]
        lap[-1] = psi[-2] - 2.0 * psi[-1]
        new = rho - dt * coef * (pot * psi - lap / (h * h))
        neg = new < 0.0
        if neg.any():
            flagged += int(np.count_nonzero(new < -neg_tol * peak))
            clipped_mass -= h * new[neg].sum()
            new[neg] = 0.0
        rho = new / (h * (new.sum() - 0.5 * (new[0] + new[-1])))
    return rho, flagged, clipped_mass


if BACKEND == "numba":
    toeplitz_matvec_direct = _toeplitz_matvec_numba
    _brownian_transport = _brownian_transport_numba
else:
    toeplitz_matvec_direct = _toeplitz_matvec_numpy
    _brownian_transport = _brownian_transport_numpy


def brownian_transport(rho, s, v, shift, h, dt, nsteps, active, neg_tol=1e-8):
    """Advance ``nsteps`` explicit transport steps; returns (rho, flagged, clipped_mass)."""
    rho = np.array(rho, dtype=np.float64)
    out = _brownian_transport(rho, np.asarray(s, np.float64), np.asarray(v, np.float64),
                              float(shift), float(h), float(dt), int(nsteps),
                              np.asarray(active, np.bool_), float(neg_tol))
    return out[0], int(out[1]), float(out[2])
