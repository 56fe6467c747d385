"""Pure numpy reference versions of the hot loops."""

import numpy as np


def stencil_apply(kin, nbr, vals, psi):
    """``out[i] = kin[i] psi[i] + sum_c vals[c] psi[nbr[c, i]]`` skipping ``nbr == -1``.

    ``psi`` has shape ``(N, B)``; ``nbr`` has shape ``(K, N)``.
    """
    out = kin[:, None] * psi
    for c in range(nbr.shape[0]):
        j = nbr[c]
        ok = j >= 0
        out[ok] += vals[c] * psi[j[ok]]
    return out


def trig_sum(freqs, amps, points, chunk=4096):
    """``out[p, s] = sum_t amps[t, s] exp(i freqs[t] . points[p])``."""
    out = np.empty((points.shape[0], amps.shape[1]), dtype=complex)
    for start in range(0, points.shape[0], chunk):
        ph = points[start:start + chunk] @ freqs.T
        out[start:start + chunk] = np.exp(1j * ph) @ amps
    return out
