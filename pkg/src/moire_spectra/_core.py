"""Select the compiled kernels when available, otherwise the numpy fallback.

Set ``MOIRE_SPECTRA_PURE_PYTHON=1`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

if _compiled is not None and os.environ.get("MOIRE_SPECTRA_PURE_PYTHON") != "1":
    BACKEND, _impl = "cython", _compiled
else:
    BACKEND, _impl = "python", _kernels_py


def stencil_apply(kin, nbr, vals, psi, backend=None):
    impl = _pick(backend)
    psi = np.ascontiguousarray(psi, dtype=complex)
    return impl.stencil_apply(np.ascontiguousarray(kin, dtype=float),
                              np.ascontiguousarray(nbr, dtype=np.int64),
                              np.ascontiguousarray(vals, dtype=complex), psi)


def trig_sum(freqs, amps, points, backend=None):
    impl = _pick(backend)
    return impl.trig_sum(np.ascontiguousarray(freqs, dtype=float),
                         np.ascontiguousarray(amps, dtype=complex),
                         np.ascontiguousarray(points, dtype=float))


def _pick(backend):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {backend!r}")
