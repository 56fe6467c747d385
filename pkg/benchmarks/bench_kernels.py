"""Compare the compiled kernels with the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Inputs are the
golden-ratio benchmark fiber (stencil application) and its band-1 residual
evaluated on a ball (trigonometric sums).
"""

import argparse
import timeit

import numpy as np

from moire_spectra import _core
from moire_spectra.bloch import bloch_solution, residual_function
from moire_spectra.eigensolve import lowest_eigenpairs
from moire_spectra.geometry import KPoint, Lattice, ProductCell
from moire_spectra.operator import BlochHamiltonian, PlanewaveBasis
from moire_spectra.potential import FourierPotential

PHI = (1 + 5 ** 0.5) / 2


def _fiber(radius, delta=0.05):
    cell = ProductCell(Lattice([[1.0]]), Lattice([[PHI]]))
    V1 = FourierPotential.cosine(cell.lat1, 2.0, [1])
    V2 = FourierPotential.cosine(cell.lat2, 2.0, [1])
    return BlochHamiltonian(PlanewaveBasis.box(cell, radius, radius), KPoint([0.5], [0.5]), delta, V1, V2)


def _time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _core._compiled is None:
        print("compiled kernels not built; only the numpy fallback is available")
        return 1

    rows = []
    rng = np.random.default_rng(0)
    for radius, block in ((8, 10), (30, 10), (60, 10)):
        H = _fiber(radius)
        psi = rng.standard_normal((H.size, block)) + 1j * rng.standard_normal((H.size, block))
        args_ = (H.kinetic, H._nbr, H._values, psi)
        t = {b: _time(lambda b=b: _core.stencil_apply(*args_, backend=b), args.repeat)
             for b in ("python", "cython")}
        rows.append((f"stencil_apply N={H.size} B={block}", t["python"], t["cython"]))

    H = _fiber(8)
    sol = bloch_solution(H, lowest_eigenpairs(H, 1), 0)
    u, res, _ = residual_function(sol)
    amps = np.column_stack([u.amps, res.amps])
    for npts in (2_000, 20_000):
        pts = np.linspace(-50, 50, npts)[:, None]
        t = {b: _time(lambda b=b: _core.trig_sum(u.freqs, amps, pts, backend=b), args.repeat)
             for b in ("python", "cython")}
        rows.append((f"trig_sum K={len(u.freqs)} P={npts}", t["python"], t["cython"]))

    print(f"{'kernel':<34}{'numpy [ms]':>12}{'cython [ms]':>13}{'speedup':>9}")
    for name, tp, tc in rows:
        print(f"{name:<34}{1e3 * tp:>12.3f}{1e3 * tc:>13.3f}{tp / tc:>9.2f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
