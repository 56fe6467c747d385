"""Spectra and Bloch-type solutions of incommensurate bilayer Schrodinger operators."""

__version__ = "0.1.0"

from ._core import BACKEND
from .geometry import (Commensurate, KPoint, Lattice, NoWitnessUpTo, ProductCell,
                       ReciprocalLattice, incommensurability_check, kgrid, reciprocal, wrap_k)
from .potential import FourierPotential, PairPotential, evaluate, from_samples, pair_indexing
from .operator import (BasisSpec, BlochHamiltonian, PlanewaveBasis, apply, assemble_dense,
                       fiber_shift_equivalence, kinetic_diag, shifted_fiber_dense)
from .eigensolve import EigenResult, EigensolverError, lowest_eigenpairs
from .sweep import (DEFAULT_LADDER, BandStructure, ContinuationTable, SolverOptions,
                    SpectrumEstimate, band_structure, continuation_sweep, delta_continuation,
                    spectrum_at_zero, spectrum_union)
from .bloch import (BlochSolution, QuasiPeriodicFunction, ResidualReport, ball_residual,
                    bloch_solution, exact_residual, reconstruct_diagonal, solution_set_distance)
from .reference import RealSpaceProblem, hausdorff_window, realspace_spectrum
