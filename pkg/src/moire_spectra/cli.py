"""Command-line front end.

Usage::

    moire-spectra SUBCOMMAND --config run.yaml [--out DIR] [--workers N] [--verbose]

Subcommands: ``check``, ``bands``, ``continuation``, ``spectrum``, ``residual``,
``reference``, ``compare``.  Every artifact starts with a comment header that
carries the config hash, the lattice and potential hashes and the full config
text.  Exit codes: 0 success, 2 config error, 3 solver failure, 4 comparison
above tolerance.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bloch import QuadratureResolutionError, ball_residual, bloch_solution, exact_residual, \
    residual_function
from .config import ConfigError, RunConfig, load_config, potential_fingerprint
from .eigensolve import EigensolverError
from .geometry import NoWitnessUpTo, incommensurability_check, kgrid
from .operator import BasisTooLargeError, BlochHamiltonian
from .reference import (MemoryCapError, RealSpaceProblem, WindowError, covering_distance,
                        hausdorff_window, realspace_spectrum)
from .sweep import (SweepError, band_structure, continuation_sweep, delta_continuation,
                    spectrum_at_zero, spectrum_union)

log = logging.getLogger("moire_spectra")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_COMPARE = 4


class CompareFailure(RuntimeError):
    pass


def _num(x) -> str:
    return repr(float(x))


def _row(values) -> str:
    return ", ".join(_num(v) for v in values)


class Writer:
    """Writes artifacts into one directory, each stamped with the run's provenance."""

    def __init__(self, cfg: RunConfig, out_dir: Path, potential_hash: str | None = None):
        self.cfg = cfg
        self.dir = Path(out_dir)
        self.potential_hash = potential_hash or cfg.hashes["potential"]
        self.written: list[Path] = []

    def _stamp(self, artifact: str) -> dict:
        return {"artifact": artifact, "version": __version__,
                "config_hash": self.cfg.hashes["config"],
                "lattice_hash": self.cfg.hashes["lattice"],
                "potential_hash": self.potential_hash}

    def _header(self, artifact: str) -> list[str]:
        lines = [f"# moire-spectra {__version__}"]
        lines += [f"# {k}: {v}" for k, v in self._stamp(artifact).items() if k != "version"]
        lines.append("# config:")
        lines += [f"#   {line}".rstrip() for line in self.cfg.text.splitlines()]
        return lines

    def _write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        path.write_text(text)
        self.written.append(path)
        log.info("wrote %s", path)
        return path

    def table(self, name: str, columns: list[str], rows, trailer: list[str] = ()) -> Path:
        lines = self._header(name) + ["# " + ", ".join(columns)]
        lines += [_row(r) for r in rows]
        lines += list(trailer)
        return self._write(name, "\n".join(lines) + "\n")

    def series(self, name: str, blocks) -> Path:
        """Gnuplot data: two columns per line, one blank-line-separated block per curve."""
        lines = self._header(name)
        for label, xs, ys in blocks:
            lines.append(f"# {label}")
            lines += [f"{_num(x)} {_num(y)}" for x, y in zip(xs, ys)]
            lines += ["", ""]
        return self._write(name, "\n".join(lines) + "\n")

    def report(self, name: str, body: dict) -> Path:
        doc = {**self._stamp(name), **body, "config": self.cfg.text}
        return self._write(name, yaml.safe_dump(doc, sort_keys=False, default_flow_style=None))


def _kpoint_columns(d: int) -> list[str]:
    return [f"k_frac_{i + 1}" for i in range(d)] + [f"kp_frac_{i + 1}" for i in range(d)]


def _band_columns(m: int) -> list[str]:
    return [f"band_{j + 1}" for j in range(m)]


def _band_rows(kpoints, bands):
    return [[i, *kp.k, *kp.kp, *row] for i, (kp, row) in enumerate(zip(kpoints, bands))]


def _write_spectrum(w: Writer, name: str, spec):
    w.table(name, ["lo", "hi"], spec.intervals)


# subcommands ---------------------------------------------------------------

def cmd_check(cfg: RunConfig, w: Writer, workers: int) -> int:
    verdict = incommensurability_check(cfg.cell.lat1, cfg.cell.lat2, **cfg.incommensurability)
    if isinstance(verdict, NoWitnessUpTo):
        text = f"NoWitnessUpTo({verdict.qmax})"
    else:
        text = f"Commensurate(m={list(verdict.m)}, n={list(verdict.n)})"
    kp = cfg.continuation_k
    basis = cfg.basis.build(cfg.cell, kp, cfg.delta)
    w.report("check.yaml", {"verdict": text, "dimension": cfg.cell.dim,
                            "basis_size_at_continuation_k": basis.size})
    print(text)
    return EXIT_OK


def cmd_bands(cfg: RunConfig, w: Writer, workers: int) -> int:
    kps = kgrid(cfg.cell, cfg.kgrid, cfg.kgrid_shift)
    bs = band_structure(cfg.cell, cfg.V1, cfg.V2, cfg.delta, kps, cfg.m, cfg.basis,
                        cfg.solver, workers)
    d = cfg.cell.dim
    w.table("bands.csv", ["k_index", *_kpoint_columns(d), *_band_columns(cfg.m)],
            _band_rows(kps, bs.bands))
    w.series("bands.dat", [(f"band_{j + 1}: k_index value", range(len(kps)), bs.bands[:, j])
                           for j in range(cfg.m)])
    _write_spectrum(w, "bands_spectrum.csv", spectrum_union(bs))
    return EXIT_OK


def _continuation_outputs(w: Writer, cfg: RunConfig, table):
    m = cfg.m
    rows = [[d, *v] for d, v in zip(table.deltas, table.values)]
    w.table("continuation.csv", ["delta", *_band_columns(m)], rows,
            trailer=["# extrapolated, " + _row(table.extrapolated)])
    w.series("continuation.dat", [(f"band_{j + 1}: delta value",
                                   [*table.deltas, 0.0],
                                   [*table.values[:, j], table.extrapolated[j]])
                                  for j in range(m)])
    w.report("continuation_report.yaml", {
        "k_frac": table.kpoint.k.tolist(),
        "kp_frac": table.kpoint.kp.tolist(),
        "deltas": [float(x) for x in table.deltas],
        "extrapolated": [float(x) for x in table.extrapolated],
        "slopes": [float(x) for x in table.slopes],
        "fit_residuals": [float(x) for x in table.fit_residuals],
        "possible_crossings": [list(c) for c in table.crossings],
        "failures": {float(k): v for k, v in table.failures.items()},
    })


def cmd_continuation(cfg: RunConfig, w: Writer, workers: int) -> int:
    table = delta_continuation(cfg.cell, cfg.V1, cfg.V2, cfg.continuation_k, cfg.ladder, cfg.m,
                               cfg.basis, cfg.solver, k_index=0, workers=workers)
    _continuation_outputs(w, cfg, table)
    if table.failures:
        log.error("solver failed on %d rung(s)", len(table.failures))
        return EXIT_SOLVER
    return EXIT_OK


def _spectrum(cfg: RunConfig, workers: int):
    kps = kgrid(cfg.cell, cfg.kgrid, cfg.kgrid_shift)
    tables = continuation_sweep(cfg.cell, cfg.V1, cfg.V2, kps, cfg.ladder, cfg.m, cfg.basis,
                                cfg.solver, workers)
    return kps, tables, spectrum_at_zero(cfg.cell, cfg.V1, cfg.V2, kps, tables=tables)


def cmd_spectrum(cfg: RunConfig, w: Writer, workers: int) -> int:
    kps, tables, spec = _spectrum(cfg, workers)
    d = cfg.cell.dim
    bands = np.array([t.extrapolated for t in tables])
    w.table("spectrum_bands.csv", ["k_index", *_kpoint_columns(d), *_band_columns(cfg.m)],
            _band_rows(kps, bands))
    _write_spectrum(w, "spectrum.csv", spec)
    w.series("spectrum.dat", [(f"interval {i + 1}: energy height", [lo, hi], [1.0, 1.0])
                              for i, (lo, hi) in enumerate(spec.intervals)])
    return EXIT_OK


def cmd_residual(cfg: RunConfig, w: Writer, workers: int) -> int:
    r = cfg.residual
    kp = r["kpoint"]
    H = BlochHamiltonian(cfg.basis.build(cfg.cell, kp, r["delta"]), kp, r["delta"], cfg.V1, cfg.V2)
    result = cfg.solver.solve(H, r["band"], 0, 0)
    sol = bloch_solution(H, result, r["band"] - 1)
    rep = exact_residual(sol)
    ball = [ball_residual(sol, R, r["quad_points_per_unit"]) for R in r["R"]]
    u, res, _ = residual_function(sol)
    d = cfg.cell.dim
    w.report("residual_report.yaml", {
        "k_frac": kp.k.tolist(), "kp_frac": kp.kp.tolist(), "band": r["band"],
        "delta": float(rep.delta), "lambda": float(rep.lam),
        "relative_ms_residual": float(rep.relative_ms_residual),
        "bound": float(rep.bound), "exact": bool(rep.exact),
        "truncation_residual": float(rep.truncation_residual),
        "fiber_residual": float(sol.fiber_residual()),
        "ball_residuals": [{"R": float(R), "value": float(v)} for R, v in zip(r["R"], ball)],
    })
    w.series("residual.dat", [("ball residual: R value", r["R"], ball)])
    cols = [f"omega_{i + 1}" for i in range(d)] + ["u_re", "u_im", "res_re", "res_im"]
    w.table("residual_terms.csv", cols,
            [[*f, a.real, a.imag, b.real, b.imag] for f, a, b in zip(u.freqs, u.amps, res.amps)])
    return EXIT_OK


def _reference_potentials(cfg: RunConfig):
    return cfg.reference_potentials or (cfg.V1, cfg.V2)


def _reference(cfg: RunConfig) -> np.ndarray:
    ref = cfg.reference
    V1, V2 = _reference_potentials(cfg)
    p = RealSpaceProblem(V1, V2, ref["L"], ref["h"], ref["boundary"])
    return realspace_spectrum(p, ref["m"])


def cmd_reference(cfg: RunConfig, w: Writer, workers: int) -> int:
    vals = _reference(cfg)
    w.table("reference.csv", ["eigenvalue"], [[v] for v in vals])
    w.series("reference.dat", [("eigenvalues: index value", range(1, len(vals) + 1), vals)])
    return EXIT_OK


def read_artifact(path: Path) -> tuple[dict, np.ndarray]:
    """Header stamps and numeric rows of a table artifact."""
    stamps, rows = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# ") and ": " in line and not line.startswith("#   "):
            key, _, val = line[2:].partition(": ")
            stamps.setdefault(key.strip(), val.strip())
        elif line and not line.startswith("#"):
            rows.append([float(x) for x in line.split(",")])
    return stamps, np.array(rows, dtype=float)


def _artifact(cfg, w, name, produce):
    """Reuse ``name`` from the output directory if this config wrote it, else produce it."""
    path = w.dir / name
    if path.exists():
        stamps, rows = read_artifact(path)
        if stamps.get("config_hash") == cfg.hashes["config"]:
            log.info("reusing %s", path)
            return stamps, rows
    produce()
    return read_artifact(path)


def cmd_compare(cfg: RunConfig, w: Writer, workers: int) -> int:
    spec_stamps, intervals = _artifact(cfg, w, "spectrum.csv",
                                       lambda: cmd_spectrum(cfg, w, workers))
    ref_hash = potential_fingerprint(*_reference_potentials(cfg))
    ref_writer = Writer(cfg, w.dir, ref_hash)
    ref_stamps, ref_rows = _artifact(cfg, w, "reference.csv",
                                     lambda: cmd_reference(cfg, ref_writer, workers))
    mismatch = [k for k in ("lattice_hash", "potential_hash")
                if spec_stamps.get(k) != ref_stamps.get(k)]
    if mismatch and not cfg.compare["allow_mismatch"]:
        raise ConfigError(f"refusing to compare artifacts with different {', '.join(mismatch)}")
    ref_vals = ref_rows.ravel()
    lo, hi = cfg.reference["window"]
    if cfg.reference["window_relative"]:
        lo, hi = ref_vals.min() + lo, ref_vals.min() + hi
    dist = hausdorff_window(intervals.reshape(-1, 2), ref_vals, (lo, hi))
    cover = covering_distance(ref_vals, intervals.reshape(-1, 2), (lo, hi))
    tol = cfg.compare["tolerance"]
    passed = dist <= tol
    w.report("compare_report.yaml", {
        "window": [float(lo), float(hi)],
        "hausdorff_window": float(dist),
        "covering_distance": float(cover),
        "tolerance": float(tol),
        "tolerance_note": "engineering choice; the oracle carries O(1/L) + O(h^2) systematic error",
        "hash_mismatch": mismatch,
        "spectrum_potential_hash": spec_stamps.get("potential_hash"),
        "reference_potential_hash": ref_stamps.get("potential_hash"),
        "passed": bool(passed),
    })
    print(f"hausdorff_window = {dist:.6g} (tolerance {tol:g}): {'PASS' if passed else 'FAIL'}")
    if not passed:
        raise CompareFailure(f"distance {dist:.6g} above tolerance {tol:g}")
    return EXIT_OK


COMMANDS = {
    "check": (cmd_check, "validate the config and report the incommensurability verdict"),
    "bands": (cmd_bands, "band structure over the k-grid at the sweep delta"),
    "continuation": (cmd_continuation, "delta ladder and extrapolation at one fiber"),
    "spectrum": (cmd_spectrum, "extrapolated spectrum estimate over the k-grid"),
    "residual": (cmd_residual, "exact and ball residuals of one Bloch solution"),
    "reference": (cmd_reference, "finite-difference reference spectrum"),
    "compare": (cmd_compare, "windowed Hausdorff distance of spectrum vs reference"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="moire-spectra", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, type=Path, help="YAML run config")
        p.add_argument("--out", type=Path, default=None,
                       help="output directory (default: output.directory from the config)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="parallel fibers (default: available cores)")
        p.add_argument("--verbose", "-v", action="count", default=0)
    return parser


def run(command: str, config_path, out=None, workers: int | None = None) -> int:
    """Run one subcommand and map failures to exit codes."""
    func = COMMANDS[command][0]
    try:
        cfg = load_config(config_path)
        w = Writer(cfg, Path(out) if out is not None else Path(cfg.output["directory"]))
        if workers is not None and workers < 1:
            raise ConfigError("--workers must be >= 1")
        return func(cfg, w, workers or 1)
    except (CompareFailure, WindowError) as exc:
        log.error("comparison failed: %s", exc)
        return EXIT_COMPARE
    except (SweepError, EigensolverError, MemoryCapError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except (ConfigError, QuadratureResolutionError, BasisTooLargeError, ValueError) as exc:
        # remaining ValueErrors come from validating physical inputs
        log.error("config error: %s", exc)
        return EXIT_CONFIG

def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return run(args.command, args.config, args.out, args.workers)


if __name__ == "__main__":
    sys.exit(main())
