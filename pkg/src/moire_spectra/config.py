"""Run configuration: one YAML file drives every CLI subcommand."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .geometry import KPoint, Lattice, ProductCell
from .operator import BasisSpec
from .potential import FourierPotential, from_samples, load_samples
from .sweep import DEFAULT_LADDER, SolverOptions


class ConfigError(ValueError):
    pass


def _hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _matrix(value, name) -> np.ndarray:
    try:
        a = np.atleast_2d(np.asarray(value, dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a number or a square matrix") from exc
    if a.shape[0] != a.shape[1]:
        raise ConfigError(f"{name} must be square, got shape {a.shape}")
    return a


def _kpoint(block, name) -> KPoint:
    try:
        return KPoint.wrapped(block.get("k", 0.5), block.get("kp", 0.5))
    except ValueError as exc:
        raise ConfigError(f"bad k-point in {name}: {exc}") from exc


@dataclass
class RunConfig:
    raw: dict
    text: str
    base_dir: Path
    cell: ProductCell
    V1: FourierPotential
    V2: FourierPotential
    basis: BasisSpec
    solver: SolverOptions
    m: int
    kgrid: int
    kgrid_shift: float
    delta: float
    ladder: tuple
    continuation_k: KPoint
    residual: dict
    reference: dict
    compare: dict
    incommensurability: dict
    output: dict
    reference_potentials: tuple | None = None
    hashes: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return self.hashes["config"]


def _potential(block, lattice: Lattice, name: str, base_dir: Path) -> FourierPotential:
    if block is None:
        return FourierPotential.zero(lattice)
    if not isinstance(block, dict):
        raise ConfigError(f"{name} must be a mapping")
    try:
        if "coefficients" in block:
            return FourierPotential.from_list(lattice, block["coefficients"] or [])
        if "samples" in block:
            path = Path(block["samples"])
            if not path.is_absolute():
                path = base_dir / path
            return from_samples(lattice, load_samples(path), block.get("radius"))
        if "constant" in block:
            return FourierPotential.constant(lattice, float(block["constant"]))
    except (OSError, ValueError) as exc:
        raise ConfigError(f"bad potential {name}: {exc}") from exc
    raise ConfigError(f"{name} needs 'coefficients', 'samples' or 'constant'")


def _potentials(block, cell, base_dir, where):
    block = block or {}
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a mapping")
    return (_potential(block.get("V1"), cell.lat1, f"{where}.V1", base_dir),
            _potential(block.get("V2"), cell.lat2, f"{where}.V2", base_dir))


def potential_fingerprint(V1: FourierPotential, V2: FourierPotential) -> str:
    return _hash({"V1": V1.as_rows(), "V2": V2.as_rows()})


def parse_config(text: str, base_dir: Path | str = ".") -> RunConfig:
    base_dir = Path(base_dir)
    try:
        raw = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping of blocks")

    lat = raw.get("lattice") or {}
    try:
        cell = ProductCell(Lattice(_matrix(lat.get("A1", 1.0), "lattice.A1")),
                           Lattice(_matrix(lat.get("A2", 1.0), "lattice.A2")))
    except ValueError as exc:
        raise ConfigError(f"bad lattice: {exc}") from exc

    V1, V2 = _potentials(raw.get("potentials"), cell, base_dir, "potentials")

    b = raw.get("basis") or {}
    try:
        basis = BasisSpec(mode=b.get("mode", "box"), radius1=int(b.get("radius1", 8)),
                          radius2=int(b.get("radius2", 8)),
                          ecut=None if b.get("ecut") is None else float(b["ecut"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad basis block: {exc}") from exc

    s = raw.get("solver") or {}
    try:
        solver = SolverOptions(tol=float(s.get("tol", 1e-8)), max_iter=int(s.get("max_iter", 500)),
                               path=str(s.get("path", "auto")),
                               dense_cap=int(s.get("dense_cap", 4096)),
                               dense_threshold=int(s.get("dense_threshold", 1024)),
                               seed=int(s.get("seed", 0)))
        m = int(s.get("m", 8))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad solver block: {exc}") from exc
    if m < 1 or solver.tol <= 0 or solver.max_iter < 1:
        raise ConfigError("solver needs m >= 1, tol > 0, max_iter >= 1")
    if solver.path not in ("auto", "dense", "iterative"):
        raise ConfigError(f"unknown solver path {solver.path!r}")

    sw = raw.get("sweep") or {}
    try:
        kg = int(sw.get("kgrid", 8))
        kshift = float(sw.get("kgrid_shift", 0.5))
        delta = float(sw.get("delta", 1.0))
        ladder = tuple(float(x) for x in sw.get("ladder", DEFAULT_LADDER))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad sweep block: {exc}") from exc
    if kg < 1:
        raise ConfigError("sweep.kgrid must be >= 1")
    if not delta > 0:
        raise ConfigError("sweep.delta must be > 0")
    if not 0 <= kshift < 1:
        raise ConfigError("sweep.kgrid_shift must lie in [0, 1)")
    if len(ladder) < 3 or any(x <= 0 for x in ladder) or any(
            a <= b for a, b in zip(ladder, ladder[1:])):
        raise ConfigError("sweep.ladder must be strictly descending, positive, with >= 3 rungs")

    cont = _kpoint(raw.get("continuation") or {}, "continuation")

    res = dict(raw.get("residual") or {})
    res_k = _kpoint(res, "residual")
    residual = {
        "kpoint": res_k,
        "band": int(res.get("band", 1)),
        "delta": float(res.get("delta", 0.05)),
        "R": [float(x) for x in res.get("R", [50.0, 400.0])],
        "quad_points_per_unit": res.get("quad_points_per_unit"),
    }
    if residual["band"] < 1 or residual["band"] > m:
        raise ConfigError("residual.band must be between 1 and solver.m")
    if not residual["delta"] > 0 or any(r <= 0 for r in residual["R"]):
        raise ConfigError("residual.delta and residual.R must be positive")

    ref = dict(raw.get("reference") or {})
    try:
        reference = {
            "L": float(ref.get("L", 500.0)),
            "h": float(ref.get("h", 0.01)),
            "boundary": str(ref.get("boundary", "dirichlet")).lower(),
            "m": int(ref.get("m", 600)),
            "window": [float(x) for x in ref.get("window", [-0.5, 3.0])],
            "window_relative": bool(ref.get("window_relative", True)),
        }
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad reference block: {exc}") from exc
    if reference["boundary"] not in ("dirichlet", "periodic"):
        raise ConfigError("reference.boundary must be dirichlet or periodic")
    if len(reference["window"]) != 2 or reference["window"][0] > reference["window"][1]:
        raise ConfigError("reference.window must be [lo, hi] with lo <= hi")
    ref_pots = None
    if "potentials" in ref:
        ref_pots = _potentials(ref["potentials"], cell, base_dir, "reference.potentials")

    cmp_ = dict(raw.get("compare") or {})
    compare = {"tolerance": float(cmp_.get("tolerance", 5e-2)),
               "allow_mismatch": bool(cmp_.get("allow_mismatch", False))}

    inc = dict(raw.get("incommensurability") or {})
    incomm = {"qmax": int(inc.get("qmax", 100)), "tol": float(inc.get("tol", 1e-9))}
    if incomm["qmax"] < 1:
        raise ConfigError("incommensurability.qmax must be >= 1")

    out = dict(raw.get("output") or {})
    output = {"directory": str(out.get("directory", "out"))}

    hashes = {
        # the output block does not change results, so it is left out
        "config": _hash({k: v for k, v in raw.items() if k != "output"}),
        "lattice": _hash({"A1": cell.lat1.basis.tolist(), "A2": cell.lat2.basis.tolist()}),
        "potential": potential_fingerprint(V1, V2),
    }
    if "seed" not in s:
        solver = replace(solver, seed=int(hashes["config"][:8], 16))
    return RunConfig(raw, text, base_dir, cell, V1, V2, basis, solver, m, kg, kshift, delta, ladder,
                     cont, residual, reference, compare, incomm, output, ref_pots, hashes)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, path.parent)
