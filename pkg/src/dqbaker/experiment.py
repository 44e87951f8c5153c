"""Run configuration, initial-state families, and artifact writers."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from . import __version__
from .channel import BathParams, DissipatorPlan, evolve
from .classical import is_primitive, orbit_from_symbols
from .errors import ConfigError
from .observables import default_observers
from .propagator import (
    ScarParams,
    build_baker,
    build_pom,
    build_scar,
    ehrenfest_steps,
    orbit_basis_state,
    quasienergy,
    select_eigenstate,
    spectral_decomposition,
)
from .torus import TorusSpace, coherent_grid, husimi, write_husimi_csv, write_husimi_pgm

KINDS = ("pom", "scar", "eigenstate", "position", "momentum")
QUASIENERGY_MODES = ("paper-literal", "bohr-sommerfeld")
SERIES_FILE = "series.csv"
MANIFEST_FILE = "manifest.json"
MANIFEST_VERSION = 1

# Named bath regimes, with temperatures on the index momentum scale.
REGIMES = {
    "strong-high": {"epsilon": 0.01, "temperature": 1100.0, "momentum_scale": "index"},
    "weak-high": {"epsilon": 0.001, "temperature": 1100.0, "momentum_scale": "index"},
    "strong-low": {"epsilon": 0.01, "temperature": 0.4, "momentum_scale": "index"},
    "weak-low": {"epsilon": 0.001, "temperature": 0.4, "momentum_scale": "index"},
}


@dataclass
class InitialState:
    kind: str = "scar"
    orbit: str = "0011"
    scar_T: Union[int, str] = "ehrenfest"
    quasienergy_mode: str = "paper-literal"
    m: int = 0
    point_index: int = 0


@dataclass
class HusimiConfig:
    enabled: bool = False
    grid: list = field(default_factory=lambda: [128, 128])
    steps: list = field(default_factory=lambda: list(range(8)))
    csv: bool = False


@dataclass
class RunConfig:
    N: int = 100
    epsilon: float = 0.01
    temperature: float = 1100.0
    momentum_scale: str = "index"
    steps: int = 10
    substeps: Union[int, str] = "auto"
    initial_state: InitialState = field(default_factory=InitialState)
    husimi: HusimiConfig = field(default_factory=HusimiConfig)
    output_dir: str = "out"
    seed: int = 0
    diagnostics: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def space(self) -> TorusSpace:
        return TorusSpace(self.N)

    @property
    def bath(self) -> BathParams:
        return BathParams(self.epsilon, self.temperature, self.space, self.momentum_scale)

    def plan(self) -> DissipatorPlan:
        if self.substeps == "auto":
            return DissipatorPlan.auto(self.bath)
        return DissipatorPlan(self.substeps)

    def scar_T(self) -> int:
        T = self.initial_state.scar_T
        return ehrenfest_steps(self.space) if T == "ehrenfest" else T


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return (isinstance(v, (int, float)) and not isinstance(v, bool)) and math.isfinite(v)


def _fill(cls, data: Any, path: str):
    if not isinstance(data, dict):
        raise ConfigError(path or "<root>", "expected an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path}{unknown[0]}" if not path else f"{path}.{unknown[0]}", "unknown key")
    return cls(**data)


def validate_config(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from parsed JSON, checking every field."""
    raw = dict(data)
    init = raw.pop("initial_state", {})
    hus = raw.pop("husimi", {})
    cfg = _fill(RunConfig, raw, "")
    cfg.initial_state = _fill(InitialState, init, "initial_state")
    cfg.husimi = _fill(HusimiConfig, hus, "husimi")

    if not _is_int(cfg.N) or cfg.N < 2 or cfg.N % 2:
        raise ConfigError("N", "must be an even integer >= 2")
    if not _is_real(cfg.epsilon) or cfg.epsilon < 0:
        raise ConfigError("epsilon", "must be a real number >= 0")
    if not _is_real(cfg.temperature) or cfg.temperature < 0:
        raise ConfigError("temperature", "must be a real number >= 0")
    if cfg.momentum_scale not in ("torus", "index"):
        raise ConfigError("momentum_scale", "must be 'torus' or 'index'")
    if not _is_int(cfg.steps) or cfg.steps < 0:
        raise ConfigError("steps", "must be an integer >= 0")
    if cfg.substeps != "auto" and (not _is_int(cfg.substeps) or cfg.substeps < 1):
        raise ConfigError("substeps", "must be 'auto' or a positive integer")
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        raise ConfigError("output_dir", "must be a non-empty path string")
    if not _is_int(cfg.seed):
        raise ConfigError("seed", "must be an integer")
    if not isinstance(cfg.diagnostics, bool):
        raise ConfigError("diagnostics", "must be a boolean")

    st = cfg.initial_state
    if st.kind not in KINDS:
        raise ConfigError("initial_state.kind", f"must be one of {', '.join(KINDS)}")
    if not isinstance(st.orbit, str) or not st.orbit or set(st.orbit) - {"0", "1"}:
        raise ConfigError("initial_state.orbit", "must be a binary symbol string")
    if not is_primitive(st.orbit):
        raise ConfigError("initial_state.orbit", "must be primitive (not a repeated word)")
    if st.scar_T != "ehrenfest" and (not _is_int(st.scar_T) or not 0 <= st.scar_T <= cfg.N):
        raise ConfigError("initial_state.scar_T", f"must be 'ehrenfest' or an integer in [0, {cfg.N}]")
    if st.quasienergy_mode not in QUASIENERGY_MODES:
        raise ConfigError("initial_state.quasienergy_mode", f"must be one of {', '.join(QUASIENERGY_MODES)}")
    if not _is_int(st.m) or not 0 <= st.m < len(st.orbit):
        raise ConfigError("initial_state.m", "must be an integer in [0, orbit period)")
    if not _is_int(st.point_index) or not 0 <= st.point_index < len(st.orbit):
        raise ConfigError("initial_state.point_index", "must be an integer in [0, orbit period)")

    h = cfg.husimi
    if not isinstance(h.enabled, bool):
        raise ConfigError("husimi.enabled", "must be a boolean")
    if not isinstance(h.csv, bool):
        raise ConfigError("husimi.csv", "must be a boolean")
    if not isinstance(h.grid, list) or len(h.grid) != 2 or not all(_is_int(g) and g >= 2 for g in h.grid):
        raise ConfigError("husimi.grid", "must be [nq, np] with integers >= 2")
    if not isinstance(h.steps, list) or not all(_is_int(s) and s >= 0 for s in h.steps):
        raise ConfigError("husimi.steps", "must list non-negative integers")
    if h.enabled and any(s > cfg.steps for s in h.steps):
        raise ConfigError("husimi.steps", f"must list integers in [0, {cfg.steps}]")
    return cfg


def load_config(path) -> RunConfig:
    """Read a JSON config, or the config embedded in a run manifest."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON in {path}: {exc}") from exc
    if isinstance(data, dict) and "manifest_version" in data:
        data = data.get("config")
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected an object")
    return validate_config(data)


@dataclass
class Prepared:
    """Everything derived from a config before time stepping."""

    config: RunConfig
    space: TorusSpace
    U: Any
    psi: Any
    scar: Any = None
    decomposition: Any = None


def prepare(cfg: RunConfig) -> Prepared:
    space = cfg.space
    U = build_baker(space)
    st = cfg.initial_state
    orbit = orbit_from_symbols(st.orbit)
    prep = Prepared(cfg, space, U, None)
    if st.kind in ("position", "momentum"):
        prep.psi = orbit_basis_state(space, orbit, st.kind, st.point_index)
        return prep
    theta = quasienergy(orbit, space, st.quasienergy_mode, st.m)
    if st.kind == "pom":
        prep.psi = build_pom(space, orbit, theta)
        return prep
    prep.scar = build_scar(space, orbit, ScarParams(orbit, cfg.scar_T(), theta, st.m), U)
    if st.kind == "scar":
        prep.psi = prep.scar
    else:
        prep.decomposition = spectral_decomposition(U)
        prep.psi = select_eigenstate(prep.decomposition, prep.scar)[0]
    return prep


def format_series(rows, diagnostics: bool) -> str:
    cols = ["step", "purity", "fidelity", "trace_error"] + (["min_eig"] if diagnostics else [])
    lines = [",".join(cols)]
    for row in rows:
        vals = [str(row["step"])] + [f"{row[c]:.12g}" for c in cols[1:]]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def run(cfg: RunConfig, with_husimi: bool = False, output_dir=None) -> dict:
    """Evolve the configured initial state and write artifacts; returns the manifest."""
    t0 = time.perf_counter()
    out = Path(output_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    prep = prepare(cfg)

    frame_steps, frame_fn = (), None
    if with_husimi:
        nq, n_p = cfg.husimi.grid
        C = coherent_grid(prep.space, nq, n_p)
        frame_steps = sorted(set(cfg.husimi.steps))
        frame_fn = lambda rho: husimi(rho, (nq, n_p), coherent=C)  # noqa: E731

    series = evolve(
        prep.psi, prep.U, cfg.bath, cfg.plan(), cfg.steps,
        observers=default_observers(prep.psi, cfg.diagnostics),
        frame_steps=frame_steps, frame_fn=frame_fn,
    )
    written = [out / SERIES_FILE]
    written[0].write_text(format_series(series.rows, cfg.diagnostics), newline="\n")
    for step, fld in sorted(series.frames.items()):
        pgm = out / f"husimi_t{step}.pgm"
        write_husimi_pgm(fld, pgm)
        written.append(pgm)
        if cfg.husimi.csv:
            csv = out / f"husimi_t{step}.csv"
            write_husimi_csv(fld, csv)
            written.append(csv)

    manifest = {
        "manifest_version": MANIFEST_VERSION,
        "library_version": __version__,
        "config": cfg.to_dict(),
        "substeps_resolved": cfg.plan().substeps,
        "scar_T_resolved": cfg.scar_T(),
        "artifacts": {p.name: _sha256(p) for p in written},
        "wall_clock_seconds": round(time.perf_counter() - t0, 3),
    }
    (out / MANIFEST_FILE).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def eigs_report(cfg: RunConfig, top: int = 5) -> tuple[str, np.ndarray]:
    """Eigenstates ranked by overlap with the configured scar function."""
    st = cfg.initial_state
    space = cfg.space
    U = build_baker(space)
    orbit = orbit_from_symbols(st.orbit)
    theta = quasienergy(orbit, space, st.quasienergy_mode, st.m)
    scar = build_scar(space, orbit, ScarParams(orbit, cfg.scar_T(), theta, st.m), U)
    dec = spectral_decomposition(U)
    ov = dec.overlaps(scar)
    order = np.argsort(-ov, kind="stable")
    lines = [
        f"# orbit={st.orbit} N={space.N} scar_T={cfg.scar_T()} quasienergy_mode={st.quasienergy_mode}",
        f"# overlap_sum={ov.sum():.12f}",
        "rank,index,eigenphase,overlap,selected",
    ]
    for rank, n in enumerate(order[:top], 1):
        lines.append(f"{rank},{n},{dec.phases[n]:.12f},{ov[n]:.12f},{'*' if rank == 1 else ''}")
    return "\n".join(lines) + "\n", ov


def config_from_regime(regime: str, **overrides) -> RunConfig:
    """A config for one of the named bath regimes, with field overrides."""
    base = dict(REGIMES[regime])
    init = overrides.pop("initial_state", {})
    base.update(overrides)
    base["initial_state"] = init
    return validate_config(base)
