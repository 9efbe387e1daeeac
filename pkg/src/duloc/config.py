"""Experiment configuration: YAML loading, schema validation and defaults.

Defaults reproduce the free-field setup: 44.1 kHz, 2048-point frames with a
1536-sample hop, 80-8000 Hz, beta = 1, loading constant 1e-4, a 1 degree
grid and an 8-sensor line array with 7 cm spacing.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path

import yaml

from .array import SPEED_OF_SOUND, ArrayGeometry, DoaGrid
from .beamformers import METHODS
from .simulator import SOURCE_KINDS, SourceSpec

SWEEP_AXES = ("snr_db", "snapshots")
PHAT_MODES = ("matrix", "snapshot")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    n_sensors: int = 8
    spacing: float = 0.07
    spacings: tuple[float, ...] | None = None
    c: float = SPEED_OF_SOUND
    fs: float = 44100.0
    L: int = 2048
    hop: int = 1536
    window: str = "hann"
    f_min: float = 80.0
    f_max: float = 8000.0
    grid_step: float = 1.0
    method: str = "du"
    methods: tuple[str, ...] = ("srp", "srp-phat", "du", "mvdr", "music")
    beta: float = 1.0
    delta: float = 1e-4
    n_sources: int = 1
    sigma2: str | float = "truth"
    phat: str = "matrix"
    snapshots: int = 10
    min_separation: float = 5.0
    bin_gate_db: float | None = None
    duration: float = 1.0
    snr_db: float | None = 20.0
    sources: tuple[SourceSpec, ...] = ()
    trials: int = 50
    seed: int = 0
    sweep_axis: str = "snr_db"
    sweep_values: tuple[float, ...] = (-20, -15, -10, -5, 0, 5, 10, 15, 20)

    def geometry(self) -> ArrayGeometry:
        if self.spacings is not None:
            return ArrayGeometry(self.spacings, self.c)
        return ArrayGeometry.ula(self.n_sensors, self.spacing, self.c)

    def grid(self) -> DoaGrid:
        return DoaGrid.uniform(self.grid_step)

    @property
    def n_channels(self) -> int:
        return len(self.spacings) if self.spacings is not None else self.n_sensors

    def replace(self, **changes) -> "ExperimentConfig":
        cfg = dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})
        validate(cfg)
        return cfg


def _fail(name, msg):
    raise ConfigError(f"config field '{name}': {msg}")


def _num(name, v, *, positive=False, nonneg=False, integer=False):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(name, f"expected a number, got {v!r}")
    if integer and (not float(v).is_integer()):
        _fail(name, f"expected an integer, got {v!r}")
    if not math.isfinite(v):
        _fail(name, "must be finite")
    if positive and not v > 0:
        _fail(name, f"must be positive, got {v}")
    if nonneg and v < 0:
        _fail(name, f"must be non-negative, got {v}")
    return int(v) if integer else float(v)


def validate(cfg: ExperimentConfig) -> None:
    """Check every field against the constraints of the module that consumes it."""
    if cfg.spacings is None:
        if _num("array.n_sensors", cfg.n_sensors, integer=True) < 2:
            _fail("array.n_sensors", "need at least 2 sensors")
        _num("array.spacing", cfg.spacing, positive=True)
    try:
        cfg.geometry()
    except ValueError as e:
        _fail("array", str(e))
    _num("array.c", cfg.c, positive=True)
    _num("fs", cfg.fs, positive=True)
    L = _num("stft.L", cfg.L, positive=True, integer=True)
    if L & (L - 1):
        _fail("stft.L", f"must be a power of two, got {L}")
    _num("stft.hop", cfg.hop, positive=True, integer=True)
    if not isinstance(cfg.window, str):
        _fail("stft.window", "expected a window name")
    _num("band.f_min", cfg.f_min, nonneg=True)
    _num("band.f_max", cfg.f_max, positive=True)
    if not cfg.f_min < cfg.f_max <= cfg.fs / 2:
        _fail("band", f"need f_min < f_max <= fs/2, got {cfg.f_min}..{cfg.f_max}")
    if _num("grid_step", cfg.grid_step, positive=True) > 90:
        _fail("grid_step", "too coarse")
    for name, m in [("method", cfg.method)] + [("methods", m) for m in cfg.methods]:
        if m not in METHODS:
            _fail(name, f"unknown method {m!r}; expected one of {list(METHODS)}")
    if not cfg.methods:
        _fail("methods", "empty method list")
    if not 0 <= _num("beta", cfg.beta) <= 1:
        _fail("beta", f"must lie in [0, 1], got {cfg.beta}")
    _num("delta", cfg.delta, positive=True)
    s = _num("n_sources", cfg.n_sources, positive=True, integer=True)
    if s >= cfg.n_channels:
        _fail("n_sources", f"must be below the sensor count {cfg.n_channels}")
    if isinstance(cfg.sigma2, str):
        if cfg.sigma2 not in ("truth", "none"):
            _fail("sigma2", f"expected 'truth', 'none' or a number, got {cfg.sigma2!r}")
    else:
        _num("sigma2", cfg.sigma2, nonneg=True)
    if cfg.phat not in PHAT_MODES:
        _fail("phat", f"expected one of {list(PHAT_MODES)}, got {cfg.phat!r}")
    _num("snapshots", cfg.snapshots, positive=True, integer=True)
    _num("min_separation", cfg.min_separation, positive=True)
    if cfg.bin_gate_db is not None and _num("bin_gate_db", cfg.bin_gate_db) > 0:
        _fail("bin_gate_db", f"must be <= 0 dB, got {cfg.bin_gate_db}")
    _num("duration", cfg.duration, positive=True)
    if cfg.snr_db is not None and not (isinstance(cfg.snr_db, (int, float)) and cfg.snr_db == math.inf):
        _num("snr_db", cfg.snr_db)
    _num("trials", cfg.trials, positive=True, integer=True)
    _num("seed", cfg.seed, nonneg=True, integer=True)
    if cfg.sweep_axis not in SWEEP_AXES:
        _fail("sweep.axis", f"expected one of {list(SWEEP_AXES)}, got {cfg.sweep_axis!r}")
    if not cfg.sweep_values:
        _fail("sweep.values", "empty axis")
    for v in cfg.sweep_values:
        if cfg.sweep_axis == "snapshots":
            _num("sweep.values", v, positive=True, integer=True)
        else:
            _num("sweep.values", v)
    for i, src in enumerate(cfg.sources):
        if cfg.fs <= 2 * src.highest_frequency:
            _fail(f"sources[{i}]", f"frequency {src.highest_frequency} Hz aliases at fs={cfg.fs}")


_SECTIONS = {
    "array": {"n_sensors": "n_sensors", "spacing": "spacing", "spacings": "spacings", "c": "c"},
    "stft": {"L": "L", "hop": "hop", "window": "window"},
    "band": {"f_min": "f_min", "f_max": "f_max"},
    "sweep": {"axis": "sweep_axis", "values": "sweep_values"},
}
_TOP = {"fs", "grid_step", "method", "methods", "beta", "delta", "n_sources", "sigma2", "phat",
        "snapshots", "min_separation", "bin_gate_db", "duration", "snr_db", "sources", "trials", "seed"}
_SOURCE_KEYS = {f.name for f in dataclasses.fields(SourceSpec)}


def _source(i: int, entry, duration: float) -> SourceSpec:
    name = f"sources[{i}]"
    if not isinstance(entry, dict):
        _fail(name, "expected a mapping")
    unknown = set(entry) - _SOURCE_KEYS
    if unknown:
        _fail(name, f"unknown key(s) {sorted(unknown)}")
    if entry.get("kind") not in SOURCE_KINDS:
        _fail(f"{name}.kind", f"expected one of {list(SOURCE_KINDS)}, got {entry.get('kind')!r}")
    if "doa" not in entry:
        _fail(f"{name}.doa", "missing")
    kw = dict(entry)
    kw.setdefault("duration", duration)
    for key in ("doa", "power", "duration", "frequency", "f_lo", "f_hi", "am_rate"):
        if kw.get(key) is not None:
            kw[key] = _num(f"{name}.{key}", kw[key])
    try:
        return SourceSpec(**kw)
    except ValueError as e:
        _fail(name, str(e))


def from_mapping(doc: dict | None) -> ExperimentConfig:
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a mapping")
    kw = {}
    for key, value in doc.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                _fail(key, "expected a mapping")
            for sub, v in value.items():
                if sub not in _SECTIONS[key]:
                    raise ConfigError(f"unknown config key '{key}.{sub}'")
                kw[_SECTIONS[key][sub]] = v
        elif key in _TOP:
            kw[key] = value
        else:
            raise ConfigError(f"unknown config key '{key}'")

    if kw.get("spacings") is not None:
        sp = kw["spacings"]
        if not isinstance(sp, list):
            _fail("array.spacings", "expected a list of distances")
        kw["spacings"] = tuple(_num("array.spacings", v) for v in sp)
    if "methods" in kw:
        if not isinstance(kw["methods"], list):
            _fail("methods", "expected a list")
        kw["methods"] = tuple(kw["methods"])
    if "sweep_values" in kw:
        if not isinstance(kw["sweep_values"], list):
            _fail("sweep.values", "expected a list")
        kw["sweep_values"] = tuple(kw["sweep_values"])
    if kw.get("snr_db") in ("inf", "+inf", "none"):
        kw["snr_db"] = None
    duration = kw.get("duration", ExperimentConfig.duration)
    duration = _num("duration", duration, positive=True)
    if "sources" in kw:
        if not isinstance(kw["sources"], list):
            _fail("sources", "expected a list")
        kw["sources"] = tuple(_source(i, s, duration) for i, s in enumerate(kw["sources"]))
    cfg = ExperimentConfig(**kw)
    validate(cfg)
    return cfg


def load_config(path) -> ExperimentConfig:
    """Parse a YAML config file; syntax errors report line and column."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: YAML syntax error at {where}: {e.problem}") from None
    return from_mapping(doc)
