"""Run configuration: sectioned key-value files plus command-line overrides.

Example file::

    [run]
    dim = 3
    seed = 7
    out = results
    gamma_grid = 0:1:41
    lambda = 0.849

    [optimizer]
    restarts = 2
    tolerance = 1e-9
    max_evals = 60000

    [spectral]
    pump_width = 1e-4
    pm_width = 12
    pump_center = 0
    bin_first = 1.0
    bin_spacing = 1.5
    bin_width = 1.0

    [tomography]
    shots = 1000000
    trials = 100
    poisson = true
    background = 0
    tolerance = 1e-8

Spectral quantities are in dimensionless grid units; with the default bin
layout one unit corresponds to roughly 1/25 of the 105 nm SPDC bandwidth
around 1064 nm.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields

import numpy as np


class ConfigError(ValueError):
    pass


def parse_grid(text: str) -> list[float]:
    """``start:stop:steps`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, steps = text.split(":")
            steps = int(steps)
            if steps < 1:
                raise ConfigError("grid needs at least one step")
            return [float(g) for g in np.linspace(float(start), float(stop), steps)]
        return [float(g) for g in text.split(",") if g.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None


@dataclass
class OptimizerSection:
    restarts: int | None = None
    tolerance: float = 1e-9
    max_evals: int = 60000


@dataclass
class SpectralSection:
    pump_width: float = 1e-4
    pm_width: float = 12.0
    pump_center: float = 0.0
    bin_first: float = 1.0
    bin_spacing: float = 1.5
    bin_width: float = 1.0


@dataclass
class TomographySection:
    shots: int = 10**6
    trials: int = 100
    poisson: bool = True
    background: float = 0.0
    tolerance: float = 1e-8


@dataclass
class RunConfig:
    dim: int = 3
    seed: int = 0
    out: str = "out"
    gamma_grid: list = field(default_factory=lambda: [1.0])
    lam: float = 1.0
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    spectral: SpectralSection = field(default_factory=SpectralSection)
    tomography: TomographySection = field(default_factory=TomographySection)

    def validate(self) -> "RunConfig":
        if self.dim not in (2, 3):
            raise ConfigError(f"dim must be 2 or 3, got {self.dim}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.gamma_grid:
            raise ConfigError("gamma grid is empty")
        bad = [g for g in self.gamma_grid if not 0.0 <= g <= 1.0]
        if bad:
            raise ConfigError(f"gamma values outside [0, 1]: {bad}")
        if not 0.0 <= self.lam <= 1.0:
            raise ConfigError(f"lambda must lie in [0, 1], got {self.lam}")
        opt = self.optimizer
        if opt.restarts is not None and opt.restarts < 1:
            raise ConfigError("restarts must be >= 1")
        if opt.tolerance <= 0 or opt.max_evals < 1:
            raise ConfigError("optimizer tolerance and max_evals must be positive")
        sp = self.spectral
        if sp.pump_width <= 0 or sp.pm_width <= 0 or sp.bin_width <= 0:
            raise ConfigError("spectral widths must be positive")
        if sp.pump_width > 0.1 * sp.pm_width:
            raise ConfigError("pump_width must be much smaller than pm_width")
        if sp.bin_spacing <= sp.bin_width:
            raise ConfigError("bin_spacing must exceed bin_width so bins do not overlap")
        tomo = self.tomography
        if tomo.shots < 1:
            raise ConfigError("shots must be positive")
        if tomo.trials < 100:
            raise ConfigError("at least 100 Monte Carlo trials are required")
        if tomo.background < 0:
            raise ConfigError("background rate must be non-negative")
        try:
            os.makedirs(self.out, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {self.out!r}: {exc}") from None
        if not os.access(self.out, os.W_OK):
            raise ConfigError(f"output directory {self.out!r} is not writable")
        return self

    def digest(self) -> str:
        """Short hash of everything except the output location."""
        data = asdict(self)
        data.pop("out")
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_BOOL = {"true": True, "yes": True, "1": True, "on": True,
         "false": False, "no": False, "0": False, "off": False}


def _coerce(value: str, kind):
    if kind in ("bool", bool):
        try:
            return _BOOL[value.strip().lower()]
        except KeyError:
            raise ConfigError(f"not a boolean: {value!r}") from None
    if kind in ("int", int, "int | None"):
        return int(float(value)) if "e" in value.lower() else int(value)
    return float(value)


def _fill(section_obj, items: dict, section: str):
    known = {f.name: f.type for f in fields(section_obj)}
    for key, value in items.items():
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        try:
            setattr(section_obj, key, _coerce(value, known[key]))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {key}: {exc}") from None


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    for section in parser.sections():
        items = dict(parser.items(section))
        if section == "run":
            for key, value in items.items():
                try:
                    if key == "dim":
                        cfg.dim = int(value)
                    elif key == "seed":
                        cfg.seed = int(value)
                    elif key == "out":
                        cfg.out = value
                    elif key == "gamma_grid":
                        cfg.gamma_grid = parse_grid(value)
                    elif key == "gamma":
                        cfg.gamma_grid = [float(value)]
                    elif key == "lambda":
                        cfg.lam = float(value)
                    else:
                        raise ConfigError(f"unknown key {key!r} in [run]")
                except ValueError as exc:
                    raise ConfigError(f"[run] {key}: {exc}") from None
        elif section in ("optimizer", "spectral", "tomography"):
            _fill(getattr(cfg, section), items, section)
        else:
            raise ConfigError(f"unknown section [{section}]")
    return cfg
