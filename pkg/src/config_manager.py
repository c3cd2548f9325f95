from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Dict, List, Mapping, Tuple

import numpy as np
from dotenv import load_dotenv

from errors import ConfigError, InvalidArgumentError
from percolation import PRESETS, Family, PercolationModel
from utils import format_number, geometric_grid, parse_key_value_lines

load_dotenv()

ECHO_FILE_NAME = "config.resolved.txt"

# Environment variables that may supply defaults.
ENV_FIELDS = {
    "DRW_OUTPUT_DIR": "output_dir",
    "DRW_WORKERS": "workers",
    "DRW_DENSE_CAP": "dense_cap",
}

FAMILY_ALIASES = {
    "tree": Family.HOMOGENEOUS_TREE.value,
    "homogeneous_tree": Family.HOMOGENEOUS_TREE.value,
    "z2": Family.SQUARE_LATTICE_2D.value,
    "square_lattice_2d": Family.SQUARE_LATTICE_2D.value,
}

DEFAULT_ALPHA = {
    Family.SQUARE_LATTICE_2D: 0.1,
    Family.HOMOGENEOUS_TREE: 0.4,
}


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Every parameter of every command, fully resolved.

    delta = 0 stands for the ambient degree of the family (4 on Z^2, 3 on the tree).
    """

    command: str = "annealed"
    preset: str = ""
    family: str = Family.HOMOGENEOUS_TREE.value
    delta: int = 0
    p: float = 0.5
    size_cap: int = 20000
    dense_cap: int = 3000
    probes: int = 64
    seed: int = 0
    workers: int = 4
    output_dir: str = "output"
    t_min: float = 1.0
    t_max: float = 1000.0
    t_points: int = 13
    n_samples: int = 10000
    alpha: float = 0.0
    fixed_root: bool = True
    box_L: int = 0
    box_realizations: int = 10
    L: int = 64
    n_realizations: int = 10
    e_min: float = 1e-3
    e_max: float = 1e-1
    min_eigenvalues: int = 200
    sparse_path: bool = False
    laplace_samples: int = 0
    m_min: int = 1
    m_max: int = 1000
    m_points: int = 31
    window_min: float = 10.0
    window_max: float = 1000.0
    n_graphs: int = 200
    n_max: int = 12
    sabotage: bool = False
    planar_clusters: int = 50
    fidelity_clusters: int = 20
    construct: str = ""
    stream_index: int = 0
    out: str = ""

    def to_lines(self) -> List[str]:
        lines = []
        for name, value in asdict(self).items():
            text = format_number(value) if isinstance(value, (bool, int, float)) else str(value)
            lines.append(f"{name} = {text}")
        return lines

    def model(self) -> PercolationModel:
        try:
            return PercolationModel(
                family=Family(self.family),
                delta=self.delta,
                p=self.p,
                size_cap=self.size_cap,
                seed=self.seed,
            )
        except InvalidArgumentError as exc:
            raise ConfigError(str(exc)) from exc

    def t_grid(self) -> np.ndarray:
        return geometric_grid(self.t_min, self.t_max, self.t_points)

    def m_grid(self) -> np.ndarray:
        return np.unique(np.round(np.geomspace(self.m_min, self.m_max, self.m_points)).astype(np.int64))

    @property
    def resolved_alpha(self) -> float:
        return self.alpha if self.alpha > 0 else DEFAULT_ALPHA[Family(self.family)]


FIELD_TYPES = {f.name: type(f.default) for f in fields(ExperimentConfig)}

# (lower, upper, lower bound inclusive) per numeric field.
RANGES: Dict[str, Tuple[float, float, bool]] = {
    "delta": (0, 10 ** 6, True),
    "p": (0.0, 1.0, True),
    "size_cap": (1, 10 ** 9, True),
    "dense_cap": (1, 10 ** 6, True),
    "probes": (1, 10 ** 6, True),
    "seed": (0, 2 ** 63 - 1, True),
    "workers": (1, 1024, True),
    "t_min": (0.0, 1e12, False),
    "t_max": (0.0, 1e12, False),
    "t_points": (1, 10 ** 5, True),
    "n_samples": (1, 10 ** 10, True),
    "alpha": (0.0, 1.0, True),
    "box_L": (0, 10 ** 5, True),
    "box_realizations": (1, 10 ** 6, True),
    "L": (1, 10 ** 5, True),
    "n_realizations": (1, 10 ** 6, True),
    "e_min": (0.0, 2.0, False),
    "e_max": (0.0, 2.0, False),
    "min_eigenvalues": (1, 10 ** 9, True),
    "laplace_samples": (0, 10 ** 10, True),
    "m_min": (1, 10 ** 9, True),
    "m_max": (1, 10 ** 9, True),
    "m_points": (1, 10 ** 5, True),
    "window_min": (0.0, 1e12, False),
    "window_max": (0.0, 1e12, False),
    "n_graphs": (1, 10 ** 6, True),
    "n_max": (2, 64, True),
    "planar_clusters": (0, 10 ** 5, True),
    "fidelity_clusters": (0, 10 ** 5, True),
    "stream_index": (0, 2 ** 63 - 1, True),
}


def _coerce(name: str, raw: object) -> object:
    if name not in FIELD_TYPES:
        raise ConfigError(f"Unknown config key '{name}'")
    target = FIELD_TYPES[name]
    if isinstance(raw, target) and not (target is int and isinstance(raw, bool)):
        return raw
    text = str(raw).strip()
    try:
        if target is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if target is int:
            return int(float(text)) if "e" in text.lower() else int(text)
        if target is float:
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"Bad value for '{name}': {text!r} is not a {target.__name__}") from exc
    return text


def _validate(config: ExperimentConfig) -> ExperimentConfig:
    for name, (low, high, inclusive) in RANGES.items():
        value = getattr(config, name)
        below = value < low if inclusive else value <= low
        if below or value > high:
            bracket = "[" if inclusive else "("
            raise ConfigError(f"'{name}' = {value} is outside {bracket}{low}, {high}]")
    family = FAMILY_ALIASES.get(config.family.lower())
    if family is None:
        raise ConfigError(f"Unknown family '{config.family}'; use tree or z2")
    if config.t_max < config.t_min:
        raise ConfigError(f"t_max={config.t_max} is below t_min={config.t_min}")
    if config.e_max <= config.e_min:
        raise ConfigError(f"e_max={config.e_max} must exceed e_min={config.e_min}")
    if config.m_max < config.m_min:
        raise ConfigError(f"m_max={config.m_max} is below m_min={config.m_min}")
    if config.window_max < config.window_min:
        raise ConfigError(f"window_max={config.window_max} is below window_min={config.window_min}")
    if config.preset and config.preset not in PRESETS:
        raise ConfigError(f"Unknown preset '{config.preset}'; choose one of {', '.join(sorted(PRESETS))}")
    delta = config.delta or (4 if family == Family.SQUARE_LATTICE_2D.value else 3)
    return replace(config, family=family, delta=delta)


def load_config_file(path: str) -> Dict[str, str]:
    """Reads a flat `key = value` file; `#` starts a comment, dashes in keys become underscores."""
    try:
        with open(path) as file:
            lines = file.readlines()
    except OSError as exc:
        raise ConfigError(f"Cannot read config file {path}: {exc}") from exc
    options = parse_key_value_lines(lines)
    logging.debug(f"[config] {len(options)} keys from {path}")
    return options


def environment_options(environ: Mapping[str, str] | None = None) -> Dict[str, str]:
    environ = os.environ if environ is None else environ
    return {name: environ[key] for key, name in ENV_FIELDS.items() if environ.get(key)}


def build_config(
    command: str,
    config_path: str | None = None,
    flags: Mapping[str, object] | None = None,
    environ: Mapping[str, str] | None = None
) -> ExperimentConfig:
    """
    Resolves the configuration of one command.

    Args:
        command (str): sub-command name.
        config_path (str | None): optional key-value file.
        flags (Mapping): command-line values; None entries are ignored.
        environ (Mapping | None): environment, os.environ by default.

    Returns:
        ExperimentConfig: defaults, then environment, then the preset, then the file,
        then the flags, each layer overriding the previous one.

    Raises:
        ConfigError: unknown keys, unparsable values or out-of-range values.
    """
    file_options = load_config_file(config_path) if config_path else {}
    flag_options = {key: value for key, value in (flags or {}).items() if value is not None}
    preset_name = str(flag_options.get("preset") or file_options.get("preset") or "")
    if preset_name and preset_name not in PRESETS:
        raise ConfigError(f"Unknown preset '{preset_name}'; choose one of {', '.join(sorted(PRESETS))}")
    preset_options = {key: (value.value if isinstance(value, Family) else value)
                      for key, value in PRESETS.get(preset_name, {}).items()}

    merged: Dict[str, object] = {}
    for layer in (environment_options(environ), preset_options, file_options, flag_options):
        merged.update(layer)
    merged["command"] = command
    merged["preset"] = preset_name
    values = {name: _coerce(name, raw) for name, raw in merged.items()}
    return _validate(ExperimentConfig(**values))
