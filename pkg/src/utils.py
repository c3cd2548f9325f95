from __future__ import annotations

import math
import os
from typing import Dict, Iterable, Mapping, Tuple

import numpy as np

from errors import InvalidArgumentError

# Absolute path of the source dir
BASE_DIR = os.path.realpath(os.path.dirname(__file__))

KEY_VALUE_DELIMITER = "="


def spawn_generator(seed: int, stream_index: int) -> np.random.Generator:
    """
    Returns the random generator of one stream.

    Args:
        seed (int): campaign seed.
        stream_index (int): index of the sample, probe or realization.

    Returns:
        np.random.Generator: a generator that depends only on (seed, stream_index).

    The generator is the stream_index-th child of SeedSequence(seed), so any
    stream can be regenerated without drawing the ones before it.
    """
    sequence = np.random.SeedSequence(int(seed), spawn_key=(int(stream_index),))
    return np.random.Generator(np.random.PCG64(sequence))


def geometric_grid(t_min: float, t_max: float, points: int) -> np.ndarray:
    """Log-uniform grid from t_min to t_max inclusive."""
    if t_min <= 0 or t_max < t_min:
        raise InvalidArgumentError(f"Bad geometric grid: t_min={t_min}, t_max={t_max}")
    if points < 1:
        raise InvalidArgumentError(f"A grid needs at least one point, got {points}")
    if points == 1:
        return np.array([float(t_min)])
    return np.geomspace(t_min, t_max, points)


def parse_key_value_line(line: str) -> Tuple[str, str] | None:
    """
    Parses a single `key = value` line of a flat config file.

    Args:
        line (str): raw line.

    Returns:
        (key, value), or None for blank lines, comments and malformed lines.
    """
    stripped = line.split("#", 1)[0].strip()
    if not stripped:
        return None
    key, sep, value = stripped.partition(KEY_VALUE_DELIMITER)
    key = key.strip().replace("-", "_")
    value = value.strip().strip('"')
    if not sep or not key:
        return None
    return key, value


def parse_key_value_lines(lines: Iterable[str]) -> Dict[str, str]:
    options: Dict[str, str] = {}
    for line in lines:
        pair = parse_key_value_line(line)
        if pair:
            options[pair[0]] = pair[1]
    return options


def format_number(value: float) -> str:
    """Stable textual form of a number for CSV and echo files."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return repr(value)


def format_inputs(inputs: Mapping[str, object]) -> str:
    """Renders a parameter record as `k=v;k=v` with keys in insertion order."""
    parts = []
    for key, value in inputs.items():
        if isinstance(value, (int, float, np.integer, np.floating, bool, np.bool_)):
            parts.append(f"{key}={format_number(value)}")
        else:
            parts.append(f"{key}={value}")
    return ";".join(parts)


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed for a (seed, keys...) tuple."""
    sequence = np.random.SeedSequence([int(seed), *(int(key) for key in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
