"""CSV and JSON readers/writers for paths, model specs and experiment specs."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import InvalidInputError
from .montecarlo import ExperimentSpec
from .process import ArArModel, SimulatedPath

PathLike = Union[str, Path]


def path_to_csv(path: SimulatedPath, latent: bool = False) -> str:
    """``t,y`` (plus ``z,v`` when ``latent``); floats written with ``repr``
    so reading back is exact."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "y", "z", "v"] if latent else ["t", "y"])
    for t in range(path.n):
        row = [t + 1, repr(float(path.y[t]))]
        if latent:
            row += [repr(float(path.z[t])), repr(float(path.v[t]))]
        w.writerow(row)
    return buf.getvalue()


def read_series(source: PathLike, column: str = "y") -> np.ndarray:
    """Read the ``y`` column of a CSV file (a headerless single column also works)."""
    text = Path(source).read_text()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidInputError(f"{source}: empty CSV")
    header = [c.strip() for c in rows[0]]
    try:
        float(header[0])
        has_header = False
    except ValueError:
        has_header = True
    if has_header:
        if column not in header:
            raise InvalidInputError(f"{source}: no column {column!r} in header {header}")
        j = header.index(column)
        body = rows[1:]
    else:
        if len(header) != 1:
            raise InvalidInputError(f"{source}: headerless CSV must have exactly one column")
        j = 0
        body = rows
    try:
        y = np.array([float(r[j]) for r in body])
    except (ValueError, IndexError) as exc:
        raise InvalidInputError(f"{source}: malformed value in column {column!r}: {exc}") from None
    if y.size == 0:
        raise InvalidInputError(f"{source}: no observations")
    if not np.all(np.isfinite(y)):
        raise InvalidInputError(f"{source}: column {column!r} contains non-finite values")
    return y


def _load_json(source: PathLike) -> dict:
    try:
        d = json.loads(Path(source).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{source}: malformed JSON ({exc})") from None
    if not isinstance(d, dict):
        raise InvalidInputError(f"{source}: expected a JSON object")
    return d


def load_model(source: PathLike) -> ArArModel:
    return ArArModel.from_dict(_load_json(source))


def dump_model(model: ArArModel, target: Optional[PathLike] = None) -> str:
    text = json.dumps(model.to_dict(), indent=2)
    if target is not None:
        Path(target).write_text(text + "\n")
    return text


def load_experiment(source: PathLike) -> ExperimentSpec:
    return ExperimentSpec.from_dict(_load_json(source))
