"""Training datasets: a parameter grid, derived feature columns and a target."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Feature", "Dataset", "feature_matrix", "load_dataset"]


@dataclass(frozen=True)
class Feature:
    """One input column: a power of the raw parameter, or its logarithm."""

    kind: str  # "power" | "log"
    power: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("power", "log"):
            raise ValueError(f"unknown feature kind {self.kind!r}")
        if self.kind == "power" and self.power < 1:
            raise ValueError("feature power must be >= 1")

    def name(self, param_name: str) -> str:
        if self.kind == "log":
            return f"log({param_name})"
        if self.power == 1:
            return param_name
        return f"{param_name}^{self.power}"

    def token(self, param_name: str) -> str:
        """Identifier-safe variant of :meth:`name` for expression text."""
        if self.kind == "log":
            return f"log_{param_name}"
        if self.power == 1:
            return param_name
        return f"{param_name}{self.power}"

    def transform(self, params: np.ndarray) -> np.ndarray:
        if self.kind == "log":
            return np.log(params)
        return params ** self.power


def feature_matrix(features, params: np.ndarray) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    return np.column_stack([f.transform(params) for f in features])


@dataclass(frozen=True)
class Dataset:
    """Immutable training set; feature columns are exact transforms of the grid."""

    param_name: str
    parameter_grid: np.ndarray
    feature_spec: tuple[Feature, ...]
    inputs: np.ndarray
    target: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.parameter_grid, self.inputs, self.target):
            arr.setflags(write=False)

    @classmethod
    def build(cls, param_name: str, params: np.ndarray, features, target: np.ndarray) -> "Dataset":
        # copy so the read-only flag never leaks onto caller arrays
        params = np.array(params, dtype=float)
        target = np.array(target, dtype=float)
        features = tuple(features)
        if params.ndim != 1 or params.size == 0:
            raise ValueError("parameter grid must be a non-empty vector")
        if target.shape != params.shape:
            raise ValueError("target must align with the parameter grid")
        inputs = feature_matrix(features, params)
        if not (np.isfinite(inputs).all() and np.isfinite(target).all() and np.isfinite(params).all()):
            raise ValueError("dataset contains non-finite entries")
        return cls(param_name, params, features, inputs, target)

    @property
    def n_rows(self) -> int:
        return self.parameter_grid.size

    @property
    def n_features(self) -> int:
        return self.inputs.shape[1]

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f.name(self.param_name) for f in self.feature_spec)

    @property
    def feature_tokens(self) -> tuple[str, ...]:
        return tuple(f.token(self.param_name) for f in self.feature_spec)

    def audit(self) -> None:
        """Check that feature columns are exactly the declared transforms."""
        rebuilt = feature_matrix(self.feature_spec, self.parameter_grid)
        if not np.array_equal(rebuilt, self.inputs):
            raise ValueError("feature columns do not match feature_spec transforms")

    def to_csv(self, path) -> None:
        lines = ["param," + ",".join(self.feature_names) + ",target"]
        for i in range(self.n_rows):
            cells = [self.parameter_grid[i], *self.inputs[i], self.target[i]]
            lines.append(",".join(format(c, ".17g") for c in cells))
        Path(path).write_text("\n".join(lines) + "\n", newline="\n")


def _feature_from_name(column: str, param_name: str) -> Feature:
    if column == f"log({param_name})":
        return Feature("log")
    if column == param_name:
        return Feature("power", 1)
    base, sep, exp = column.partition("^")
    if sep and base == param_name:
        return Feature("power", int(exp))
    raise ValueError(f"cannot interpret feature column {column!r} for parameter {param_name!r}")


def load_dataset(path) -> Dataset:
    """Read a dataset CSV written by :meth:`Dataset.to_csv`."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = lines[0].split(",")
    if header[0] != "param" or header[-1] != "target" or len(header) < 3:
        raise ValueError(f"{path}: not a dataset CSV (header {header})")
    rows = [[float(c) for c in ln.split(",")] for ln in lines[1:]]
    data = np.asarray(rows, dtype=float)
    params = data[:, 0]
    # The parameter column reuses the name of its first-power feature column
    # when present; fall back to the bare column label otherwise.
    param_name = header[1] if "^" not in header[1] and "(" not in header[1] else header[1].split("^")[0].removeprefix("log(").removesuffix(")")
    features = tuple(_feature_from_name(col, param_name) for col in header[1:-1])
    ds = Dataset.build(param_name, params, features, data[:, -1])
    if not np.allclose(ds.inputs, data[:, 1:-1], rtol=0, atol=0):
        raise ValueError(f"{path}: feature columns are not transforms of the param column")
    return ds
