"""Dataset container, sensitivity configuration and CSV ingestion."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyArm, MissingColumn, NonBinaryTreatment, NonFiniteValue


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observed outcome ``y``, binary treatment ``z`` and covariates ``x`` (n x K).

    Arrays are copied and made read-only on construction, so a Dataset can be
    handed to worker processes and threads without defensive copies.
    """

    y: np.ndarray
    z: np.ndarray
    x: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        y = _frozen(self.y).reshape(-1)
        z = _frozen(self.z).reshape(-1)
        x = np.array(self.x, dtype=float, copy=True)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        x.setflags(write=False)
        n = y.shape[0]
        if n < 2:
            raise ValueError("a dataset needs at least two units")
        if z.shape[0] != n or x.shape[0] != n:
            raise ValueError(f"length mismatch: y={n}, z={z.shape[0]}, x={x.shape[0]}")
        for label, arr in (("y", y), ("z", z), ("x", x)):
            if not np.all(np.isfinite(arr)):
                raise NonFiniteValue(f"non-finite value in {label}")
        if not np.all((z == 0.0) | (z == 1.0)):
            raise NonBinaryTreatment("treatment entries must be exactly 0 or 1")
        n1 = int(z.sum())
        if n1 == 0 or n1 == n:
            raise EmptyArm("need at least one treated and one control unit")
        names = tuple(self.names) if self.names else tuple(f"x{j + 1}" for j in range(x.shape[1]))
        if len(names) != x.shape[1]:
            raise ValueError("one covariate name per column of x is required")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def take(self, idx: Sequence[int]) -> "Dataset":
        """Rows ``idx`` (with repetition allowed) as a new Dataset."""
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.y[idx], self.z[idx], self.x[idx], self.names)

    def standardized(self) -> "Dataset":
        """Copy with each covariate column centred and scaled to unit sd.

        Constant columns are centred only. Outcomes are left untouched, so bounds
        stay on the original scale.
        """
        mu = self.x.mean(axis=0)
        sd = self.x.std(axis=0)
        sd = np.where(sd > 0, sd, 1.0)
        return Dataset(self.y, self.z, (self.x - mu) / sd, self.names)


@dataclass(frozen=True)
class SensitivityConfig:
    delta: float = 0.01
    lam: Optional[float] = None
    basis_terms: tuple = ("1",)
    seed: int = 0
    bootstrap_b: int = 1000

    def __post_init__(self):
        if not (0.0 < self.delta < 0.5):
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")
        if self.lam is not None and not self.lam >= 1.0:
            raise ValueError(f"lambda must be >= 1, got {self.lam}")
        if self.seed < 0 or self.bootstrap_b < 0:
            raise ValueError("seed and bootstrap_b must be non-negative")
        object.__setattr__(self, "basis_terms", tuple(self.basis_terms))


def split_arms(d: Dataset) -> tuple[np.ndarray, np.ndarray]:
    """Sorted 0-based index arrays of treated and control units."""
    treated = np.flatnonzero(d.z == 1.0)
    control = np.flatnonzero(d.z == 0.0)
    return treated, control


def _parse_float(text: str, where: str) -> float:
    try:
        v = float(text)
    except ValueError:
        if text.strip() == "":
            raise NonFiniteValue(f"missing value at {where}") from None
        raise NonFiniteValue(f"unparseable number {text!r} at {where}") from None
    if not math.isfinite(v):
        raise NonFiniteValue(f"non-finite value {text!r} at {where}")
    return v


def load_csv(path) -> Dataset:
    """Read a header-first CSV with columns ``y``, ``z`` and one or more covariates.

    Covariates keep their file order. Missing cells are rejected rather than
    imputed.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise MissingColumn(f"{path}: empty file") from None
        for col in ("y", "z"):
            if col not in header:
                raise MissingColumn(f"{path}: no column named {col!r}")
        cov = [j for j, h in enumerate(header) if h not in ("y", "z")]
        if not cov:
            raise MissingColumn(f"{path}: no covariate columns")
        iy, iz = header.index("y"), header.index("z")
        ys, zs, xs = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(c.strip() == "" for c in row):
                continue
            if len(row) != len(header):
                raise MissingColumn(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ys.append(_parse_float(row[iy], f"line {lineno}, column y"))
            z = _parse_float(row[iz], f"line {lineno}, column z")
            if z not in (0.0, 1.0):
                raise NonBinaryTreatment(f"{path}:{lineno}: treatment value {row[iz]!r}")
            zs.append(z)
            xs.append([_parse_float(row[j], f"line {lineno}, column {header[j]}") for j in cov])
    if len(ys) < 2:
        raise ValueError(f"{path}: need at least two data rows")
    return Dataset(np.array(ys), np.array(zs), np.array(xs), tuple(header[j] for j in cov))


def write_csv(d: Dataset, path) -> None:
    """Write ``d`` so that :func:`load_csv` reads it back bit-exactly."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["y", "z", *d.names])
        for i in range(d.n):
            w.writerow([f"{d.y[i]:.17g}", f"{int(d.z[i])}", *(f"{v:.17g}" for v in d.x[i])])
