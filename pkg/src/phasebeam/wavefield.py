"""Complex fields sampled on uniform physical grids."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch


@dataclass(frozen=True)
class UniformGrid:
    """Tensor-product uniform grid; ``lo``/``hi`` are the first/last nodes."""

    lo: tuple
    hi: tuple
    count: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        count = tuple(int(v) for v in np.atleast_1d(self.count))
        if not (len(lo) == len(hi) == len(count)):
            raise DimensionMismatch("grid bounds and counts disagree in dimension")
        if any(c < 1 for c in count):
            raise ValueError("grid needs at least one node per axis")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "count", count)

    @classmethod
    def from_axes(cls, axes):
        axes = [np.asarray(a, dtype=float) for a in axes]
        return cls(tuple(a[0] for a in axes), tuple(a[-1] for a in axes),
                   tuple(a.size for a in axes))

    @classmethod
    def with_spacing(cls, lo, hi, spacing):
        """Grid on [lo, hi] (per axis) with spacing at most ``spacing``."""
        lo, hi = np.atleast_1d(lo).astype(float), np.atleast_1d(hi).astype(float)
        count = np.maximum(1, np.ceil((hi - lo) / spacing - 1e-9).astype(int)) + 1
        return cls(tuple(lo), tuple(hi), tuple(count))

    @property
    def n(self):
        return len(self.count)

    @property
    def shape(self):
        return self.count

    @property
    def axes(self):
        return [np.linspace(a, b, c) for a, b, c in zip(self.lo, self.hi, self.count)]

    @property
    def spacing(self):
        return tuple((b - a) / (c - 1) if c > 1 else 0.0
                     for a, b, c in zip(self.lo, self.hi, self.count))

    def points(self):
        """Node coordinates, shape ``count + (n,)``."""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def to_dict(self):
        return {"lo": list(self.lo), "hi": list(self.hi), "count": list(self.count)}


@dataclass(frozen=True)
class WaveField:
    grid: UniformGrid
    values: np.ndarray
    t: float = 0.0
    eps: float = float("nan")
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise DimensionMismatch(f"values shape {vals.shape} != grid {self.grid.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def n(self):
        return self.grid.n

    def with_values(self, values, **meta):
        return WaveField(self.grid, values, self.t, self.eps, {**self.meta, **meta})

    def to_csv(self, path):
        """Write ``y..., re, im`` rows plus a JSON sidecar with grid metadata."""
        path = Path(path)
        pts = self.grid.points().reshape(-1, self.n)
        vals = self.values.reshape(-1)
        names = [f"y{i}" for i in range(self.n)] if self.n > 1 else ["y"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names + ["re", "im"])
            for y, v in zip(pts, vals):
                w.writerow([repr(float(c)) for c in y] + [repr(float(v.real)), repr(float(v.imag))])
        side = {"t": self.t, "eps": self.eps, "grid": self.grid.to_dict(), **self.meta}
        path.with_suffix(".json").write_text(json.dumps(side, indent=2, sort_keys=True))
        return path
