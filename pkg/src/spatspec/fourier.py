"""Mean-corrected tapered Fourier transforms for points and gridded fields.

Point patterns are transformed by a nonuniform sum over the (possibly
marked) points, with the estimated intensity removed *after* the transform
through the taper's transfer function:

    J(k) = sum_x h(x) W(x) exp(-2 pi i x.k) - lambda_hat H(k).

Gridded fields subtract the estimated mean from the values *before* the
transform and carry the cell-area prefactor of the sampled taper:

    J(k) = prod(delta) sum_u h(u) (Y(u) - lambda_hat) exp(-2 pi i u.k).

Both routes share wavenumber grids and taper families, so cross-spectra
between differently sampled processes are smoothed consistently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geometry import Region, SamplingScheme, WavenumberGrid
from .nufft import nudft
from .tapers import SampledTaper, TaperFamily, TransferFunction, interpolated_value, transfer_function
from .nufft import uniform_grid_dft

__all__ = [
    "PointPattern",
    "GriddedField",
    "TaperedDFT",
    "SpatialDataset",
    "intensity_estimate",
    "tapered_dft_points",
    "tapered_dft_field",
]


@dataclass(frozen=True, eq=False)
class PointPattern:
    """Locations (N, d) with optional positive or real marks (N,)."""

    locations: np.ndarray
    marks: np.ndarray | None = None

    def __post_init__(self):
        loc = np.asarray(self.locations, dtype=float)
        if loc.ndim == 1:
            loc = loc.reshape(-1, 1)
        loc.flags.writeable = False
        object.__setattr__(self, "locations", loc)
        if self.marks is not None:
            marks = np.asarray(self.marks, dtype=float)
            if marks.shape != (len(loc),):
                raise ValueError("marks must be one value per location")
            marks.flags.writeable = False
            object.__setattr__(self, "marks", marks)

    def __len__(self) -> int:
        return len(self.locations)

    @property
    def ndim(self) -> int:
        return self.locations.shape[1]

    @property
    def weights(self) -> np.ndarray:
        """Marks, or ones for an unmarked pattern."""
        if self.marks is None:
            return np.ones(len(self))
        return self.marks

    def check_in_region(self, region: Region):
        if len(self) and not region.contains(self.locations).all():
            raise ValueError("point pattern has locations outside the region")

    def to_csv(self, path):
        path = Path(path)
        cols = ["x", "y"][: self.ndim]
        data = [self.locations]
        if self.marks is not None:
            cols.append("mark")
            data.append(self.marks[:, None])
        arr = np.hstack(data) if len(self) else np.zeros((0, len(cols)))
        np.savetxt(path, arr, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
        return path

    @classmethod
    def from_csv(cls, path) -> "PointPattern":
        path = Path(path)
        header = path.read_text().splitlines()[0].strip().split(",")
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if arr.size == 0:
            arr = arr.reshape(0, len(header))
        has_mark = header[-1] == "mark"
        d = len(header) - int(has_mark)
        return cls(locations=arr[:, :d], marks=arr[:, d] if has_mark else None)


@dataclass(frozen=True, eq=False)
class GriddedField:
    """Values of a random field on the grid nodes inside a region.

    ``zindex`` are integer node coordinates under ``scheme`` (ordered as by
    :meth:`SamplingScheme.grid_nodes`); positions are ``zindex * delta +
    offset``.
    """

    scheme: SamplingScheme
    zindex: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if not self.scheme.is_grid:
            raise ValueError("GriddedField requires a grid sampling scheme")
        z = np.asarray(self.zindex)
        if z.ndim == 1:
            z = z.reshape(-1, 1)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(z),):
            raise ValueError("values must be one number per node")
        z.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "zindex", z)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def positions(self) -> np.ndarray:
        return self.zindex * self.scheme.delta + self.scheme.offset

    def to_csv(self, path):
        """Write ``ix[,iy],value`` rows plus a JSON scheme header alongside."""
        path = Path(path)
        cols = ["ix", "iy"][: self.scheme.ndim] + ["value"]
        arr = np.hstack([self.zindex.astype(float), self.values[:, None]])
        np.savetxt(path, arr, delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
        path.with_suffix(".json").write_text(json.dumps(self.scheme.to_dict()) + "\n")
        return path

    @classmethod
    def from_csv(cls, path, scheme: SamplingScheme | None = None) -> "GriddedField":
        path = Path(path)
        if scheme is None:
            scheme = SamplingScheme.from_dict(json.loads(path.with_suffix(".json").read_text()))
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        d = scheme.ndim
        zindex = np.round(arr[:, :d]).astype(int)
        order = np.lexsort(tuple(zindex[:, j] for j in reversed(range(d))))
        return cls(scheme=scheme, zindex=zindex[order], values=arr[order, d])


@dataclass(frozen=True, eq=False)
class SpatialDataset:
    """A labelled collection of processes sharing one observation region."""

    region: Region
    labels: tuple
    processes: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.processes):
            raise ValueError("labels and processes must pair up")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("process labels must be unique")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "processes", tuple(self.processes))

    def __len__(self) -> int:
        return len(self.processes)

    def schemes(self):
        out = []
        for proc in self.processes:
            if isinstance(proc, GriddedField):
                out.append(proc.scheme)
            else:
                out.append(SamplingScheme.continuous(self.region.ndim))
        return out


@dataclass(frozen=True, eq=False)
class TaperedDFT:
    """Tapered, mean-corrected Fourier transform of one process."""

    grid: WavenumberGrid
    values: np.ndarray
    taper_index: int
    intensity: float
    process: object = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


def intensity_estimate(data, region: Region) -> float:
    """Observed mass per unit area (points) or node-average (fields)."""
    if isinstance(data, PointPattern):
        if region.area <= 0:
            raise ValueError("region has zero area")
        return float(data.weights.sum() / region.area)
    if isinstance(data, GriddedField):
        if len(data) == 0:
            raise ValueError("field has no nodes inside the region")
        return float(data.values.mean())
    raise TypeError(f"unsupported data type {type(data).__name__}")


def tapered_dft_points(
    pattern: PointPattern,
    family: TaperFamily,
    m: int,
    kgrid: WavenumberGrid,
    region: Region,
    intensity: float | None = None,
    method: str = "auto",
    transfer: TransferFunction | None = None,
) -> TaperedDFT:
    """Tapered transform of a point pattern with intensity removal.

    ``transfer`` may carry the precomputed continuous transfer function on
    the same wavenumber grid (hot loops); it is computed on demand otherwise.
    """
    if intensity is None:
        intensity = intensity_estimate(pattern, region)
    if intensity < 0:
        raise ValueError("intensity must be non-negative")
    coeffs = interpolated_value(family, m, pattern.locations) * pattern.weights if len(pattern) else np.zeros(0)
    vals = nudft(pattern.locations, coeffs, kgrid, method=method)
    if intensity != 0:
        if transfer is None:
            transfer = transfer_function(family, m, SamplingScheme.continuous(region.ndim), kgrid)
        elif transfer.taper_index != m or transfer.grid.size != kgrid.size:
            raise ValueError("precomputed transfer function does not match")
        vals = vals - intensity * transfer.values
    return TaperedDFT(grid=kgrid, values=vals, taper_index=m, intensity=float(intensity))


def tapered_dft_field(
    field: GriddedField,
    sampled: SampledTaper,
    kgrid: WavenumberGrid,
    intensity: float | None = None,
) -> TaperedDFT:
    """Tapered transform of a gridded field; the mean comes off the values first."""
    if not sampled.scheme.same_grid(field.scheme):
        raise ValueError("sampled taper and field use different grids")
    if len(sampled.weights) != len(field) or not np.array_equal(sampled.zindex, field.zindex):
        raise ValueError("field nodes do not match the sampled taper nodes")
    if intensity is None:
        intensity = float(field.values.mean())
    coeffs = sampled.weights * (field.values - intensity)
    vals = sampled.scale * uniform_grid_dft(
        field.zindex, field.scheme.delta, field.scheme.offset, coeffs, kgrid
    )
    return TaperedDFT(grid=kgrid, values=vals, taper_index=sampled.taper_index, intensity=float(intensity))
