"""Observation regions, sampling schemes, wavenumber grids and alias lattices.

Everything downstream (tapers, transforms, estimators) works in terms of the
objects defined here:

* :class:`Region` -- an axis-aligned bounding box together with a boolean
  inclusion mask on a fine reference lattice, so irregular windows are
  supported uniformly in one and two dimensions.
* :class:`SamplingScheme` -- continuous observation (point patterns) or a
  rectangular grid ``{z * delta + offset}`` (gridded fields).
* :class:`AliasStructure` -- the lattice of wavenumber replicas created by
  grid sampling, with the complex phase attached to each replica by the grid
  offset.
* :class:`WavenumberGrid` -- where spectra get evaluated; tensor-product
  grids carry their axes so FFT fast paths can recognise them.

All objects are immutable after construction and safe to share between
threads.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

__all__ = [
    "Region",
    "SamplingScheme",
    "AliasStructure",
    "WavenumberGrid",
    "nyquist_box",
    "alias_set",
    "alias_intersection",
]

#: Relative tolerance used when deciding whether a ratio of grid spacings is
#: rational.  Floating point input can never encode exact irrationality, so
#: ratios that have no small-denominator rational approximation within this
#: tolerance are treated as irrational (trivial alias intersection).  The
#: denominator cap matters: well-approximable irrationals (such as sqrt(2),
#: whose Pell convergents reach 1e-9 already at denominator ~2e4) must not
#: slip through, while genuine float ratios of modest fractions are exact to
#: machine precision.
RATIONAL_TOL = 1e-9
_MAX_DENOMINATOR = 1000


def _vector(x, ndim=None, name="value"):
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-d vector, got shape {v.shape}")
    if ndim is not None and v.size != ndim:
        raise ValueError(f"{name} must have length {ndim}, got {v.size}")
    return v


def _freeze(arr):
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Region:
    """Observation window: bounding box plus inclusion mask on a fine lattice.

    The window is digitised into cells of size ``delta_ref`` per dimension.
    Cell ``(i, j)`` occupies ``bbox[:, 0] + (i, j) * delta_ref`` up to the
    next lattice step; its centre sits at the half step.  The region is the
    union of the cells whose mask entry is True, and its area is counted
    cell-wise.

    Parameters
    ----------
    bbox : (d, 2) array
        Lower and upper edges per dimension, d in {1, 2}.
    delta_ref : (d,) array
        Reference-lattice spacing per dimension.
    mask : bool array
        Inclusion mask, one entry per lattice cell, shape ``n_1 [x n_2]``
        with ``n_j ~ (bbox[j, 1] - bbox[j, 0]) / delta_ref[j]``.
    """

    bbox: np.ndarray
    delta_ref: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        bbox = np.asarray(self.bbox, dtype=float)
        if bbox.ndim == 1:
            bbox = bbox.reshape(1, 2)
        if bbox.ndim != 2 or bbox.shape[1] != 2:
            raise ValueError(f"bbox must have shape (d, 2), got {bbox.shape}")
        d = bbox.shape[0]
        if d not in (1, 2):
            raise ValueError(f"only d in (1, 2) is supported, got d={d}")
        if not np.all(bbox[:, 1] > bbox[:, 0]):
            raise ValueError("bbox upper edges must exceed lower edges")
        delta = _vector(self.delta_ref, d, "delta_ref")
        if not np.all(delta > 0):
            raise ValueError("delta_ref entries must be positive")
        mask = np.asarray(self.mask, dtype=bool)
        if mask.ndim != d:
            raise ValueError(f"mask must be {d}-dimensional, got {mask.ndim}")
        lengths = bbox[:, 1] - bbox[:, 0]
        for j in range(d):
            if abs(mask.shape[j] * delta[j] - lengths[j]) > delta[j]:
                raise ValueError(
                    "mask shape inconsistent with bbox and delta_ref in "
                    f"dimension {j}: {mask.shape[j]} cells of {delta[j]} vs "
                    f"extent {lengths[j]}"
                )
        if not mask.any():
            raise ValueError("region mask is empty (area would be zero)")
        object.__setattr__(self, "bbox", _freeze(bbox))
        object.__setattr__(self, "delta_ref", _freeze(delta))
        object.__setattr__(self, "mask", _freeze(mask))

    @classmethod
    def rectangle(cls, lengths, delta_ref=None, origin=None):
        """Full rectangular window ``[origin, origin + lengths)``.

        ``delta_ref`` defaults to ``min(lengths) / 256``.
        """
        lengths = _vector(lengths, name="lengths")
        d = lengths.size
        if origin is None:
            origin = np.zeros(d)
        origin = _vector(origin, d, "origin")
        if delta_ref is None:
            delta_ref = np.full(d, lengths.min() / 256.0)
        else:
            delta_ref = np.asarray(delta_ref, dtype=float)
            if delta_ref.ndim == 0:
                delta_ref = np.full(d, float(delta_ref))
        shape = tuple(int(round(lengths[j] / delta_ref[j])) for j in range(d))
        bbox = np.stack([origin, origin + lengths], axis=1)
        return cls(bbox=bbox, delta_ref=delta_ref, mask=np.ones(shape, dtype=bool))

    @property
    def ndim(self) -> int:
        return self.bbox.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return self.bbox[:, 1] - self.bbox[:, 0]

    @property
    def area(self) -> float:
        """Lebesgue measure of the window, counted cell-wise."""
        return float(self.mask.sum() * np.prod(self.delta_ref))

    def cell_centers(self, masked: bool = True) -> np.ndarray:
        """Centres of lattice cells as an ``(n, d)`` array (C order)."""
        axes = [
            self.bbox[j, 0] + (np.arange(self.mask.shape[j]) + 0.5) * self.delta_ref[j]
            for j in range(self.ndim)
        ]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        if masked:
            pts = pts[self.mask.ravel()]
        return pts

    def cell_index(self, points) -> np.ndarray:
        """Lattice cell index of each point; may fall outside the mask array."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.floor((pts - self.bbox[:, 0]) / self.delta_ref).astype(int)

    def contains(self, points) -> np.ndarray:
        """True for points inside the masked region (half-open cells)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        idx = self.cell_index(pts)
        shape = np.asarray(self.mask.shape)
        ok = np.all((idx >= 0) & (idx < shape), axis=1)
        out = np.zeros(len(pts), dtype=bool)
        if ok.any():
            inside = idx[ok]
            out[ok] = self.mask[tuple(inside.T)]
        return out

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(self.bbox.tobytes())
        h.update(self.delta_ref.tobytes())
        h.update(np.packbits(self.mask.ravel()).tobytes())
        return h.hexdigest()[:16]

    # -- serialisation: JSON header {bbox, delta_ref} + CSV of 0/1 cells ----

    def to_files(self, json_path):
        """Write a JSON header and (next to it) a CSV of 0/1 mask cells."""
        json_path = Path(json_path)
        csv_path = json_path.with_suffix(".csv")
        header = {
            "bbox": self.bbox.tolist(),
            "delta_ref": self.delta_ref.tolist(),
            "mask_csv": csv_path.name,
        }
        json_path.write_text(json.dumps(header, indent=2) + "\n")
        np.savetxt(csv_path, np.atleast_2d(self.mask.astype(int)), fmt="%d", delimiter=",")
        return json_path

    @classmethod
    def from_files(cls, json_path):
        json_path = Path(json_path)
        header = json.loads(json_path.read_text())
        bbox = np.asarray(header["bbox"], dtype=float)
        if bbox.ndim == 1:
            bbox = bbox.reshape(1, 2)
        delta = np.asarray(header["delta_ref"], dtype=float)
        if "mask_csv" in header and header["mask_csv"] is not None:
            mask = np.loadtxt(json_path.parent / header["mask_csv"], delimiter=",", ndmin=2)
            mask = mask.astype(bool)
            if bbox.shape[0] == 1:
                mask = mask.ravel()
        else:
            lengths = bbox[:, 1] - bbox[:, 0]
            shape = tuple(int(round(lengths[j] / delta[j])) for j in range(bbox.shape[0]))
            mask = np.ones(shape, dtype=bool)
        return cls(bbox=bbox, delta_ref=delta, mask=mask)


@dataclass(frozen=True, eq=False)
class SamplingScheme:
    """How a process is observed: continuously, or on a rectangular grid.

    Grid schemes carry the spacing ``delta`` and offset ``offset`` defining
    the node set ``{z * delta + offset : z integer}``.  Continuous schemes
    only need the dimension.
    """

    kind: str
    ndim: int
    delta: np.ndarray | None = None
    offset: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("continuous", "grid"):
            raise ValueError(f"unknown sampling kind {self.kind!r}")
        if self.kind == "grid":
            delta = _vector(self.delta, self.ndim, "delta")
            if not np.all(delta > 0):
                raise ValueError("grid spacings must be positive")
            offset = (
                np.zeros(self.ndim)
                if self.offset is None
                else _vector(self.offset, self.ndim, "offset")
            )
            object.__setattr__(self, "delta", _freeze(delta))
            object.__setattr__(self, "offset", _freeze(offset))
        else:
            object.__setattr__(self, "delta", None)
            object.__setattr__(self, "offset", None)

    @classmethod
    def continuous(cls, ndim: int) -> "SamplingScheme":
        return cls(kind="continuous", ndim=ndim)

    @classmethod
    def grid(cls, delta, offset=None) -> "SamplingScheme":
        delta = _vector(delta, name="delta")
        return cls(kind="grid", ndim=delta.size, delta=delta, offset=offset)

    @property
    def is_grid(self) -> bool:
        return self.kind == "grid"

    def same_grid(self, other: "SamplingScheme", tol: float = 1e-12) -> bool:
        if not (self.is_grid and other.is_grid) or self.ndim != other.ndim:
            return False
        return bool(
            np.allclose(self.delta, other.delta, rtol=0, atol=tol)
            and np.allclose(self.offset, other.offset, rtol=0, atol=tol)
        )

    def grid_nodes(self, region: Region):
        """Grid nodes inside the region mask.

        Returns
        -------
        zindex : (n, d) int array
            Integer node coordinates, lexicographically ordered.
        positions : (n, d) float array
            ``zindex * delta + offset``.
        """
        if not self.is_grid:
            raise ValueError("grid_nodes requires a grid sampling scheme")
        lo, hi = region.bbox[:, 0], region.bbox[:, 1]
        zlo = np.ceil((lo - self.offset) / self.delta - 1e-12).astype(int)
        zhi = np.floor((hi - self.offset) / self.delta + 1e-12).astype(int)
        axes = [np.arange(zlo[j], zhi[j] + 1) for j in range(self.ndim)]
        grids = np.meshgrid(*axes, indexing="ij")
        zindex = np.stack([g.ravel() for g in grids], axis=-1)
        positions = zindex * self.delta + self.offset
        keep = region.contains(positions)
        return zindex[keep], positions[keep]

    def to_dict(self) -> dict:
        if self.is_grid:
            return {"kind": "grid", "delta": self.delta.tolist(), "offset": self.offset.tolist()}
        return {"kind": "continuous", "ndim": self.ndim}

    @classmethod
    def from_dict(cls, d: dict) -> "SamplingScheme":
        if d.get("kind", "grid") == "continuous":
            return cls.continuous(int(d["ndim"]))
        return cls.grid(d["delta"], d.get("offset"))


def nyquist_box(scheme: SamplingScheme) -> np.ndarray:
    """Fundamental wavenumber box ``prod_j [-1/(2 delta_j), 1/(2 delta_j)]``.

    Only grid schemes alias, so only they have one.
    """
    if not scheme.is_grid:
        raise ValueError("no Nyquist box for continuous sampling")
    half = 1.0 / (2.0 * scheme.delta)
    return np.stack([-half, half], axis=1)


@dataclass(frozen=True, eq=False)
class AliasStructure:
    """Wavenumber replica lattice of a sampling scheme, with phase weights.

    ``generators[j]`` is the replica spacing ``1/delta_j`` for a grid scheme
    and 0 for continuous sampling (meaning only the origin).  The phase of a
    replica ``psi`` is ``exp(-2 pi i offset . psi)``; it forms a character of
    the lattice (``phase(a + b) = phase(a) phase(b)``).
    """

    generators: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        gens = _vector(self.generators, name="generators")
        off = _vector(self.offset, gens.size, "offset")
        if np.any(gens < 0):
            raise ValueError("generators must be non-negative")
        object.__setattr__(self, "generators", _freeze(gens))
        object.__setattr__(self, "offset", _freeze(off))

    @classmethod
    def from_scheme(cls, scheme: SamplingScheme) -> "AliasStructure":
        if scheme.is_grid:
            return cls(generators=1.0 / scheme.delta, offset=scheme.offset.copy())
        return cls(generators=np.zeros(scheme.ndim), offset=np.zeros(scheme.ndim))

    @property
    def ndim(self) -> int:
        return self.generators.size

    @property
    def is_trivial(self) -> bool:
        return bool(np.all(self.generators == 0))

    def phase(self, psi):
        """Phase weight of replica(s) ``psi``; vectorised over rows."""
        psi = np.asarray(psi, dtype=float)
        return np.exp(-2j * np.pi * (psi @ self.offset))

    def lattice_points(self, radius: float) -> np.ndarray:
        """All lattice points with ``max_j |psi_j| <= radius``, origin first."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        axes = []
        for g in self.generators:
            if g == 0:
                axes.append(np.array([0.0]))
            else:
                n = int(np.floor(radius / g + 1e-12))
                axes.append(np.arange(-n, n + 1) * g)
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        order = np.argsort(np.max(np.abs(pts), axis=1), kind="stable")
        return pts[order]


def alias_set(scheme: SamplingScheme, radius: float):
    """Replica lattice points within ``radius`` (sup norm), with phases.

    Returns a list of ``(psi, phase)`` pairs; continuous schemes give just
    ``[(0, 1)]``.
    """
    struct = AliasStructure.from_scheme(scheme)
    pts = struct.lattice_points(radius)
    phases = struct.phase(pts)
    return [(pts[i], complex(phases[i])) for i in range(len(pts))]


def _rationalize(x: float):
    """Small-denominator rational approximation of ``x``, or None."""
    if x <= 0 or not np.isfinite(x):
        return None
    frac = Fraction(x).limit_denominator(_MAX_DENOMINATOR)
    if frac.numerator == 0:
        return None
    if abs(float(frac) - x) <= RATIONAL_TOL * max(1.0, abs(x)):
        return frac
    return None


def alias_intersection(a: SamplingScheme, b: SamplingScheme) -> np.ndarray:
    """Generator vector of the intersection of two replica lattices.

    Per dimension: if the spacing ratio ``delta_a / delta_b`` is rational
    ``p/q`` in lowest terms, the intersection in that dimension is generated
    by ``p / delta_a``; an irrational ratio (or a continuous scheme) leaves
    only the origin, encoded as generator 0.
    """
    d = a.ndim
    if b.ndim != d:
        raise ValueError("schemes have different dimensions")
    if not (a.is_grid and b.is_grid):
        return np.zeros(d)
    gens = np.zeros(d)
    for j in range(d):
        frac = _rationalize(a.delta[j] / b.delta[j])
        if frac is not None:
            gens[j] = frac.numerator / a.delta[j]
    return gens


def intersect_alias_structures(a: AliasStructure, b: AliasStructure) -> np.ndarray:
    """Like :func:`alias_intersection` but acting on alias structures."""
    d = a.ndim
    if b.ndim != d:
        raise ValueError("alias structures have different dimensions")
    gens = np.zeros(d)
    for j in range(d):
        if a.generators[j] == 0 or b.generators[j] == 0:
            continue
        # delta_a / delta_b = gen_b / gen_a
        frac = _rationalize(b.generators[j] / a.generators[j])
        if frac is not None:
            gens[j] = frac.numerator * a.generators[j]
    return gens


@dataclass(frozen=True, eq=False)
class WavenumberGrid:
    """Ordered set of wavenumbers at which spectra are evaluated.

    Tensor-product grids built via :meth:`from_axes` or :meth:`fourier` keep
    their per-dimension axes; the FFT fast paths in the transform code only
    trigger for such grids.  ``symmetric`` asserts closure under negation.
    """

    points: np.ndarray
    symmetric: bool = False
    axes: tuple | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError("points must be an (K, d) array")
        object.__setattr__(self, "points", _freeze(pts))
        if self.axes is not None:
            axes = tuple(_freeze(np.asarray(ax, dtype=float).copy()) for ax in self.axes)
            if len(axes) != pts.shape[1]:
                raise ValueError("axes count does not match dimension")
            object.__setattr__(self, "axes", axes)

    @classmethod
    def from_axes(cls, axes, symmetric=None) -> "WavenumberGrid":
        if isinstance(axes, np.ndarray) and axes.ndim == 1:
            axes = [axes]
        axes = [np.asarray(ax, dtype=float) for ax in axes]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        if symmetric is None:
            symmetric = all(
                np.allclose(np.sort(ax), np.sort(-ax), rtol=0, atol=1e-12) for ax in axes
            )
        return cls(points=pts, symmetric=bool(symmetric), axes=tuple(axes))

    @classmethod
    def fourier(cls, lengths, kmax, pad=1) -> "WavenumberGrid":
        """Symmetric Fourier grid of a box: spacing ``1/(pad * L_j)``.

        ``kmax`` (scalar or per-dimension) truncates each axis; pass the
        Nyquist box of the coarsest grid-sampled process to avoid the heavily
        aliased corners, or the full extent of interest with ``full_k``
        semantics handled by the caller.
        """
        lengths = _vector(lengths, name="lengths")
        kmax = np.broadcast_to(np.asarray(kmax, dtype=float), lengths.shape)
        axes = []
        for j, L in enumerate(lengths):
            dk = 1.0 / (pad * L)
            n = int(np.floor(kmax[j] / dk + 1e-9))
            axes.append(np.arange(-n, n + 1) * dk)
        return cls.from_axes(axes, symmetric=True)

    @property
    def ndim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def axis_spacing(self):
        """Per-axis uniform spacing, or None if not a uniform tensor grid."""
        if self.axes is None:
            return None
        spacing = []
        for ax in self.axes:
            if ax.size < 2:
                spacing.append(None)
                continue
            diffs = np.diff(ax)
            h = diffs.mean()
            if h <= 0 or np.max(np.abs(diffs - h)) > 1e-9 * abs(h):
                return None
            spacing.append(h)
        if any(s is None for s in spacing):
            return None
        return np.asarray(spacing)

    def integer_modes(self):
        """Axes as integer multiples of the spacing, or None.

        Returns ``(modes, spacing)`` where ``modes[j]`` is an int array with
        ``axes[j] = modes[j] * spacing[j]``, when such a representation holds
        to 1e-9 relative; used by the FFT fast paths.
        """
        spacing = self.axis_spacing()
        if spacing is None:
            return None
        modes = []
        for ax, h in zip(self.axes, spacing):
            m = ax / h
            mi = np.round(m).astype(int)
            if np.max(np.abs(m - mi)) > 1e-9:
                return None
            modes.append(mi)
        return modes, spacing

    def negation_index(self) -> np.ndarray:
        """Index of ``-k`` for each point (requires a symmetric grid)."""
        scale = max(np.max(np.abs(self.points)), 1.0)
        key = np.round(self.points / scale * 1e12).astype(np.int64)
        lookup = {tuple(row): i for i, row in enumerate(key)}
        out = np.empty(self.size, dtype=int)
        for i, row in enumerate(-key):
            try:
                out[i] = lookup[tuple(row)]
            except KeyError:
                raise ValueError("grid is not closed under negation") from None
        return out
