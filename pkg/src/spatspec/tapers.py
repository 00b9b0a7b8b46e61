"""Concentrated taper families on arbitrary observation regions.

The base tapers maximise spectral concentration in a ball of radius
``bandwidth`` around wavenumber zero, subject to vanishing outside the
region.  They are the eigenvectors of the restrict -> bandlimit -> restrict
operator, discretised on the region's reference lattice:

    (K x)(s_i) = sum_j kernel_b(s_i - s_j) x(s_j) * cell_area

with ``kernel_b`` the inverse Fourier transform of the indicator of the ball
of radius ``b`` (a sinc in 1-d, a J1 kernel in 2-d).  Eigenvalues are the
concentrations.  Dense symmetric eigensolve up to ``DENSE_CELL_LIMIT`` cells,
FFT-convolution matvec with a restarted Lanczos solver beyond that.

Continuous tapers are multilinear interpolations of the lattice values, and
grid-sampled tapers are subsamples of those continuous tapers, so every
process is smoothed by (a replica of) the same transfer function.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import LinearOperator, eigsh
from scipy.fft import rfftn, irfftn, next_fast_len
from scipy.spatial.distance import cdist
from scipy.special import j1

from .geometry import Region, SamplingScheme, WavenumberGrid
from .nufft import nudft_direct, uniform_grid_dft

__all__ = [
    "TaperFamily",
    "SampledTaper",
    "TransferFunction",
    "compute_tapers",
    "interpolated_value",
    "sample_taper",
    "transfer_function",
    "concentration",
    "interpolated_gram",
    "interpolation_gram_bound",
]

DENSE_CELL_LIMIT = 4000
DEFAULT_THRESHOLD = 0.99


def ball_kernel(r, bandwidth: float, ndim: int):
    """Inverse Fourier transform of the indicator of the ball radius ``b``.

    1-d: ``2 b sinc(2 pi b r)``; 2-d: ``b J1(2 pi b r) / r`` with the value
    ``pi b^2`` at the origin.
    """
    r = np.asarray(r, dtype=float)
    shape = r.shape
    r = np.atleast_1d(r)
    b = float(bandwidth)
    if ndim == 1:
        return (2.0 * b * np.sinc(2.0 * b * r)).reshape(shape)
    if ndim == 2:
        out = np.full(r.shape, np.pi * b * b)
        nz = r > 0
        rnz = r[nz]
        out[nz] = b * j1(2.0 * np.pi * b * rnz) / rnz
        return out.reshape(shape)
    raise ValueError("ball_kernel supports d in (1, 2)")


def shannon_count(region: Region, bandwidth: float) -> float:
    """Area times ball volume: the expected number of well-concentrated tapers."""
    if region.ndim == 1:
        return 2.0 * bandwidth * region.area
    return np.pi * bandwidth**2 * region.area


@dataclass(frozen=True, eq=False)
class TaperFamily:
    """Orthonormal concentrated tapers on a region's reference lattice.

    ``values[m]`` holds taper m over the full lattice (zero outside the
    mask), already scaled by ``1/sqrt(prod(delta_ref))`` so the lattice
    quadrature of ``h_m h_m'`` is the identity and the multilinear
    interpolant has (approximately) unit L2 norm.
    """

    region: Region
    bandwidth: float
    values: np.ndarray
    concentrations: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        conc = np.asarray(self.concentrations, dtype=float)
        if vals.shape[0] != conc.shape[0]:
            raise ValueError("values / concentrations count mismatch")
        if vals.shape[1:] != self.region.mask.shape:
            raise ValueError("taper lattice does not match region mask")
        vals.flags.writeable = False
        conc.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "concentrations", conc)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def delta_ref(self) -> np.ndarray:
        return self.region.delta_ref

    @property
    def norm_scale(self) -> float:
        """The 1/sqrt(cell area) factor already folded into ``values``."""
        return float(1.0 / np.sqrt(np.prod(self.region.delta_ref)))

    def gram(self) -> np.ndarray:
        """Lattice inner products; identity to solver precision."""
        flat = self.values.reshape(self.count, -1)
        return (flat @ flat.T) * np.prod(self.region.delta_ref)

    # -- serialisation ------------------------------------------------------

    def to_dir(self, path) -> Path:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        self.region.to_files(path / "region.json")
        meta = {
            "bandwidth": self.bandwidth,
            "concentrations": self.concentrations.tolist(),
            "delta_ref": self.region.delta_ref.tolist(),
            "bbox": self.region.bbox.tolist(),
            "region_hash": self.region.content_hash(),
            "count": self.count,
        }
        (path / "metadata.json").write_text(json.dumps(meta, indent=2) + "\n")
        for m in range(self.count):
            np.savetxt(
                path / f"taper_{m:03d}.csv",
                np.atleast_2d(self.values[m]),
                delimiter=",",
                fmt="%.17g",
            )
        return path

    @classmethod
    def from_dir(cls, path) -> "TaperFamily":
        path = Path(path)
        meta = json.loads((path / "metadata.json").read_text())
        region = Region.from_files(path / "region.json")
        vals = []
        for m in range(meta["count"]):
            arr = np.loadtxt(path / f"taper_{m:03d}.csv", delimiter=",", ndmin=2)
            if region.ndim == 1:
                arr = arr.ravel()
            vals.append(arr)
        return cls(
            region=region,
            bandwidth=float(meta["bandwidth"]),
            values=np.stack(vals),
            concentrations=np.asarray(meta["concentrations"], dtype=float),
        )


def _dense_eigs(centers, bandwidth, ndim, cell_area, k):
    dist = cdist(centers, centers)
    A = ball_kernel(dist, bandwidth, ndim) * cell_area
    n = len(centers)
    w, v = eigh(A, subset_by_index=[n - k, n - 1])
    return w[::-1], v[:, ::-1]


def _fft_operator(region: Region, bandwidth: float):
    """Matrix-free restrict->bandlimit->restrict matvec via padded FFTs."""
    shape = region.mask.shape
    padded = tuple(next_fast_len(2 * s - 1) for s in shape)
    lags = []
    for j, s in enumerate(padded):
        idx = np.arange(s)
        lag = np.where(idx <= s // 2, idx, idx - s)
        lags.append(lag * region.delta_ref[j])
    if region.ndim == 1:
        r = np.abs(lags[0])
    else:
        r = np.sqrt(lags[0][:, None] ** 2 + lags[1][None, :] ** 2)
    kern_hat = rfftn(ball_kernel(r, bandwidth, region.ndim) * np.prod(region.delta_ref))
    mask = region.mask

    def matvec(x):
        grid = np.zeros(shape)
        grid[mask] = x
        conv = irfftn(rfftn(grid, padded) * kern_hat, padded)
        return conv[tuple(slice(0, s) for s in shape)][mask]

    n = int(mask.sum())
    return LinearOperator((n, n), matvec=matvec, dtype=float)


def _iterative_eigs(region, bandwidth, k):
    op = _fft_operator(region, bandwidth)
    n = op.shape[0]
    v0 = np.full(n, 1.0 / np.sqrt(n))
    w, v = eigsh(op, k=k, which="LA", v0=v0, maxiter=5000)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def compute_tapers(
    region: Region,
    bandwidth: float,
    count: int | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    dense_cell_limit: int = DENSE_CELL_LIMIT,
) -> TaperFamily:
    """Solve the concentration problem on the region's reference lattice.

    Returns either exactly ``count`` tapers (most concentrated first) or all
    tapers with concentration at least ``threshold``.

    Raises
    ------
    ValueError
        If the region is empty, or no taper reaches the threshold (the error
        message reports the best available concentration).
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    centers = region.cell_centers()
    n = len(centers)
    if n == 0:
        raise ValueError("region mask is empty")
    cell_area = float(np.prod(region.delta_ref))

    if count is not None:
        if not 1 <= count <= n:
            raise ValueError(f"count must be in [1, {n}]")
        want = count
    else:
        want = min(n, int(np.ceil(1.5 * shannon_count(region, bandwidth))) + 8)

    max_req = n if n <= dense_cell_limit else n - 2
    while True:
        k_req = min(want, max_req)
        if n <= dense_cell_limit:
            eigvals, eigvecs = _dense_eigs(centers, bandwidth, region.ndim, cell_area, k_req)
        else:
            eigvals, eigvecs = _iterative_eigs(region, bandwidth, k_req)
        if count is not None:
            keep = count
            break
        keep = int(np.sum(eigvals >= threshold))
        if keep < len(eigvals) or k_req >= max_req:
            break
        want = 2 * want  # every returned taper passed; fetch more

    if count is None and keep == 0:
        raise ValueError(
            f"no taper reaches concentration {threshold}; best available is "
            f"{eigvals[0]:.6f} - increase the bandwidth or lower the threshold"
        )

    eigvals = eigvals[:keep]
    eigvecs = eigvecs[:, :keep]

    # deterministic sign: positive sum, falling back to the largest element
    for m in range(keep):
        v = eigvecs[:, m]
        s = v.sum()
        if abs(s) < 1e-9 * np.abs(v).sum():
            s = v[np.argmax(np.abs(v))]
        if s < 0:
            eigvecs[:, m] = -v

    scale = 1.0 / np.sqrt(cell_area)
    values = np.zeros((keep,) + region.mask.shape)
    values[:, region.mask] = (eigvecs * scale).T
    return TaperFamily(
        region=region,
        bandwidth=float(bandwidth),
        values=values,
        concentrations=np.clip(eigvals, 0.0, None),
    )


# -- interpolation ----------------------------------------------------------


def _padded(family: TaperFamily, m: int) -> np.ndarray:
    return np.pad(family.values[m], 1)


def interpolated_value(family: TaperFamily, m: int, u) -> np.ndarray:
    """Multilinear interpolation of taper ``m`` at location(s) ``u``.

    Nodes are the lattice cell centres; the taper ramps to zero over the
    half-cell rim and is exactly zero outside the bounding box.
    """
    region = family.region
    pts = np.asarray(u, dtype=float)
    scalar = pts.ndim == 1 and region.ndim > 1 or pts.ndim == 0
    pts = np.atleast_2d(pts)
    if pts.shape[1] != region.ndim:
        pts = pts.reshape(-1, region.ndim)

    padded = _padded(family, m)
    # fractional index into the padded array (node p maps to centre p-1)
    t = (pts - region.bbox[:, 0]) / region.delta_ref + 0.5
    inside = np.all((pts >= region.bbox[:, 0]) & (pts < region.bbox[:, 1]), axis=1)

    i0 = np.floor(t).astype(int)
    frac = t - i0
    shape = np.asarray(padded.shape)
    i0 = np.clip(i0, 0, shape - 2)

    if region.ndim == 1:
        a = padded[i0[:, 0]]
        b = padded[i0[:, 0] + 1]
        vals = a * (1 - frac[:, 0]) + b * frac[:, 0]
    else:
        fx, fy = frac[:, 0], frac[:, 1]
        ix, iy = i0[:, 0], i0[:, 1]
        vals = (
            padded[ix, iy] * (1 - fx) * (1 - fy)
            + padded[ix + 1, iy] * fx * (1 - fy)
            + padded[ix, iy + 1] * (1 - fx) * fy
            + padded[ix + 1, iy + 1] * fx * fy
        )
    vals = np.where(inside, vals, 0.0)
    return float(vals[0]) if scalar else vals


def interpolated_gram(family: TaperFamily) -> np.ndarray:
    """Exact L2 inner products of the interpolated tapers.

    Multilinear interpolation expands each taper in tensor-product hat
    functions, so the inner products follow from the separable second-order
    mass stencil ``[1/6, 2/3, 1/6]`` per dimension.
    """
    vals = family.values
    smoothed = vals.copy()
    stencil = np.array([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0])
    for axis in range(1, vals.ndim):
        padded = np.pad(smoothed, [(0, 0)] + [(1, 1) if a == axis else (0, 0) for a in range(1, vals.ndim)])
        sl = [slice(None)] * vals.ndim
        acc = np.zeros_like(smoothed)
        for o, w in zip((0, 1, 2), stencil):
            sl[axis] = slice(o, o + vals.shape[axis])
            acc += w * padded[tuple(sl)]
        smoothed = acc
    flat_v = vals.reshape(family.count, -1)
    flat_s = smoothed.reshape(family.count, -1)
    return (flat_v @ flat_s.T) * np.prod(family.region.delta_ref)


def interpolation_gram_bound(family: TaperFamily) -> np.ndarray:
    """Bound on |interpolated Gram - lattice Gram| from neighbour differences.

    For lattice functions g, h the interpolation changes the inner product by
    at most ``||g||_1 max|dh| + ||h||_1 max|dg|`` (times the cell area), with
    ``max|df|`` the largest difference between a node and any of its corner
    neighbours, zero padding included.
    """
    vals = family.values
    M = family.count
    maxdiff = np.zeros(M)
    l1 = np.abs(vals.reshape(M, -1)).sum(axis=1)
    for m in range(M):
        padded = np.pad(vals[m], 1)
        base = padded[(slice(0, -1),) * vals[m].ndim]
        worst = 0.0
        shifts = [(1,)] if vals[m].ndim == 1 else [(0, 1), (1, 0), (1, 1)]
        for shift in shifts:
            sl = tuple(slice(s, s + n - 1) for s, n in zip(shift, padded.shape))
            worst = max(worst, np.max(np.abs(padded[sl] - base)))
        maxdiff[m] = worst
    bound = l1[:, None] * maxdiff[None, :] + l1[None, :] * maxdiff[:, None]
    return bound * np.prod(family.region.delta_ref)


# -- sampling and transfer functions ----------------------------------------


@dataclass(frozen=True, eq=False)
class SampledTaper:
    """A continuous taper restricted to the nodes of a sampling grid."""

    scheme: SamplingScheme
    taper_index: int
    zindex: np.ndarray
    positions: np.ndarray
    weights: np.ndarray
    scale: float

    def __post_init__(self):
        for name in ("zindex", "positions", "weights"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def sample_taper(family: TaperFamily, m: int, scheme: SamplingScheme, region: Region | None = None) -> SampledTaper:
    """Subsample taper ``m`` onto the grid nodes inside the region."""
    if not scheme.is_grid:
        raise ValueError("sample_taper requires a grid sampling scheme")
    region = family.region if region is None else region
    zindex, positions = scheme.grid_nodes(region)
    if len(zindex) == 0:
        raise ValueError("sampling grid has no nodes inside the region")
    weights = interpolated_value(family, m, positions)
    return SampledTaper(
        scheme=scheme,
        taper_index=m,
        zindex=zindex,
        positions=positions,
        weights=np.asarray(weights, dtype=float),
        scale=float(np.prod(scheme.delta)),
    )


@dataclass(frozen=True, eq=False)
class TransferFunction:
    """A taper's transfer function tabulated on a wavenumber grid.

    ``at(k)`` evaluates the same function at arbitrary wavenumbers (used by
    the convolution oracles); ``scheme`` records the sampling the transfer
    function belongs to, if any.
    """

    grid: WavenumberGrid
    values: np.ndarray
    taper_index: int
    scheme: SamplingScheme | None = None
    _evaluator: object = None

    def at(self, kpoints) -> np.ndarray:
        if self._evaluator is None:
            raise ValueError("transfer function has no pointwise evaluator")
        kpts = np.asarray(kpoints, dtype=float)
        if kpts.ndim == 1 and self.grid.ndim > 1:
            kpts = kpts.reshape(1, -1)
        return self._evaluator(np.atleast_2d(kpts))


def _reference_lattice(region: Region):
    """The region's reference lattice viewed as an integer grid."""
    idx = np.argwhere(region.mask)
    offset = region.bbox[:, 0] + 0.5 * region.delta_ref
    return idx, offset


def continuous_transfer_values(family: TaperFamily, m: int, kgrid: WavenumberGrid) -> np.ndarray:
    """Transfer function of the interpolated taper on a wavenumber grid.

    Lattice DFT of the stored values times the squared-sinc factor of
    multilinear interpolation, times the cell area.
    """
    region = family.region
    idx, offset = _reference_lattice(region)
    coeffs = family.values[m][region.mask]
    vals = uniform_grid_dft(idx, region.delta_ref, offset, coeffs, kgrid)
    return vals * np.prod(region.delta_ref) * _sinc_sq(kgrid.points, region.delta_ref)


def _sinc_sq(kpoints: np.ndarray, delta: np.ndarray) -> np.ndarray:
    out = np.ones(len(kpoints))
    for j in range(kpoints.shape[1]):
        out *= np.sinc(delta[j] * kpoints[:, j]) ** 2
    return out


def transfer_function(
    family: TaperFamily,
    m: int,
    scheme: SamplingScheme,
    kgrid: WavenumberGrid,
) -> TransferFunction:
    """Transfer function of taper ``m`` under the given sampling.

    Continuous sampling gives the interpolated taper's Fourier transform;
    grid sampling gives the (periodic) finite sum over the sampled taper.
    """
    region = family.region
    if scheme.is_grid:
        sampled = sample_taper(family, m, scheme, region)

        def evaluate(kpts):
            g = WavenumberGrid(points=kpts)
            return sampled.scale * uniform_grid_dft(
                sampled.zindex, scheme.delta, scheme.offset, sampled.weights, g
            )

        vals = sampled.scale * uniform_grid_dft(
            sampled.zindex, scheme.delta, scheme.offset, sampled.weights, kgrid
        )
        return TransferFunction(grid=kgrid, values=vals, taper_index=m, scheme=scheme, _evaluator=evaluate)

    idx, offset = _reference_lattice(region)
    coeffs = family.values[m][region.mask]
    area = np.prod(region.delta_ref)

    def evaluate(kpts):
        g = WavenumberGrid(points=kpts)
        return (
            uniform_grid_dft(idx, region.delta_ref, offset, coeffs, g)
            * area
            * _sinc_sq(g.points, region.delta_ref)
        )

    vals = continuous_transfer_values(family, m, kgrid)
    return TransferFunction(grid=kgrid, values=vals, taper_index=m, scheme=scheme, _evaluator=evaluate)


def concentration(tf: TransferFunction, bandwidth: float) -> float:
    """Quadrature of ``|H|^2`` over the ball of radius ``bandwidth``.

    The tabulation must be a uniform tensor grid with spacing at most
    ``bandwidth / 16`` covering a box out to at least ``3 * bandwidth`` per
    dimension; raises ValueError otherwise.
    """
    spacing = tf.grid.axis_spacing()
    if spacing is None:
        raise ValueError("concentration needs a uniform tensor wavenumber grid")
    if np.any(spacing > bandwidth / 16 + 1e-12):
        raise ValueError("wavenumber grid too coarse: need spacing <= bandwidth/16")
    for ax in tf.grid.axes:
        if ax.max() < 3 * bandwidth - 1e-12 or ax.min() > -3 * bandwidth + 1e-12:
            raise ValueError("wavenumber grid must cover a box out to 3*bandwidth")
    knorm = np.linalg.norm(tf.grid.points, axis=1)
    inside = knorm <= bandwidth
    return float(np.sum(np.abs(tf.values[inside]) ** 2) * np.prod(spacing))
