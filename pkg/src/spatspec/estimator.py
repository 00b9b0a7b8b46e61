"""Multitaper spectral matrices, coherence, group delay, and bias oracles.

The estimator side is deliberately plain: periodograms are products of
tapered transforms sharing the same base taper index, and the multitaper
estimate is their average over tapers, which makes every per-wavenumber
matrix Hermitian positive semidefinite by construction.

The oracle side implements the finite-sample expectation of the periodogram
as a numerical convolution of the true spectrum with the relevant transfer
functions, the aliased spectrum as a truncated lattice sum, and the extra
terms picked up when the intensity is estimated rather than known.  These
are used to validate the estimator against simulations, not in the
estimation path itself.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .fourier import (
    GriddedField,
    PointPattern,
    SpatialDataset,
    TaperedDFT,
    intensity_estimate,
    tapered_dft_field,
    tapered_dft_points,
)
from .geometry import (
    AliasStructure,
    Region,
    SamplingScheme,
    WavenumberGrid,
    intersect_alias_structures,
)
from .nufft import uniform_grid_dft
from .tapers import TaperFamily, TransferFunction, sample_taper, transfer_function

__all__ = [
    "SpectralEstimate",
    "CoherenceField",
    "EstimationConfig",
    "periodogram",
    "multitaper_estimate",
    "coherence_and_delay",
    "expected_periodogram",
    "aliased_spectrum",
    "unknown_mean_bias",
    "UnknownMeanBias",
    "convolution_grid",
    "mean_weight_transfer",
]


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    """Per-wavenumber P x P spectral matrix estimate."""

    kgrid: WavenumberGrid
    fhat: np.ndarray
    ntapers: int
    labels: tuple
    bandwidth: float | None = None

    def __post_init__(self):
        fhat = np.asarray(self.fhat, dtype=complex)
        if fhat.ndim != 3 or fhat.shape[0] != self.kgrid.size or fhat.shape[1] != fhat.shape[2]:
            raise ValueError("fhat must have shape (K, P, P)")
        fhat.flags.writeable = False
        object.__setattr__(self, "fhat", fhat)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def nproc(self) -> int:
        return self.fhat.shape[1]

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.fhat - np.conj(np.swapaxes(self.fhat, 1, 2)))))

    def min_eigenvalue_ratio(self) -> float:
        """Smallest eigenvalue over trace, minimised over wavenumbers."""
        sym = 0.5 * (self.fhat + np.conj(np.swapaxes(self.fhat, 1, 2)))
        eigs = np.linalg.eigvalsh(sym)
        trace = np.real(np.trace(self.fhat, axis1=1, axis2=2))
        scale = np.maximum(np.abs(trace), 1e-300)
        return float(np.min(eigs[:, 0] / scale))

    def to_csv(self, path) -> Path:
        path = Path(path)
        d = self.kgrid.ndim
        cols = ["kx", "ky"][:d] + ["p", "q", "re", "im"]
        rows = []
        P = self.nproc
        for p in range(P):
            for q in range(P):
                block = np.column_stack(
                    [
                        self.kgrid.points,
                        np.full(self.kgrid.size, p),
                        np.full(self.kgrid.size, q),
                        self.fhat[:, p, q].real,
                        self.fhat[:, p, q].imag,
                    ]
                )
                rows.append(block)
        np.savetxt(path, np.vstack(rows), delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
        return path


@dataclass(frozen=True, eq=False)
class CoherenceField:
    """Coherence magnitude in [0, 1] and wrapped group delay in (-pi, pi]."""

    kgrid: WavenumberGrid
    r: np.ndarray
    theta: np.ndarray
    labels: tuple = ()

    def to_csv(self, path) -> Path:
        path = Path(path)
        d = self.kgrid.ndim
        cols = ["kx", "ky"][:d] + ["p", "q", "r", "theta"]
        rows = []
        P = self.r.shape[1]
        for p in range(P):
            for q in range(P):
                rows.append(
                    np.column_stack(
                        [
                            self.kgrid.points,
                            np.full(self.kgrid.size, p),
                            np.full(self.kgrid.size, q),
                            self.r[:, p, q],
                            self.theta[:, p, q],
                        ]
                    )
                )
        np.savetxt(path, np.vstack(rows), delimiter=",", header=",".join(cols), comments="", fmt="%.17g")
        return path


def periodogram(jp: TaperedDFT, jq: TaperedDFT, allow_mixed_tapers: bool = False) -> np.ndarray:
    """Cross-periodogram ``J_p(k) conj(J_q(k))``.

    Mixing different base-taper indices attenuates cross-spectra and is
    refused unless explicitly requested (the escape hatch exists only to
    demonstrate that attenuation).
    """
    if jp.grid.size != jq.grid.size:
        raise ValueError("tapered transforms live on different wavenumber grids")
    if jp.taper_index != jq.taper_index and not allow_mixed_tapers:
        raise ValueError(
            "periodogram of different base tapers requested; this biases "
            "cross-spectra towards zero (pass allow_mixed_tapers=True to force)"
        )
    return jp.values * np.conj(jq.values)


@dataclass
class EstimationConfig:
    """Knobs for :func:`multitaper_estimate`.

    ``oracle_intensity`` maps process labels to known intensities (bypassing
    the plug-in estimate).  ``allow_mixed_tapers`` shifts the taper index
    used for gridded fields by ``mixed_taper_shift``, deliberately breaking
    the matched-taper rule.
    """

    oracle_intensity: dict = field(default_factory=dict)
    allow_mixed_tapers: bool = False
    mixed_taper_shift: int = 1
    nudft_method: str = "auto"


def multitaper_estimate(
    dataset: SpatialDataset,
    family: TaperFamily,
    kgrid: WavenumberGrid,
    config: EstimationConfig | None = None,
) -> SpectralEstimate:
    """Average of rank-one periodogram matrices over the taper family.

    Every process is transformed with the same base taper index per term, so
    the estimate is Hermitian PSD and cross-spectra keep their magnitude.
    """
    config = config or EstimationConfig()
    if family.count < 1:
        raise ValueError("no tapers selected")
    region = dataset.region
    P = len(dataset)
    M = family.count
    cont = SamplingScheme.continuous(region.ndim)

    intensities = []
    for label, proc in zip(dataset.labels, dataset.processes):
        if label in config.oracle_intensity:
            intensities.append(float(config.oracle_intensity[label]))
        else:
            intensities.append(intensity_estimate(proc, region))

    point_transfer = {}
    sampled_tapers = {}
    for m in range(M):
        for proc in dataset.processes:
            if isinstance(proc, PointPattern):
                if m not in point_transfer:
                    point_transfer[m] = transfer_function(family, m, cont, kgrid)
            else:
                key = (m, proc.scheme.delta.tobytes(), proc.scheme.offset.tobytes())
                if key not in sampled_tapers:
                    sampled_tapers[key] = sample_taper(family, m, proc.scheme, region)

    J = np.empty((M, P, kgrid.size), dtype=complex)
    for m in range(M):
        for p, proc in enumerate(dataset.processes):
            if isinstance(proc, PointPattern):
                J[m, p] = tapered_dft_points(
                    proc,
                    family,
                    m,
                    kgrid,
                    region,
                    intensity=intensities[p],
                    method=config.nudft_method,
                    transfer=point_transfer[m],
                ).values
            else:
                m_eff = (m + config.mixed_taper_shift) % M if config.allow_mixed_tapers else m
                key = (m_eff, proc.scheme.delta.tobytes(), proc.scheme.offset.tobytes())
                if key not in sampled_tapers:
                    sampled_tapers[key] = sample_taper(family, m_eff, proc.scheme, region)
                J[m, p] = tapered_dft_field(
                    proc, sampled_tapers[key], kgrid, intensity=intensities[p]
                ).values

    fhat = np.einsum("mpk,mqk->kpq", J, np.conj(J)) / M
    return SpectralEstimate(
        kgrid=kgrid,
        fhat=fhat,
        ntapers=M,
        labels=dataset.labels,
        bandwidth=family.bandwidth,
    )


def coherence_and_delay(est: SpectralEstimate, floor: float | None = None) -> CoherenceField:
    """Plug-in coherence and wrapped group delay from a spectral estimate.

    Pairs whose marginal power falls at or below ``floor`` are flagged as
    NaN rather than divided; the default floor is 1e-12 times the largest
    marginal power in the estimate.
    """
    diag = np.real(np.einsum("kpp->kp", est.fhat))
    if floor is None:
        floor = 1e-12 * float(diag.max(initial=0.0))
    if floor < 0:
        raise ValueError("floor must be non-negative")
    P = est.nproc
    denom = np.sqrt(diag[:, :, None] * diag[:, None, :])
    valid = np.minimum(diag[:, :, None], diag[:, None, :]) > floor
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(est.fhat) / denom
    theta = np.angle(est.fhat)
    r[~valid] = np.nan
    theta[~valid] = np.nan
    # clip pure rounding overshoot; anything larger is a real signal
    tiny = r <= 1.0 + 1e-9
    r[tiny & (r > 1.0)] = 1.0
    for p in range(P):
        ok = diag[:, p] > floor
        r[ok, p, p] = 1.0
        theta[ok, p, p] = 0.0
    return CoherenceField(kgrid=est.kgrid, r=r, theta=theta, labels=est.labels)


# -- oracles -------------------------------------------------------------------


def _alias_structure_of(tf: TransferFunction, ndim: int) -> AliasStructure:
    if tf.scheme is None or not tf.scheme.is_grid:
        return AliasStructure(generators=np.zeros(ndim), offset=np.zeros(ndim))
    return AliasStructure.from_scheme(tf.scheme)


def _aliased_values(
    f_true,
    gens: np.ndarray,
    alias_p: AliasStructure,
    alias_q: AliasStructure,
    kpoints: np.ndarray,
    radius: float,
    tol: float,
):
    """Lattice sum ``sum_psi f(k + psi) conj(w_p(psi)) w_q(psi)``.

    The phase pairing matches the exact quasi-periodicity of the sampled
    transfer functions, so the sum is the large-domain limit of the
    periodogram's expectation.  Summation proceeds shell by shell in the
    sup-norm; the last shell must contribute less than ``tol`` relative, else
    the tail is considered non-decaying.
    """
    kpoints = np.atleast_2d(kpoints)
    active = gens > 0
    if not active.any():
        return np.asarray(f_true(kpoints), dtype=complex)
    n_shells = int(max(np.floor(radius / gens[active] + 1e-12).max(), 0))
    total = np.zeros(len(kpoints), dtype=complex)
    last = np.zeros(len(kpoints), dtype=complex)
    for shell in range(n_shells + 1):
        pts = _shell_points(gens, shell, radius)
        if len(pts) == 0:
            break
        phases = np.conj(alias_p.phase(pts)) * alias_q.phase(pts)
        last = np.zeros(len(kpoints), dtype=complex)
        for psi, ph in zip(pts, phases):
            last = last + ph * np.asarray(f_true(kpoints + psi), dtype=complex)
        total = total + last
    if n_shells > 0:
        scale = np.max(np.abs(total))
        if scale > 0 and np.max(np.abs(last)) > tol * scale:
            raise ValueError(
                "aliased sum tail is not decaying: last shell contributes "
                f"{np.max(np.abs(last)) / scale:.2e} relative (radius too small?)"
            )
    return total


def _shell_points(gens: np.ndarray, shell: int, radius: float) -> np.ndarray:
    """Lattice points whose integer sup-norm equals ``shell``."""
    axes = []
    for g in gens:
        if g == 0:
            axes.append(np.array([0]))
        else:
            n = min(shell, int(np.floor(radius / g + 1e-12)))
            axes.append(np.arange(-n, n + 1))
    grids = np.meshgrid(*axes, indexing="ij")
    z = np.stack([g.ravel() for g in grids], axis=-1)
    norm = np.max(np.abs(z), axis=1)
    z = z[norm == shell]
    return z * gens


def aliased_spectrum(
    f_true,
    alias_p: AliasStructure,
    alias_q: AliasStructure,
    k,
    radius: float,
    tol: float = 1e-6,
):
    """Aliased spectral density: the estimand under grid sampling.

    Sums ``f`` over the intersection of the two replica lattices with the
    offset phases attached, truncated at sup-norm ``radius``.  When either
    process is continuously observed the intersection is trivial and the
    plain spectrum comes back.
    """
    gens = intersect_alias_structures(alias_p, alias_q)
    k = np.asarray(k, dtype=float)
    squeeze = k.ndim <= 1
    kpts = k.reshape(1, -1) if k.ndim <= 1 else k
    vals = _aliased_values(f_true, gens, alias_p, alias_q, kpts, radius, tol)
    return complex(vals[0]) if squeeze else vals


def convolution_grid(
    alias_p: AliasStructure,
    alias_q: AliasStructure,
    bandwidth: float,
    spacing: float | None = None,
    extent: float | None = None,
) -> WavenumberGrid:
    """Quadrature grid for the expectation convolution.

    Covers one fundamental cell of the alias-intersection lattice per
    dimension when that cell is small (the transfer-function product is
    exactly quasi-periodic over it), or a box of half-width ``extent``
    (default four bandwidths) where aliasing is absent.  Node counts are
    even so a stride-2 subsample remains a valid quadrature rule.
    """
    spacing = bandwidth / 8.0 if spacing is None else spacing
    extent = 4.0 * bandwidth if extent is None else extent
    gens = intersect_alias_structures(alias_p, alias_q)
    axes = []
    for g in gens:
        width = g if 0 < g <= 2.0 * extent else 2.0 * extent
        n = int(np.ceil(width / spacing))
        n += n % 2
        h = width / n
        axes.append(-width / 2.0 + np.arange(n) * h)
    return WavenumberGrid.from_axes(axes, symmetric=False)


def expected_periodogram(
    f_true,
    tfp: TransferFunction,
    tfq: TransferFunction,
    k,
    alias_radius: float | None = None,
    tol: float | None = None,
    alias_tol: float = 1e-6,
) -> complex:
    """Finite-sample expectation of the cross-periodogram at ``k``.

    Numerical convolution of the true spectrum with the product of the two
    transfer functions, tabulated by the caller on a shared uniform grid
    (see :func:`convolution_grid`).  When ``tol`` is given, the quadrature is
    repeated on a stride-2 subgrid and the difference must stay below the
    tolerance, else a ValueError reports the self-estimated error.
    """
    grid = tfp.grid
    if tfq.grid.size != grid.size or not np.array_equal(tfq.grid.points, grid.points):
        raise ValueError("transfer functions are tabulated on different grids")
    spacing = grid.axis_spacing()
    if spacing is None:
        raise ValueError("expected_periodogram needs a uniform tensor quadrature grid")
    ndim = grid.ndim
    alias_p = _alias_structure_of(tfp, ndim)
    alias_q = _alias_structure_of(tfq, ndim)
    gens = intersect_alias_structures(alias_p, alias_q)
    if alias_radius is None:
        alias_radius = 0.0 if not (gens > 0).any() else 40.0 * float(gens[gens > 0].max())

    k = np.asarray(k, dtype=float).reshape(-1)
    v = tfp.values * np.conj(tfq.values)
    ft = _aliased_values(f_true, gens, alias_p, alias_q, k[None, :] - grid.points, alias_radius, alias_tol)
    weight = float(np.prod(spacing))
    integrand = v * ft
    total = complex(integrand.sum() * weight)
    if tol is not None:
        shape = tuple(len(ax) for ax in grid.axes)
        block = integrand.reshape(shape)
        coarse = block[(slice(None, None, 2),) * ndim].sum() * weight * 2**ndim
        err = abs(total - coarse)
        if err > tol:
            raise ValueError(
                f"quadrature self-estimate {err:.3e} exceeds tolerance {tol:.3e}; "
                "refine the convolution grid"
            )
    return total


def mean_weight_transfer(
    region: Region,
    scheme: SamplingScheme,
    kgrid: WavenumberGrid,
) -> TransferFunction:
    """Transfer function of the default intensity estimator's weights.

    Points: the (digitised) region indicator over its area, so G(0) = 1.
    Fields: the node-average weights, again with G(0) = 1.
    """
    if scheme.is_grid:
        zindex, _ = scheme.grid_nodes(region)
        if len(zindex) == 0:
            raise ValueError("sampling grid has no nodes inside the region")
        coeffs = np.full(len(zindex), 1.0 / len(zindex))

        def evaluate(kpts):
            g = WavenumberGrid(points=np.atleast_2d(kpts))
            return uniform_grid_dft(zindex, scheme.delta, scheme.offset, coeffs, g)

        vals = uniform_grid_dft(zindex, scheme.delta, scheme.offset, coeffs, kgrid)
        return TransferFunction(grid=kgrid, values=vals, taper_index=-1, scheme=scheme, _evaluator=evaluate)

    idx = np.argwhere(region.mask)
    offset = region.bbox[:, 0] + 0.5 * region.delta_ref
    coeffs = np.full(len(idx), 1.0 / (region.mask.sum()))
    delta = region.delta_ref

    def evaluate(kpts):
        g = WavenumberGrid(points=np.atleast_2d(kpts))
        sinc = np.ones(g.size)
        for j in range(g.ndim):
            sinc *= np.sinc(delta[j] * g.points[:, j])
        return uniform_grid_dft(idx, delta, offset, coeffs, g) * sinc

    vals = evaluate(kgrid.points)
    return TransferFunction(
        grid=kgrid,
        values=vals,
        taper_index=-1,
        scheme=SamplingScheme.continuous(region.ndim),
        _evaluator=evaluate,
    )


class UnknownMeanBias(NamedTuple):
    """Correction terms the estimated intensity adds to the periodogram mean.

    Every term carries at least one factor of the taper transfer function at
    the probe wavenumber, which is what keeps the corrections confined to
    the taper bandwidth.
    """

    bias_product: complex
    mean_fluctuation: complex
    cross_pq: complex
    cross_qp: complex

    @property
    def total(self) -> complex:
        return self.bias_product + self.mean_fluctuation + self.cross_pq + self.cross_qp


def unknown_mean_bias(
    f_true,
    tfp: TransferFunction,
    tfq: TransferFunction,
    gp: TransferFunction,
    gq: TransferFunction,
    k,
    lam_p: float | None = None,
    lam_q: float | None = None,
) -> UnknownMeanBias:
    """Extra expectation terms when the intensity is a weighted-mean estimate.

    ``gp`` / ``gq`` are the transfer functions of the mean-estimator weights
    tabulated on a shared quadrature grid around the origin; ``tfp`` /
    ``tfq`` must expose pointwise evaluation.  The intensities are only
    needed when an estimator is biased (``G(0) != 1``).
    """
    grid = gp.grid
    if gq.grid.size != grid.size or not np.array_equal(gq.grid.points, grid.points):
        raise ValueError("mean-weight transfer functions use different grids")
    spacing = grid.axis_spacing()
    if spacing is None:
        raise ValueError("unknown_mean_bias needs a uniform tensor quadrature grid")
    weight = float(np.prod(spacing))
    k = np.asarray(k, dtype=float).reshape(1, -1)

    hp_k = complex(tfp.at(k)[0])
    hq_k = complex(tfq.at(k)[0])
    gp0 = complex(gp.at(np.zeros_like(k))[0])
    gq0 = complex(gq.at(np.zeros_like(k))[0])

    if abs(gp0 - 1.0) > 1e-9 or abs(gq0 - 1.0) > 1e-9:
        if lam_p is None or lam_q is None:
            raise ValueError("biased mean estimators need lam_p and lam_q for the bias term")
        bias_product = hp_k * np.conj(hq_k) * (gp0 - 1.0) * (np.conj(gq0) - 1.0) * lam_p * lam_q
    else:
        bias_product = 0.0 + 0.0j

    kp = grid.points  # integration variable k'
    f_vals = np.asarray(f_true(kp), dtype=complex)
    gp_neg = gp.at(-kp)
    gq_neg = gq.at(-kp)
    hp_shift = tfp.at(k - kp)
    hq_shift = tfq.at(k - kp)

    mean_fluct = hp_k * np.conj(hq_k) * np.sum(gp_neg * np.conj(gq_neg) * f_vals) * weight
    cross_pq = -np.conj(hq_k) * np.sum(hp_shift * np.conj(gq_neg) * f_vals) * weight
    cross_qp = -hp_k * np.sum(gp_neg * np.conj(hq_shift) * f_vals) * weight
    return UnknownMeanBias(
        bias_product=complex(bias_product),
        mean_fluctuation=complex(mean_fluct),
        cross_pq=complex(cross_pq),
        cross_qp=complex(cross_qp),
    )


def write_metadata(path, est: SpectralEstimate, region: Region, extra: dict | None = None) -> Path:
    meta = {
        "ntapers": est.ntapers,
        "bandwidth": est.bandwidth,
        "labels": list(est.labels),
        "region_hash": region.content_hash(),
    }
    if extra:
        meta.update(extra)
    path = Path(path)
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path
