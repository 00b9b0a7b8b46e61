"""Simulators and spectral oracles for the validation models.

Every simulator is deterministic given ``(config, seed)`` and uses a
counter-based generator (Philox) keyed by the seed and a stream index, so
replication loops get independent streams without shared state.

The models mirror the usual test bench for multivariate spatial spectra:
homogeneous and marked Poisson patterns (flat spectra), a deterministically
shifted pair (unit coherence, linear group delay), log-Gaussian Cox
processes (coupled field and points with semi-analytic spectra), a
colocation pair of fields on different grids, and a surrogate generator that
keeps the marginals but destroys all cross-process dependence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import gcd

import numpy as np
from scipy.fft import fftn, next_fast_len
from scipy.linalg import cholesky
from scipy.special import gamma as gamma_fn, j0, kv

from .fourier import GriddedField, PointPattern, SpatialDataset
from .geometry import Region, SamplingScheme

__all__ = [
    "MaternSpec",
    "TrueSpectrum",
    "matern_cov",
    "matern_sdf",
    "numeric_ft_radial",
    "rng_for",
    "simulate_gaussian_field",
    "simulate_poisson",
    "simulate_shifted_pair",
    "simulate_marked_poisson",
    "simulate_lgcp",
    "simulate_colocation",
    "surrogate",
    "PoissonModel",
    "ShiftedPairModel",
    "MarkedPoissonModel",
    "LGCPModel",
    "ColocationModel",
    "model_from_dict",
]


def rng_for(seed: int, *stream) -> np.random.Generator:
    """Independent counter-based stream for ``(seed, *stream)``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


# -- Matern covariance / spectral density -----------------------------------


@dataclass(frozen=True)
class MaternSpec:
    """Matern parameters: marginal SD ``sigma``, length scale ``ell``,
    smoothness ``nu``; the internal rate is ``sqrt(2 nu) / ell``."""

    sigma: float = 1.0
    ell: float = 1.0
    nu: float = 1.5

    def __post_init__(self):
        if self.sigma <= 0 or self.ell <= 0 or self.nu <= 0:
            raise ValueError("sigma, ell and nu must all be positive")

    @property
    def rate(self) -> float:
        return float(np.sqrt(2.0 * self.nu) / self.ell)


def matern_cov(r, spec: MaternSpec):
    """Matern covariance at distance(s) ``r``."""
    r = np.abs(np.asarray(r, dtype=float))
    shape = r.shape
    r = np.atleast_1d(r)
    x = spec.rate * r
    out = np.full(r.shape, spec.sigma**2)
    pos = x > 0
    xp = x[pos]
    out[pos] = spec.sigma**2 * (2.0 ** (1.0 - spec.nu) / gamma_fn(spec.nu)) * xp**spec.nu * kv(spec.nu, xp)
    return out.reshape(shape) if shape else float(out[0])


def matern_sdf(k, spec: MaternSpec, ndim: int):
    """Matern spectral density in ``ndim`` dimensions, cycles convention.

    Normalised so the density integrates to ``sigma^2``.  ``k`` may be an
    array of wavenumber points ``(K, d)`` or of plain magnitudes.
    """
    k = np.asarray(k, dtype=float)
    knorm = np.linalg.norm(k, axis=-1) if k.ndim >= 2 else np.abs(k)
    a = spec.rate
    const = spec.sigma**2 * (4.0 * np.pi) ** (ndim / 2.0) * gamma_fn(spec.nu + ndim / 2.0) / (
        gamma_fn(spec.nu) * a**ndim
    )
    return const * (1.0 + (2.0 * np.pi * knorm / a) ** 2) ** (-(spec.nu + ndim / 2.0))


def numeric_ft_radial(func, ndim: int, knorms, r_max: float, n_r: int = 4096, refine_check: bool = False):
    """Fourier transform of a radial function by quadrature.

    1-d: ``2 int_0^rmax g(r) cos(2 pi k r) dr``;
    2-d: ``2 pi int_0^rmax g(r) J0(2 pi k r) r dr`` (trapezoid rule).

    With ``refine_check`` the quadrature is repeated at half the step and the
    relative change returned alongside the values.
    """
    knorms = np.atleast_1d(np.asarray(knorms, dtype=float))

    def quad(n):
        r = np.linspace(0.0, r_max, n)
        g = np.asarray(func(r), dtype=float)
        if ndim == 1:
            integrand = g[None, :] * np.cos(2.0 * np.pi * knorms[:, None] * r[None, :])
            return 2.0 * np.trapezoid(integrand, r, axis=1)
        integrand = g[None, :] * j0(2.0 * np.pi * knorms[:, None] * r[None, :]) * r[None, :]
        return 2.0 * np.pi * np.trapezoid(integrand, r, axis=1)

    vals = quad(n_r)
    if refine_check:
        coarse = quad(n_r // 2)
        denom = np.maximum(np.abs(vals), 1e-300)
        return vals, float(np.max(np.abs(vals - coarse) / denom))
    return vals


# -- true spectra ------------------------------------------------------------


class TrueSpectrum:
    """Matrix-valued spectral density ``f[p][q](k)`` with Hermitian symmetry.

    Entries are supplied for ``p <= q`` as callables over ``(K, d)`` arrays;
    the lower triangle is filled in by conjugation.  ``method`` records
    whether entries are closed-form or numeric Fourier transforms.
    """

    def __init__(self, nproc: int, ndim: int, entries: dict, method: str = "closed-form"):
        self.nproc = nproc
        self.ndim = ndim
        self.method = method
        self._entries = dict(entries)

    def _normalise(self, k):
        kpts = np.asarray(k, dtype=float)
        if kpts.ndim == 0:
            return kpts.reshape(1, 1), True
        if kpts.ndim == 1:
            if self.ndim == 1:
                return kpts.reshape(-1, 1), kpts.size == 1
            return kpts.reshape(1, -1), True
        return kpts, False

    def __call__(self, p: int, q: int, k) -> np.ndarray:
        kpts, squeeze = self._normalise(k)
        if kpts.shape[1] != self.ndim:
            raise ValueError(f"wavenumbers must have dimension {self.ndim}")
        if (p, q) in self._entries:
            vals = np.asarray(self._entries[(p, q)](kpts), dtype=complex)
        elif (q, p) in self._entries:
            vals = np.conj(self._entries[(q, p)](kpts))
        else:
            raise KeyError(f"no spectrum entry for processes ({p}, {q})")
        return vals[0] if squeeze else vals

    def matrix(self, k) -> np.ndarray:
        kpts, _ = self._normalise(np.atleast_1d(k))
        out = np.empty((len(kpts), self.nproc, self.nproc), dtype=complex)
        for p in range(self.nproc):
            for q in range(self.nproc):
                out[:, p, q] = self(p, q, kpts)
        return out


# -- Gaussian random fields ---------------------------------------------------


def _index_box(scheme: SamplingScheme, region: Region):
    lo, hi = region.bbox[:, 0], region.bbox[:, 1]
    zlo = np.ceil((lo - scheme.offset) / scheme.delta - 1e-12).astype(int)
    zhi = np.floor((hi - scheme.offset) / scheme.delta + 1e-12).astype(int)
    return zlo, zhi


def _circulant_eigs(shape, delta, spec: MaternSpec, max_doublings: int = 3):
    """Eigenvalues of a nested-circulant extension of the Matern covariance."""
    factor = 2
    for attempt in range(max_doublings + 1):
        padded = tuple(next_fast_len(factor * s) for s in shape)
        lags = []
        for n, d in zip(padded, delta):
            idx = np.arange(n)
            lag = np.where(idx <= n // 2, idx, idx - n)
            lags.append(lag * d)
        if len(padded) == 1:
            r = np.abs(lags[0])
        else:
            r = np.sqrt(lags[0][:, None] ** 2 + lags[1][None, :] ** 2)
        cov = matern_cov(r, spec)
        eigs = fftn(cov).real
        if eigs.min() > -1e-9 * eigs.max():
            return padded, np.clip(eigs, 0.0, None)
        factor *= 2
    return None


def _grf_on_box(shape, delta, spec: MaternSpec, rng: np.random.Generator) -> np.ndarray:
    """Stationary zero-mean Matern draw on a full index box."""
    emb = _circulant_eigs(shape, delta, spec)
    if emb is not None:
        padded, eigs = emb
        ntot = float(np.prod(padded))
        w = rng.standard_normal(padded) + 1j * rng.standard_normal(padded)
        sim = fftn(np.sqrt(eigs / ntot) * w)
        out = sim.real
        return out[tuple(slice(0, s) for s in shape)]
    n = int(np.prod(shape))
    if n > 4000:
        raise ValueError(
            "circulant embedding failed to become positive semidefinite and "
            f"the grid ({n} nodes) is too large for the dense fallback"
        )
    axes = [np.arange(s) * d for s, d in zip(shape, delta)]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    cov = matern_cov(dist, spec) + 1e-10 * spec.sigma**2 * np.eye(n)
    L = cholesky(cov, lower=True)
    return (L @ rng.standard_normal(n)).reshape(shape)


def simulate_gaussian_field(
    spec: MaternSpec,
    scheme: SamplingScheme,
    region: Region,
    seed: int,
    mean: float = 0.0,
    stream: tuple = (),
) -> GriddedField:
    """Matern Gaussian field on the grid nodes inside the region.

    Circulant embedding on the padded bounding grid; dense Cholesky fallback
    for small grids when the embedding is not PSD.
    """
    rng = rng_for(seed, *stream)
    zlo, zhi = _index_box(scheme, region)
    shape = tuple(int(h - l + 1) for l, h in zip(zlo, zhi))
    box = _grf_on_box(shape, scheme.delta, spec, rng) + mean
    zindex, positions = scheme.grid_nodes(region)
    rel = zindex - zlo
    vals = box[tuple(rel.T)]
    return GriddedField(scheme=scheme, zindex=zindex, values=vals)


# -- point process simulators -------------------------------------------------


def _uniform_in_cells(region: Region, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the masked region: pick a cell, then a point in it."""
    cells = np.argwhere(region.mask)
    pick = rng.integers(0, len(cells), size=count)
    offs = rng.random((count, region.ndim))
    return region.bbox[:, 0] + (cells[pick] + offs) * region.delta_ref


def simulate_poisson(region: Region, lam: float, seed: int, stream: tuple = ()) -> PointPattern:
    """Homogeneous Poisson pattern with intensity ``lam`` on the region."""
    if lam <= 0:
        raise ValueError("intensity must be positive")
    rng = rng_for(seed, *stream)
    n = rng.poisson(lam * region.area)
    return PointPattern(locations=_uniform_in_cells(region, n, rng))


def simulate_shifted_pair(region: Region, lam: float, tau, seed: int, stream: tuple = ()):
    """A Poisson pattern and its deterministic translate by ``tau``.

    The parent process lives on the bounding box dilated by ``|tau|`` so that
    the shift relation is exact in the interior; both copies are then clipped
    to the region (the clipping is the usual edge effect).
    """
    rng = rng_for(seed, *stream)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    lo = region.bbox[:, 0] - np.abs(tau)
    hi = region.bbox[:, 1] + np.abs(tau)
    vol = float(np.prod(hi - lo))
    n = rng.poisson(lam * vol)
    parent = lo + rng.random((n, region.ndim)) * (hi - lo)
    first = parent[region.contains(parent)]
    shifted = parent + tau
    second = shifted[region.contains(shifted)]
    return PointPattern(locations=first), PointPattern(locations=second)


def simulate_marked_poisson(
    region: Region,
    lam: float,
    mark_mean: float,
    mark_sd: float,
    seed: int,
    stream: tuple = (),
) -> PointPattern:
    """Poisson pattern with IID normal marks (``mark_sd`` is the SD)."""
    if mark_sd < 0:
        raise ValueError("mark_sd must be non-negative")
    rng = rng_for(seed, *stream)
    n = rng.poisson(lam * region.area)
    locs = _uniform_in_cells(region, n, rng)
    marks = mark_mean + mark_sd * rng.standard_normal(n)
    return PointPattern(locations=locs, marks=marks)


def simulate_lgcp(
    region: Region,
    mu: float,
    spec: MaternSpec,
    seed: int,
    field_scheme: SamplingScheme,
    refine: int = 4,
    stream: tuple = (),
):
    """Log-Gaussian Cox draw: the latent field and the conditional pattern.

    The Gaussian field (mean ``mu``) is simulated on a ``refine``-fold
    refinement of ``field_scheme``; points are thinned cell-by-cell with rate
    ``exp(Y)`` treated as constant per fine cell, and the returned field is
    the exact subsample on ``field_scheme``.  A warning is issued if the
    exponentiated field varies by more than 5% between neighbouring fine
    cells.
    """
    rng = rng_for(seed, *stream)
    thin = SamplingScheme.grid(field_scheme.delta / refine, field_scheme.offset)
    zlo, zhi = _index_box(thin, region)
    shape = tuple(int(h - l + 1) for l, h in zip(zlo, zhi))
    box = _grf_on_box(shape, thin.delta, spec, rng) + mu

    jump = 0.0
    for axis in range(box.ndim):
        sl_a = [slice(None)] * box.ndim
        sl_b = [slice(None)] * box.ndim
        sl_a[axis] = slice(1, None)
        sl_b[axis] = slice(0, -1)
        if box.shape[axis] > 1:
            jump = max(jump, float(np.max(np.abs(box[tuple(sl_a)] - box[tuple(sl_b)]))))
    if np.expm1(jump) > 0.05:
        warnings.warn(
            f"LGCP thinning grid may be too coarse: exp(Y) varies by up to "
            f"{100 * np.expm1(jump):.1f}% between neighbouring cells",
            stacklevel=2,
        )

    # conditional Poisson counts per fine cell, cells centred on thin nodes
    zindex_t, positions_t = thin.grid_nodes(region)
    rel = zindex_t - zlo
    rates = np.exp(box[tuple(rel.T)]) * np.prod(thin.delta)
    counts = rng.poisson(rates)
    total = int(counts.sum())
    reps = np.repeat(np.arange(len(counts)), counts)
    offs = (rng.random((total, region.ndim)) - 0.5) * thin.delta
    pts = positions_t[reps] + offs
    pts = pts[region.contains(pts)]
    pattern = PointPattern(locations=pts)

    zindex_f, _ = field_scheme.grid_nodes(region)
    rel_f = zindex_f * refine - zlo
    vals = box[tuple(rel_f.T)]
    field = GriddedField(scheme=field_scheme, zindex=zindex_f, values=vals)
    return field, pattern


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    return Fraction(gcd(a.numerator * b.denominator, b.numerator * a.denominator), a.denominator * b.denominator)


def _common_refinement(grids, region: Region) -> SamplingScheme:
    """A grid containing every node of the given grids (rational spacings)."""
    d = region.ndim
    delta = np.empty(d)
    offset = np.empty(d)
    for j in range(d):
        fracs = [Fraction(float(g.delta[j])).limit_denominator(10**6) for g in grids]
        offs = [Fraction(float(g.offset[j])).limit_denominator(10**6) for g in grids]
        step = fracs[0]
        for f in fracs[1:]:
            step = _frac_gcd(step, f)
        for o in offs[1:]:
            diff = abs(o - offs[0])
            if diff:
                step = _frac_gcd(step, diff)
        delta[j] = float(step)
        offset[j] = float(offs[0] % step)
        span = region.bbox[j, 1] - region.bbox[j, 0]
        if span / delta[j] > 4096:
            raise ValueError("common grid refinement is too fine; use commensurate grids")
    return SamplingScheme.grid(delta, offset)


def simulate_colocation(
    region: Region,
    spec: MaternSpec,
    alpha,
    grids,
    seed: int,
    stream: tuple = (),
):
    """Two fields sharing one latent component: ``Y_j = U_j + alpha_j X``.

    ``U_1``, ``U_2`` and ``X`` are independent Matern draws with the same
    covariance; the shared ``X`` is simulated once on a common refinement of
    the two grids so both outputs see the same realisation.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if len(alpha) != 2 or len(grids) != 2:
        raise ValueError("colocation model takes two loadings and two grids")
    fine = _common_refinement(grids, region)
    zlo, zhi = _index_box(fine, region)
    shape = tuple(int(h - l + 1) for l, h in zip(zlo, zhi))
    x_box = _grf_on_box(shape, fine.delta, spec, rng_for(seed, 0, *stream))

    fields = []
    for j, scheme in enumerate(grids):
        u = simulate_gaussian_field(spec, scheme, region, seed, stream=(j + 1, *stream))
        zindex = u.zindex
        ratio = scheme.delta / fine.delta
        off_shift = (scheme.offset - fine.offset) / fine.delta
        exact = zindex * ratio + off_shift
        rel = np.round(exact).astype(int)
        if np.max(np.abs(exact - rel)) > 1e-6:
            raise ValueError("grid nodes do not land on the common refinement")
        rel = rel - zlo
        shared = x_box[tuple(rel.T)]
        fields.append(
            GriddedField(scheme=scheme, zindex=zindex, values=u.values + alpha[j] * shared)
        )
    return tuple(fields)


def _gradient_norm_box(box: np.ndarray, delta) -> np.ndarray:
    grads = np.gradient(box, *delta) if box.ndim > 1 else [np.gradient(box, delta[0])]
    if box.ndim == 1:
        return np.abs(grads[0])
    return np.sqrt(sum(g**2 for g in grads))


def surrogate(dataset: SpatialDataset, seed: int, field_spec: MaternSpec | None = None) -> SpatialDataset:
    """Independent surrogate with matched marginal structure.

    Point patterns become independent Poisson patterns with the observed
    intensity, marks resampled with replacement from the observed marks;
    fields become the finite-difference gradient norm of an independent
    Matern draw.
    """
    if field_spec is None:
        field_spec = MaternSpec(sigma=4.0, ell=60.0, nu=2.5)
    region = dataset.region
    out = []
    for i, proc in enumerate(dataset.processes):
        rng = rng_for(seed, 1000 + i)
        if isinstance(proc, PointPattern):
            lam = len(proc) / region.area
            n = rng.poisson(lam * region.area)
            locs = _uniform_in_cells(region, n, rng)
            marks = None
            if proc.marks is not None and len(proc):
                marks = rng.choice(proc.marks, size=n, replace=True)
            out.append(PointPattern(locations=locs, marks=marks))
        else:
            scheme = proc.scheme
            zlo, zhi = _index_box(scheme, region)
            shape = tuple(int(h - l + 1) for l, h in zip(zlo, zhi))
            box = _grf_on_box(shape, scheme.delta, field_spec, rng)
            grad = _gradient_norm_box(box, scheme.delta)
            zindex, _ = scheme.grid_nodes(region)
            rel = zindex - zlo
            out.append(GriddedField(scheme=scheme, zindex=zindex, values=grad[tuple(rel.T)]))
    return SpatialDataset(region=region, labels=dataset.labels, processes=tuple(out))


# -- model configurations ------------------------------------------------------


@dataclass(frozen=True)
class PoissonModel:
    lam: float

    def simulate(self, region: Region, seed: int) -> SpatialDataset:
        pat = simulate_poisson(region, self.lam, seed)
        return SpatialDataset(region=region, labels=("points",), processes=(pat,))

    def true_spectrum(self, ndim: int) -> TrueSpectrum:
        lam = self.lam
        return TrueSpectrum(1, ndim, {(0, 0): lambda k: np.full(len(k), lam, dtype=complex)})


@dataclass(frozen=True)
class ShiftedPairModel:
    lam: float
    tau: tuple

    def simulate(self, region: Region, seed: int) -> SpatialDataset:
        a, b = simulate_shifted_pair(region, self.lam, self.tau, seed)
        return SpatialDataset(region=region, labels=("base", "shifted"), processes=(a, b))

    def true_spectrum(self, ndim: int) -> TrueSpectrum:
        lam = self.lam
        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        entries = {
            (0, 0): lambda k: np.full(len(k), lam, dtype=complex),
            (1, 1): lambda k: np.full(len(k), lam, dtype=complex),
            (0, 1): lambda k: lam * np.exp(2j * np.pi * (k @ tau)),
        }
        return TrueSpectrum(2, ndim, entries)


@dataclass(frozen=True)
class MarkedPoissonModel:
    lam: float
    mark_mean: float
    mark_sd: float

    def simulate(self, region: Region, seed: int) -> SpatialDataset:
        pat = simulate_marked_poisson(region, self.lam, self.mark_mean, self.mark_sd, seed)
        return SpatialDataset(region=region, labels=("marked",), processes=(pat,))

    def true_spectrum(self, ndim: int) -> TrueSpectrum:
        level = self.lam * (self.mark_mean**2 + self.mark_sd**2)
        return TrueSpectrum(1, ndim, {(0, 0): lambda k: np.full(len(k), level, dtype=complex)})


@dataclass(frozen=True)
class LGCPModel:
    """Log-Gaussian Cox model; process 0 is the field, process 1 the points."""

    matern: MaternSpec
    mu: float | None = None
    target_intensity: float = 0.001

    def intensity(self) -> float:
        mu = self.mu_value()
        return float(np.exp(mu + self.matern.sigma**2 / 2.0))

    def mu_value(self) -> float:
        if self.mu is not None:
            return float(self.mu)
        return float(np.log(self.target_intensity) - self.matern.sigma**2 / 2.0)

    def simulate(self, region: Region, seed: int, field_scheme: SamplingScheme, refine: int = 4) -> SpatialDataset:
        field, points = simulate_lgcp(region, self.mu_value(), self.matern, seed, field_scheme, refine)
        return SpatialDataset(region=region, labels=("field", "points"), processes=(field, points))

    def true_spectrum(self, ndim: int, r_max: float | None = None, n_r: int = 8192) -> TrueSpectrum:
        spec = self.matern
        lam_q = self.intensity()
        if r_max is None:
            r_max = 12.0 * spec.ell

        def f_field(k):
            return matern_sdf(k, spec, ndim).astype(complex)

        def f_cross(k):
            return lam_q * matern_sdf(k, spec, ndim).astype(complex)

        def f_points(k):
            knorm = np.linalg.norm(np.atleast_2d(k), axis=1)
            base = numeric_ft_radial(lambda r: np.expm1(matern_cov(r, spec)), ndim, knorm, r_max, n_r)
            return (lam_q**2 * base + lam_q).astype(complex)

        entries = {(0, 0): f_field, (0, 1): f_cross, (1, 1): f_points}
        return TrueSpectrum(2, ndim, entries, method="numeric-FT")


@dataclass(frozen=True)
class ColocationModel:
    matern: MaternSpec
    alpha: tuple
    grids: tuple

    def simulate(self, region: Region, seed: int) -> SpatialDataset:
        y1, y2 = simulate_colocation(region, self.matern, self.alpha, self.grids, seed)
        return SpatialDataset(region=region, labels=("field1", "field2"), processes=(y1, y2))

    def true_spectrum(self, ndim: int) -> TrueSpectrum:
        spec = self.matern
        a1, a2 = self.alpha

        def marginal(load):
            return lambda k: ((1.0 + load**2) * matern_sdf(k, spec, ndim)).astype(complex)

        entries = {
            (0, 0): marginal(a1),
            (1, 1): marginal(a2),
            (0, 1): lambda k: (a1 * a2 * matern_sdf(k, spec, ndim)).astype(complex),
        }
        return TrueSpectrum(2, ndim, entries)

    def true_coherence(self) -> float:
        a1, a2 = self.alpha
        return float(a1 * a2 / np.sqrt((1.0 + a1**2) * (1.0 + a2**2)))


def model_from_dict(cfg: dict):
    """Build a model config from a JSON-style dict (CLI entry point)."""
    kind = cfg.get("model")
    if kind == "poisson":
        return PoissonModel(lam=float(cfg["lam"]))
    if kind == "shifted-pair":
        return ShiftedPairModel(lam=float(cfg["lam"]), tau=tuple(cfg["tau"]))
    if kind == "marked-poisson":
        return MarkedPoissonModel(
            lam=float(cfg["lam"]),
            mark_mean=float(cfg["mark_mean"]),
            mark_sd=float(cfg["mark_sd"]),
        )
    if kind == "lgcp":
        return LGCPModel(
            matern=MaternSpec(**cfg.get("matern", {})),
            mu=cfg.get("mu"),
            target_intensity=float(cfg.get("target_intensity", 0.001)),
        )
    if kind == "colocation":
        return ColocationModel(
            matern=MaternSpec(**cfg.get("matern", {})),
            alpha=tuple(cfg["alpha"]),
            grids=tuple(SamplingScheme.from_dict(g) for g in cfg["grids"]),
        )
    raise ValueError(f"unknown model {kind!r}")
