"""Named validation suites: simulation studies against analytic oracles.

Each suite simulates one of the benchmark models, estimates spectra with the
production pipeline, and compares against an independent oracle (closed-form
spectra, the convolution expectation, brute-force lattice sums, or paired
Monte Carlo).  Suites return a :class:`SuiteReport` with the measured
numbers, the tolerances they were held to, and a pass flag; the CLI and the
acceptance tests share these functions.

Replication loops draw from per-replicate counter-based streams, so results
are independent of the worker count.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimator import (
    EstimationConfig,
    aliased_spectrum,
    coherence_and_delay,
    convolution_grid,
    expected_periodogram,
    mean_weight_transfer,
    multitaper_estimate,
    unknown_mean_bias,
)
from .fourier import (
    GriddedField,
    PointPattern,
    SpatialDataset,
    tapered_dft_field,
    tapered_dft_points,
)
from .geometry import AliasStructure, Region, SamplingScheme, WavenumberGrid
from .models import (
    LGCPModel,
    MaternSpec,
    matern_sdf,
    rng_for,
    simulate_colocation,
    simulate_gaussian_field,
    simulate_poisson,
    simulate_shifted_pair,
)
from .nufft import nudft_direct, nudft_fast
from .tapers import (
    compute_tapers,
    interpolated_gram,
    interpolation_gram_bound,
    sample_taper,
    transfer_function,
)

__all__ = ["SuiteReport", "SUITES", "run_suite", "default_threads"]


@dataclass
class SuiteReport:
    name: str
    passed: bool
    measured: dict
    tolerance: dict
    reps: int
    seconds: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        shown = ", ".join(f"{k}={_fmt(v)}" for k, v in self.measured.items())
        return f"{status} {self.name}: {shown} ({self.reps} reps, {self.seconds:.1f}s)"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": _plain(self.measured),
            "tolerance": _plain(self.tolerance),
            "reps": self.reps,
            "seconds": self.seconds,
            "details": _plain(self.details),
        }


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)) and v and isinstance(v[0], float):
        return "[" + ", ".join(f"{x:.3g}" for x in v) + "]"
    return str(v)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def default_threads() -> int:
    env = os.environ.get("SPATSPEC_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _map_reps(worker, reps: int, threads: int | None):
    """Ordered replication map; deterministic regardless of thread count."""
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1:
        return [worker(r) for r in range(reps)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, range(reps)))


# -- shared fixtures ----------------------------------------------------------

_CACHE: dict = {}


def _cached(key, builder):
    if key not in _CACHE:
        _CACHE[key] = builder()
    return _CACHE[key]


def bench_region() -> Region:
    return _cached("region-200x100", lambda: Region.rectangle([200.0, 100.0], delta_ref=2.5))


def wide_family():
    """b = 0.05 on the 200 x 100 bench region; all eight tapers at ~1."""
    return _cached("family-wide", lambda: compute_tapers(bench_region(), 0.05, count=8))


def narrow_family():
    """b = 0.02 on the bench region; eight tapers above 0.99."""
    return _cached("family-narrow", lambda: compute_tapers(bench_region(), 0.02, threshold=0.99))


def big_region() -> Region:
    return _cached("region-1000x500", lambda: Region.rectangle([1000.0, 500.0], delta_ref=12.5))


def big_family():
    return _cached("family-big", lambda: compute_tapers(big_region(), 0.005, count=8))


def line_region() -> Region:
    return _cached("region-500-1d", lambda: Region.rectangle([500.0], delta_ref=0.5))


def line_family():
    return _cached("family-line", lambda: compute_tapers(line_region(), 0.005, threshold=0.99))


# -- suites -------------------------------------------------------------------


def suite_poisson_flat(reps: int = 100, seed: int = 11, threads: int | None = None) -> SuiteReport:
    """Flat-spectrum check: the multitaper estimate of a Poisson pattern
    recovers the intensity across the mid band."""
    t0 = time.time()
    region, family = bench_region(), wide_family()
    lam, b = 0.02, family.bandwidth
    kgrid = WavenumberGrid.fourier([200.0, 100.0], kmax=0.25)
    cfg = EstimationConfig(nudft_method="nufft")

    def worker(rep):
        pat = simulate_poisson(region, lam, seed, stream=(rep,))
        ds = SpatialDataset(region=region, labels=("points",), processes=(pat,))
        est = multitaper_estimate(ds, family, kgrid, cfg)
        return est.fhat[:, 0, 0].real

    vals = np.array(_map_reps(worker, reps, threads))
    knorm = np.linalg.norm(kgrid.points, axis=1)
    band = (knorm >= 2 * b) & (knorm <= 0.25)
    ratio = float(vals[:, band].mean() / lam)

    probe_idx = np.flatnonzero(band)[
        np.round(np.linspace(0, band.sum() - 1, 25)).astype(int)
    ]
    mean = vals[:, probe_idx].mean(axis=0)
    se = vals[:, probe_idx].std(axis=0, ddof=1) / np.sqrt(reps)
    zmax = float(np.max(np.abs(mean - lam) / se))

    passed = 0.95 <= ratio <= 1.05 and zmax <= 3.0
    return SuiteReport(
        name="poisson-flat",
        passed=passed,
        measured={"band_mean_over_lam": ratio, "max_probe_z": zmax},
        tolerance={"band_mean_over_lam": [0.95, 1.05], "max_probe_z": 3.0},
        reps=reps,
        seconds=time.time() - t0,
        details={"lam": lam, "bandwidth": b, "ntapers": family.count},
    )


def _annulus_probes(r_lo, r_hi, count, ndim=2):
    radii = np.linspace(r_lo, r_hi, count)
    angles = np.linspace(0.0, 2 * np.pi, count, endpoint=False) + 0.3
    if ndim == 1:
        return radii.reshape(-1, 1)
    return np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])


def suite_bias_oracle(reps: int = 2000, seed: int = 12, threads: int | None = None) -> SuiteReport:
    """Finite-sample bias: Monte Carlo periodogram mean of a gridded Matern
    field against the transfer-function convolution oracle."""
    t0 = time.time()
    region, family = bench_region(), wide_family()
    b = family.bandwidth
    scheme = SamplingScheme.grid([5.0, 5.0])
    spec = MaternSpec(sigma=1.0, ell=30.0, nu=2.5)
    probes = _annulus_probes(1.2 * b, 0.095, 25)
    kprobe = WavenumberGrid(points=probes)

    sampled = sample_taper(family, 0, scheme, region)

    def worker(rep):
        fld = simulate_gaussian_field(spec, scheme, region, seed, stream=(rep,))
        j = tapered_dft_field(fld, sampled, kprobe)
        return np.abs(j.values) ** 2

    vals = np.array(_map_reps(worker, reps, threads))
    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / np.sqrt(reps)

    alias = AliasStructure.from_scheme(scheme)
    qgrid = convolution_grid(alias, alias, b, spacing=b / 16.0)
    tf = transfer_function(family, 0, scheme, qgrid)
    f_true = lambda kk: matern_sdf(kk, spec, 2)
    oracle = np.array(
        [expected_periodogram(f_true, tf, tf, kk).real for kk in probes]
    )
    # quadrature self-check at the first probe
    expected_periodogram(f_true, tf, tf, probes[0], tol=0.05 * abs(oracle[0]))

    z = np.abs(mean - oracle) / se
    zmax = float(z.max())
    passed = zmax <= 3.0
    return SuiteReport(
        name="bias-oracle",
        passed=passed,
        measured={"max_probe_z": zmax, "worst_rel_gap": float(np.max(np.abs(mean - oracle) / oracle))},
        tolerance={"max_probe_z": 3.0},
        reps=reps,
        seconds=time.time() - t0,
        details={"probes": probes.tolist(), "oracle": oracle.tolist(), "mc_mean": mean.tolist()},
    )


def suite_fig3(reps: int = 1000, seed: int = 13, threads: int | None = None) -> SuiteReport:
    """Matched vs mixed tapers on a 1-d log-Gaussian Cox process: matched
    cross-spectra are unbiased, mixed base tapers attenuate them."""
    t0 = time.time()
    region, family = line_region(), line_family()
    M = family.count
    spec = MaternSpec(sigma=1.0, ell=10.0, nu=2.5)
    model = LGCPModel(matern=spec, target_intensity=0.5)
    lam_q = model.intensity()
    field_scheme = SamplingScheme.grid([2.0])
    probes = np.array([[0.006], [0.012], [0.018], [0.024], [0.03]])
    kprobe = WavenumberGrid(points=probes)
    cont = SamplingScheme.continuous(1)

    sampled = [sample_taper(family, m, field_scheme, region) for m in range(M)]
    transfers = [transfer_function(family, m, cont, kprobe) for m in range(M)]

    def worker(rep):
        ds = model.simulate(region, seed + 7919 * rep, field_scheme, refine=8)
        fld, pts = ds.processes
        lam_f = float(fld.values.mean())
        lam_p = float(pts.weights.sum() / region.area)
        matched = np.zeros(len(probes), dtype=complex)
        mixed = np.zeros(len(probes), dtype=complex)
        for m in range(M):
            jf = tapered_dft_field(fld, sampled[m], kprobe, intensity=lam_f).values
            jf_mix = tapered_dft_field(fld, sampled[(m + 1) % M], kprobe, intensity=lam_f).values
            jp = tapered_dft_points(
                pts, family, m, kprobe, region, intensity=lam_p, transfer=transfers[m]
            ).values
            matched += jf * np.conj(jp)
            mixed += jf_mix * np.conj(jp)
        return np.concatenate([matched, mixed]) / M

    out = np.array(_map_reps(worker, reps, threads))
    matched = out[:, : len(probes)]
    mixed = out[:, len(probes) :]
    truth = lam_q * matern_sdf(probes, spec, 1)

    m_mean = matched.mean(axis=0)
    se_re = matched.real.std(axis=0, ddof=1) / np.sqrt(reps)
    se_im = matched.imag.std(axis=0, ddof=1) / np.sqrt(reps)
    z_re = np.abs(m_mean.real - truth) / se_re
    z_im = np.abs(m_mean.imag) / se_im
    zmax = float(max(z_re.max(), z_im.max()))

    atten = np.abs(mixed.mean(axis=0)) / np.abs(m_mean)
    atten_max = float(atten.max())

    passed = zmax <= 3.0 and atten_max <= 0.7
    return SuiteReport(
        name="fig3",
        passed=passed,
        measured={"max_probe_z": zmax, "worst_mixed_over_matched": atten_max},
        tolerance={"max_probe_z": 3.0, "worst_mixed_over_matched": 0.7},
        reps=reps,
        seconds=time.time() - t0,
        details={
            "lam_q": lam_q,
            "truth": truth.tolist(),
            "matched_mean_re": m_mean.real.tolist(),
            "attenuation": atten.tolist(),
        },
    )


def suite_lgcp_cross(reps: int = 200, seed: int = 14, threads: int | None = None) -> SuiteReport:
    """Cross-to-marginal ratio of a 2-d log-Gaussian Cox process equals the
    point intensity over the band where the field spectrum is strong."""
    t0 = time.time()
    region, family = bench_region(), narrow_family()
    b = family.bandwidth
    spec = MaternSpec(sigma=1.0, ell=10.0, nu=2.5)
    model = LGCPModel(matern=spec, target_intensity=0.02)
    field_scheme = SamplingScheme.grid([5.0, 5.0])
    kgrid = WavenumberGrid.fourier([200.0, 100.0], kmax=0.04)

    def worker(rep):
        ds = model.simulate(region, seed + 104729 * rep, field_scheme, refine=8)
        est = multitaper_estimate(ds, family, kgrid)
        lam_hat = float(ds.processes[1].weights.sum() / region.area)
        return est.fhat, lam_hat

    results = _map_reps(worker, reps, threads)
    fhat = np.mean([r[0] for r in results], axis=0)
    lam_hat = float(np.mean([r[1] for r in results]))

    knorm = np.linalg.norm(kgrid.points, axis=1)
    f_pp = matern_sdf(kgrid.points, spec, 2)
    band = (f_pp > 0.1 * matern_sdf(np.zeros((1, 2)), spec, 2)[0]) & (knorm >= 1.2 * b)
    ratio = float(np.mean(np.abs(fhat[band, 0, 1]) / fhat[band, 0, 0].real))
    rel = abs(ratio / lam_hat - 1.0)

    passed = rel <= 0.15
    return SuiteReport(
        name="lgcp-cross",
        passed=passed,
        measured={"ratio": ratio, "lam_hat": lam_hat, "rel_error": float(rel)},
        tolerance={"rel_error": 0.15},
        reps=reps,
        seconds=time.time() - t0,
        details={"band_points": int(band.sum()), "bandwidth": b},
    )


def suite_shifted_pair(reps: int = 1, seed: int = 15, threads: int | None = None) -> SuiteReport:
    """Single-realisation group-delay recovery for a shifted Poisson pair."""
    t0 = time.time()
    region, family = big_region(), big_family()
    lam, tau = 0.001, np.array([10.5, 15.0])
    kgrid = WavenumberGrid.fourier([1000.0, 500.0], kmax=0.02)

    first, second = simulate_shifted_pair(region, lam, tau, seed)
    ds = SpatialDataset(region=region, labels=("base", "shifted"), processes=(first, second))
    est = multitaper_estimate(ds, family, kgrid)
    coh = coherence_and_delay(est)

    knorm = np.linalg.norm(kgrid.points, axis=1)
    band = (knorm > 0) & (knorm <= 0.02)
    mean_coh = float(np.nanmean(coh.r[band, 0, 1]))

    shape = (len(kgrid.axes[0]), len(kgrid.axes[1]))
    theta = coh.theta[:, 0, 1].reshape(shape)
    tau_hat = []
    for axis in range(2):
        dk = kgrid.axes[axis][1] - kgrid.axes[axis][0]
        diffs = np.angle(np.exp(1j * np.diff(theta, axis=axis)))
        tau_hat.append(float(np.mean(diffs) / (2 * np.pi * dk)))
    rel_err = [abs(t / tt - 1.0) for t, tt in zip(tau_hat, tau)]

    passed = max(rel_err) <= 0.05 and mean_coh >= 0.9 and min(len(first), len(second)) >= 500
    return SuiteReport(
        name="shifted-pair",
        passed=passed,
        measured={
            "tau_hat": tau_hat,
            "rel_err": [float(e) for e in rel_err],
            "mean_coherence": mean_coh,
            "points": min(len(first), len(second)),
        },
        tolerance={"rel_err": 0.05, "mean_coherence": 0.9, "points": 500},
        reps=1,
        seconds=time.time() - t0,
    )


def suite_variance_scaling(reps: int = 300, seed: int = 16, threads: int | None = None) -> SuiteReport:
    """Multitaper variance reduction: eight tapers cut the variance of the
    Poisson spectral estimate by roughly a factor of eight."""
    t0 = time.time()
    region, family = bench_region(), wide_family()
    lam, b = 0.02, family.bandwidth
    kgrid = WavenumberGrid.fourier([200.0, 100.0], kmax=0.25)
    cfg = EstimationConfig(nudft_method="nufft")
    M = family.count

    cont = SamplingScheme.continuous(2)
    transfers = [transfer_function(family, m, cont, kgrid) for m in range(M)]

    def worker(rep):
        pat = simulate_poisson(region, lam, seed, stream=(rep,))
        lam_hat = len(pat) / region.area
        J = np.empty((M, kgrid.size), dtype=complex)
        for m in range(M):
            J[m] = tapered_dft_points(
                pat, family, m, kgrid, region, intensity=lam_hat,
                method="nufft", transfer=transfers[m],
            ).values
        I = np.abs(J) ** 2
        return I[0], I.mean(axis=0)

    results = _map_reps(worker, reps, threads)
    i1 = np.array([r[0] for r in results])
    i8 = np.array([r[1] for r in results])

    knorm = np.linalg.norm(kgrid.points, axis=1)
    band = (knorm >= 2 * b) & (knorm <= 0.25)
    v1 = i1[:, band].var(axis=0, ddof=1).mean()
    v8 = i8[:, band].var(axis=0, ddof=1).mean()
    ratio = float(v8 / v1)

    passed = 1.0 / 12.0 <= ratio <= 1.0 / 5.0
    return SuiteReport(
        name="variance-scaling",
        passed=passed,
        measured={"var_ratio": ratio},
        tolerance={"var_ratio": [1.0 / 12.0, 1.0 / 5.0]},
        reps=reps,
        seconds=time.time() - t0,
        details={"ntapers": M},
    )


def suite_taper_quality(reps: int = 0, seed: int = 0, threads: int | None = None) -> SuiteReport:
    """Concentrations, lattice orthonormality, and the interpolation drift
    bound for every taper family the other suites rely on."""
    t0 = time.time()
    families = {
        "bench-wide": wide_family(),
        "bench-narrow": narrow_family(),
        "big": big_family(),
        "line": line_family(),
    }
    worst_conc, worst_gram, worst_margin = 1.0, 0.0, np.inf
    for fam in families.values():
        worst_conc = min(worst_conc, float(fam.concentrations.min()))
        gram = fam.gram()
        worst_gram = max(worst_gram, float(np.max(np.abs(gram - np.eye(fam.count)))))
        drift = np.abs(interpolated_gram(fam) - gram)
        bound = interpolation_gram_bound(fam)
        worst_margin = min(worst_margin, float(np.min(bound - drift)))
    passed = worst_conc >= 0.99 and worst_gram <= 1e-6 and worst_margin >= 0
    return SuiteReport(
        name="taper-quality",
        passed=passed,
        measured={
            "min_concentration": worst_conc,
            "max_gram_defect": worst_gram,
            "min_bound_margin": worst_margin,
        },
        tolerance={"min_concentration": 0.99, "max_gram_defect": 1e-6, "min_bound_margin": 0.0},
        reps=len(families),
        seconds=time.time() - t0,
    )


def suite_alias_identity(reps: int = 20, seed: int = 17, threads: int | None = None) -> SuiteReport:
    """Exact periodicity of sampled transfer functions and the aliased
    spectrum against an independent brute-force lattice sum."""
    t0 = time.time()
    family = wide_family()
    scheme = SamplingScheme.grid([2.0, 2.5], [0.3, 1.1])
    rng = rng_for(seed)
    kgrid = WavenumberGrid(points=rng.uniform(-0.2, 0.2, (reps, 2)))
    tf = transfer_function(family, 3, scheme, kgrid)
    zs = rng.integers(-3, 4, (reps, 2))
    zs[np.all(zs == 0, axis=1)] = [1, -2]
    shift = zs / scheme.delta
    lhs = tf.at(kgrid.points + shift)
    rhs = tf.values * np.exp(-2j * np.pi * (shift @ scheme.offset))
    period_err = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(tf.values)))

    spec = MaternSpec(sigma=1.0, ell=30.0, nu=2.5)
    f_true = lambda kk: matern_sdf(kk, spec, 2)
    a1 = AliasStructure.from_scheme(SamplingScheme.grid([10.0, 15.0], [0.0, 3.0]))
    a2 = AliasStructure.from_scheme(SamplingScheme.grid([5.0, 5.0]))
    radius = 1.5
    probes = [np.zeros(2), np.array([0.03, -0.02]), np.array([-0.01, 0.025])]

    def brute(alias_p, alias_q, k):
        # walk lattice p within the radius; keep points that also lie on q
        zs = np.array(np.meshgrid(np.arange(-40, 41), np.arange(-40, 41))).reshape(2, -1).T
        cand = zs * alias_p.generators
        cand = cand[np.max(np.abs(cand), axis=1) <= radius]
        out = 0.0 + 0.0j
        for psi in cand:
            # membership of psi in lattice q
            if np.any(alias_q.generators == 0):
                if not np.allclose(psi, 0.0, atol=1e-12):
                    continue
            else:
                ratio = psi / alias_q.generators
                if np.max(np.abs(ratio - np.round(ratio))) > 1e-9:
                    continue
            w = np.conj(alias_p.phase(psi)) * alias_q.phase(psi)
            out += w * complex(f_true(psi + k.reshape(1, 2))[0])
        return out

    rels = []
    for k in probes:
        fast = aliased_spectrum(f_true, a1, a1, k, radius=radius)
        slow = brute(a1, a1, k)
        rels.append(abs(fast - slow) / abs(slow))
        fast2 = aliased_spectrum(f_true, a1, a2, k, radius=radius)
        slow2 = brute(a1, a2, k)
        rels.append(abs(fast2 - slow2) / max(abs(slow2), 1e-300))
    alias_err = float(max(rels))

    passed = period_err <= 1e-12 and alias_err <= 1e-6
    return SuiteReport(
        name="alias-identity",
        passed=passed,
        measured={"periodicity_rel_err": period_err, "alias_sum_rel_err": alias_err},
        tolerance={"periodicity_rel_err": 1e-12, "alias_sum_rel_err": 1e-6},
        reps=reps,
        seconds=time.time() - t0,
    )


def _random_region(rng) -> Region:
    d = int(rng.integers(1, 3))
    if d == 1:
        length = float(rng.uniform(30, 80))
        region = Region.rectangle([length], delta_ref=length / rng.integers(40, 90))
        mask = region.mask.copy()
        cut = slice(int(0.3 * len(mask)), int(0.3 * len(mask)) + int(rng.integers(0, 0.2 * len(mask))))
        mask[cut] = False
        if not mask.any():
            mask[:] = True
        return Region(bbox=region.bbox, delta_ref=region.delta_ref, mask=mask)
    lengths = rng.uniform(25, 60, size=2)
    nx, ny = rng.integers(14, 26), rng.integers(10, 20)
    region = Region.rectangle(lengths, delta_ref=[lengths[0] / nx, lengths[1] / ny])
    mask = region.mask.copy()
    cx = rng.integers(0, mask.shape[0] // 2, size=2)
    cy = rng.integers(0, mask.shape[1] // 2, size=2)
    mask[cx[0] : cx[0] + cx[1], cy[0] : cy[0] + cy[1]] = False
    if mask.sum() < 0.4 * mask.size:
        mask[:] = True
    return Region(bbox=region.bbox, delta_ref=region.delta_ref, mask=mask)


def suite_structural(reps: int = 50, seed: int = 18, threads: int | None = None) -> SuiteReport:
    """Fuzz: Hermitian/PSD structure, coherence range and conjugate symmetry
    of the estimate over randomised regions, schemes and data."""
    t0 = time.time()
    worst = {"hermitian": 0.0, "psd": 0.0, "coh_excess": 0.0, "conj": 0.0}
    for cfg_i in range(reps):
        rng = rng_for(seed, cfg_i)
        region = _random_region(rng)
        d = region.ndim
        area = region.area
        shannon_target = rng.uniform(3.0, 6.0)
        b = shannon_target / (2 * area) if d == 1 else float(np.sqrt(shannon_target / (np.pi * area)))
        M = int(rng.integers(1, 4))
        family = compute_tapers(region, b, count=M)

        procs, labels = [], []
        for pi in range(int(rng.integers(1, 4))):
            if rng.random() < 0.5:
                lam = rng.uniform(20, 60) / area
                procs.append(simulate_poisson(region, lam, seed, stream=(cfg_i, pi)))
            else:
                step = region.lengths / rng.integers(5, 12, size=d)
                sch = SamplingScheme.grid(step, rng.uniform(0, step, size=d))
                zidx, pos = sch.grid_nodes(region)
                if len(zidx) == 0:
                    procs.append(simulate_poisson(region, 30 / area, seed, stream=(cfg_i, pi)))
                else:
                    vals = rng_for(seed, cfg_i, pi, 99).standard_normal(len(zidx))
                    procs.append(GriddedField(scheme=sch, zindex=zidx, values=vals))
            labels.append(f"p{pi}")
        ds = SpatialDataset(region=region, labels=tuple(labels), processes=tuple(procs))
        kmax = rng.uniform(2, 6) * b
        kgrid = WavenumberGrid.fourier(region.lengths, kmax=kmax)
        est = multitaper_estimate(ds, family, kgrid)

        scale = float(np.abs(est.fhat).max())
        worst["hermitian"] = max(worst["hermitian"], est.hermitian_defect() / max(scale, 1e-300))
        worst["psd"] = max(worst["psd"], -est.min_eigenvalue_ratio())
        coh = coherence_and_delay(est)
        finite = coh.r[np.isfinite(coh.r)]
        if finite.size:
            worst["coh_excess"] = max(
                worst["coh_excess"], float(max(finite.max() - 1.0, -finite.min()))
            )
        neg = kgrid.negation_index()
        conj_defect = float(np.max(np.abs(est.fhat[neg] - np.conj(est.fhat)))) / max(scale, 1e-300)
        worst["conj"] = max(worst["conj"], conj_defect)

    passed = (
        worst["hermitian"] <= 1e-12
        and worst["psd"] <= 1e-10
        and worst["coh_excess"] <= 0.0
        and worst["conj"] <= 1e-12
    )
    return SuiteReport(
        name="structural",
        passed=passed,
        measured={k: float(v) for k, v in worst.items()},
        tolerance={"hermitian": 1e-12, "psd": 1e-10, "coh_excess": 0.0, "conj": 1e-12},
        reps=reps,
        seconds=time.time() - t0,
    )


def suite_nudft(reps: int = 1, seed: int = 19, threads: int | None = None) -> SuiteReport:
    """Gaussian-gridding fast path against the direct nonuniform sum."""
    t0 = time.time()
    rng = rng_for(seed)
    pts = rng.uniform(0, [200.0, 100.0], (500, 2))
    coeffs = rng.standard_normal(500)
    kgrid = WavenumberGrid.fourier([200.0, 100.0], kmax=[0.25, 0.49])  # 101 x 99 modes
    fast = nudft_fast(pts, coeffs, kgrid)
    direct = nudft_direct(pts, coeffs, kgrid.points)
    err = float(np.max(np.abs(fast - direct)) / np.max(np.abs(direct)))
    passed = err <= 1e-9 and kgrid.size >= 10_000 - 2
    return SuiteReport(
        name="nudft",
        passed=passed,
        measured={"max_rel_err": err, "wavenumbers": kgrid.size, "points": 500},
        tolerance={"max_rel_err": 1e-9},
        reps=1,
        seconds=time.time() - t0,
    )


def suite_colocation(reps: int = 200, seed: int = 20, threads: int | None = None) -> SuiteReport:
    """Coherence of the colocation pair on mismatched grids: matches the
    closed form inside the coarse Nyquist box, dips below it outside."""
    t0 = time.time()
    region, family = bench_region(), narrow_family()
    spec = MaternSpec(sigma=1.0, ell=30.0, nu=2.5)
    alpha = (0.8, 0.5)
    grids = (
        SamplingScheme.grid([5.0, 5.0], [0.0, 0.0]),
        SamplingScheme.grid([10.0, 15.0], [0.0, 3.0]),
    )
    kgrid = WavenumberGrid.fourier([200.0, 100.0], kmax=[0.08, 0.05])
    truth = float(alpha[0] * alpha[1] / np.sqrt((1 + alpha[0] ** 2) * (1 + alpha[1] ** 2)))

    probes_in = np.array([[0.03, 0.0], [0.035, 0.01], [-0.03, 0.01], [0.025, -0.02], [0.025, 0.02]])
    probes_out = np.array([[0.07, 0.0], [0.075, 0.01], [0.0, 0.05]])
    idx_in = [int(np.argmin(np.linalg.norm(kgrid.points - p, axis=1))) for p in probes_in]
    idx_out = [int(np.argmin(np.linalg.norm(kgrid.points - p, axis=1))) for p in probes_out]

    def worker(rep):
        y1, y2 = simulate_colocation(region, spec, alpha, grids, seed, stream=(rep,))
        ds = SpatialDataset(region=region, labels=("f1", "f2"), processes=(y1, y2))
        est = multitaper_estimate(ds, family, kgrid)
        return est.fhat[idx_in + idx_out]

    blocks = np.array(_map_reps(worker, reps, threads))  # (reps, nprobe, 2, 2)

    def coh_of(mean_block):
        return np.abs(mean_block[:, 0, 1]) / np.sqrt(
            mean_block[:, 0, 0].real * mean_block[:, 1, 1].real
        )

    mean_all = blocks.mean(axis=0)
    r_hat = coh_of(mean_all)
    # jackknife over replicates for the SE of the coherence functional
    jk = np.array(
        [coh_of((mean_all * reps - blocks[i]) / (reps - 1)) for i in range(reps)]
    )
    se = np.sqrt((reps - 1) / reps * ((jk - jk.mean(axis=0)) ** 2).sum(axis=0))

    n_in = len(idx_in)
    z_in = np.abs(r_hat[:n_in] - truth) / se[:n_in]
    zmax = float(z_in.max())
    outside_gap = (truth - r_hat[n_in:]).tolist()

    passed = zmax <= 3.0
    return SuiteReport(
        name="colocation",
        passed=passed,
        measured={
            "max_probe_z": zmax,
            "coherence_in": r_hat[:n_in].tolist(),
            "truth": truth,
            "outside_gap": [float(g) for g in outside_gap],
        },
        tolerance={"max_probe_z": 3.0},
        reps=reps,
        seconds=time.time() - t0,
        details={"note": "outside-box coherence gap is recorded, not bounded"},
    )


def suite_unknown_mean(reps: int = 0, seed: int = 21, threads: int | None = None) -> SuiteReport:
    """Mean-estimation corrections: exact zero for unbiased estimators and
    negligible size outside three bandwidths."""
    t0 = time.time()
    region, family = bench_region(), wide_family()
    b = family.bandwidth
    scheme = SamplingScheme.grid([5.0, 5.0])
    level = 25.0  # flat spectrum level of the node noise
    f_true = lambda kk: np.full(len(np.atleast_2d(kk)), level, dtype=complex)

    n = 64
    ax = np.linspace(-0.04, 0.04, n + 1)[:-1]
    ggrid = WavenumberGrid.from_axes([ax, ax])
    gw = mean_weight_transfer(region, scheme, ggrid)
    probes = np.array([[0.16, 0.0], [0.2, 0.12], [0.0, 0.16], [0.18, 0.09]])

    worst_total = 0.0
    bias_terms = []
    for m in (0, family.count - 1):
        tf = transfer_function(family, m, scheme, ggrid)
        for k in probes:
            terms = unknown_mean_bias(f_true, tf, tf, gw, gw, k)
            bias_terms.append(abs(terms.bias_product))
            worst_total = max(worst_total, abs(terms.total) / level)

    passed = max(bias_terms) == 0.0 and worst_total <= 1e-6
    return SuiteReport(
        name="unknown-mean",
        passed=passed,
        measured={"max_bias_product": float(max(bias_terms)), "max_total_rel": worst_total},
        tolerance={"max_bias_product": 0.0, "max_total_rel": 1e-6},
        reps=len(probes) * 2,
        seconds=time.time() - t0,
        details={"probe_norm_over_b": [float(np.linalg.norm(k) / b) for k in probes]},
    )


SUITES = {
    "poisson-flat": suite_poisson_flat,
    "bias-oracle": suite_bias_oracle,
    "fig3": suite_fig3,
    "lgcp-cross": suite_lgcp_cross,
    "shifted-pair": suite_shifted_pair,
    "variance-scaling": suite_variance_scaling,
    "taper-quality": suite_taper_quality,
    "alias-identity": suite_alias_identity,
    "structural": suite_structural,
    "nudft": suite_nudft,
    "colocation": suite_colocation,
    "unknown-mean": suite_unknown_mean,
}


def run_suite(name: str, reps: int | None = None, seed: int | None = None, threads: int | None = None) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(sorted(SUITES))}")
    fn = SUITES[name]
    kwargs = {}
    if reps is not None:
        kwargs["reps"] = reps
    if seed is not None:
        kwargs["seed"] = seed
    if threads is not None:
        kwargs["threads"] = threads
    return fn(**kwargs)
