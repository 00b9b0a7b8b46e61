"""Command-line front end: taper construction, simulation, estimation,
validation.

All run parameters live in JSON config files whose relative paths resolve
against the config's own directory.  Numeric CSV output is written with 17
significant digits, so a rerun with the same config and seed is
byte-identical.

Exit codes: 0 success, 1 failed validation suite, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .estimator import EstimationConfig, coherence_and_delay, multitaper_estimate, write_metadata
from .fourier import GriddedField, PointPattern, SpatialDataset
from .geometry import Region, SamplingScheme, WavenumberGrid, nyquist_box
from .models import LGCPModel, model_from_dict
from .tapers import TaperFamily, compute_tapers
from .validate import SUITES, default_threads, run_suite


class ConfigError(Exception):
    pass


def _load_json(path: Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def cmd_tapers(args) -> int:
    region = Region.from_files(args.region)
    kwargs = {}
    if args.count is not None:
        kwargs["count"] = args.count
    else:
        kwargs["threshold"] = args.threshold
    family = compute_tapers(region, args.bandwidth, **kwargs)
    out = family.to_dir(args.out)
    print(f"wrote {family.count} tapers to {out}")
    return 0


def _write_truth(model, region, out: Path, kmax, pad: int):
    kgrid = WavenumberGrid.fourier(region.lengths, kmax=kmax, pad=pad)
    spectrum = model.true_spectrum(region.ndim)
    mat = spectrum.matrix(kgrid.points)
    d = region.ndim
    cols = ["kx", "ky"][:d] + ["p", "q", "re", "im"]
    rows = []
    for p in range(spectrum.nproc):
        for q in range(spectrum.nproc):
            rows.append(
                np.column_stack(
                    [
                        kgrid.points,
                        np.full(kgrid.size, p),
                        np.full(kgrid.size, q),
                        mat[:, p, q].real,
                        mat[:, p, q].imag,
                    ]
                )
            )
    np.savetxt(out / "truth.csv", np.vstack(rows), delimiter=",", header=",".join(cols), comments="", fmt="%.17g")


def cmd_simulate(args) -> int:
    cfg = _load_json(args.config)
    if args.model:
        cfg["model"] = args.model
    base = Path(args.config).parent
    region = Region.from_files(base / cfg["region"]) if "region" in cfg else None
    if region is None:
        raise ConfigError("simulate config needs a 'region' entry")
    model = model_from_dict(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if isinstance(model, LGCPModel):
        scheme = SamplingScheme.from_dict(cfg["field_scheme"])
        dataset = model.simulate(region, args.seed, scheme, refine=int(cfg.get("refine", 4)))
    else:
        dataset = model.simulate(region, args.seed)

    for label, proc in zip(dataset.labels, dataset.processes):
        proc.to_csv(out / f"{label}.csv")
    region.to_files(out / "region.json")
    if args.truth:
        kmax = cfg.get("truth_kmax", 0.1)
        _write_truth(model, region, out, kmax, int(cfg.get("truth_pad", 1)))
    print(f"wrote {len(dataset.processes)} processes to {out}")
    return 0


def _load_processes(cfg: dict, base: Path, region: Region):
    labels, procs = [], []
    for entry in cfg.get("processes", []):
        label = entry.get("label")
        kind = entry.get("kind")
        path = base / entry["path"]
        if not path.exists():
            raise ConfigError(f"process data file not found: {path}")
        if kind == "points":
            pat = PointPattern.from_csv(path)
            pat.check_in_region(region)
            procs.append(pat)
        elif kind == "field":
            scheme = SamplingScheme.from_dict(entry["scheme"]) if "scheme" in entry else None
            procs.append(GriddedField.from_csv(path, scheme))
        else:
            raise ConfigError(f"unknown process kind {kind!r} for {label!r}")
        labels.append(label)
    if not labels:
        raise ConfigError("estimate config lists no processes")
    if len(set(labels)) != len(labels):
        raise ConfigError("process labels must be unique")
    return SpatialDataset(region=region, labels=tuple(labels), processes=tuple(procs))


def _build_kgrid(cfg: dict, dataset: SpatialDataset) -> WavenumberGrid:
    kcfg = cfg.get("kgrid", {})
    pad = int(kcfg.get("pad", 1))
    full_k = bool(cfg.get("flags", {}).get("full_k", kcfg.get("full_k", False)))
    grid_schemes = [s for s in dataset.schemes() if s.is_grid]
    kmax = kcfg.get("kmax")
    if kmax is None:
        if not grid_schemes:
            raise ConfigError("kgrid.kmax is required when no process is grid sampled")
        kmax = np.min([nyquist_box(s)[:, 1] for s in grid_schemes], axis=0)
    else:
        kmax = np.broadcast_to(np.asarray(kmax, dtype=float), (dataset.region.ndim,)).copy()
        if grid_schemes and not full_k:
            tightest = np.min([nyquist_box(s)[:, 1] for s in grid_schemes], axis=0)
            kmax = np.minimum(kmax, tightest)
    return WavenumberGrid.fourier(dataset.region.lengths, kmax=kmax, pad=pad)


def cmd_estimate(args) -> int:
    cfg = _load_json(args.config)
    flags = cfg.setdefault("flags", {})
    if getattr(args, "full_k", False):
        flags["full_k"] = True
    if getattr(args, "allow_mixed_tapers", False):
        flags["allow_mixed_tapers"] = True
    base = Path(args.config).parent
    region = Region.from_files(base / cfg["region"])
    dataset = _load_processes(cfg, base, region)

    tcfg = cfg.get("tapers", {})
    if "dir" in tcfg:
        family = TaperFamily.from_dir(base / tcfg["dir"])
        meta = _load_json(base / tcfg["dir"] / "metadata.json")
        if meta.get("region_hash") != region.content_hash():
            raise ConfigError(
                "taper family was built for a different region (hash mismatch)"
            )
    else:
        kwargs = {"count": tcfg["count"]} if "count" in tcfg else {"threshold": tcfg.get("threshold", 0.99)}
        family = compute_tapers(region, float(tcfg["bandwidth"]), **kwargs)

    kgrid = _build_kgrid(cfg, dataset)
    flags = cfg.get("flags", {})
    est_cfg = EstimationConfig(
        oracle_intensity=dict(flags.get("oracle_lambda", {})),
        allow_mixed_tapers=bool(flags.get("allow_mixed_tapers", False)),
    )
    est = multitaper_estimate(dataset, family, kgrid, est_cfg)
    coh = coherence_and_delay(est)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    est.to_csv(out / "spectra.csv")
    coh.to_csv(out / "coherence.csv")
    write_metadata(out / "metadata.json", est, region)
    provenance = {
        "version": __version__,
        "config_hash": _sha256(args.config),
        "input_hashes": {
            entry["path"]: _sha256(base / entry["path"]) for entry in cfg.get("processes", [])
        },
        "seed": cfg.get("seed"),
        "wavenumbers": kgrid.size,
    }
    (out / "provenance.json").write_text(json.dumps(provenance, indent=2, sort_keys=True) + "\n")
    print(f"wrote spectra for {len(dataset)} processes at {kgrid.size} wavenumbers to {out}")
    return 0


def cmd_validate(args) -> int:
    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; available: {', '.join(sorted(SUITES))}", file=sys.stderr)
        return 2
    report = run_suite(args.suite, reps=args.reps, seed=args.seed, threads=args.threads)
    print(report.line())
    if args.out:
        Path(args.out).write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spatspec",
        description="Multitaper spectral estimation for spatial point patterns and gridded fields",
    )
    parser.add_argument("--threads", type=int, default=None, help="worker cap (default: SPATSPEC_THREADS or all cores)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tapers", help="compute a concentrated taper family for a region")
    p.add_argument("--region", required=True, help="region JSON header")
    p.add_argument("--bandwidth", type=float, required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--threshold", type=float, default=0.99)
    group.add_argument("--count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tapers)

    p = sub.add_parser("simulate", help="draw from a benchmark model")
    p.add_argument("--model", default=None, help="model name override (otherwise from config)")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", action="store_true", help="also tabulate the true spectrum")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="multitaper spectra, coherence and group delay")
    p.add_argument("--config", required=True)
    p.add_argument("--full-k", action="store_true", help="do not clip the wavenumber grid to the tightest Nyquist box")
    p.add_argument("--allow-mixed-tapers", action="store_true", help="demonstration mode: mismatched base tapers")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("validate", help="run a named validation suite")
    p.add_argument("suite")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="write the report JSON here")
    p.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", None) is None:
        args.threads = default_threads()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
