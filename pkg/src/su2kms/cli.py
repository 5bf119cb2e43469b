"""Pipeline orchestration: diagonalize -> correlate -> analyze, with CSV/SVG output.

Subcommands: diag, correlate, kms, thermo, plot.  Configuration comes from a
JSON file; command-line flags override individual fields.  Exit codes: 0 on
success, 1 for configuration problems, 2 for data/compute problems.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import subprocess
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import correlators, spectral, svgplot, tensors, thermo
from .chain import ModelConfig, build_all_sectors
from .errors import (
    BoundarySpin,
    EmptyWindow,
    KmsError,
    MissingCache,
    NoBinsInRange,
    ZeroDenominator,
)
from .halfint import HalfInt

log = logging.getLogger("su2kms")

TENSOR_BUILDERS = ("t00", "t20", "t40", "t44")


@dataclass(frozen=True)
class RunConfig:
    """Everything a pipeline run needs; JSON-serializable and hashable by content."""

    model: ModelConfig
    beta: float = 0.0
    spin_targets: tuple = (HalfInt(0),)
    tensors: tuple = ("t00",)
    bin_width: float = 0.2
    energy_window: float = 0.4
    omega_range: tuple = (2.0, 5.0)
    cache_dir: str = ""
    output_dir: str = "kms-out"
    parallelism: int = 1

    def __post_init__(self):
        object.__setattr__(
            self, "spin_targets", tuple(HalfInt.of(s) for s in self.spin_targets)
        )
        object.__setattr__(self, "tensors", tuple(self.tensors))
        object.__setattr__(self, "omega_range", tuple(float(x) for x in self.omega_range))
        if self.bin_width <= 0:
            raise ValueError("bin_width must be positive")
        if self.energy_window <= 0:
            raise ValueError("energy_window must be positive")
        if self.omega_range[0] >= self.omega_range[1]:
            raise ValueError("omega_range must be increasing")
        for name in self.tensors:
            if name not in TENSOR_BUILDERS:
                raise ValueError(f"unknown tensor builder {name!r}")
        cache = self.cache_dir or os.environ.get("KMS_CACHE_DIR", ".kms-cache")
        object.__setattr__(self, "cache_dir", cache)

    def to_dict(self) -> dict:
        return {
            "model": {
                "n_sites": self.model.n_sites,
                "coupling_j": self.model.coupling_j,
                "lambda_mix": self.model.lambda_mix,
            },
            "beta": self.beta,
            "spin_targets_twice": [s.twice for s in self.spin_targets],
            "tensors": list(self.tensors),
            "bin_width": self.bin_width,
            "energy_window": self.energy_window,
            "omega_range": list(self.omega_range),
            "cache_dir": self.cache_dir,
            "output_dir": self.output_dir,
            "parallelism": self.parallelism,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        return cls(
            model=ModelConfig(**d["model"]),
            beta=d.get("beta", 0.0),
            spin_targets=[HalfInt(t) for t in d.get("spin_targets_twice", [0])],
            tensors=d.get("tensors", ["t00"]),
            bin_width=d.get("bin_width", 0.2),
            energy_window=d.get("energy_window", 0.4),
            omega_range=d.get("omega_range", [2.0, 5.0]),
            cache_dir=d.get("cache_dir", ""),
            output_dir=d.get("output_dir", "kms-out"),
            parallelism=d.get("parallelism", 1),
        )

    def content_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return RunConfig.from_dict(json.load(fh))


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def sector_cache_path(config: RunConfig, m: HalfInt) -> str:
    model = config.model
    name = (
        f"N{model.n_sites}_J{model.coupling_j:g}_lam{model.lambda_mix:g}"
        f"_m{m.twice:+d}.kms1"
    )
    return os.path.join(config.cache_dir, name)


def planned_sectors(n_sites: int) -> list:
    return [HalfInt(t) for t in range(-n_sites, n_sites + 1, 2)]


def _git_describe() -> str | None:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        return out.stdout.strip() or None
    except (OSError, subprocess.SubprocessError):
        return None


def write_manifest(config: RunConfig, command: str) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    manifest = {
        "command": command,
        "config_hash": config.content_hash(),
        "config": config.to_dict(),
        "git": _git_describe(),
        "created_unix": time.time(),
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = os.path.join(config.output_dir, f"manifest_{command}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _cache_is_fresh(path: str, config: RunConfig, m: HalfInt) -> bool:
    if not os.path.exists(path):
        return False
    try:
        system = spectral.load_cache(path)
    except KmsError:
        return False
    return system.config == config.model and system.m == m


def cmd_diag(config: RunConfig) -> dict:
    """Cache eigensystems for every sector; checksummed caches are skipped."""
    os.makedirs(config.cache_dir, exist_ok=True)
    sectors = planned_sectors(config.model.n_sites)
    status = {}
    missing = []
    for m in sectors:
        path = sector_cache_path(config, m)
        if _cache_is_fresh(path, config, m):
            log.info("cache hit %s", path)
            status[m.twice] = "hit"
        else:
            missing.append(m)
    if missing:
        systems = spectral.laddered_systems(config.model)
        for m in missing:
            path = sector_cache_path(config, m)
            if os.path.exists(path):
                os.unlink(path)
            spectral.save_cache(systems[m], path)
            log.info("cache built %s", path)
            status[m.twice] = "built"
    write_manifest(config, "diag")
    return {
        "files": [sector_cache_path(config, m) for m in sectors],
        "status": status,
    }


def load_cached_systems(config: RunConfig) -> dict:
    systems = {}
    for m in planned_sectors(config.model.n_sites):
        path = sector_cache_path(config, m)
        if not os.path.exists(path):
            raise MissingCache(f"{path} not found; run `diag` first")
        systems[m] = spectral.load_cache(path)
    return systems


def _build_tensor(name: str, config: RunConfig, sectors) -> tensors.SphericalTensor:
    if name == "t00":
        return tensors.build_t00(config.model, sectors)
    if name == "t20":
        return tensors.build_t20(config.model, sectors)
    if name == "t44":
        return tensors.build_t44(config.model, sectors)
    if name == "t40":
        t = tensors.build_t44(config.model, sectors)
        for _ in range(4):
            t = tensors.lower(t, sectors)
        return t
    raise ValueError(f"unknown tensor builder {name!r}")


def _ds_values(k: HalfInt) -> list:
    if k.twice >= 4:
        return [HalfInt(-4), HalfInt(0), HalfInt(4)]  # ds = -2, 0, +2
    return [HalfInt(0)]


def write_curve_csv(path, curve, dm: HalfInt) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega_center", "dm", "ds", "value", "std", "count"])
        ds = curve.ds if curve.ds is not None else HalfInt(0)
        for i in range(len(curve.omegas)):
            writer.writerow(
                [
                    f"{curve.omegas[i]:.17g}",
                    f"{float(dm):g}",
                    f"{float(ds):g}",
                    f"{curve.mean[i]:.17g}",
                    f"{curve.std[i]:.17g}",
                    int(curve.counts[i]),
                ]
            )


def write_correlator_csv(path, corr) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["omega_center", "dm", "ds", "value", "std", "count"])
        for dm2, ds2 in corr.channels():
            channel = corr.bins[(dm2, ds2)]
            cnt = corr.counts[(dm2, ds2)]
            for n in sorted(channel):
                writer.writerow(
                    [
                        f"{(n + 0.5) * corr.bin_width:.17g}",
                        f"{dm2 / 2:g}",
                        f"{ds2 / 2:g}",
                        f"{channel[n]:.17g}",
                        "0",
                        cnt[n],
                    ]
                )


def _sidecar(path, meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_correlate(config: RunConfig) -> dict:
    """Export binned fine-grained correlators for the selected eigenstates."""
    systems = load_cached_systems(config)
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    m0 = HalfInt(0) if config.model.n_sites % 2 == 0 else HalfInt(1)
    written = []
    for name in config.tensors:
        sectors = build_all_sectors(config.model.n_sites)
        t = _build_tensor(name, config, sectors)
        for s in config.spin_targets:
            idx = spectral.select_eigenstate(systems[m0], s, config.beta)
            peaks = correlators.eigen_peaks(t, t, systems, m0, idx)
            corr = correlators.bin_peaks(peaks, config.bin_width)
            base = os.path.join(out_dir, f"corr_{name}_s{s.twice}")
            write_correlator_csv(base + ".csv", corr)
            _sidecar(
                base + ".json",
                {
                    "tensor": name,
                    "n_sites": config.model.n_sites,
                    "spin_twice": s.twice,
                    "beta": config.beta,
                    "bin_width": config.bin_width,
                    "origin": corr.origin,
                    "static": correlators.static_correlator(t, t, systems, m0, idx),
                },
            )
            written.append(base + ".csv")
    write_manifest(config, "correlate")
    return {"files": written}


def _kms_eigenstate(config: RunConfig, systems, summary: dict, out_dir: str) -> None:
    n = config.model.n_sites
    m0 = HalfInt(0) if n % 2 == 0 else HalfInt(1)
    sectors = build_all_sectors(n)
    fig2_rows = []
    for name in config.tensors:
        t = _build_tensor(name, config, sectors)
        for s in config.spin_targets:
            key = f"{name}_s{s.twice}"
            anchor = "thermal"
            try:
                try:
                    curves = correlators.ensemble_log_ratios(
                        t,
                        t,
                        systems,
                        s,
                        config.beta,
                        config.energy_window,
                        config.bin_width,
                        _ds_values(t.k),
                        m=m0,
                        workers=config.parallelism,
                    )
                except EmptyWindow:
                    # thermal energy sits in a gap of the spin-s levels;
                    # anchor the same window at the selected eigenstate
                    anchor = "selected"
                    curves = correlators.ensemble_log_ratios(
                        t,
                        t,
                        systems,
                        s,
                        config.beta,
                        config.energy_window,
                        config.bin_width,
                        _ds_values(t.k),
                        m=m0,
                        workers=config.parallelism,
                        anchor="selected",
                    )
            except KmsError as exc:
                summary[key] = {"error": f"{type(exc).__name__}: {exc}"}
                continue
            entry: dict = {
                "tensor": name,
                "spin_twice": s.twice,
                "beta": config.beta,
                "window_anchor": anchor,
            }
            series = []
            for ds2, curve in sorted(curves.items()):
                base = os.path.join(out_dir, f"logratio_{key}_ds{ds2}")
                write_curve_csv(base + ".csv", curve, t.q)
                _sidecar(
                    base + ".json",
                    {
                        "tensor": name,
                        "n_sites": n,
                        "spin_twice": s.twice,
                        "ds_twice": ds2,
                        "beta": config.beta,
                        "bin_width": config.bin_width,
                        "energy_window": config.energy_window,
                        "window_anchor": anchor,
                    },
                )
                sel = curve.omegas > 0
                series.append(
                    {
                        "x": curve.omegas[sel],
                        "y": curve.mean[sel] / curve.omegas[sel],
                        "yerr": curve.std[sel] / curve.omegas[sel],
                        "label": f"ds={ds2 / 2:g}",
                    }
                )
            zero = curves.get(0)
            if zero is not None:
                try:
                    entry["beta_eff"] = correlators.beta_eff(zero, config.omega_range)
                    entry["delta_beta"] = correlators.delta_beta(
                        zero, config.beta, config.omega_range
                    )
                    fig2_rows.append(
                        (name, float(s), entry["beta_eff"], entry["delta_beta"])
                    )
                except NoBinsInRange as exc:
                    entry["beta_eff_error"] = str(exc)
            if -4 in curves and 4 in curves:
                try:
                    e_th = spectral.thermal_energy(systems[m0], s, config.beta)
                    ref = thermo.beta_gamma_fd(n, e_th, s)
                    entry["beta_gamma_ref"] = ref
                    entry["delta_beta_gamma"] = correlators.delta_beta_gamma(
                        curves[-4], curves[4], ref, config.omega_range
                    )
                except (BoundarySpin, NoBinsInRange, ZeroDenominator) as exc:
                    entry["beta_gamma_error"] = f"{type(exc).__name__}: {exc}"
            svgplot.line_plot(
                os.path.join(out_dir, f"logratio_{key}.svg"),
                series,
                title=f"N={n} s={s} beta={config.beta:g} {name}",
                xlabel="Omega",
                ylabel="L/Omega",
                hlines=[config.beta],
            )
            summary[key] = entry
    if fig2_rows:
        path = os.path.join(out_dir, "delta_beta_vs_s.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tensor", "s_over_n", "beta_eff", "delta_beta_times_n"])
            for name, sval, beff, dbeta in fig2_rows:
                writer.writerow([name, f"{sval / n:.17g}", f"{beff:.17g}", f"{dbeta * n:.17g}"])
        by_tensor: dict = {}
        for name, sval, _beff, dbeta in fig2_rows:
            by_tensor.setdefault(name, ([], []))
            by_tensor[name][0].append(sval / n)
            by_tensor[name][1].append(dbeta * n)
        svgplot.line_plot(
            os.path.join(out_dir, "delta_beta_vs_s.svg"),
            [{"x": xs, "y": ys, "label": name} for name, (xs, ys) in by_tensor.items()],
            title=f"N={n} finite-size deviation",
            xlabel="s/N",
            ylabel="delta_beta * N",
        )


def _kms_nats(config: RunConfig, systems, nats: tuple, summary: dict, out_dir: str) -> None:
    beta, mu, gamma = nats
    params = correlators.ThermoParams(beta=beta, mu=mu, gamma=gamma)
    n = config.model.n_sites
    sectors = build_all_sectors(n)
    for name in config.tensors:
        t = _build_tensor(name, config, sectors)
        fwd = correlators.bin_peaks(
            correlators.nats_peaks(t, t, systems, params), config.bin_width
        )
        rev = fwd  # A = B and q = 0, so the reversed correlator is the same object
        entry: dict = {
            "tensor": name,
            "beta": beta,
            "mu": mu,
            "gamma": gamma,
            "kms_max_rel_error": correlators.nats_kms_max_error(t, t, systems, params),
        }
        series = []
        for ds in _ds_values(t.k):
            curve = correlators.log_ratio(fwd, rev, ds)
            curve.beta = beta
            base = os.path.join(out_dir, f"nats_logratio_{name}_ds{ds.twice}")
            write_curve_csv(base + ".csv", curve, t.q)
            _sidecar(
                base + ".json",
                {
                    "tensor": name,
                    "n_sites": n,
                    "ds_twice": ds.twice,
                    "beta": beta,
                    "mu": mu,
                    "gamma": gamma,
                    "bin_width": config.bin_width,
                },
            )
            sel = curve.omegas > 0
            series.append(
                {
                    "x": curve.omegas[sel],
                    "y": curve.mean[sel] / curve.omegas[sel],
                    "label": f"ds={float(ds):g}",
                }
            )
            if ds.twice == 0 and np.any(sel):
                try:
                    entry["beta_eff"] = correlators.beta_eff(curve, config.omega_range)
                except NoBinsInRange:
                    pass
        svgplot.line_plot(
            os.path.join(out_dir, f"nats_logratio_{name}.svg"),
            series,
            title=f"NATS N={n} beta={beta:g} mu={mu:g} gamma={gamma:g} {name}",
            xlabel="Omega",
            ylabel="L/Omega",
            hlines=[beta],
        )
        summary[f"nats_{name}"] = entry


def cmd_kms(config: RunConfig, nats: tuple | None = None) -> dict:
    """Log-ratio curves, beta_eff / delta_beta summaries, and figure SVGs."""
    systems = load_cached_systems(config)
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    summary: dict = {
        "n_sites": config.model.n_sites,
        "beta": config.beta,
        "mode": "nats" if nats else "eigenstate",
    }
    if nats is not None:
        _kms_nats(config, systems, nats, summary, out_dir)
    else:
        _kms_eigenstate(config, systems, summary, out_dir)
    path = os.path.join(out_dir, "kms_summary.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_manifest(config, "kms")
    return {"summary": summary, "summary_path": path}


def cmd_thermo(config: RunConfig) -> dict:
    """Scaling-function, mean-spin, and multiplicity tables as CSV."""
    out_dir = config.output_dir
    os.makedirs(out_dir, exist_ok=True)
    n = config.model.n_sites
    written = []

    path = os.path.join(out_dir, "scaling_functions.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["gamma_tilde", "z_tilde", "s_tilde"])
        for gt10 in range(-50, 51):
            gt = gt10 / 10.0
            point = thermo.ScalingPoint(
                gamma_tilde=gt, z_tilde=thermo.scaling_z(gt), s_tilde=thermo.scaling_s(gt)
            )
            writer.writerow(
                [f"{point.gamma_tilde:.17g}", f"{point.z_tilde:.17g}", f"{point.s_tilde:.17g}"]
            )
    written.append(path)

    path = os.path.join(out_dir, "mean_spin.csv")
    n_even = n if n % 2 == 0 else n + 1
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_sites", "beta_gamma", "mean_spin", "sqrt_2n_over_pi"])
        for bg100 in range(-50, 51, 5):
            bg = bg100 / 100.0
            writer.writerow(
                [
                    n_even,
                    f"{bg:.17g}",
                    f"{thermo.mean_spin_exact(n_even, bg):.17g}",
                    f"{math.sqrt(2 * n_even / math.pi):.17g}",
                ]
            )
    written.append(path)

    path = os.path.join(out_dir, "multiplicities.csv")
    table = thermo.multiplicities(n)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["s", "count", "massieu_entropy"])
        for s in sorted(table.table, key=lambda h: h.twice):
            writer.writerow(
                [f"{float(s):g}", table.table[s], f"{thermo.massieu_entropy(n, s):.17g}"]
            )
    written.append(path)
    write_manifest(config, "thermo")
    return {"files": written}


def cmd_plot(config: RunConfig) -> dict:
    """Re-render SVGs from the log-ratio CSVs already in the output directory."""
    out_dir = config.output_dir
    made = []
    for fname in sorted(os.listdir(out_dir)):
        if not fname.endswith(".csv") or not fname.startswith(("logratio", "nats_logratio")):
            continue
        xs, ys, es = [], [], []
        with open(os.path.join(out_dir, fname), newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                omega = float(row["omega_center"])
                if omega <= 0:
                    continue
                xs.append(omega)
                ys.append(float(row["value"]) / omega)
                es.append(float(row["std"]) / omega)
        svg = os.path.join(out_dir, fname[:-4] + ".svg")
        svgplot.line_plot(
            svg,
            [{"x": xs, "y": ys, "yerr": es, "label": fname[:-4]}],
            title=fname[:-4],
            xlabel="Omega",
            ylabel="L/Omega",
        )
        made.append(svg)
    write_manifest(config, "plot")
    return {"files": made}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--n", type=int, help="override number of sites")
    common.add_argument(
        "--s",
        type=int,
        action="append",
        help="spin target as 2s (repeatable)",
    )
    common.add_argument("--beta", type=float, help="override inverse temperature")
    common.add_argument("--cache-dir", help="override cache directory")
    common.add_argument("--output-dir", help="override output directory")
    parser = argparse.ArgumentParser(prog="su2kms", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("diag", "correlate", "thermo", "plot"):
        sub.add_parser(name, parents=[common])
    kms = sub.add_parser("kms", parents=[common])
    kms.add_argument(
        "--nats",
        nargs=3,
        type=float,
        metavar=("BETA", "MU", "GAMMA"),
        help="evaluate the thermal-state correlators instead of eigenstates",
    )
    return parser


def _config_from_args(args) -> RunConfig:
    if args.config:
        config = load_config(args.config)
    else:
        if args.n is None:
            raise ValueError("either --config or --n is required")
        config = RunConfig(model=ModelConfig(n_sites=args.n))
    if args.n is not None and args.n != config.model.n_sites:
        config = replace(config, model=replace(config.model, n_sites=args.n))
    if args.s:
        config = replace(config, spin_targets=tuple(HalfInt(t) for t in args.s))
    if args.beta is not None:
        config = replace(config, beta=args.beta)
    if args.cache_dir:
        config = replace(config, cache_dir=args.cache_dir)
    if args.output_dir:
        config = replace(config, output_dir=args.output_dir)
    return config


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = _parser().parse_args(argv)
    try:
        config = _config_from_args(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        log.error("config error: %s", exc)
        return 1
    try:
        if args.command == "diag":
            cmd_diag(config)
        elif args.command == "correlate":
            cmd_correlate(config)
        elif args.command == "kms":
            cmd_kms(config, nats=tuple(args.nats) if args.nats else None)
        elif args.command == "thermo":
            cmd_thermo(config)
        elif args.command == "plot":
            cmd_plot(config)
    except (KmsError, OSError) as exc:
        log.error("data error: %s", exc)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())
