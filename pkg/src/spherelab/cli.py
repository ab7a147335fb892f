"""Experiment runner: reproducible recipes over the library, flat-file
results (CSV + JSON + manifest), and figure emission.

Every run is determined by its config and seed; rerunning a config writes
byte-identical CSV.  Exit code 0 means every module-level assertion made
during the run held.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import __version__
from .errors import SphereLabError, ValidationError

EXPERIMENTS = ("regions", "decay", "sharpness", "domination", "continuity", "weights")
FIGURES = ("regions", "fits", "decay")


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 2
    N: int = 256
    L: float = 2.0
    operator: str = "lacunary"
    example: str = "annulus"
    exponent_pairs: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    weight_points: list = field(default_factory=list)  # [a, p] pairs
    grid_sizes: list = field(default_factory=list)  # refinement N values
    translations: list = field(default_factory=list)  # |y| values
    r_max: float = 0.0
    big_c: float = 4.0
    annulus_c: float = 0.5
    seed: int = 0
    out: str = ""
    method: str = "auto"
    thresholds: dict = field(default_factory=dict)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            data = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def validate(self) -> List[str]:
        """Collect every violated precondition (empty list = valid)."""
        errs = []
        if self.experiment not in EXPERIMENTS:
            errs.append(f"experiment must be one of {EXPERIMENTS}")
        if self.n not in (2, 3):
            errs.append("n must be 2 or 3")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            errs.append("N must be a power of two, at least 8")
        if self.L <= 0:
            errs.append("L must be positive")
        if self.operator not in ("lacunary", "full"):
            errs.append("operator must be lacunary or full")
        if self.experiment in ("sharpness", "domination") and not self.deltas:
            errs.append("delta sweep required")
        if self.experiment == "domination" and not self.exponent_pairs:
            errs.append("domination experiment needs exponent pairs")
        spacing = 2.0 * self.L / max(self.N, 1)
        for d in self.deltas:
            if self.example == "annulus" and d < 4 * spacing:
                errs.append(f"delta {d} under the 4h resolution floor")
            if self.example == "knapp" and (self.big_c * d < 2 * spacing or d**0.5 < 4 * spacing):
                errs.append(f"knapp delta {d} unresolvable at N={self.N}")
        for pair in self.exponent_pairs:
            if not (0 <= pair[0] <= 1 and 0 <= pair[1] <= 1):
                errs.append(f"exponent pair {pair} outside [0,1]^2")
        if self.experiment == "weights" and not self.weight_points:
            errs.append("weights experiment needs (a, p) sample points")
        if self.experiment == "weights" and len(self.grid_sizes) < 2:
            errs.append("weights experiment needs at least 2 refinement grids")
        return errs

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_csv(path: Path, header: List[str], rows: List[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _spec(cfg: ExperimentConfig):
    from .grid import GridSpec

    return GridSpec(cfg.n, cfg.L, cfg.N)


# -- experiment bodies ---------------------------------------------------------


def _run_regions(cfg: ExperimentConfig, outdir: Path) -> dict:
    from fractions import Fraction

    from .regions import REGION_NAMES, phi_curves, region

    summary = {}
    rows = []
    for name in REGION_NAMES:
        R = region(cfg.n, name)
        verts = [[str(a), str(b)] for a, b in R.vertices]
        summary[name] = verts
        for k, (a, b) in enumerate(R.vertices):
            rows.append([name, k, float(a), float(b), f"{a}", f"{b}"])
    write_csv(outdir / "region_vertices.csv", ["region", "vertex", "inv_r", "inv_s", "exact_inv_r", "exact_inv_s"], rows)
    curve_rows = []
    for which, hi in (("lac", Fraction(1)), ("full", Fraction(cfg.n - 1, cfg.n)), ("psi", Fraction(cfg.n - 1, cfg.n))):
        for k in range(65):
            x = hi * k / 65 if which == "psi" else hi * k / 64
            y = phi_curves(cfg.n, which, x)
            curve_rows.append([which, float(x), float(y)])
    write_csv(outdir / "curves.csv", ["curve", "inv_r", "inv_s"], curve_rows)
    return {"regions": summary}


def _run_decay(cfg: ExperimentConfig, outdir: Path) -> dict:
    from .fourier import SphereSymbol, symbol_decay_profile

    spec = _spec(cfg)
    r_max = cfg.r_max or float(spec.nyquist)
    table = symbol_decay_profile(cfg.n, r_max)
    write_csv(outdir / "decay_profile.csv", ["xi_norm", "normalized_decay"], table.tolist())
    sym = SphereSymbol.build(cfg.n, r_max, num=2048)
    write_csv(
        outdir / "symbol_table.csv",
        ["xi_norm", "value"],
        np.column_stack([sym.table_radii, sym.table_values]).tolist(),
    )
    return {"r_max": r_max, "sup": float(table[:, 1].max())}


def _run_sharpness(cfg: ExperimentConfig, outdir: Path) -> dict:
    from .extremals import annulus_rate_experiment, boundary_locator, knapp_rate_experiment

    spec = _spec(cfg)
    summary: dict = {"example": cfg.example}
    rows = []
    if cfg.example == "annulus":
        fit = annulus_rate_experiment(spec, cfg.deltas, c=cfg.annulus_c)
    else:
        fit = knapp_rate_experiment(spec, cfg.deltas, big_c=cfg.big_c, method=cfg.method)
    summary["rate_fit"] = {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "max_residual": fit.max_residual,
    }
    for (lx, ly) in fit.points:
        rows.append([cfg.example, cfg.n, cfg.N, float(np.exp(lx)), "", "", float(np.exp(ly)), ""])
    if cfg.exponent_pairs:
        located = boundary_locator(
            cfg.example,
            [tuple(p) for p in cfg.exponent_pairs],
            spec,
            cfg.deltas,
            method=cfg.method,
            big_c=cfg.big_c,
        )
        summary["points"] = {}
        for (ir, is_), rep in located.items():
            summary["points"][f"({ir},{is_})"] = {
                "fitted_eps": rep["fitted_eps"],
                "predicted_eps": rep["predicted_eps"],
                "max_residual": rep["fit"].max_residual,
            }
            for d, c in zip(cfg.deltas, rep["c_values"]):
                rows.append([cfg.example, cfg.n, cfg.N, d, ir, is_, "", c])
    write_csv(
        outdir / "results.csv",
        ["experiment", "n", "N", "delta", "inv_r", "inv_s", "value", "c_emp"],
        rows,
    )
    return summary


def _run_domination(cfg: ExperimentConfig, outdir: Path) -> dict:
    from .extremals import annulus_pair, knapp_pair
    from .forms import domination_experiment
    from .sparse import collection_to_json

    spec = _spec(cfg)
    rows = []
    summary: dict = {"points": {}}
    ok = True
    for (ir, is_) in (tuple(p) for p in cfg.exponent_pairs):
        r, s = 1.0 / ir, 1.0 / is_
        cs = []
        for d in cfg.deltas:
            if cfg.example == "annulus":
                f, g = annulus_pair(spec, d, c=cfg.annulus_c)
            else:
                f, g = knapp_pair(spec, d, big_c=cfg.big_c)
            res = domination_experiment(
                f, g, cfg.operator, r, s, method=cfg.method, use_m_sets=True
            )
            cs.append(res.c_emp)
            rows.append([cfg.example, cfg.n, cfg.N, d, ir, is_, res.numerator, res.c_emp])
        spread = max(cs) / min(cs) if min(cs) > 0 else float("inf")
        summary["points"][f"({ir},{is_})"] = {"c_emp": cs, "spread": spread}
        ok = ok and np.isfinite(spread)
    (outdir / "last_collection.json").write_text(collection_to_json(res.collection))
    write_csv(
        outdir / "results.csv",
        ["experiment", "n", "N", "delta", "inv_r", "inv_s", "value", "c_emp"],
        rows,
    )
    summary["assertions_passed"] = ok
    return summary


def _run_continuity(cfg: ExperimentConfig, outdir: Path) -> dict:
    from .extremals import fit_loglog
    from .fourier import continuity_symbol_norm

    spec = _spec(cfg)
    ys = cfg.translations or [2.0**-k for k in range(2, 9)]
    vals = [continuity_symbol_norm(cfg.n, (y,) + (0.0,) * (cfg.n - 1), spec) for y in ys]
    fit = fit_loglog(ys, vals)
    write_csv(outdir / "results.csv", ["abs_y", "symbol_norm"], [[y, v] for y, v in zip(ys, vals)])
    return {
        "symbol_fit": {"slope": fit.slope, "max_residual": fit.max_residual},
        "samples": len(ys),
    }


def _run_weights(cfg: ExperimentConfig, outdir: Path) -> dict:
    from .extremals import probe_corpus
    from .grid import GridSpec
    from .weights import power_weight_builder, weighted_boundedness_probe

    rows = []
    summary: dict = {"points": {}}
    grids = [GridSpec(cfg.n, cfg.L, int(N)) for N in cfg.grid_sizes]
    thr = cfg.thresholds
    for a, p in (tuple(pt) for pt in cfg.weight_points):
        rep = weighted_boundedness_probe(
            cfg.operator,
            power_weight_builder(a),
            p,
            probe_corpus("full"),
            grids,
            grow_per_step=thr.get("grow_per_step"),
            stable_factor=thr.get("stable_factor"),
            stable_step=thr.get("stable_step"),
            method=cfg.method,
        )
        for N, ratio in zip(rep.grids, rep.ratios):
            rows.append([rep.weight_label, p, cfg.operator, N, ratio, rep.verdict])
        summary["points"][f"(a={a},p={p})"] = {"ratios": rep.ratios, "verdict": rep.verdict}
    write_csv(
        outdir / "results.csv",
        ["weight", "p", "operator", "refinement", "ratio", "verdict"],
        rows,
    )
    return summary


_RUNNERS = {
    "regions": _run_regions,
    "decay": _run_decay,
    "sharpness": _run_sharpness,
    "domination": _run_domination,
    "continuity": _run_continuity,
    "weights": _run_weights,
}


def output_root(explicit: Optional[str] = None) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get("SPHERELAB_OUT", "results"))


def run(cfg: ExperimentConfig, out_override: Optional[str] = None) -> dict:
    """Execute one experiment; returns the manifest (with output paths)."""
    errs = cfg.validate()
    if errs:
        raise ValidationError("; ".join(errs))
    root = output_root(out_override or cfg.out or None)
    outdir = root / cfg.experiment
    outdir.mkdir(parents=True, exist_ok=True)
    np.random.seed(cfg.seed)  # legacy global seeding for any stray consumers
    t0 = time.time()
    summary = _RUNNERS[cfg.experiment](cfg, outdir)
    wall = time.time() - t0
    manifest = {
        "experiment": cfg.experiment,
        "config_hash": hashlib.sha256(cfg.canonical_json().encode()).hexdigest(),
        "seed": cfg.seed,
        "versions": {
            "spherelab": __version__,
            "numpy": np.__version__,
            "python": sys.version.split()[0],
        },
        "wall_time_s": wall,
        "outdir": str(outdir),
        "assertions_passed": bool(summary.pop("assertions_passed", True)),
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=1, default=str))
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return manifest


# -- figures --------------------------------------------------------------------


def plotdata(bundle: Path, figure: str, outdir: Optional[Path] = None) -> list:
    """Emit plot CSV plus rendered matplotlib figures for a result bundle."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    bundle = Path(bundle)
    outdir = Path(outdir) if outdir else bundle
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    if figure == "regions":
        rows = _read_csv(bundle / "region_vertices.csv")
        fig, ax = plt.subplots(figsize=(5, 5))
        by_region: dict = {}
        for row in rows:
            by_region.setdefault(row["region"], []).append(
                (float(row["inv_r"]), float(row["inv_s"]))
            )
        out_rows = []
        for name, verts in by_region.items():
            loop = verts + verts[:1]
            xs, ys = zip(*loop)
            ax.plot(xs, ys, marker="o", label=name)
            out_rows.extend([[name, x, y] for x, y in loop])
        curves = bundle / "curves.csv"
        if curves.exists():
            cdata: dict = {}
            for row in _read_csv(curves):
                cdata.setdefault(row["curve"], []).append(
                    (float(row["inv_r"]), float(row["inv_s"]))
                )
            for which, pts in cdata.items():
                xs, ys = zip(*sorted(pts))
                style = "--" if which == "psi" else "-"
                ax.plot(xs, ys, style, alpha=0.6, label=f"1/phi_{which}")
        ax.set_xlabel("1/r")
        ax.set_ylabel("1/s")
        ax.legend(fontsize=7)
        written.append(_save_fig(fig, outdir / "regions"))
        write_csv(outdir / "regions_plotdata.csv", ["region", "inv_r", "inv_s"], out_rows)
        written.append(outdir / "regions_plotdata.csv")
    elif figure == "fits":
        rows = _read_csv(bundle / "results.csv")
        fig, ax = plt.subplots(figsize=(5, 4))
        pts = [
            (float(r["delta"]), float(r["c_emp"] or r["value"]))
            for r in rows
            if (r.get("c_emp") or r.get("value"))
        ]
        out_rows = []
        if pts:
            xs, ys = map(np.asarray, zip(*sorted(pts)))
            ax.loglog(xs, ys, "o")
            slope, intercept = np.polyfit(np.log(xs), np.log(ys), 1)
            ax.loglog(xs, np.exp(intercept) * xs**slope, "-", label=f"slope {slope:.3f}")
            out_rows = [[x, y, float(np.exp(intercept) * x**slope)] for x, y in zip(xs, ys)]
        ax.set_xlabel("delta")
        ax.set_ylabel("value")
        ax.legend(fontsize=8)
        written.append(_save_fig(fig, outdir / "fits"))
        write_csv(outdir / "fits_plotdata.csv", ["delta", "value", "fitted"], out_rows)
        written.append(outdir / "fits_plotdata.csv")
    elif figure == "decay":
        rows = _read_csv(bundle / "decay_profile.csv")
        xs = np.array([float(r["xi_norm"]) for r in rows])
        ys = np.array([float(r["normalized_decay"]) for r in rows])
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(xs, ys, lw=0.8)
        ax.set_xlabel("|xi|")
        ax.set_ylabel("|symbol| * |xi|^{(n-1)/2}")
        written.append(_save_fig(fig, outdir / "decay"))
        write_csv(outdir / "decay_plotdata.csv", ["xi_norm", "normalized_decay"], [[x, y] for x, y in zip(xs, ys)])
        written.append(outdir / "decay_plotdata.csv")
    else:
        raise ValidationError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    return [str(p) for p in written]


def _save_fig(fig, stem: Path):
    png = stem.with_suffix(".png")
    fig.savefig(png, dpi=150)
    fig.savefig(stem.with_suffix(".svg"))
    import matplotlib.pyplot as plt

    plt.close(fig)
    return png


def _read_csv(path: Path) -> list:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        return [dict(zip(header, line.strip().split(","))) for line in fh if line.strip()]


# -- entry point ------------------------------------------------------------------


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="spherelab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--jobs", type=int, default=-1)
    p_run.add_argument("--out", default=None)

    p_plot = sub.add_parser("plotdata", help="emit plot CSV + figures from a result bundle")
    p_plot.add_argument("bundle")
    p_plot.add_argument("--figure", required=True, choices=FIGURES)
    p_plot.add_argument("--out", default=None)

    p_cert = sub.add_parser("certify", help="re-verify a serialized sparse collection")
    p_cert.add_argument("path")
    p_cert.add_argument("--eta", type=float, default=0.25)

    p_reg = sub.add_parser("regions", help="emit region vertex data")
    p_reg.add_argument("--n", type=int, default=2)
    p_reg.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            from .fourier import set_default_workers

            set_default_workers(args.jobs)
            cfg = ExperimentConfig.from_file(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            manifest = run(cfg, out_override=args.out)
            print(json.dumps(manifest, indent=1))
            return 0 if manifest["assertions_passed"] else 1
        if args.command == "plotdata":
            for path in plotdata(Path(args.bundle), args.figure, args.out and Path(args.out)):
                print(path)
            return 0
        if args.command == "certify":
            from .sparse import verify_serialized_counts

            ok, witness = verify_serialized_counts(Path(args.path).read_text(), eta=args.eta)
            print(json.dumps({"certified": ok, "witness": witness}))
            return 0 if ok else 1
        if args.command == "regions":
            cfg = ExperimentConfig(experiment="regions", n=args.n)
            manifest = run(cfg, out_override=args.out)
            print(json.dumps(manifest, indent=1))
            return 0
    except (SphereLabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
