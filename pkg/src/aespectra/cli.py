"""Experiment orchestration: verification runs, training, analysis, reports.

Subcommands:

  rmt-verify   sample the random-matrix ensembles and test them against
               their limiting laws; emits per-law KS tables and scatter data
  train        train autoencoders over a latent-dimension grid, writing
               binary checkpoints at the requested epochs
  analyze      compute latent-Jacobian spectra for every checkpoint and
               write per-(epoch, dimension) box-plot summaries (CSV + JSON)
  predict      print/write the closed-form chain predictions per dimension
  report       render summaries as SVG box-plot panels

Exit codes: 0 success, 1 usage error, 2 data error (missing/invalid
files), 3 numerical failure (non-convergence, divergence, or a law
falling outside its tolerance). The MNIST directory may be supplied via
--data or the SPECTRA_DATA_DIR environment variable; --synthetic N runs
fully offline on the generated dataset. Every output file is a pure
function of the manifest and seeds; reruns with --run-id into a fresh
directory are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import autoencoder as ae
from . import data as datamod
from . import jacobian as jac
from . import linalg, rmt, spectra, svg
from .rng import derive

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

SUMMARY_COLUMNS = ("run_id", "latent_dim", "epoch", "n_points", "n_eigs",
                   "mod_min", "mod_q25", "mod_med", "mod_q75", "mod_p95", "mod_max",
                   "arg_min", "arg_q25", "arg_med", "arg_q75", "arg_p95", "arg_max",
                   "n_zero_eigs")

DEFAULT_DIMS = tuple(range(2, 21))
DEFAULT_CHECKPOINTS = (0, 1, 4, 10, 50, 300)
DESK_DIMS = (2, 4, 8, 16)
DESK_EPOCHS = 10
DESK_TRAIN_SAMPLES = 10_000
DESK_ANALYSIS_POINTS = 300

CHECKPOINT_RE = re.compile(r"^ae_d(\d+)_e(\d+)\.ckpt$")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class SchemaError(DataError):
    """CSV on disk does not carry the expected versioned column schema."""


class SuiteFailure(Exception):
    """A sampled ensemble fell outside its law's tolerance."""


@dataclass
class RunManifest:
    command: str
    out: str | None = None
    run_id: str | None = None
    seed: int = 0
    seeds: int | None = None
    law: str = "all"
    n: int | None = None
    chain_dims: tuple[int, ...] = (8, 16)
    chain_seeds: int | None = None
    dims: tuple[int, ...] | None = None
    epochs: int | None = None
    checkpoint_epochs: tuple[int, ...] | None = None
    data_dir: str | None = None
    synthetic: int | None = None
    train_samples: int | None = None
    batch_size: int = 128
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    checkpoints_dir: str | None = None
    points: int | None = None
    jacobian: str = "latent"
    dump_eigenvalues: bool = False
    append_csv: str | None = None
    workers: int = 1
    summaries: str | None = None
    desk: bool = False


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path, columns, rows) -> None:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def prepare_run_dir(out: str, run_id: str | None) -> tuple[str, str]:
    """Create the run directory; never silently overwrite existing output."""
    os.makedirs(out, exist_ok=True)
    if run_id is not None:
        path = os.path.join(out, run_id)
        if os.path.isdir(path) and os.listdir(path):
            raise DataError(f"run directory {path} already exists and is not empty")
        os.makedirs(path, exist_ok=True)
        return path, run_id
    i = 1
    while True:
        run_id = f"run-{i:03d}"
        path = os.path.join(out, run_id)
        if not os.path.exists(path):
            os.makedirs(path)
            return path, run_id
        i += 1


def _resolve_dataset(m: RunManifest) -> datamod.Dataset:
    if m.synthetic is not None:
        return datamod.synthetic_dataset(m.synthetic, m.seed)
    directory = m.data_dir or os.environ.get("SPECTRA_DATA_DIR")
    if not directory:
        raise datamod.DatasetMissingError(
            "no dataset configured: pass --data DIR (or set SPECTRA_DATA_DIR) "
            "with train-images-idx3-ubyte[.gz] / train-labels-idx1-ubyte[.gz], "
            "or use --synthetic COUNT for the offline dataset")
    return datamod.load_mnist(directory, "train")


# ---------------------------------------------------------------------------
# rmt-verify

def _uniform_args_cdf(t):
    return np.clip(np.asarray(t, dtype=np.float64) / np.pi, 0.0, 1.0)


def cmd_rmt_verify(m: RunManifest) -> int:
    run_dir, _ = prepare_run_dir(m.out, m.run_id)
    seeds = m.seeds if m.seeds is not None else 10
    chain_seeds = m.chain_seeds if m.chain_seeds is not None else 50
    laws = ("semicircle", "circular", "product", "chain") if m.law == "all" else (m.law,)

    rows = []
    failures = []

    if "semicircle" in laws:
        for n in ((m.n,) if m.n else (128, 256, 512)):
            ks_list = []
            for seed in range(seeds):
                eig = rmt.semicircle_spectrum(n, derive(m.seed, 1, n, seed))
                ks = spectra.ks_statistic(eig.real, rmt.semicircle_cdf)
                ks_list.append(ks)
                rows.append(("semicircle", n, "", seed, ks, "", "", ""))
            if float(np.mean(ks_list)) >= 0.05:
                failures.append(f"semicircle n={n}: mean KS {np.mean(ks_list):.4f} >= 0.05")

    if "circular" in laws:
        n = m.n or 512
        radius = 1.0 / np.sqrt(3.0)
        rad, ang, outside = [], [], []
        scatter = []
        for seed in range(seeds):
            eig = rmt.circular_law_spectrum(n, derive(m.seed, 2, n, seed))
            mods = np.abs(eig)
            ks_r = spectra.ks_statistic(mods ** 2,
                                        lambda t: rmt.uniform_disc_sq_modulus_cdf(radius, t))
            ks_a = spectra.ks_statistic(spectra.folded_arguments(eig), _uniform_args_cdf)
            frac = float(np.mean(mods > radius + 0.05))
            est = float(np.sqrt(2.0) * np.median(mods))
            rad.append(ks_r)
            ang.append(ks_a)
            outside.append(frac)
            rows.append(("circular", n, "", seed, ks_r, ks_a, frac, est))
            if seed == 0:
                scatter = [(float(v.real), float(v.imag)) for v in eig]
        _write_csv(os.path.join(run_dir, "disc_scatter.csv"), ("re", "im"), scatter)
        if float(np.mean(rad)) >= 0.05:
            failures.append(f"circular n={n}: mean radial KS {np.mean(rad):.4f} >= 0.05")
        if float(np.mean(ang)) >= 0.05:
            failures.append(f"circular n={n}: mean argument KS {np.mean(ang):.4f} >= 0.05")
        if float(np.mean(outside)) > 0.02:
            failures.append(f"circular n={n}: {np.mean(outside):.2%} moduli beyond disc + 0.05")

    if "product" in laws:
        n = m.n or 256
        for prod_m in (2, 3):
            ks_list = []
            for seed in range(seeds):
                eig = rmt.product_square_spectrum(n, prod_m, derive(m.seed, 3, prod_m, seed))
                ks = spectra.ks_statistic(np.abs(eig) ** 2,
                                          lambda t: rmt.product_sq_modulus_cdf(prod_m, t))
                ks_list.append(ks)
                rows.append(("product", n, f"m={prod_m}", seed, ks, "", "", ""))
            if float(np.mean(ks_list)) >= 0.08:
                failures.append(
                    f"product m={prod_m} n={n}: mean KS {np.mean(ks_list):.4f} >= 0.08")

    if "chain" in laws:
        spec = rmt.ChainSpec(m.chain_dims)
        pooled = []
        for seed in range(chain_seeds):
            eig = rmt.rect_chain_spectrum(spec, derive(m.seed, 4, seed))
            sq = np.abs(eig) ** 2
            pooled.append(sq)
            ks = spectra.ks_statistic(sq, lambda t: rmt.chain_sq_modulus_cdf(spec.alphas, t))
            rows.append(("chain", spec.dims[0], "x".join(map(str, spec.dims)), seed,
                         ks, "", "", ""))
        # Thm-level claim is about the seed-averaged (pooled) distribution
        ks_pooled = spectra.ks_statistic(np.concatenate(pooled),
                                         lambda t: rmt.chain_sq_modulus_cdf(spec.alphas, t))
        rows.append(("chain", spec.dims[0], "pooled", -1, ks_pooled, "", "", ""))
        if ks_pooled >= 0.12:
            failures.append(f"chain {spec.dims}: pooled KS {ks_pooled:.4f} >= 0.12")

    _write_csv(os.path.join(run_dir, "rmt_verify.csv"),
               ("law", "n", "detail", "seed", "ks", "ks_angular", "frac_outside",
                "radius_est"), rows)
    if failures:
        raise SuiteFailure("; ".join(failures))
    print(f"rmt-verify: {len(rows)} rows -> {run_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# train

def cmd_train(m: RunManifest) -> int:
    run_dir, _ = prepare_run_dir(m.out, m.run_id)
    dims = m.dims or (DESK_DIMS if m.desk else DEFAULT_DIMS)
    epochs = m.epochs if m.epochs is not None else (DESK_EPOCHS if m.desk else 300)
    if m.checkpoint_epochs is not None:
        checkpoints = m.checkpoint_epochs
        bad = [e for e in checkpoints if e > epochs]
        if bad:
            raise UsageError(f"checkpoint epochs {bad} exceed --epochs {epochs}")
    else:
        checkpoints = tuple(e for e in DEFAULT_CHECKPOINTS if e <= epochs)
    train_samples = m.train_samples or (DESK_TRAIN_SAMPLES if m.desk else None)

    dataset = _resolve_dataset(m)
    pts = dataset.subsample(train_samples, derive(m.seed, 0x5AB)) \
        if train_samples else dataset.points

    cfg = ae.TrainingConfig(
        epochs=epochs, seed=m.seed, checkpoint_epochs=frozenset(checkpoints),
        batch_size=m.batch_size, learning_rate=m.learning_rate, optimizer=m.optimizer)
    for d in dims:
        params = ae.init(d, m.seed)
        result = ae.train(params, pts, cfg)
        for epoch in sorted(result.checkpoints):
            path = os.path.join(run_dir, f"ae_d{d}_e{epoch}.ckpt")
            ae.save_checkpoint(path, result.checkpoints[epoch], epoch, m.seed)
        _write_csv(os.path.join(run_dir, f"losses_d{d}.csv"), ("epoch", "mean_loss"),
                   list(enumerate(result.epoch_losses, start=1)))
        print(f"train: d={d} epochs={epochs} checkpoints={sorted(result.checkpoints)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze

_WORK_PARAMS = None
_WORK_KIND = "latent"


def _worker_init(params, kind):
    global _WORK_PARAMS, _WORK_KIND
    _WORK_PARAMS = params
    _WORK_KIND = kind


def _point_spectrum(x):
    cache = ae.forward(_WORK_PARAMS, x)
    if _WORK_KIND == "input":
        j = jac.input_jacobian(_WORK_PARAMS, cache)
    else:
        j = jac.latent_jacobian(_WORK_PARAMS, cache)
    return linalg.eigenvalues(j)


def _spectra_for(params, pts, kind, workers):
    if workers <= 1:
        _worker_init(params, kind)
        return [_point_spectrum(x) for x in pts]
    with ProcessPoolExecutor(max_workers=workers, initializer=_worker_init,
                             initargs=(params, kind)) as pool:
        return list(pool.map(_point_spectrum, pts, chunksize=8))


def _find_checkpoints(directory: str):
    if not os.path.isdir(directory):
        raise DataError(f"checkpoint directory {directory} does not exist")
    found = []
    for name in sorted(os.listdir(directory)):
        match = CHECKPOINT_RE.match(name)
        if match:
            found.append((int(match.group(1)), int(match.group(2)),
                          os.path.join(directory, name)))
    if not found:
        raise DataError(f"no ae_d*_e*.ckpt checkpoints found in {directory}")
    return sorted(found)


def _summary_row(run_id: str, s: spectra.SpectralSummary):
    return (run_id, s.latent_dim, s.epoch, s.sample_points, s.eigen_count,
            *s.modulus_quantiles, *s.argument_quantiles, s.n_zero_eigs)


def _append_rows(path, rows) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
    if header != ",".join(SUMMARY_COLUMNS):
        raise SchemaError(
            f"{path} does not carry the expected summary schema; "
            f"found {header!r}")
    with open(path, "a", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def cmd_analyze(m: RunManifest) -> int:
    checkpoints = _find_checkpoints(m.checkpoints_dir)
    run_dir, run_id = prepare_run_dir(m.out, m.run_id)
    points = m.points or (DESK_ANALYSIS_POINTS if m.desk else 1000)
    dataset = _resolve_dataset(m)

    summaries = []
    rows = []
    for d, epoch, path in checkpoints:
        params, ckpt_epoch, _ = ae.load_checkpoint(path)
        if ckpt_epoch != epoch:
            raise DataError(f"{path}: embedded epoch {ckpt_epoch} != filename epoch {epoch}")
        pts = dataset.subsample(points, derive(m.seed, d, epoch))
        specs = _spectra_for(params, pts, m.jacobian, m.workers)
        summary = spectra.summarize(specs, epoch, d)
        summaries.append(summary)
        rows.append(_summary_row(run_id, summary))
        if m.dump_eigenvalues:
            dump = [(i, float(v.real), float(v.imag))
                    for i, spec in enumerate(specs) for v in spec]
            _write_csv(os.path.join(run_dir, f"eigenvalues_d{d}_e{epoch}.csv"),
                       ("point", "re", "im"), dump)
        print(f"analyze: d={d} epoch={epoch} median |lambda| = "
              f"{summary.modulus_quantiles[2]:.6f}")

    _write_csv(os.path.join(run_dir, "summaries.csv"), SUMMARY_COLUMNS, rows)
    spectra.save_summaries_json(os.path.join(run_dir, "summaries.json"), summaries)
    if m.append_csv:
        _append_rows(m.append_csv, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# predict

def cmd_predict(m: RunManifest) -> int:
    dims = m.dims or DEFAULT_DIMS
    rows = []
    for n1 in dims:
        spec = rmt.autoencoder_chain(n1)
        med_sq = float(rmt.predicted_sq_modulus(spec, 0.5))
        max_sq = float(rmt.predicted_sq_modulus(spec, 1.0))
        med, mx = rmt.predicted_modulus_stats(spec)
        rows.append((n1, med_sq, max_sq, med, mx))
    header = ("n1", "median_sq", "max_sq", "median_norm", "max_norm")
    print(" ".join(f"{h:>12}" for h in header))
    for row in rows:
        print(f"{row[0]:>12} " + " ".join(f"{v:>12.6g}" for v in row[1:]))
    if m.out:
        run_dir, _ = prepare_run_dir(m.out, m.run_id)
        _write_csv(os.path.join(run_dir, "predictions.csv"), header, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# report

def _load_summaries(path: str) -> list[spectra.SpectralSummary]:
    if os.path.isdir(path):
        path = os.path.join(path, "summaries.json")
    if not os.path.exists(path):
        raise DataError(f"summaries file {path} does not exist")
    summaries = spectra.load_summaries_json(path)
    if not summaries:
        raise DataError(f"{path} holds no summaries")
    return summaries


def _box_cells(cells: dict, dims, quantity: str):
    out = []
    for d in dims:
        s = cells[d]
        if quantity == "modulus":
            q = s.modulus_quantiles
            w = s.modulus_whiskers
            outliers = tuple(s.modulus_outliers)
        else:
            q = s.argument_quantiles
            w = s.argument_whiskers
            outliers = tuple(s.argument_outliers)
        out.append(svg.BoxCell(str(d), q[1], q[2], q[3], w[0], w[1], outliers))
    return out


def cmd_report(m: RunManifest) -> int:
    summaries = _load_summaries(m.summaries)
    grid: dict[int, dict[int, spectra.SpectralSummary]] = {}
    for s in summaries:
        grid.setdefault(s.epoch, {})[s.latent_dim] = s
    epochs = sorted(grid)
    dims = sorted({d for cells in grid.values() for d in cells})
    missing = [(e, d) for e in epochs for d in dims if d not in grid[e]]
    if missing:
        raise DataError("missing summary cells (epoch, latent_dim): "
                        + ", ".join(map(str, missing)))

    run_dir, _ = prepare_run_dir(m.out, m.run_id)
    mod_hi = max(s.modulus_whiskers[1] for s in summaries) * 1.05
    for epoch in epochs:
        svg.write_box_plot(
            os.path.join(run_dir, f"moduli_epoch{epoch}.svg"),
            _box_cells(grid[epoch], dims, "modulus"),
            title=f"eigenvalue moduli, epoch {epoch}",
            y_label="|lambda|", x_label="latent dimension",
            y_range=(0.0, mod_hi))
        svg.write_box_plot(
            os.path.join(run_dir, f"arguments_epoch{epoch}.svg"),
            _box_cells(grid[epoch], dims, "argument"),
            title=f"folded eigenvalue arguments, epoch {epoch}",
            y_label="|theta|", x_label="latent dimension",
            y_range=(0.0, np.pi), draw_outliers=True)
    if 0 in grid:
        svg.write_box_plot(
            os.path.join(run_dir, "moduli_epoch0_outliers.svg"),
            _box_cells(grid[0], dims, "modulus"),
            title="eigenvalue moduli at initialization (with outliers)",
            y_label="|lambda|", x_label="latent dimension",
            draw_outliers=True)
    print(f"report: {2 * len(epochs) + (1 if 0 in grid else 0)} panels -> {run_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_dims(text: str) -> tuple[int, ...]:
    text = text.strip()
    match = re.fullmatch(r"(\d+)\.\.(\d+)", text)
    if match:
        lo, hi = int(match.group(1)), int(match.group(2))
        if lo > hi:
            raise UsageError(f"empty dimension range {text!r}")
        return tuple(range(lo, hi + 1))
    try:
        return tuple(sorted({int(p) for p in text.split(",") if p.strip() != ""}))
    except ValueError:
        raise UsageError(f"cannot parse dimension list {text!r}") from None


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(sorted({int(p) for p in text.split(",") if p.strip() != ""}))
    except ValueError:
        raise UsageError(f"cannot parse integer list {text!r}") from None


def build_parser() -> _Parser:
    parser = _Parser(prog="aespectra", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--run-id", default=None, help="run subdirectory name")
        p.add_argument("--seed", type=int, default=0)

    def add_dataset(p):
        p.add_argument("--data", dest="data_dir", default=None,
                       help="directory holding the MNIST IDX files")
        p.add_argument("--synthetic", type=int, default=None, metavar="COUNT",
                       help="use the offline synthetic dataset instead of MNIST")

    p = sub.add_parser("rmt-verify", help="check sampled ensembles against their laws")
    add_common(p)
    p.add_argument("--law", choices=("all", "semicircle", "circular", "product", "chain"),
                   default="all")
    p.add_argument("--n", type=int, default=None, help="matrix order override")
    p.add_argument("--seeds", type=int, default=None, help="seeds per law")
    p.add_argument("--chain-dims", default="8,16", help="rectangular chain dims")
    p.add_argument("--chain-seeds", type=int, default=None,
                   help="seeds pooled for the chain law (default 50)")

    p = sub.add_parser("train", help="train the autoencoder grid")
    add_common(p)
    add_dataset(p)
    p.add_argument("--dims", default=None, help="latent dims, e.g. 2..20 or 2,4,8")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--checkpoints", default=None, help="checkpoint epochs, e.g. 0,1,4,10")
    p.add_argument("--train-samples", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--desk", action="store_true", help="desk-scale profile")

    p = sub.add_parser("analyze", help="compute Jacobian spectra for checkpoints")
    add_common(p)
    add_dataset(p)
    p.add_argument("--checkpoints", dest="checkpoints_dir", required=True,
                   help="directory holding ae_d*_e*.ckpt files")
    p.add_argument("--points", type=int, default=None, help="sample points per cell")
    p.add_argument("--jacobian", choices=("latent", "input"), default="latent")
    p.add_argument("--dump-eigenvalues", action="store_true")
    p.add_argument("--append-csv", default=None,
                   help="append rows to an existing summaries CSV")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--desk", action="store_true")

    p = sub.add_parser("predict", help="closed-form chain predictions")
    p.add_argument("--out", default=None)
    p.add_argument("--run-id", default=None)
    p.add_argument("--dims", default=None)

    p = sub.add_parser("report", help="render summary SVG panels")
    add_common(p)
    p.add_argument("--summaries", required=True,
                   help="summaries.json (or the analyze run directory)")
    return parser


def _manifest(args: argparse.Namespace) -> RunManifest:
    m = RunManifest(command=args.command)
    for name in vars(args):
        if name != "command" and hasattr(m, name):
            setattr(m, name, getattr(args, name))
    if getattr(args, "dims", None):
        m.dims = _parse_dims(args.dims)
    if getattr(args, "checkpoints", None) and args.command == "train":
        m.checkpoint_epochs = _parse_int_list(args.checkpoints)
    if getattr(args, "chain_dims", None):
        dims = _parse_int_list(args.chain_dims) if isinstance(args.chain_dims, str) \
            else args.chain_dims
        m.chain_dims = dims
    return m


COMMANDS = {
    "rmt-verify": cmd_rmt_verify,
    "train": cmd_train,
    "analyze": cmd_analyze,
    "predict": cmd_predict,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        manifest = _manifest(args)
        return COMMANDS[manifest.command](manifest)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, datamod.DatasetMissingError, datamod.IdxFormatError,
            ae.CheckpointFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (linalg.NonConvergenceError, ae.TrainingDivergedError, SuiteFailure,
            FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
