"""Command-line entry point wiring the full pipeline.

Subcommands: ingest, preprocess, tda, features, train-ae, score,
crossval, plot.  Every run writes an effective-config snapshot into the
output directory so it can be reproduced exactly.  Exit codes: 0
success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import plotting
from .autoencoder import TrainConfig, ae_channels, ae_train, ae_init, load_model, save_model
from .errors import InvalidInputError, NumericError, ParseError
from .evaluation import (
    ChannelMask,
    ExperimentConfig,
    leakage_audit,
    make_splits,
    run_ablation_grid,
    run_experiment,
)
from .features import feature_layout, feature_vector, pca_fit
from .preprocess import PreprocessConfig, preprocess_signal
from .segmentation import DEFAULT_K, DEFAULT_W, BeatWindow, slice_windows
from .synthetic import synthetic_record
from .tda import DEFAULT_BINS, Signal, betti_pair, sublevel_barcode, superlevel_barcode
from .wfdb import AnnotatedRecord, build_manifest, read_record

CONFIG_KEYS = set(PreprocessConfig.__dataclass_fields__) | {
    "bins",
    "beats_per_window",
    "window_length",
    "test_size",
    "seed",
    "epochs",
    "batch_size",
    "channels",
}


def load_config(path):
    """key = value text config; unknown keys are usage errors."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#")[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in CONFIG_KEYS:
            raise click.UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        values[key] = raw
    return values


def _coerce(raw, like):
    if isinstance(like, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    return type(like)(raw)


def build_preprocess_config(config_values) -> PreprocessConfig:
    defaults = PreprocessConfig()
    kwargs = {}
    for name in PreprocessConfig.__dataclass_fields__:
        if name in config_values:
            kwargs[name] = _coerce(config_values[name], getattr(defaults, name))
    return PreprocessConfig(**kwargs)


def snapshot_config(out_dir, command, effective):
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, "effective": effective}
    (out_dir / "effective_config.json").write_text(json.dumps(payload, indent=2, sort_keys=True))


def write_windows_csv(path, windows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        width = windows[0].samples.size if windows else DEFAULT_W
        writer.writerow(
            ["patient_id", "label", "center_position"] + [f"s{i}" for i in range(width)]
        )
        for w in windows:
            writer.writerow(
                [w.patient_id, w.label, repr(float(w.center_position))]
                + [repr(float(v)) for v in w.samples]
            )


def read_windows_csv(path):
    windows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:3] != ["patient_id", "label", "center_position"]:
            raise ParseError(f"{path}: not a windows table")
        for row in reader:
            samples = np.array([float(v) for v in row[3:]])
            windows.append(
                BeatWindow(
                    patient_id=row[0],
                    samples=samples,
                    label=row[1],
                    beat_count=DEFAULT_K,
                    center_beat_index=0,
                    raw_span=(0, samples.size),
                    center_position=float(row[2]),
                )
            )
    if not windows:
        raise ParseError(f"{path}: no windows")
    return windows


@click.group()
def cli():
    """ECG topological-feature toolkit."""


def common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="key = value config file")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True)(fn)
    fn = click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out", show_default=True)(fn)
    return fn


@cli.command()
@click.argument("prefixes", nargs=-1)
@click.option("--database", default="default", show_default=True)
@click.option("--channel", type=int, default=0, show_default=True)
@common_options
def ingest(prefixes, database, channel, config_path, seed, out_dir):
    """Parse WFDB records and write a dataset manifest."""
    out = Path(out_dir)
    loaded, failures = [], []
    for prefix in prefixes:
        try:
            loaded.append((prefix, database, read_record(prefix, channel)))
        except (ParseError, OSError, InvalidInputError) as exc:
            failures.append((prefix, str(exc)))
            click.echo(f"warning: skipping {prefix}: {exc}", err=True)
    if prefixes and not loaded:
        raise ParseError("all records failed to parse")
    manifest = build_manifest(loaded)
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(manifest.to_json())
    snapshot_config(out, "ingest", {
        "prefixes": list(prefixes), "database": database,
        "channel": channel, "seed": seed, "failures": failures,
    })
    total = sum(sum(h.values()) for h in manifest.label_histograms.values())
    click.echo(f"{len(loaded)} records, {total} beat labels -> {out / 'manifest.json'}")


@cli.command()
@click.argument("prefixes", nargs=-1)
@click.option("--synthetic", "synthetic_patients", type=int, default=0, help="generate N synthetic patients instead of reading records")
@click.option("--beats-per-window", type=int, default=DEFAULT_K, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--channel", type=int, default=0, show_default=True)
@common_options
def preprocess(prefixes, synthetic_patients, beats_per_window, jobs, channel, config_path, seed, out_dir):
    """Full chain: resample, de-trend, filter, normalize, slice windows."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_values = load_config(config_path) if config_path else {}
    cfg = build_preprocess_config(config_values)
    records = [read_record(p, channel) for p in prefixes]
    for i in range(synthetic_patients):
        labels = (["N"] * 3 + ["V"] + ["N"] * 2 + ["A"]) * 4
        records.append(synthetic_record(f"syn{i:03d}", labels, seed=seed + i))
    if not records:
        raise click.UsageError("no input: pass record prefixes or --synthetic N")

    def process(record):
        result = preprocess_signal(record.signal, cfg, record.beat_indices)
        beats = tuple(
            (int(i), s)
            for i, s in zip(result.annotation_indices, record.beat_symbols)
        )
        processed = AnnotatedRecord(record.patient_id, result.signal, beats, cfg.target_rate_hz)
        return record.patient_id, result, slice_windows(processed, k=beats_per_window)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outputs = list(pool.map(process, records))
    else:
        outputs = [process(r) for r in records]

    windows, stage_reports = [], {}
    for patient_id, result, patient_windows in outputs:
        windows.extend(patient_windows)
        stage_reports[patient_id] = {
            "stage_energy": result.stage_energy,
            "baseline_levels": result.baseline_levels,
            "flags": list(result.flags),
            "windows": len(patient_windows),
        }
        np.savetxt(
            out / f"processed_{patient_id}.csv",
            result.signal.samples,
            delimiter=",",
            header="amplitude",
            comments="",
        )
    if windows:
        write_windows_csv(out / "windows.csv", windows)
    plotting.plot_signal(
        outputs[0][1].signal,
        out / f"processed_{outputs[0][0]}.svg",
        title=f"Processed record {outputs[0][0]}",
        annotations=outputs[0][1].annotation_indices,
    )
    (out / "stage_report.json").write_text(json.dumps(stage_reports, indent=2, sort_keys=True))
    snapshot_config(out, "preprocess", {
        "prefixes": list(prefixes), "synthetic": synthetic_patients,
        "beats_per_window": beats_per_window, "jobs": jobs, "seed": seed,
        "preprocess": asdict(cfg),
    })
    click.echo(f"{len(windows)} windows from {len(records)} records -> {out / 'windows.csv'}")


@cli.command()
@click.argument("windows_csv", type=click.Path(exists=True))
@click.option("--bins", type=int, default=DEFAULT_BINS, show_default=True)
@click.option("--figures", type=int, default=4, show_default=True, help="render SVGs for the first N windows")
@common_options
def tda(windows_csv, bins, figures, config_path, seed, out_dir):
    """Barcodes and Betti curves for every window in a table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows = read_windows_csv(windows_csv)
    with open(out / "barcodes.csv", "w", newline="") as bar_fh, open(
        out / "betti.csv", "w", newline=""
    ) as betti_fh:
        bar_writer = csv.writer(bar_fh)
        betti_writer = csv.writer(betti_fh)
        bar_writer.writerow(["window", "kind", "birth", "death", "essential"])
        betti_writer.writerow(["window", "kind", "alpha", "count"])
        for idx, window in enumerate(windows):
            signal = Signal(window.samples, 1.0)
            for kind, barcode in (
                ("sublevel", sublevel_barcode(signal)),
                ("superlevel", superlevel_barcode(signal)),
            ):
                for iv in barcode.intervals:
                    bar_writer.writerow(
                        [idx, kind, repr(float(iv.birth)), repr(float(iv.death)), str(iv.essential).lower()]
                    )
            sub, sup = betti_pair(signal, bins)
            for kind, curve in (("sublevel", sub), ("superlevel", sup)):
                for alpha, count in zip(curve.grid, curve.counts):
                    betti_writer.writerow([idx, kind, repr(float(alpha)), int(count)])
            if idx < figures:
                plotting.plot_barcode(sublevel_barcode(signal), out / f"barcode_{idx:03d}.svg")
                plotting.plot_betti(sub, out / f"betti_{idx:03d}.svg")
    snapshot_config(out, "tda", {"windows": windows_csv, "bins": bins, "figures": figures, "seed": seed})
    click.echo(f"{len(windows)} windows -> {out / 'barcodes.csv'}, {out / 'betti.csv'}")


@cli.command()
@click.argument("windows_csv", type=click.Path(exists=True))
@common_options
def features(windows_csv, config_path, seed, out_dir):
    """Handcrafted feature table (DFT, fiducials, stats, PCA)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows = read_windows_csv(windows_csv)
    model = pca_fit(np.array([w.samples for w in windows]))
    layout = feature_layout()
    names = [
        f"{block}_{i}" for block, (_, length) in layout.items() for i in range(length)
    ]
    with open(out / "features.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["patient_id", "label", "degenerate"] + names)
        for w in windows:
            center = int(round(w.center_position * (w.samples.size - 1)))
            vec, degenerate = feature_vector(
                w.samples, center, w.samples.size / 2.0, model
            )
            writer.writerow(
                [w.patient_id, w.label, str(degenerate).lower()]
                + [repr(float(v)) for v in vec]
            )
    snapshot_config(out, "features", {"windows": windows_csv, "seed": seed, "layout": layout})
    click.echo(f"{len(windows)} feature rows -> {out / 'features.csv'}")


@cli.command("train-ae")
@click.argument("windows_csv", type=click.Path(exists=True))
@click.option("--epochs", type=int, default=150, show_default=True)
@click.option("--batch-size", type=int, default=128, show_default=True)
@common_options
def train_ae(windows_csv, epochs, batch_size, config_path, seed, out_dir):
    """Train the autoencoder on the normal windows of a table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows = read_windows_csv(windows_csv)
    normal = np.array([w.samples for w in windows if w.label == "N"])
    if normal.size == 0:
        normal = np.array([w.samples for w in windows])
    model = ae_init(seed, sizes=(normal.shape[1], 200, 100, 20, 100, 200, normal.shape[1]))
    trace = ae_train(model, normal, TrainConfig(epochs=epochs, batch_size=batch_size, seed=seed))
    save_model(model, out / "model")
    with open(out / "loss_trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mse"])
        for epoch, value in enumerate(trace):
            writer.writerow([epoch, repr(float(value))])
    plotting.plot_loss_trace(trace, out / "loss_trace.svg")
    snapshot_config(out, "train-ae", {
        "windows": windows_csv, "epochs": epochs, "batch_size": batch_size,
        "seed": seed, "trained_on": int(normal.shape[0]),
    })
    click.echo(f"final MSE {trace[-1]:.6g} -> {out / 'model.npz'}")


@cli.command()
@click.argument("windows_csv", type=click.Path(exists=True))
@click.option("--model", "model_prefix", required=True, type=click.Path())
@common_options
def score(windows_csv, model_prefix, config_path, seed, out_dir):
    """Reconstruction scores + latent codes from a trained model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(model_prefix)
    windows = read_windows_csv(windows_csv)
    with open(out / "scores.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        latent_dim = min(model.sizes)
        writer.writerow(
            ["patient_id", "label", "score"] + [f"z{i}" for i in range(latent_dim)]
        )
        for w in windows:
            latent, _, value = ae_channels(model, w.samples)
            writer.writerow(
                [w.patient_id, w.label, repr(float(value))]
                + [repr(float(v)) for v in latent]
            )
    snapshot_config(out, "score", {"windows": windows_csv, "model": str(model_prefix), "seed": seed})
    click.echo(f"{len(windows)} scores -> {out / 'scores.csv'}")


@cli.command()
@click.argument("windows_csv", type=click.Path(exists=True))
@click.option("--test-size", type=int, default=5, show_default=True)
@click.option("--task", type=click.Choice(["detection", "classification"]), default="detection", show_default=True)
@click.option("--channels", default="betti,features,latent,residual", show_default=True)
@click.option("--bins", type=int, default=32, show_default=True)
@click.option("--ae-epochs", type=int, default=30, show_default=True)
@click.option("--ablate", is_flag=True, help="run the channel-ablation grid")
@common_options
def crossval(windows_csv, test_size, task, channels, bins, ae_epochs, ablate, config_path, seed, out_dir):
    """Patient-based cross-validation with a softmax head."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    windows = read_windows_csv(windows_csv)
    wanted = {c.strip() for c in channels.split(",") if c.strip()}
    unknown = wanted - {"betti", "features", "latent", "residual"}
    if unknown:
        raise click.UsageError(f"unknown channels: {sorted(unknown)}")
    mask = ChannelMask(
        "betti" in wanted, "features" in wanted, "latent" in wanted, "residual" in wanted
    )
    patients = sorted({w.patient_id for w in windows})
    plan = make_splits(patients, test_size, seed=seed)
    cfg = ExperimentConfig(task=task, bins=bins, ae_epochs=ae_epochs, seed=seed)
    if ablate:
        rows = run_ablation_grid(windows, plan, cfg)
        with open(out / "ablation.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        click.echo(f"{len(rows)} ablation rows -> {out / 'ablation.csv'}")
    reports, aggregate = run_experiment(windows, plan, mask, cfg)
    violations = leakage_audit(reports, plan)
    payload = {
        "aggregate": aggregate,
        "leakage_violations": [list(map(str, v)) for v in violations],
        "folds": [
            {
                "fold": r.fold_index,
                "test_patients": list(r.test_patients),
                "val_weighted_accuracy": r.validation.weighted_accuracy,
                "test_weighted_accuracy": r.test.weighted_accuracy,
                "test_macro_ppv": r.test.macro_ppv,
                "test_macro_sensitivity": r.test.macro_sensitivity,
            }
            for r in reports
        ],
    }
    (out / "crossval.json").write_text(json.dumps(payload, indent=2, sort_keys=True))
    with open(out / "crossval.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "test_weighted_accuracy", "test_macro_ppv", "test_macro_sensitivity"])
        for r in reports:
            writer.writerow([
                r.fold_index,
                repr(r.test.weighted_accuracy),
                repr(r.test.macro_ppv),
                repr(r.test.macro_sensitivity),
            ])
    snapshot_config(out, "crossval", {
        "windows": windows_csv, "test_size": test_size, "task": task,
        "channels": sorted(wanted), "bins": bins, "ae_epochs": ae_epochs,
        "seed": seed, "ablate": ablate,
    })
    if violations:
        raise NumericError(f"leakage audit failed: {violations}")
    click.echo(
        f"{aggregate['folds']} folds, mean weighted accuracy "
        f"{aggregate['mean_weighted_accuracy']:.3f} -> {out / 'crossval.json'}"
    )


@cli.command("plot")
@click.argument("input_csv", type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["barcode", "betti", "loss"]), required=True)
@click.option("--window", "window_index", type=int, default=0, show_default=True)
@common_options
def plot_cmd(input_csv, kind, window_index, config_path, seed, out_dir):
    """Render a CSV table produced by tda/train-ae as an SVG figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(input_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ParseError(f"{input_csv}: empty table")
    target = out / f"{kind}.svg"
    if kind == "loss":
        plotting.plot_loss_trace([float(r["mse"]) for r in rows], target)
    elif kind == "barcode":
        from .tda import PersistenceBarcode

        picked = [r for r in rows if int(r["window"]) == window_index and r["kind"] == "sublevel"]
        if not picked:
            raise ParseError(f"{input_csv}: window {window_index} not present")
        barcode = PersistenceBarcode(
            np.array([float(r["birth"]) for r in picked]),
            np.array([float(r["death"]) for r in picked]),
            np.array([r["essential"] == "true" for r in picked]),
        )
        plotting.plot_barcode(barcode, target)
    else:
        from .tda import BettiCurve

        picked = [r for r in rows if int(r["window"]) == window_index and r["kind"] == "sublevel"]
        if not picked:
            raise ParseError(f"{input_csv}: window {window_index} not present")
        curve = BettiCurve(
            np.array([float(r["alpha"]) for r in picked]),
            np.array([int(r["count"]) for r in picked]),
        )
        plotting.plot_betti(curve, target)
    snapshot_config(out, "plot", {"input": input_csv, "kind": kind, "window": window_index})
    click.echo(f"-> {target}")


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False, auto_envvar_prefix="ECGTDA")
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except InvalidInputError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except (ParseError, OSError) as exc:
        click.echo(f"data error: {exc}", err=True)
        return 2
    except (NumericError, FloatingPointError) as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
