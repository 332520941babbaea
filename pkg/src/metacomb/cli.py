"""Command-line interface wiring the offline and online phases.

Verbs: ``synth`` (corpus generation), ``prepare`` (metadata), ``train``,
``evaluate`` (OWA/sOWA tables plus rank tests), ``forecast`` (online
phase), and ``explain`` (Grad-CAM export). Options come from an optional
``key = value`` config file overridden by flags. Errors exit nonzero
with a single ``ERROR <code>: message`` line on stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from .errors import MetacombError
from .explain import gradcam, predict_labels, write_heatmap_csv, write_heatmap_svg
from .network import train
from .pipeline import (
    DatasetManifest,
    ModelContainer,
    build_settings,
    evaluate_dataset,
    generate_synthetic,
    ingest_wide_csv,
    load_model,
    parse_config_file,
    prepare_metadata,
    read_metadata,
    run_online,
    save_model,
    write_forecast_csv,
    write_metadata,
    write_ranks_csv,
    write_scores_csv,
    write_weights_csv,
    write_wide_csv,
)
from .series import Frequency, prepare_input, split_train_test

OPTION_FLAGS = (
    ("frequency", str), ("horizon", int), ("seasonal_period", int), ("input_length", int),
    ("pool", str), ("lambda", float), ("lr", float), ("batch_size", int),
    ("max_epochs", int), ("patience", int), ("seed", int), ("tau", float),
)


def _add_option_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value config file")
    for name, kind in OPTION_FLAGS:
        parser.add_argument(f"--{name.replace('_', '-')}", dest=f"opt_{name}", type=kind)


def _collect_options(args: argparse.Namespace) -> dict[str, str]:
    options: dict[str, str] = {}
    if getattr(args, "config", None):
        options.update(parse_config_file(args.config))
    for name, _ in OPTION_FLAGS:
        value = getattr(args, f"opt_{name}", None)
        if value is not None:
            options[name] = str(value)
    return options


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="metacomb",
                                     description="meta-learned convex forecast combination")
    parser.add_argument("--verbose", action="store_true", help="log substitutions and skips")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_option_flags(p)

    p = sub.add_parser("prepare", help="offline metadata: split, pool, QP labels")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="metadata directory")
    _add_option_flags(p)

    p = sub.add_parser("train", help="train the combination network from metadata")
    p.add_argument("--metadata", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--history", type=Path, help="optional per-epoch loss CSV")
    _add_option_flags(p)

    p = sub.add_parser("evaluate", help="score model vs average and pool on held-out windows")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    _add_option_flags(p)

    p = sub.add_parser("forecast", help="online phase: weights and combined forecasts")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--weights", type=Path, required=True)
    _add_option_flags(p)

    p = sub.add_parser("explain", help="Grad-CAM heatmaps for selected methods")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--svg-dir", type=Path, help="also write one SVG per heatmap")
    _add_option_flags(p)
    return parser


def _container_manifest(container: ModelContainer) -> DatasetManifest:
    return DatasetManifest(
        frequency=container.frequency,
        horizon=container.horizon,
        seasonal_period=container.seasonal_period,
        input_length=container.input_length,
        pool=container.pool,
    )


def _cmd_synth(args) -> int:
    options = _collect_options(args)
    frequency = Frequency(options.get("frequency", "yearly"))
    seed = int(options.get("seed", 0))
    series = generate_synthetic(args.n, frequency, seed)
    write_wide_csv(series, args.out)
    print(f"wrote {len(series)} {frequency.value} series to {args.out}")
    return 0


def _cmd_prepare(args) -> int:
    manifest, _ = build_settings(_collect_options(args))
    series = ingest_wide_csv(args.data, manifest)
    records, skipped = prepare_metadata(series, manifest)
    write_metadata(records, manifest, args.out)
    print(f"prepared {len(records)} series ({skipped} skipped) -> {args.out}")
    return 0


def _cmd_train(args) -> int:
    examples, manifest = read_metadata(args.metadata)
    options = _collect_options(args)
    options.setdefault("frequency", manifest.frequency.value)
    _, config = build_settings(options)
    params, history = train(examples, config)
    container = ModelContainer(
        params=params,
        pool=manifest.pool,
        frequency=manifest.frequency,
        horizon=manifest.horizon,
        seasonal_period=manifest.seasonal_period,
        input_length=manifest.input_length,
        train_config=config,
    )
    save_model(container, args.model)
    if args.history:
        with open(args.history, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["epoch", "train_total", "train_comb", "train_cls", "train_ort", "val_total"])
            for e in history:
                writer.writerow([e.epoch, repr(e.train_total), repr(e.train_comb),
                                 repr(e.train_cls), repr(e.train_ort), repr(e.val_total)])
    best = min(history, key=lambda e: e.val_total)
    print(f"trained {len(history)} epochs (best val {best.val_total:.6f} at epoch {best.epoch}) -> {args.model}")
    return 0


def _cmd_evaluate(args) -> int:
    container = load_model(args.model)
    series = ingest_wide_csv(args.data, _container_manifest(container))
    result = evaluate_dataset(container, series)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    write_scores_csv(result, args.out_dir / "scores.csv")
    write_ranks_csv(result, args.out_dir / "ranks.csv")
    print(f"{'method':<12} {'owa':>8} {'mean_sowa':>10} {'sd_sowa':>8}")
    for name, score in (("combined", result.combined_score), ("average", result.average_score)):
        print(f"{name:<12} {score.owa:>8.4f} {score.mean_sowa:>10.4f} {score.sd_sowa:>8.4f}")
    if result.mcb is not None:
        flag = "" if result.mcb.friedman_rejects else " (friedman does not reject)"
        print(f"friedman chi2={result.mcb.friedman_statistic:.3f} "
              f"p={result.mcb.friedman_p_value:.4g}{flag}")
        for interval in result.mcb.intervals:
            name = result.method_names[interval.method_index]
            print(f"  {name:<22} rank {interval.mean_rank:6.3f} "
                  f"[{interval.lower:6.3f}, {interval.upper:6.3f}]")
    if result.skipped:
        print(f"excluded {result.skipped} series with degenerate benchmarks")
    return 0


def _cmd_forecast(args) -> int:
    container = load_model(args.model)
    series = ingest_wide_csv(args.data, _container_manifest(container))
    results = run_online(container, series)
    write_forecast_csv(results, args.out)
    write_weights_csv(results, args.weights)
    print(f"forecast {len(results)} series -> {args.out}, weights -> {args.weights}")
    return 0


def _cmd_explain(args) -> int:
    container = load_model(args.model)
    series = ingest_wide_csv(args.data, _container_manifest(container))
    method_names = [s.name for s in container.pool]
    heatmaps = []
    for ts in series:
        split = split_train_test(ts)
        prepared = prepare_input(split.train, container.input_length)
        selected = predict_labels(prepared, container.params)
        for j in range(selected.size):
            if not selected[j]:
                continue
            heatmap = gradcam(prepared, container.params, j, series_id=ts.id)
            heatmaps.append((heatmap, method_names[j]))
            if args.svg_dir:
                args.svg_dir.mkdir(parents=True, exist_ok=True)
                write_heatmap_svg(prepared.data, heatmap, method_names[j],
                                  args.svg_dir / f"{ts.id}_{method_names[j]}.svg")
    write_heatmap_csv(heatmaps, args.out)
    print(f"wrote {len(heatmaps)} heatmaps -> {args.out}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "forecast": _cmd_forecast,
    "explain": _cmd_explain,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except MetacombError as exc:
        print(f"ERROR {exc.code}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"ERROR ValueError: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
