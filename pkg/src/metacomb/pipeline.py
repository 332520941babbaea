"""Dataset handling, metadata generation, training orchestration, persistence.

The offline phase turns a corpus into per-series metadata (pool
forecasts, error matrices, QP labels, prepared inputs) and a trained
model container; the online phase maps new series to weights and
combined forecasts. Everything is seeded and file outputs are written
with round-trip float formatting, so identical runs produce identical
bytes.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CorruptFile,
    DegenerateBenchmark,
    DegenerateScale,
    EmptyDataset,
    EmptySeries,
    FrequencyMismatch,
    LengthMismatch,
    ParseError,
    SeriesTooShort,
    VersionMismatch,
)
from .forecasters import DEFAULT_POOL, ForecasterKind, ForecasterSpec, ForecastMatrix, naive_forecast, pool_forecasts
from .labeling import LabelBundle, build_label_bundle, error_matrix
from .metrics import CollectionScore, owa, sowa
from .network import (
    MetaNetParams,
    TrainConfig,
    TrainingExample,
    combine,
    predict_weights,
    train,
)
from .series import (
    FREQUENCY_DEFAULTS,
    Frequency,
    PreparedInput,
    SplitSeries,
    TimeSeries,
    prepare_input,
    split_train_test,
)
from .stats import McbResult, nemenyi_mcb

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MAGIC = b"MCMB"

CONFIG_KEYS = {
    "frequency", "horizon", "seasonal_period", "input_length", "pool",
    "lambda", "lr", "batch_size", "max_epochs", "patience", "seed", "tau",
}


# -- configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class DatasetManifest:
    """Geometry and pool definition for one frequency group."""

    frequency: Frequency
    horizon: int
    seasonal_period: int
    input_length: int
    pool: tuple[ForecasterSpec, ...] = DEFAULT_POOL
    tau: float | None = None  # None -> 1/M

    @classmethod
    def for_frequency(cls, frequency: Frequency, **overrides) -> "DatasetManifest":
        defaults = FREQUENCY_DEFAULTS[frequency]
        values = {
            "horizon": defaults.horizon,
            "seasonal_period": defaults.seasonal_period,
            "input_length": defaults.input_length,
        }
        values.update(overrides)
        return cls(frequency=frequency, **values)


def parse_pool(text: str) -> tuple[ForecasterSpec, ...]:
    specs = []
    for token in text.split(","):
        name = token.strip()
        if not name:
            continue
        specs.append(ForecasterSpec(ForecasterKind(name)))
    if len(specs) < 2:
        raise ValueError("pool must name at least 2 methods")
    return tuple(specs)


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Key-value experiment config: ``key = value`` lines, ``#`` comments."""
    values: dict[str, str] = {}
    for line_num, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{line_num}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            raise ValueError(f"{path}:{line_num}: unknown config key {key!r}")
        values[key] = value.strip()
    return values


def build_settings(options: dict[str, str]) -> tuple[DatasetManifest, TrainConfig]:
    """Resolve defaults <- frequency defaults <- explicit options."""
    frequency = Frequency(options.get("frequency", "yearly"))
    defaults = FREQUENCY_DEFAULTS[frequency]
    manifest = DatasetManifest(
        frequency=frequency,
        horizon=int(options.get("horizon", defaults.horizon)),
        seasonal_period=int(options.get("seasonal_period", defaults.seasonal_period)),
        input_length=int(options.get("input_length", defaults.input_length)),
        pool=parse_pool(options["pool"]) if "pool" in options else DEFAULT_POOL,
        tau=float(options["tau"]) if "tau" in options else None,
    )
    config = TrainConfig(
        ort_weight=float(options.get("lambda", defaults.ort_weight)),
        lr=float(options.get("lr", 1e-3)),
        batch_size=int(options.get("batch_size", 32)),
        max_epochs=int(options.get("max_epochs", 200)),
        patience=int(options.get("patience", 10)),
        seed=int(options.get("seed", 0)),
    )
    return manifest, config


# -- ingestion ---------------------------------------------------------------------

def ingest_wide_csv(path: str | Path, manifest: DatasetManifest) -> list[TimeSeries]:
    """One series per row: id, then observations; trailing blanks allowed."""
    out: list[TimeSeries] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row_num, row in enumerate(csv.reader(fh), start=1):
            if not row or all(f.strip() == "" for f in row):
                continue
            series_id = row[0].strip()
            if not series_id:
                raise ParseError(row_num, 1, "missing series id")
            fields = row[1:]
            while fields and fields[-1].strip() == "":
                fields.pop()
            if not fields:
                raise EmptySeries(f"row {row_num}: series {series_id} has no observations")
            values = np.empty(len(fields))
            for col, text in enumerate(fields, start=2):
                token = text.strip()
                if not token:
                    raise ParseError(row_num, col, "blank value inside series")
                try:
                    values[col - 2] = float(token)
                except ValueError:
                    raise ParseError(row_num, col, f"not a number: {token!r}") from None
                if not np.isfinite(values[col - 2]):
                    raise ParseError(row_num, col, f"non-finite value: {token!r}")
            try:
                out.append(TimeSeries(
                    id=series_id,
                    frequency=manifest.frequency,
                    values=values,
                    horizon=manifest.horizon,
                    seasonal_period=manifest.seasonal_period,
                ))
            except ValueError as exc:
                raise ParseError(row_num, 2, str(exc)) from None
    if not out:
        raise EmptyDataset(f"{path} contains no series")
    return out


def write_wide_csv(series: list[TimeSeries], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for s in series:
            writer.writerow([s.id] + [repr(float(v)) for v in s.values])


# -- synthetic corpus ----------------------------------------------------------------

_SYNTH_LENGTHS = {
    Frequency.YEARLY: (24, 72),
    Frequency.QUARTERLY: (36, 140),
    Frequency.MONTHLY: (72, 260),
}
_SYNTH_PREFIX = {Frequency.YEARLY: "Y", Frequency.QUARTERLY: "Q", Frequency.MONTHLY: "M"}


def generate_synthetic(n: int, frequency: Frequency, seed: int) -> list[TimeSeries]:
    """Seeded mixture corpus covering the regimes the pool spans.

    Base behavior is drawn from {stationary level, linear trend, damped
    trend, random walk}, optionally overlaid with sinusoidal seasonality,
    plus AR(1) observation noise. Each series draws its own child
    generator from the seed sequence, so the corpus is reproducible
    regardless of evaluation order.
    """
    if n < 1:
        raise ValueError("need n >= 1 series")
    if frequency not in _SYNTH_LENGTHS:
        raise ValueError(f"synthetic generation supports yearly/quarterly/monthly, not {frequency}")
    defaults = FREQUENCY_DEFAULTS[frequency]
    lo, hi = _SYNTH_LENGTHS[frequency]
    period = defaults.seasonal_period
    out = []
    for i, child in enumerate(np.random.SeedSequence(seed).spawn(n)):
        rng = np.random.default_rng(child)
        length = int(rng.integers(lo, hi + 1))
        t = np.arange(length, dtype=np.float64)
        level = rng.uniform(20.0, 200.0)

        regime = rng.choice(("level", "linear", "damped", "walk"), p=(0.15, 0.2, 0.15, 0.5))
        slope = rng.normal(0.0, 0.015 * level)
        if regime == "linear":
            base = level + slope * t
        elif regime == "damped":
            phi = rng.uniform(0.85, 0.99)
            base = level + slope * (1.0 - phi ** t) / (1.0 - phi)
        elif regime == "walk":
            step_sd = rng.uniform(0.02, 0.08) * level
            drift = rng.normal(0.0, 0.2 * step_sd)
            steps = rng.normal(drift, step_sd, size=length)
            steps[0] = 0.0
            base = level + np.cumsum(steps)
        else:
            base = np.full(length, level)

        seasonal = np.zeros(length)
        if period > 1 and rng.uniform() < 0.6:
            amplitude = rng.uniform(0.08, 0.3) * level
            phase = rng.uniform(0.0, 2.0 * np.pi)
            seasonal = amplitude * np.sin(2.0 * np.pi * t / period + phase)

        rho = rng.uniform(0.0, 0.8)
        sigma = rng.uniform(0.03, 0.15) * level
        shocks = rng.normal(0.0, sigma, size=length)
        noise = np.empty(length)
        noise[0] = shocks[0]
        for j in range(1, length):
            noise[j] = rho * noise[j - 1] + shocks[j]

        out.append(TimeSeries(
            id=f"{_SYNTH_PREFIX[frequency]}{i + 1:05d}",
            frequency=frequency,
            values=base + seasonal + noise,
            horizon=defaults.horizon,
            seasonal_period=defaults.seasonal_period,
        ))
    return out


# -- offline phase ---------------------------------------------------------------------

@dataclass(frozen=True)
class MetadataRecord:
    """Everything the offline phase derives for one series."""

    series_id: str
    forecasts: ForecastMatrix
    errors: np.ndarray
    bundle: LabelBundle
    prepared: PreparedInput
    test: np.ndarray


@dataclass(frozen=True)
class OfflineResult:
    records: list[MetadataRecord]
    skipped: int
    container: "ModelContainer"
    history: list


def prepare_metadata(series_list: list[TimeSeries], manifest: DatasetManifest) -> tuple[list[MetadataRecord], int]:
    """Steps 1-4 of the offline phase for every series.

    Series with degenerate benchmarks (undefined sOWA) or too little
    history are skipped with a log line; the skip count is returned.
    """
    if not series_list:
        raise EmptyDataset("no series to process")
    records: list[MetadataRecord] = []
    skipped = 0
    for series in series_list:
        try:
            split = split_train_test(series)
            matrix = pool_forecasts(split, manifest.pool, series.seasonal_period, series.horizon)
            naive = naive_forecast(split.train, series.horizon)
            bundle = build_label_bundle(
                matrix, split.test, naive, split.train, series.seasonal_period, tau=manifest.tau
            )
        except (SeriesTooShort, DegenerateBenchmark, DegenerateScale, LengthMismatch) as exc:
            skipped += 1
            logger.warning("skipping series %s: %s", series.id, exc)
            continue
        records.append(MetadataRecord(
            series_id=series.id,
            forecasts=matrix,
            errors=error_matrix(matrix, split.test),
            bundle=bundle,
            prepared=prepare_input(split.train, manifest.input_length),
            test=split.test,
        ))
    if not records:
        raise EmptyDataset("every series was skipped during metadata generation")
    return records, skipped


def training_examples(records: list[MetadataRecord]) -> list[TrainingExample]:
    return [
        TrainingExample(
            input=r.prepared.data,
            forecasts=r.forecasts.values,
            actual=r.test,
            labels=r.bundle.labels,
        )
        for r in records
    ]


def run_offline(series_list: list[TimeSeries], manifest: DatasetManifest,
                config: TrainConfig) -> OfflineResult:
    """Full offline phase: metadata generation followed by meta-training."""
    records, skipped = prepare_metadata(series_list, manifest)
    params, history = train(training_examples(records), config)
    container = ModelContainer(
        params=params,
        pool=manifest.pool,
        frequency=manifest.frequency,
        horizon=manifest.horizon,
        seasonal_period=manifest.seasonal_period,
        input_length=manifest.input_length,
        train_config=config,
    )
    return OfflineResult(records=records, skipped=skipped, container=container, history=history)


# -- metadata persistence -----------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_metadata(records: list[MetadataRecord], manifest: DatasetManifest,
                   outdir: str | Path) -> None:
    """Plain CSV files per concern, plus a JSON manifest for later stages."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    methods = list(records[0].forecasts.methods)
    m = len(methods)
    length = records[0].prepared.data.size

    def open_csv(name: str):
        return open(outdir / name, "w", newline="", encoding="utf-8")

    with open_csv("forecasts.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "h"] + methods)
        for r in records:
            for h in range(r.forecasts.horizon):
                writer.writerow([r.series_id, h + 1] + [_fmt(v) for v in r.forecasts.values[h]])
    with open_csv("errors.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "h"] + methods)
        for r in records:
            for h in range(r.errors.shape[0]):
                writer.writerow([r.series_id, h + 1] + [_fmt(v) for v in r.errors[h]])
    with open_csv("diversity.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id"] + [f"q_{i}_{j}" for i in range(m) for j in range(m)])
        for r in records:
            writer.writerow([r.series_id] + [_fmt(v) for v in r.bundle.q.ravel()])
    with open_csv("relevance.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "alpha"] + [f"c_{name}" for name in methods])
        for r in records:
            writer.writerow([r.series_id, _fmt(r.bundle.alpha)] + [_fmt(v) for v in r.bundle.c])
    with open_csv("solution.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "tau"] + [f"x_{name}" for name in methods])
        for r in records:
            writer.writerow([r.series_id, _fmt(r.bundle.tau)] + [_fmt(v) for v in r.bundle.x_star])
    with open_csv("labels.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id"] + [f"label_{name}" for name in methods])
        for r in records:
            writer.writerow([r.series_id] + [int(v) for v in r.bundle.labels])
    with open_csv("inputs.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "mean", "sd"] + [f"x_{t}" for t in range(length)])
        for r in records:
            writer.writerow([r.series_id, _fmt(r.prepared.mean), _fmt(r.prepared.sd)]
                            + [_fmt(v) for v in r.prepared.data])
    with open_csv("test.csv") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "h", "actual"])
        for r in records:
            for h, value in enumerate(r.test, start=1):
                writer.writerow([r.series_id, h, _fmt(value)])
    meta = {
        "frequency": manifest.frequency.value,
        "horizon": manifest.horizon,
        "seasonal_period": manifest.seasonal_period,
        "input_length": manifest.input_length,
        "pool": [s.kind.value for s in manifest.pool],
        "tau": manifest.tau,
    }
    (outdir / "manifest.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")


def read_metadata(outdir: str | Path) -> tuple[list[TrainingExample], DatasetManifest]:
    """Reload what training needs from a metadata directory."""
    outdir = Path(outdir)
    meta = json.loads((outdir / "manifest.json").read_text())
    manifest = DatasetManifest(
        frequency=Frequency(meta["frequency"]),
        horizon=int(meta["horizon"]),
        seasonal_period=int(meta["seasonal_period"]),
        input_length=int(meta["input_length"]),
        pool=tuple(ForecasterSpec(ForecasterKind(k)) for k in meta["pool"]),
        tau=meta["tau"],
    )

    def read_rows(name: str) -> list[list[str]]:
        with open(outdir / name, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        return rows[1:]

    inputs: dict[str, np.ndarray] = {}
    order: list[str] = []
    for row in read_rows("inputs.csv"):
        inputs[row[0]] = np.array([float(v) for v in row[3:]])
        order.append(row[0])
    labels = {row[0]: np.array([int(v) for v in row[1:]]) for row in read_rows("labels.csv")}
    forecasts: dict[str, list[list[float]]] = {}
    for row in read_rows("forecasts.csv"):
        forecasts.setdefault(row[0], []).append([float(v) for v in row[2:]])
    actuals: dict[str, list[float]] = {}
    for row in read_rows("test.csv"):
        actuals.setdefault(row[0], []).append(float(row[2]))
    examples = [
        TrainingExample(
            input=inputs[sid],
            forecasts=np.array(forecasts[sid]),
            actual=np.array(actuals[sid]),
            labels=labels[sid],
        )
        for sid in order
    ]
    return examples, manifest


# -- model container ------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelContainer:
    params: MetaNetParams
    pool: tuple[ForecasterSpec, ...]
    frequency: Frequency
    horizon: int
    seasonal_period: int
    input_length: int
    train_config: TrainConfig


def save_model(container: ModelContainer, path: str | Path) -> None:
    """Binary container: magic, JSON header, float64 LE blob, SHA-256."""
    params = container.params
    entries = []
    blobs = []
    offset = 0
    for name, p in params.tensors.items():
        data = np.ascontiguousarray(p.data, dtype="<f8")
        entries.append({"name": name, "shape": list(data.shape), "offset": offset, "count": int(data.size)})
        blobs.append(data.tobytes())
        offset += data.size
    cfg = container.train_config
    header = {
        "format_version": FORMAT_VERSION,
        "architecture": params.architecture.to_dict(),
        "trained": params.trained,
        "seed": params.seed,
        "frequency": container.frequency.value,
        "horizon": container.horizon,
        "seasonal_period": container.seasonal_period,
        "input_length": container.input_length,
        "pool": [{"kind": s.kind.value, "params": s.params} for s in container.pool],
        "train_config": {
            "ort_weight": cfg.ort_weight, "lr": cfg.lr, "batch_size": cfg.batch_size,
            "max_epochs": cfg.max_epochs, "patience": cfg.patience, "seed": cfg.seed,
            "validation_fraction": cfg.validation_fraction,
        },
        "params": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(blobs)
    digest = hashlib.sha256(payload).digest()
    Path(path).write_bytes(payload + digest)


def load_model(path: str | Path) -> ModelContainer:
    from .autodiff import Parameter
    from .network import Architecture

    raw = Path(path).read_bytes()
    if len(raw) < len(MAGIC) + 4 + 32:
        raise CorruptFile(f"{path}: file too short to be a model container")
    payload, digest = raw[:-32], raw[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise CorruptFile(f"{path}: checksum mismatch")
    if payload[:len(MAGIC)] != MAGIC:
        raise CorruptFile(f"{path}: bad magic bytes")
    (header_len,) = struct.unpack("<I", payload[len(MAGIC):len(MAGIC) + 4])
    header_start = len(MAGIC) + 4
    if header_start + header_len > len(payload):
        raise CorruptFile(f"{path}: truncated header")
    try:
        header = json.loads(payload[header_start:header_start + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable header ({exc})") from None
    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: file format version {version}, this build supports {FORMAT_VERSION}")

    blob = payload[header_start + header_len:]
    architecture = Architecture.from_dict(header["architecture"])
    tensors = {}
    for entry in header["params"]:
        start = entry["offset"] * 8
        end = start + entry["count"] * 8
        if end > len(blob):
            raise CorruptFile(f"{path}: parameter blob truncated at {entry['name']}")
        data = np.frombuffer(blob[start:end], dtype="<f8").reshape(entry["shape"]).copy()
        tensors[entry["name"]] = Parameter(entry["name"], data)
    params = MetaNetParams(architecture, tensors, seed=int(header["seed"]), trained=bool(header["trained"]))
    cfg = header["train_config"]
    return ModelContainer(
        params=params,
        pool=tuple(ForecasterSpec(ForecasterKind(p["kind"]), dict(p["params"])) for p in header["pool"]),
        frequency=Frequency(header["frequency"]),
        horizon=int(header["horizon"]),
        seasonal_period=int(header["seasonal_period"]),
        input_length=int(header["input_length"]),
        train_config=TrainConfig(
            ort_weight=float(cfg["ort_weight"]), lr=float(cfg["lr"]),
            batch_size=int(cfg["batch_size"]), max_epochs=int(cfg["max_epochs"]),
            patience=int(cfg["patience"]), seed=int(cfg["seed"]),
            validation_fraction=float(cfg["validation_fraction"]),
        ),
    )


# -- online phase ------------------------------------------------------------------------------

@dataclass(frozen=True)
class OnlineForecast:
    series_id: str
    weights: np.ndarray
    combined: np.ndarray
    methods: tuple[str, ...]


def run_online(container: ModelContainer, series_list: list[TimeSeries]) -> list[OnlineForecast]:
    """Predict weights and combined forecasts for new series."""
    if not series_list:
        raise EmptyDataset("no series to forecast")
    out = []
    for series in series_list:
        if series.frequency != container.frequency:
            raise FrequencyMismatch(
                f"series {series.id} is {series.frequency.value}, model expects {container.frequency.value}"
            )
        prepared = prepare_input(series.values, container.input_length)
        weights = predict_weights(prepared, container.params)
        split = SplitSeries(train=series.values.copy(), test=np.empty(0))
        matrix = pool_forecasts(split, container.pool, series.seasonal_period, container.horizon)
        out.append(OnlineForecast(
            series_id=series.id,
            weights=weights,
            combined=combine(matrix, weights),
            methods=matrix.methods,
        ))
    return out


def write_forecast_csv(results: list[OnlineForecast], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "h", "forecast"])
        for r in results:
            for h, value in enumerate(r.combined, start=1):
                writer.writerow([r.series_id, h, _fmt(value)])


def write_weights_csv(results: list[OnlineForecast], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "method", "weight"])
        for r in results:
            for method, value in zip(r.methods, r.weights):
                writer.writerow([r.series_id, method, _fmt(value)])


# -- evaluation --------------------------------------------------------------------------------

@dataclass(frozen=True)
class EvaluationResult:
    series_ids: list[str]
    method_names: list[str]    # combined, average, then the pool methods
    sowa_scores: np.ndarray    # (N, k)
    combined_score: CollectionScore
    average_score: CollectionScore
    mcb: McbResult | None
    skipped: int


def evaluate_dataset(container: ModelContainer, series_list: list[TimeSeries]) -> EvaluationResult:
    """Score the trained combiner against the simple average and the pool.

    Each series is split exactly as in the offline phase; the model sees
    only the training window. Series with degenerate benchmarks are
    excluded and counted.
    """
    if not series_list:
        raise EmptyDataset("no series to evaluate")
    method_names = ["combined", "average"] + [s.name for s in container.pool]
    rows: list[list[float]] = []
    ids: list[str] = []
    combined_items = []
    average_items = []
    skipped = 0
    for series in series_list:
        if series.frequency != container.frequency:
            raise FrequencyMismatch(
                f"series {series.id} is {series.frequency.value}, model expects {container.frequency.value}"
            )
        try:
            split = split_train_test(series)
            matrix = pool_forecasts(split, container.pool, series.seasonal_period, container.horizon)
            naive = naive_forecast(split.train, container.horizon)
            prepared = prepare_input(split.train, container.input_length)
            weights = predict_weights(prepared, container.params)
            combined = combine(matrix, weights)
            average = matrix.values.mean(axis=1)
            row = [
                sowa(split.test, combined, naive, split.train, series.seasonal_period),
                sowa(split.test, average, naive, split.train, series.seasonal_period),
            ]
            for m in range(matrix.n_methods):
                row.append(sowa(split.test, matrix.values[:, m], naive, split.train, series.seasonal_period))
        except (SeriesTooShort, DegenerateBenchmark, DegenerateScale) as exc:
            skipped += 1
            logger.warning("excluding series %s from evaluation: %s", series.id, exc)
            continue
        rows.append(row)
        ids.append(series.id)
        combined_items.append((split.test, combined, naive, split.train, series.seasonal_period))
        average_items.append((split.test, average, naive, split.train, series.seasonal_period))
    if not rows:
        raise EmptyDataset("every series was excluded from evaluation")
    scores = np.asarray(rows)
    mcb = None
    if scores.shape[0] >= 2 and 2 <= scores.shape[1] <= 10:
        mcb = nemenyi_mcb(scores)
    return EvaluationResult(
        series_ids=ids,
        method_names=method_names,
        sowa_scores=scores,
        combined_score=owa(combined_items),
        average_score=owa(average_items),
        mcb=mcb,
        skipped=skipped,
    )


def write_scores_csv(result: EvaluationResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["series_id", "method", "sowa"])
        for sid, row in zip(result.series_ids, result.sowa_scores):
            for method, value in zip(result.method_names, row):
                writer.writerow([sid, method, _fmt(value)])


def write_ranks_csv(result: EvaluationResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "mean_rank", "lower", "upper"])
        if result.mcb is None:
            return
        for interval in result.mcb.intervals:
            writer.writerow([
                result.method_names[interval.method_index],
                _fmt(interval.mean_rank), _fmt(interval.lower), _fmt(interval.upper),
            ])
