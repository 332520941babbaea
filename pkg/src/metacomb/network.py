"""Two-branch convolutional meta-learner emitting combination weights.

Both branches share the same architecture (three conv blocks with
squeeze-and-excite, global average pooling) but independent parameters: the
regression head outputs un-normalized weights, the classification head
per-method suitability probabilities. Their element-wise product feeds a
softmax that yields the convex combination weights.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter, Tensor
from .errors import DegenerateScale, NonFiniteLoss, ShapeMismatch
from .forecasters import ForecastMatrix
from .series import PreparedInput

logger = logging.getLogger(__name__)

BRANCHES = ("reg", "cls")

# Orthogonality-weight grid searched during cross-validation.
LAMBDA_GRID = (1e-3, 5e-3, 1e-2, 5e-2, 1e-1, 5e-1)


@dataclass(frozen=True)
class SubnetworkConfig:
    filters: tuple[int, int, int] = (64, 128, 64)
    kernels: tuple[int, int, int] = (2, 4, 8)
    se_ratio: int = 4

    def __post_init__(self):
        if len(self.filters) != 3 or len(self.kernels) != 3:
            raise ValueError("subnetwork uses exactly three convolutional blocks")
        if self.se_ratio < 1:
            raise ValueError("se_ratio must be >= 1")

    @property
    def feature_dim(self) -> int:
        return self.filters[-1]


@dataclass(frozen=True)
class Architecture:
    input_length: int
    n_methods: int
    subnetwork: SubnetworkConfig = field(default_factory=SubnetworkConfig)

    def to_dict(self) -> dict:
        return {
            "input_length": self.input_length,
            "n_methods": self.n_methods,
            "filters": list(self.subnetwork.filters),
            "kernels": list(self.subnetwork.kernels),
            "se_ratio": self.subnetwork.se_ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Architecture":
        return cls(
            input_length=int(d["input_length"]),
            n_methods=int(d["n_methods"]),
            subnetwork=SubnetworkConfig(
                filters=tuple(d["filters"]),
                kernels=tuple(d["kernels"]),
                se_ratio=int(d["se_ratio"]),
            ),
        )


class MetaNetParams:
    """All named parameter tensors of both subnetworks."""

    def __init__(self, architecture: Architecture, tensors: dict[str, Parameter],
                 seed: int, trained: bool = False):
        self.architecture = architecture
        self.tensors = tensors
        self.seed = seed
        self.trained = trained

    def parameters(self) -> list[Parameter]:
        return list(self.tensors.values())

    def state(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.tensors.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, p in self.tensors.items():
            p.data = state[name].copy()


def init_params(architecture: Architecture, seed: int) -> MetaNetParams:
    """Fan-in-scaled uniform weights, zero biases, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    cfg = architecture.subnetwork
    tensors: dict[str, Parameter] = {}

    def weight(name: str, shape: tuple[int, ...], fan_in: int) -> None:
        bound = 1.0 / math.sqrt(fan_in)
        tensors[name] = Parameter(name, rng.uniform(-bound, bound, size=shape))

    def bias(name: str, size: int) -> None:
        tensors[name] = Parameter(name, np.zeros(size))

    for branch in BRANCHES:
        c_in = 1
        for i, (c_out, k) in enumerate(zip(cfg.filters, cfg.kernels), start=1):
            weight(f"{branch}.block{i}.conv.weight", (k, c_in, c_out), k * c_in)
            bias(f"{branch}.block{i}.conv.bias", c_out)
            reduced = max(1, math.ceil(c_out / cfg.se_ratio))
            weight(f"{branch}.block{i}.se.reduce.weight", (c_out, reduced), c_out)
            bias(f"{branch}.block{i}.se.reduce.bias", reduced)
            weight(f"{branch}.block{i}.se.expand.weight", (reduced, c_out), reduced)
            bias(f"{branch}.block{i}.se.expand.bias", c_out)
            c_in = c_out
        weight(f"{branch}.head.weight", (cfg.feature_dim, architecture.n_methods), cfg.feature_dim)
        bias(f"{branch}.head.bias", architecture.n_methods)
    return MetaNetParams(architecture, tensors, seed=seed)


def _branch_graph(x: Tensor, params: MetaNetParams, branch: str) -> tuple[Tensor, Tensor]:
    """Returns (last post-SE feature map, pooled feature vector)."""
    t = params.tensors
    a = x
    for i in range(1, 4):
        a = ad.conv1d_same(a, t[f"{branch}.block{i}.conv.weight"], t[f"{branch}.block{i}.conv.bias"])
        a = ad.relu(a)
        a = ad.squeeze_excite(
            a,
            t[f"{branch}.block{i}.se.reduce.weight"], t[f"{branch}.block{i}.se.reduce.bias"],
            t[f"{branch}.block{i}.se.expand.weight"], t[f"{branch}.block{i}.se.expand.bias"],
        )
    return a, ad.global_avg_pool(a)


def forward_graph(inputs: np.ndarray, params: MetaNetParams,
                  regression_only: bool = False) -> dict[str, Tensor]:
    """Build the full differentiable graph for a batch of inputs (B, L).

    With ``regression_only`` the classification output is replaced by
    all-ones in the fusion, so the weights reduce to softmax of the
    regression head (the single-task ablation).
    """
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.architecture.input_length:
        raise ShapeMismatch(
            f"inputs {x.shape} incompatible with configured length {params.architecture.input_length}"
        )
    t = params.tensors
    xt = ad.tensor(x[:, :, None])
    features_reg, h_reg = _branch_graph(xt, params, "reg")
    features_cls, h_cls = _branch_graph(xt, params, "cls")
    o_reg = ad.dense(h_reg, t["reg.head.weight"], t["reg.head.bias"], activation="linear")
    cls_logits = ad.add(ad.matmul(h_cls, t["cls.head.weight"]), t["cls.head.bias"])
    o_cls = ad.sigmoid(cls_logits)
    fused = o_reg if regression_only else ad.mul(o_reg, o_cls)
    w_hat = ad.softmax(fused, axis=-1)
    return {
        "o_reg": o_reg,
        "o_cls": o_cls,
        "cls_logits": cls_logits,
        "h_reg": h_reg,
        "h_cls": h_cls,
        "features_cls": features_cls,
        "features_reg": features_reg,
        "w_hat": w_hat,
    }


@dataclass(frozen=True)
class ForwardOutput:
    o_reg: np.ndarray
    o_cls: np.ndarray
    h_reg: np.ndarray
    h_cls: np.ndarray
    w_hat: np.ndarray


def forward(x: PreparedInput | np.ndarray, params: MetaNetParams,
            regression_only: bool = False) -> ForwardOutput:
    """Single-series forward pass."""
    data = x.data if isinstance(x, PreparedInput) else np.asarray(x, dtype=np.float64)
    graph = forward_graph(data[None, :], params, regression_only=regression_only)
    return ForwardOutput(
        o_reg=graph["o_reg"].data[0].copy(),
        o_cls=graph["o_cls"].data[0].copy(),
        h_reg=graph["h_reg"].data[0].copy(),
        h_cls=graph["h_cls"].data[0].copy(),
        w_hat=graph["w_hat"].data[0].copy(),
    )


def predict_weights(x: PreparedInput | np.ndarray, params: MetaNetParams) -> np.ndarray:
    """Combination weights on the simplex for one prepared input."""
    return forward(x, params).w_hat


def combine(forecasts: ForecastMatrix | np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Convex combination of the pool forecasts over the horizon."""
    f = forecasts.values if isinstance(forecasts, ForecastMatrix) else np.asarray(forecasts, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if f.ndim != 2 or f.shape[1] != w.size:
        raise ShapeMismatch(f"forecast matrix {f.shape} incompatible with {w.size} weights")
    return f @ w


# -- loss ------------------------------------------------------------------------

@dataclass(frozen=True)
class TrainingExample:
    """One series' contribution to the meta-dataset."""

    input: np.ndarray      # (L,) standardized, padded
    forecasts: np.ndarray  # (H, M) pool forecasts over the test window
    actual: np.ndarray     # (H,) test observations
    labels: np.ndarray     # (M,) binary QP labels


@dataclass
class TrainingBatch:
    inputs: np.ndarray     # (B, L)
    forecasts: np.ndarray  # (B, H, M)
    actuals: np.ndarray    # (B, H)
    labels: np.ndarray     # (B, M)

    @classmethod
    def from_examples(cls, examples: Sequence[TrainingExample]) -> "TrainingBatch":
        return cls(
            inputs=np.stack([e.input for e in examples]),
            forecasts=np.stack([e.forecasts for e in examples]),
            actuals=np.stack([e.actual for e in examples]),
            labels=np.stack([e.labels.astype(np.float64) for e in examples]),
        )


PROB_CLIP = 1e-7


def loss_total(batch: TrainingBatch, params: MetaNetParams, ort_weight: float,
               graph: dict[str, Tensor] | None = None) -> tuple[Tensor, dict[str, float]]:
    """Combination loss + classification BCE + weighted orthogonality penalty.

    The combination term scales each series' squared error by the squared
    error of the equal-weight average, so the simple average anchors at 1.
    Series whose average-combination error is exactly zero are skipped
    from that mean (with a log line); classification and orthogonality
    terms still see the whole batch.
    """
    if graph is None:
        graph = forward_graph(batch.inputs, params)
    n_batch = batch.inputs.shape[0]

    average = batch.forecasts.mean(axis=2)
    denom = ((average - batch.actuals) ** 2).sum(axis=1)
    valid = denom > 0.0
    n_valid = int(valid.sum())
    if n_valid < n_batch:
        logger.warning("skipping %d series with zero average-combination error", n_batch - n_valid)
    if n_valid == 0:
        raise DegenerateScale("every series in the batch has a zero average-combination error")
    inv_denom = np.where(valid, 1.0 / np.where(valid, denom, 1.0), 0.0)

    combined = ad.matvec(ad.tensor(batch.forecasts), graph["w_hat"])
    residual = ad.sub(combined, ad.tensor(batch.actuals))
    per_series = ad.sum_axis(ad.square(residual), axis=1)
    l_comb = ad.scale(ad.sum_all(ad.mul(per_series, ad.tensor(inv_denom))), 1.0 / n_valid)

    probs = ad.clip(graph["o_cls"], PROB_CLIP, 1.0 - PROB_CLIP)
    targets = ad.tensor(batch.labels)
    ones = ad.tensor(np.ones_like(batch.labels))
    bce = ad.add(
        ad.mul(targets, ad.log(probs)),
        ad.mul(ad.sub(ones, targets), ad.log(ad.sub(ones, probs))),
    )
    l_cls = ad.scale(ad.sum_all(bce), -1.0 / n_batch)

    cross = ad.matmul(graph["h_reg"], ad.transpose(graph["h_cls"]))
    l_ort = ad.sum_all(ad.square(cross))

    total = ad.add(ad.add(l_comb, l_cls), ad.scale(l_ort, ort_weight))
    components = {
        "total": float(total.data),
        "comb": float(l_comb.data),
        "cls": float(l_cls.data),
        "ort": float(l_ort.data),
    }
    return total, components


# -- training ----------------------------------------------------------------------

@dataclass(frozen=True)
class TrainConfig:
    ort_weight: float
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 200
    patience: int = 10
    seed: int = 0
    validation_fraction: float = 0.1


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_total: float
    train_comb: float
    train_cls: float
    train_ort: float
    val_total: float


def _batches(indices: np.ndarray, size: int):
    for start in range(0, indices.size, size):
        yield indices[start:start + size]


def _dataset_loss(examples: Sequence[TrainingExample], indices: np.ndarray,
                  params: MetaNetParams, config: TrainConfig) -> float:
    total = 0.0
    for chunk in _batches(indices, config.batch_size):
        batch = TrainingBatch.from_examples([examples[i] for i in chunk])
        _, parts = loss_total(batch, params, config.ort_weight)
        total += parts["total"] * chunk.size
    return total / indices.size


def train(examples: Sequence[TrainingExample], config: TrainConfig,
          subnetwork: SubnetworkConfig | None = None) -> tuple[MetaNetParams, list[EpochStats]]:
    """Mini-batch Adam with early stopping on a held-out validation split.

    Deterministic given (examples, config): initialization, the
    validation split, and every epoch's shuffle derive from the seed. The
    returned parameters are the best-validation snapshot.
    """
    if len(examples) == 0:
        raise ValueError("empty training dataset")
    first = examples[0]
    arch = Architecture(
        input_length=first.input.size,
        n_methods=first.labels.size,
        subnetwork=subnetwork or SubnetworkConfig(),
    )
    for e in examples:
        if e.input.size != arch.input_length or e.labels.size != arch.n_methods \
                or e.forecasts.shape != first.forecasts.shape or e.actual.size != first.actual.size:
            raise ShapeMismatch("training examples disagree on L, M, or H")

    rng = np.random.default_rng(config.seed)
    params = init_params(arch, config.seed)
    param_list = params.parameters()
    opt = ad.AdamState(lr=config.lr)

    order = rng.permutation(len(examples))
    n_val = int(round(config.validation_fraction * len(examples)))
    n_val = min(n_val, len(examples) - 1)
    val_idx, train_idx = order[:n_val], order[n_val:]

    best_val = math.inf
    best_state = params.state()
    bad_epochs = 0
    history: list[EpochStats] = []
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(train_idx)
        sums = {"total": 0.0, "comb": 0.0, "cls": 0.0, "ort": 0.0}
        for chunk in _batches(perm, config.batch_size):
            batch = TrainingBatch.from_examples([examples[i] for i in chunk])
            loss_node, parts = loss_total(batch, params, config.ort_weight)
            if not math.isfinite(parts["total"]):
                raise NonFiniteLoss(
                    f"epoch {epoch}: loss became non-finite (comb={parts['comb']}, "
                    f"cls={parts['cls']}, ort={parts['ort']})"
                )
            grads = ad.backward(loss_node, param_list)
            ad.adam_step(opt, param_list, grads)
            for key in sums:
                sums[key] += parts[key] * chunk.size
        n_train = train_idx.size
        val_total = _dataset_loss(examples, val_idx, params, config) if n_val > 0 \
            else sums["total"] / n_train
        history.append(EpochStats(
            epoch=epoch,
            train_total=sums["total"] / n_train,
            train_comb=sums["comb"] / n_train,
            train_cls=sums["cls"] / n_train,
            train_ort=sums["ort"] / n_train,
            val_total=val_total,
        ))
        if val_total < best_val:
            best_val = val_total
            best_state = params.state()
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= config.patience:
                break
    params.load_state(best_state)
    params.trained = True
    return params, history
