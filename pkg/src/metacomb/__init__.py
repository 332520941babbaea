"""Meta-learned convex forecast combination with diversity-aware selection."""

from .series import (
    FREQUENCY_DEFAULTS,
    Frequency,
    PreparedInput,
    SplitSeries,
    TimeSeries,
    pad_or_truncate,
    prepare_input,
    split_train_test,
    standardize,
)
from .forecasters import DEFAULT_POOL, ForecasterKind, ForecasterSpec, ForecastMatrix, forecast, pool_forecasts
from .metrics import ambiguity_decomposition, mase, owa, smape, sowa
from .labeling import (
    LabelBundle,
    balance_alpha,
    build_label_bundle,
    diversity_matrix,
    error_matrix,
    labels_from_solution,
    relevance_vector,
    solve_qp,
)
from .network import (
    MetaNetParams,
    SubnetworkConfig,
    TrainConfig,
    TrainingExample,
    combine,
    forward,
    init_params,
    loss_total,
    predict_weights,
    train,
)
from .explain import Heatmap, gradcam, predict_labels
from .stats import friedman, nemenyi_mcb
from .pipeline import (
    DatasetManifest,
    ModelContainer,
    evaluate_dataset,
    generate_synthetic,
    ingest_wide_csv,
    load_model,
    run_offline,
    run_online,
    save_model,
)

__version__ = "0.1.0"
