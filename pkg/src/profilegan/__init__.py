"""GAN-based synthesis of continuous yearly generation profiles."""

from .data import (
    ConditionVector,
    DataError,
    GenerationType,
    HourlyProfile,
    SiteMeta,
    TrainingSample,
    build_training_set,
    compute_duty_cycle,
    ingest_hourly_csv,
    normalize_shape,
    split_into_days,
)
from .gan import (
    CheckpointError,
    GanConfig,
    TrainedGanModel,
    TrainingDivergence,
    discriminator_loss,
    generator_loss,
    load_model,
    multi_type_loss,
    save_model,
    train,
)
from .outage import OutageConfig, inject_outages
from .synthesis import (
    ForecastTarget,
    MonthlyEnvelope,
    SynthesisConfig,
    SynthesisError,
    apply_duty_cycle,
    build_monthly_envelope,
    generate_portfolio,
    generate_year,
)
from .metrics import MetricsReport, evaluate

__version__ = "0.1.0"

__all__ = [
    "ConditionVector",
    "DataError",
    "GenerationType",
    "HourlyProfile",
    "SiteMeta",
    "TrainingSample",
    "build_training_set",
    "compute_duty_cycle",
    "ingest_hourly_csv",
    "normalize_shape",
    "split_into_days",
    "CheckpointError",
    "GanConfig",
    "TrainedGanModel",
    "TrainingDivergence",
    "discriminator_loss",
    "generator_loss",
    "load_model",
    "multi_type_loss",
    "save_model",
    "train",
    "OutageConfig",
    "inject_outages",
    "ForecastTarget",
    "MonthlyEnvelope",
    "SynthesisConfig",
    "SynthesisError",
    "apply_duty_cycle",
    "build_monthly_envelope",
    "generate_portfolio",
    "generate_year",
    "MetricsReport",
    "evaluate",
    "__version__",
]
