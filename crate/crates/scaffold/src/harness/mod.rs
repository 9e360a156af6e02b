//! Training harness: run configuration, model assembly, the training and
//! evaluation loops, metrics and trace emission, and checkpointing.

pub mod checkpoint;
pub mod config;
pub mod metrics;
pub mod model;
pub mod trace;
pub mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointBundle, CHECKPOINT_VERSION};
pub use config::{RunConfig, Track, Variant};
pub use metrics::{MetricsRow, MetricsWriter};
pub use model::{
    full_forward_grad_report, recompute_update, select_from_values, BaselineModel, Head, PcHead,
    SnModel, SnSpec,
};
pub use trace::{trace_to_tsv, TraceRow};
pub use trainer::{
    emit_trace, evaluate, run_human_fraction, train, train_lstm_baseline, DialogData,
    EpisodeOutcome, EvalReport, HumanFractionPoint, RestartReport, RunMode, Split, TaskData,
    TrainContext, TrainOutcome, TravelData,
};
