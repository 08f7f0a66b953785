//! Forecast metrics, naive baselines, test-set evaluation and the ablation
//! harness.

mod ablation;
mod baselines;
mod metrics;
mod pipeline;
mod report;

pub use ablation::{
    run_feature_ablation, run_feature_ablation_with, run_model_ablation, AblationMatrix,
    AblationMode, AblationRow,
};
pub use baselines::{
    historical_average_baseline, persistence_baseline, HistoricalAverage, Persistence,
};
pub use metrics::{mae, rmse, smape, MetricsReport};
pub use pipeline::{
    evaluate, prepare, prepare_with_stats, train_prepared, Forecaster, PreparedData,
};
pub use report::{write_importance_csv, write_metrics_csv};
