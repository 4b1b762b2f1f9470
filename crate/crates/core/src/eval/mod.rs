//! Classification metrics, ranking agreement and the temporal-window ablation.

mod ablation;
mod metrics;

pub use ablation::{run_ablation, window_dataset, write_ablation_csv, AblationCell, AblationGrid, ABLATION_HEADER};
pub use metrics::{classification_metrics, error_by_origin, pearson, rbo, weighted_f1, ClassMetrics, MetricsReport};
