//! Offline protocol: queries, metrics, reports, validation and grid search.

mod grid;
mod metrics;
mod pipeline;
mod queries;
mod report;

pub use grid::{grid_search, GridCell, GridResult};
pub use metrics::{category_accuracy, mpr};
pub use pipeline::{
    prepare, prepare_with_split, train_model, validation_mpr, validation_queries, ModelKind, PipelineConfig, Prepared,
    DEFAULT_KNN, DEFAULT_VALIDATION_PER_CATEGORY,
};
pub use queries::{generate_queries, sampled_query, CategoryIndex, EvalQuery, QueryKind, QuerySpec, POOL_HIDDEN_CAP};
pub use report::{
    evaluate, save_category_table, save_report, summarize, CategoryRow, EvalRecord, EvalReport, RandomScorer,
};
