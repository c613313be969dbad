//! Curve tables, model files, group assignment and prediction error.

mod assign;
mod model_file;
mod table;

pub use assign::{
    assign, assign_groups, cvrpe, cvrpe_with, mixture_mean, predict_assigned, relative_prediction_error,
    signal_roles, AssignmentRule, CvrpeReport,
};
pub use model_file::{FitMetadata, ModelFile, FORMAT_VERSION};
pub use table::{check_grid, ingest, ingest_table, interpolate, target_grid, CurveTable, RejectedRow};
