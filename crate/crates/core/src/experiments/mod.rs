//! Portfolio experiments: instance generation, result tables and the
//! sequential versus simultaneous comparison.

mod config;
mod instance;
mod seqsim;
mod table;

pub use config::{ExperimentConfig, Specification};
pub use instance::{
    band_covariance, generate_instance, sector_margin, sector_scheme_label, GeneratedInstance, SampleData,
    ACTIVE_MULTIPLIER, SCS_REFERENCE_TOL,
};
pub use seqsim::{read_curves_csv, run_seq_vs_sim, seqsim_command, write_curves_csv, Curve, CurvePoint, Scheme};
pub use table::{
    epsilon_tag, make_learner, plan_cell, read_table_csv, run_cell, run_table, table_command, write_table_csv, x_start,
    CellPlan, CellRun, RowStatus, TableOutput, TableRow,
};
