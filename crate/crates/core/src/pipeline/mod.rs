//! Sweep orchestration, dataset assembly, the train/evaluate protocol, and
//! plot-data report export.

mod dataset;
mod report;
mod sweep;
mod train;

pub use dataset::{build_dataset, Dataset, TargetColumn, FEATURE_NAMES};
pub use report::{write_report, ReportOptions, ReportPaths};
pub use sweep::{qoi_csv, run_sweep, sim_id, SweepPoint, SweepSpec, SweepSummary};
pub use train::{
    train_protocol, ExperimentProtocol, ProtocolReport, SvmMemberReport, SvrMemberReport,
    TrainedModels,
};
