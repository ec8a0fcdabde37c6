//! Experiment harness: configuration, the Monte Carlo runner, and reports.

pub mod config;
pub mod report;
pub mod runner;

pub use config::{parse_config, Format, RunConfig, Scheme};
pub use report::{
    to_json, write_output, QeReport, QeRow, RateRecord, RateReport, ReportMeta, SweepPoint,
    SweepReport,
};
pub use runner::{qe_table, reproduce_table1, run, sweep_snr, table1_configs, SweepSetting};
