//! Seeded Monte Carlo experiments, baselines, the linkability game and report output.
mod config;
mod privacy;
mod report;
mod run;
mod stats;

pub use config::{AdversaryKind, Baseline, Experiment, SimConfig};
pub use privacy::{
    privacy_experiment, run_privacy, Adversary, AdversaryView, KeyKnowing, PrivacyResult,
    RandomGuess,
};
pub use report::{emit_report, Format, Report, ReportRow, CSV_HEADER};
pub use run::{
    build_population, simulate, simulate_exhaustive_search, simulate_tree_on,
    simulate_tree_prf_baseline, simulate_tree_protocol, Population, TrialReport, PRF_BITS,
};
pub use stats::{wilson_interval, AggregateStats, Rate, Tally, Timing, Z95};
