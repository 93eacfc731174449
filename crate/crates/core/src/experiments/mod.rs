//! Monte Carlo harness: scenario configuration, episodes, error metrics,
//! comparison tables, parameter sweeps and their exports.

pub mod config;
pub mod episode;
pub mod export;
pub mod metrics;
pub mod table;

pub use config::{FleetKind, ScenarioConfig};
pub use episode::{run_episode, EpisodeLog, StepRecord, UavRecord};
pub use metrics::{paired_bootstrap, rmse, rmse_after, Consensus, PairedBootstrap, RmseSummary};
pub use table::{
    compare_table, evaluate, monte_carlo, summarize, sweep, CellSummary, SweepAxis, SweepPoint,
    TableRow,
};
