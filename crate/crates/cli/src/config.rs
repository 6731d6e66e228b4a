use std::path::PathBuf;

use actnas_core::nwot::DEFAULT_BATCH_SIZE;
use actnas_core::search::{DEFAULT_DIVERSITY, DEFAULT_ITERATIONS, DEFAULT_TOP_K};
use actnas_core::{ActivationKind, Method, Metric};
use clap::{Parser, Subcommand};

/// Seed used when neither `--seed` nor `ACTNAS_SEED` is given.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Parser)]
#[command(name = "actnas", version, about = "Mixed-activation search over per-layer cost tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Benchmark every single-slot replacement into latency, accuracy and memory tables.
    BenchTables(BenchConfig),
    /// Search the tables of one device for whole-network assignments.
    Search(SearchConfig),
    /// Compare baselines and proposals across devices.
    Report(ReportConfig),
    /// Print the NWOT score of one model.
    Nwot(NwotConfig),
}

#[derive(Debug, Clone, Parser)]
#[command(name = "bench-tables")]
pub struct BenchConfig {
    /// Model description (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Built-in profile name, profile JSON, or measured table CSV. Repeatable.
    #[arg(long = "profile", required = true)]
    pub profiles: Vec<String>,
    /// Candidate activations (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<ActivationKind>,
    /// NWOT weight seed; the mini-batch uses seed + 1.
    #[arg(long, env = "ACTNAS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    /// Simulated latency runs averaged per measurement.
    #[arg(long, default_value_t = actnas_core::device::DEFAULT_RUNS)]
    pub runs: usize,
    /// Output directory for `<metric>_<device>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "search")]
pub struct SearchConfig {
    #[arg(long)]
    pub tables_dir: PathBuf,
    /// Device whose tables are searched; optional when the directory holds one device.
    #[arg(long)]
    pub device: Option<String>,
    #[arg(long)]
    pub method: Method,
    #[arg(long, default_value_t = Metric::Latency)]
    pub objective: Metric,
    #[arg(long, default_value_t = Metric::Accuracy)]
    pub budget_metric: Metric,
    /// Upper bound on the summed budget cost (accuracy: maximum NWOT loss). Unbounded if absent.
    #[arg(long, allow_hyphen_values = true)]
    pub budget: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    pub top_k: usize,
    #[arg(long, default_value_t = DEFAULT_DIVERSITY)]
    pub diversity: usize,
    #[arg(long, env = "ACTNAS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// LZCM starting activation.
    #[arg(long, default_value_t = ActivationKind::Silu)]
    pub base: ActivationKind,
    /// LZCM replacement activation.
    #[arg(long, default_value_t = ActivationKind::Relu)]
    pub alt: ActivationKind,
    /// Naive method: number of leading slots that get `--early`.
    #[arg(long, default_value_t = 3)]
    pub naive_k: usize,
    #[arg(long, default_value_t = ActivationKind::Relu)]
    pub early: ActivationKind,
    #[arg(long, default_value_t = ActivationKind::Silu)]
    pub rest: ActivationKind,
    /// Proposal JSON path; stdout if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "report")]
pub struct ReportConfig {
    /// Directory of cost tables used to predict per-device values.
    #[arg(long, conflicts_with = "values", required_unless_present = "values")]
    pub tables_dir: Option<PathBuf>,
    /// Search output JSON files whose proposals become rows. Repeatable.
    #[arg(long = "proposals")]
    pub proposals: Vec<PathBuf>,
    /// Raw value CSV (`model,<device>,...`) instead of tables.
    #[arg(long)]
    pub values: Option<PathBuf>,
    #[arg(long, default_value_t = Metric::Latency)]
    pub metric: Metric,
    /// Baseline row labels; with tables these are activation names.
    #[arg(long, value_delimiter = ',', default_value = "silu,hardswish")]
    pub baselines: Vec<String>,
    /// Devices to include (default: every device with a table for the metric).
    #[arg(long, value_delimiter = ',')]
    pub devices: Vec<String>,
    /// Directory for `report_<metric>.txt` and `report_<metric>.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Parser)]
#[command(name = "nwot")]
pub struct NwotConfig {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BATCH_SIZE)]
    pub batch_size: usize,
    #[arg(long, env = "ACTNAS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}
