//! Subcommand implementations. Each returns its result as well as writing
//! files, so callers (and tests) can run them in process.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use actnas_core::device::{LatencyEstimator, MemoryEstimator};
use actnas_core::report::ReportTable;
use actnas_core::search::{exact_search, lzcm_search, naive_assignment, random_search, NaiveConfig};
use actnas_core::table::NwotEstimator;
use actnas_core::{
    build_table, ActivationKind, Budget, CostMatrix, CostTable, DeviceProfile, MeasurementConfig, Method, Metric,
    ModelSpec, NwotScore, NwotScorer, SearchConstraints, SearchProblem, SearchReport,
};

use crate::config::{BenchConfig, NwotConfig, ReportConfig, SearchConfig};
use crate::error::{CliError, Result};

/// `<metric>_<device>.csv`
pub fn table_file_name(metric: Metric, device: &str) -> String {
    format!("{metric}_{device}.csv")
}

enum Source {
    Profile(DeviceProfile<f64>),
    Measured(CostTable<f64>),
}

fn resolve_source(spec: &str) -> Result<Source> {
    let lower = spec.to_ascii_lowercase();
    if lower.ends_with(".json") {
        Ok(Source::Profile(DeviceProfile::load(spec)?))
    } else if lower.ends_with(".csv") {
        Ok(Source::Measured(CostTable::load(spec)?))
    } else {
        Ok(Source::Profile(DeviceProfile::builtin(spec)?))
    }
}

fn batch_seed(seed: u64) -> u64 {
    seed.wrapping_add(1)
}

/// Writes one table per (metric, device). Latency and memory come from
/// profiles or pass through measured CSVs; accuracy is scored once and shared
/// by every device. Returns the written paths in file-name order.
pub fn cmd_bench_tables(cfg: &BenchConfig) -> Result<Vec<PathBuf>> {
    let model = ModelSpec::load(&cfg.model)?;
    let candidates = if cfg.candidates.is_empty() {
        ActivationKind::ALL.to_vec()
    } else {
        cfg.candidates.clone()
    };
    let measurement = MeasurementConfig::with_runs(cfg.runs)?;

    let mut tables: BTreeMap<(Metric, String), CostTable<f64>> = BTreeMap::new();
    let mut insert = |table: CostTable<f64>| -> Result<()> {
        let key = (table.metric(), table.device().to_string());
        if tables.contains_key(&key) {
            return Err(CliError::Config(format!("{} table for `{}` supplied twice", key.0, key.1)));
        }
        tables.insert(key, table);
        Ok(())
    };
    let mut devices = BTreeSet::new();
    for spec in &cfg.profiles {
        match resolve_source(spec)? {
            Source::Profile(profile) => {
                profile.validate()?;
                devices.insert(profile.name.clone());
                let latency = LatencyEstimator {
                    profile: profile.clone(),
                    config: measurement.clone(),
                };
                insert(build_table(&model, &candidates, &latency)?)?;
                let memory = MemoryEstimator {
                    profile,
                    config: measurement.clone(),
                };
                insert(build_table(&model, &candidates, &memory)?)?;
            }
            Source::Measured(table) => {
                table.check_against(&model)?;
                devices.insert(table.device().to_string());
                insert(table)?;
            }
        }
    }

    let needs_accuracy: Vec<&String> = devices
        .iter()
        .filter(|d| !tables.contains_key(&(Metric::Accuracy, (*d).clone())))
        .collect();
    if let Some(first) = needs_accuracy.first() {
        let scorer = NwotScorer::<f64>::new(&model, cfg.batch_size, cfg.seed, batch_seed(cfg.seed))?;
        let accuracy = build_table(&model, &candidates, &NwotEstimator::new(scorer, first.as_str()))?;
        for device in needs_accuracy {
            tables.insert((Metric::Accuracy, device.clone()), accuracy.retagged(device.as_str())?);
        }
    }

    fs::create_dir_all(&cfg.out).map_err(CliError::io(&cfg.out))?;
    let mut written: Vec<PathBuf> = Vec::with_capacity(tables.len());
    for ((metric, device), table) in &tables {
        let path = cfg.out.join(table_file_name(*metric, device));
        fs::write(&path, table.to_csv_string()?).map_err(CliError::io(&path))?;
        written.push(path);
    }
    written.sort();
    Ok(written)
}

/// Loads every `<metric>_<device>.csv` in `dir`, sorted by file name.
pub fn load_tables(dir: &Path) -> Result<Vec<CostTable<f64>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(CliError::io(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().is_some_and(|e| e == "csv")
                && p.file_stem()
                    .and_then(|s| s.to_str())
                    .and_then(|s| s.split_once('_'))
                    .is_some_and(|(m, _)| m.parse::<Metric>().is_ok())
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| CostTable::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display()))))
        .collect()
}

fn device_matrices(
    tables: &[CostTable<f64>],
    device: &str,
) -> Result<BTreeMap<Metric, CostMatrix<f64>>> {
    tables
        .iter()
        .filter(|t| t.device() == device)
        .map(|t| Ok((t.metric(), t.to_matrix()?)))
        .collect()
}

fn resolve_device(tables: &[CostTable<f64>], requested: Option<&str>, dir: &Path) -> Result<String> {
    let devices: BTreeSet<&str> = tables.iter().map(|t| t.device()).collect();
    match requested {
        Some(d) if devices.contains(d) => Ok(d.to_string()),
        Some(d) => Err(CliError::MissingTable {
            metric: "cost".into(),
            device: d.to_string(),
            dir: dir.to_path_buf(),
        }),
        None => match devices.len() {
            0 => Err(CliError::MissingTable {
                metric: "cost".into(),
                device: "?".into(),
                dir: dir.to_path_buf(),
            }),
            1 => Ok(devices.into_iter().next().unwrap_or_default().to_string()),
            _ => Err(CliError::Config(format!(
                "several devices in {} ({}); pass --device",
                dir.display(),
                devices.into_iter().collect::<Vec<_>>().join(", ")
            ))),
        },
    }
}

fn require<'a>(
    matrices: &'a BTreeMap<Metric, CostMatrix<f64>>,
    metric: Metric,
    device: &str,
    dir: &Path,
) -> Result<&'a CostMatrix<f64>> {
    matrices.get(&metric).ok_or_else(|| CliError::MissingTable {
        metric: metric.to_string(),
        device: device.to_string(),
        dir: dir.to_path_buf(),
    })
}

/// Runs the configured method on one device's tables and writes the report
/// as pretty JSON.
pub fn cmd_search(cfg: &SearchConfig) -> Result<SearchReport<f64>> {
    let tables = load_tables(&cfg.tables_dir)?;
    let device = resolve_device(&tables, cfg.device.as_deref(), &cfg.tables_dir)?;
    let matrices = device_matrices(&tables, &device)?;
    let budget = cfg.budget.map_or(Budget::Unbounded, Budget::AtMost);
    let constraints = SearchConstraints::new(cfg.objective, cfg.budget_metric, budget)?;

    require(&matrices, cfg.objective, &device, &cfg.tables_dir)?;
    if budget != Budget::Unbounded {
        require(&matrices, cfg.budget_metric, &device, &cfg.tables_dir)?;
    }
    let problem = SearchProblem::from_constraints(&matrices, &constraints)?;

    let (proposals, truncated) = match cfg.method {
        Method::Lzcm => {
            let accuracy = require(&matrices, Metric::Accuracy, &device, &cfg.tables_dir)?;
            let pick = lzcm_search(accuracy, cfg.base, cfg.alt)?;
            (vec![problem.evaluate(&pick.assignment)?], false)
        }
        Method::Naive => {
            let naive = NaiveConfig {
                early_layers: cfg.naive_k,
                early: cfg.early,
                rest: cfg.rest,
            };
            (vec![problem.evaluate(&naive_assignment(problem.layers(), naive))?], false)
        }
        Method::Random => (vec![random_search(&problem, cfg.iterations, cfg.seed)?], false),
        Method::Exact => {
            let outcome = exact_search(&problem, cfg.top_k, cfg.diversity)?;
            (outcome.proposals, outcome.truncated)
        }
    };
    let report = SearchReport {
        method: cfg.method,
        device,
        constraints: Some(constraints),
        proposals,
        truncated,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))? + "\n";
    match &cfg.out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(CliError::io(parent))?;
            }
            fs::write(path, json).map_err(CliError::io(path))?;
        }
        None => print!("{json}"),
    }
    Ok(report)
}

pub struct ReportOutput {
    pub table: ReportTable<f64>,
    pub text: String,
    pub csv: String,
}

/// Device names and labelled rows of a `model,<device>,...` CSV.
type ValueRows = (Vec<String>, Vec<(String, Vec<f64>)>);

fn read_values(path: &Path) -> Result<ValueRows> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.len() < 2 {
        return Err(bad("expected `model,<device>,...` header".into()));
    }
    let devices = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let label = record.get(0).unwrap_or_default().to_string();
        let values = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("row `{label}`: bad value `{v}`"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push((label, values));
    }
    Ok((devices, rows))
}

fn proposal_rows(paths: &[PathBuf]) -> Result<Vec<(String, Vec<ActivationKind>)>> {
    let mut rows: Vec<(String, Vec<ActivationKind>)> = Vec::new();
    for path in paths {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let report: SearchReport<f64> =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("proposals");
        for p in report.proposals {
            let mut label = format!("{}{}", report.method, p.rank);
            if rows.iter().any(|(l, _)| *l == label) {
                label = format!("{stem}-{label}");
            }
            rows.push((label, p.assignment));
        }
    }
    Ok(rows)
}

/// Builds the comparison table from raw values or from tables plus proposal
/// files, optionally writing `report_<metric>.{txt,csv}`.
pub fn cmd_report(cfg: &ReportConfig) -> Result<ReportOutput> {
    let table = match (&cfg.values, &cfg.tables_dir) {
        (Some(values), _) => {
            let (devices, rows) = read_values(values)?;
            ReportTable::from_values(cfg.metric, devices, cfg.baselines.clone(), rows)?
        }
        (None, Some(dir)) => {
            let tables = load_tables(dir)?;
            let devices: Vec<String> = if cfg.devices.is_empty() {
                tables
                    .iter()
                    .filter(|t| t.metric() == cfg.metric)
                    .map(|t| t.device().to_string())
                    .collect()
            } else {
                cfg.devices.clone()
            };
            if devices.is_empty() {
                return Err(CliError::MissingTable {
                    metric: cfg.metric.to_string(),
                    device: "any".into(),
                    dir: dir.clone(),
                });
            }
            let matrices = devices
                .iter()
                .map(|d| {
                    tables
                        .iter()
                        .find(|t| t.metric() == cfg.metric && t.device() == d)
                        .ok_or_else(|| CliError::MissingTable {
                            metric: cfg.metric.to_string(),
                            device: d.clone(),
                            dir: dir.clone(),
                        })
                        .and_then(|t| Ok(t.to_matrix()?))
                })
                .collect::<Result<Vec<_>>>()?;
            let models = proposal_rows(&cfg.proposals)?;
            ReportTable::from_matrices(cfg.metric, &matrices, &cfg.baselines, &models)?
        }
        (None, None) => return Err(CliError::Config("report needs --values or --tables-dir".into())),
    };
    let text = table.render_text();
    let csv = table.render_csv()?;
    if let Some(out) = &cfg.out {
        fs::create_dir_all(out).map_err(CliError::io(out))?;
        for (ext, body) in [("txt", &text), ("csv", &csv)] {
            let path = out.join(format!("report_{}.{ext}", cfg.metric));
            fs::write(&path, body).map_err(CliError::io(&path))?;
        }
    }
    Ok(ReportOutput { table, text, csv })
}

pub fn cmd_nwot(cfg: &NwotConfig) -> Result<NwotScore<f64>> {
    let model = ModelSpec::load(&cfg.model)?;
    let scorer = NwotScorer::<f64>::new(&model, cfg.batch_size, cfg.seed, batch_seed(cfg.seed))?;
    Ok(scorer.score(&model)?)
}
