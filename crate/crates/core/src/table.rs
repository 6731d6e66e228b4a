//! Per-(layer, activation) benchmark tables and their matrix form.
//!
//! Every entry stores the reference model's metric and the delta caused by
//! replacing a single slot. Multi-slot models are costed additively from
//! these deltas.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::model::{enumerate_single_replacements, ModelSpec};
use crate::nwot::{score_delta, NwotScorer};
use crate::scalar::Scalar;

pub const CSV_HEADER: [&str; 5] = [
    "layer_index",
    "layer_name",
    "activation",
    "reference_value",
    "delta_value",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Latency,
    Accuracy,
    Memory,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Latency, Metric::Accuracy, Metric::Memory];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::Accuracy => "accuracy",
            Metric::Memory => "memory",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Metric::Latency => "ms",
            Metric::Accuracy => "nwot",
            Metric::Memory => "KB",
        }
    }

    /// Higher values are better (accuracy) rather than worse (latency, memory).
    pub fn higher_is_better(self) -> bool {
        self == Metric::Accuracy
    }

    /// Maps a delta onto a positive-is-worse cost.
    pub fn cost_of<T: Scalar>(self, delta: T) -> T {
        if self.higher_is_better() {
            -delta
        } else {
            delta
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Parse(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostEntry<T> {
    pub layer_index: usize,
    pub layer_name: String,
    pub activation: ActivationKind,
    pub reference_value: T,
    pub delta_value: T,
}

/// A complete `layers × candidates` table for one metric on one device.
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable<T> {
    metric: Metric,
    device: String,
    entries: Vec<CostEntry<T>>,
    reference_total: T,
    weight_seed: Option<u64>,
    batch_seed: Option<u64>,
}

/// Something that measures or estimates one metric of a whole model.
pub trait Estimator<T>: Sync {
    fn metric(&self) -> Metric;
    fn device(&self) -> &str;
    fn estimate(&self, model: &ModelSpec) -> Result<T>;

    /// `(weight_seed, batch_seed)` recorded in the table header.
    fn seeds(&self) -> (Option<u64>, Option<u64>) {
        (None, None)
    }
}

/// Accuracy estimator backed by the NWOT score. Degenerate models score `-inf`.
#[derive(Debug, Clone)]
pub struct NwotEstimator<T> {
    scorer: NwotScorer<T>,
    device: String,
}

impl<T: Scalar> NwotEstimator<T> {
    pub fn new(scorer: NwotScorer<T>, device: impl Into<String>) -> Self {
        Self {
            scorer,
            device: device.into(),
        }
    }
}

impl<T: Scalar> Estimator<T> for NwotEstimator<T> {
    fn metric(&self) -> Metric {
        Metric::Accuracy
    }

    fn device(&self) -> &str {
        &self.device
    }

    fn estimate(&self, model: &ModelSpec) -> Result<T> {
        Ok(self.scorer.score(model)?.value)
    }

    fn seeds(&self) -> (Option<u64>, Option<u64>) {
        (Some(self.scorer.weight_seed()), Some(self.scorer.batch_seed()))
    }
}

/// Scores the reference model and every single replacement of it.
///
/// Candidates are estimated in parallel; output order and values do not depend
/// on scheduling. Identity replacements are not re-estimated and get delta 0.
pub fn build_table<T: Scalar, E: Estimator<T> + ?Sized>(
    model: &ModelSpec,
    candidates: &[ActivationKind],
    estimator: &E,
) -> Result<CostTable<T>> {
    let replacements = enumerate_single_replacements(model, candidates)?;
    let reference = estimator.estimate(model)?;
    let results: Vec<Result<CostEntry<T>>> = replacements
        .par_iter()
        .map(|rep| {
            let delta = if rep.identity {
                T::zero()
            } else {
                let value = estimator.estimate(&rep.model).map_err(|e| Error::Estimator {
                    layer: rep.layer,
                    activation: rep.activation,
                    reason: e.to_string(),
                })?;
                score_delta(reference, value)
            };
            Ok(CostEntry {
                layer_index: rep.layer,
                layer_name: model.layers()[rep.layer].name.clone(),
                activation: rep.activation,
                reference_value: reference,
                delta_value: delta,
            })
        })
        .collect();
    let entries = results.into_iter().collect::<Result<Vec<_>>>()?;
    let (weight_seed, batch_seed) = estimator.seeds();
    CostTable::new(
        estimator.metric(),
        estimator.device(),
        entries,
        reference,
        weight_seed,
        batch_seed,
    )
}

impl<T: Scalar> CostTable<T> {
    pub fn new(
        metric: Metric,
        device: impl Into<String>,
        mut entries: Vec<CostEntry<T>>,
        reference_total: T,
        weight_seed: Option<u64>,
        batch_seed: Option<u64>,
    ) -> Result<Self> {
        let device = device.into();
        if device.is_empty() || device.chars().any(char::is_whitespace) {
            return Err(Error::InvalidTable(format!(
                "device tag `{device}` must be non-empty without whitespace"
            )));
        }
        entries.sort_by_key(|e| (e.layer_index, e.activation));
        let table = Self {
            metric,
            device,
            entries,
            reference_total,
            weight_seed,
            batch_seed,
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidTable(msg));
        if self.entries.is_empty() {
            return invalid("table has no entries".into());
        }
        if self.reference_total.is_nan() {
            return invalid("reference total is NaN".into());
        }
        let columns = self.columns();
        let layers = self.layer_count();
        if self.entries.len() != layers * columns.len() {
            return invalid(format!(
                "expected {layers} layers x {} activations = {} entries, found {}",
                columns.len(),
                layers * columns.len(),
                self.entries.len()
            ));
        }
        for (i, chunk) in self.entries.chunks(columns.len()).enumerate() {
            for (entry, &col) in chunk.iter().zip(&columns) {
                if entry.layer_index != i || entry.activation != col {
                    return invalid(format!(
                        "layer {i} is missing activation {col} or has a duplicate entry"
                    ));
                }
                if entry.layer_name != chunk[0].layer_name {
                    return invalid(format!("layer {i} has inconsistent names"));
                }
                if entry.delta_value.is_nan() || entry.reference_value.is_nan() {
                    return invalid(format!("NaN value at (layer {i}, {col})"));
                }
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn device(&self) -> &str {
        &self.device
    }

    pub fn entries(&self) -> &[CostEntry<T>] {
        &self.entries
    }

    pub fn reference_total(&self) -> T {
        self.reference_total
    }

    pub fn weight_seed(&self) -> Option<u64> {
        self.weight_seed
    }

    pub fn batch_seed(&self) -> Option<u64> {
        self.batch_seed
    }

    /// Activations present in the table, in column order.
    pub fn columns(&self) -> Vec<ActivationKind> {
        let mut cols: Vec<_> = self.entries.iter().map(|e| e.activation).collect();
        cols.sort();
        cols.dedup();
        cols
    }

    pub fn layer_count(&self) -> usize {
        self.entries.iter().map(|e| e.layer_index + 1).max().unwrap_or(0)
    }

    pub fn get(&self, layer: usize, activation: ActivationKind) -> Option<&CostEntry<T>> {
        self.entries
            .iter()
            .find(|e| e.layer_index == layer && e.activation == activation)
    }

    /// Checks that the table describes `model` and that identity rows carry zero delta.
    pub fn check_against(&self, model: &ModelSpec) -> Result<()> {
        if self.layer_count() != model.len() {
            return Err(Error::InvalidTable(format!(
                "table has {} layers, model has {}",
                self.layer_count(),
                model.len()
            )));
        }
        for (i, layer) in model.layers().iter().enumerate() {
            match self.get(i, layer.activation) {
                Some(e) if e.delta_value != T::zero() => {
                    return Err(Error::InvalidTable(format!(
                        "identity entry (layer {i}, {}) has non-zero delta {}",
                        layer.activation, e.delta_value
                    )))
                }
                _ => {}
            }
            if let Some(e) = self.entries.iter().find(|e| e.layer_index == i) {
                if e.layer_name != layer.name {
                    return Err(Error::InvalidTable(format!(
                        "layer {i} is `{}` in the table but `{}` in the model",
                        e.layer_name, layer.name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Same entries tagged with a different device.
    pub fn retagged(&self, device: impl Into<String>) -> Result<Self> {
        CostTable::new(
            self.metric,
            device,
            self.entries.clone(),
            self.reference_total,
            self.weight_seed,
            self.batch_seed,
        )
    }

    pub fn to_matrix(&self) -> Result<CostMatrix<T>> {
        let columns = self.columns();
        let layers = self.layer_count();
        let mut values = vec![vec![T::zero(); columns.len()]; layers];
        let mut names = vec![String::new(); layers];
        for l in 0..layers {
            for (c, &col) in columns.iter().enumerate() {
                let entry = self.get(l, col).ok_or(Error::MissingEntry {
                    layer: l,
                    activation: col,
                })?;
                values[l][c] = entry.delta_value;
                names[l] = entry.layer_name.clone();
            }
        }
        Ok(CostMatrix {
            metric: self.metric,
            device: self.device.clone(),
            columns,
            layer_names: names,
            reference_total: self.reference_total,
            values,
        })
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let seed = |s: Option<u64>| s.map_or_else(|| "none".to_string(), |v| v.to_string());
        let mut out = format!(
            "# metric={} device={} reference_total={} weight_seed={} batch_seed={}\n",
            self.metric,
            self.device,
            self.reference_total,
            seed(self.weight_seed),
            seed(self.batch_seed)
        );
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER)?;
        for e in &self.entries {
            writer.write_record([
                e.layer_index.to_string(),
                e.layer_name.clone(),
                e.activation.to_string(),
                e.reference_value.to_string(),
                e.delta_value.to_string(),
            ])?;
        }
        let body = writer
            .into_inner()
            .map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8(body).map_err(|e| Error::Parse(e.to_string()))?);
        Ok(out)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let meta_line = text
            .lines()
            .find(|l| l.starts_with('#'))
            .ok_or_else(|| Error::Parse("missing `# metric=...` metadata line".into()))?;
        let mut metric = None;
        let mut device = None;
        let mut reference_total = None;
        let mut weight_seed = None;
        let mut batch_seed = None;
        for pair in meta_line.trim_start_matches('#').split_whitespace() {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata field `{pair}`")))?;
            match key {
                "metric" => metric = Some(value.parse::<Metric>()?),
                "device" => device = Some(value.to_string()),
                "reference_total" => reference_total = Some(parse_scalar::<T>(value)?),
                "weight_seed" => weight_seed = parse_seed(value)?,
                "batch_seed" => batch_seed = parse_seed(value)?,
                _ => return Err(Error::Parse(format!("unknown metadata key `{key}`"))),
            }
        }
        let missing = |k: &str| Error::Parse(format!("metadata is missing `{k}`"));
        let metric = metric.ok_or_else(|| missing("metric"))?;
        let device = device.ok_or_else(|| missing("device"))?;
        let reference_total = reference_total.ok_or_else(|| missing("reference_total"))?;

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header = reader.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != CSV_HEADER {
            return Err(Error::Parse(format!(
                "expected header `{}`, found `{}`",
                CSV_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or_default();
            entries.push(CostEntry {
                layer_index: field(0)
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad layer index `{}`", field(0))))?,
                layer_name: field(1).to_string(),
                activation: field(2).parse()?,
                reference_value: parse_scalar(field(3))?,
                delta_value: parse_scalar(field(4))?,
            });
        }
        CostTable::new(metric, device, entries, reference_total, weight_seed, batch_seed)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_str(&fs::read_to_string(path)?)
    }
}

fn parse_scalar<T: Scalar>(s: &str) -> Result<T> {
    let v = s
        .trim()
        .parse::<T>()
        .map_err(|_| Error::Parse(format!("bad number `{s}`")))?;
    if v.is_nan() {
        return Err(Error::Parse("NaN is not a valid table value".into()));
    }
    Ok(v)
}

fn parse_seed(s: &str) -> Result<Option<u64>> {
    match s {
        "none" | "-" => Ok(None),
        _ => s
            .parse()
            .map(Some)
            .map_err(|_| Error::Parse(format!("bad seed `{s}`"))),
    }
}

/// Dense `layers × activations` delta matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    pub metric: Metric,
    pub device: String,
    /// Activations in fixed column order.
    pub columns: Vec<ActivationKind>,
    pub layer_names: Vec<String>,
    pub reference_total: T,
    /// `values[layer][column]` is the delta of that single replacement.
    pub values: Vec<Vec<T>>,
}

impl<T: Scalar> CostMatrix<T> {
    /// Matrix over all five activations with generic layer names.
    pub fn from_values(metric: Metric, reference_total: T, values: Vec<Vec<T>>) -> Result<Self> {
        if values.iter().any(|r| r.len() != ActivationKind::ALL.len()) {
            return Err(Error::InvalidTable("every row needs 5 columns".into()));
        }
        Ok(Self {
            metric,
            device: "synthetic".into(),
            columns: ActivationKind::ALL.to_vec(),
            layer_names: (0..values.len()).map(|i| format!("layer{i}")).collect(),
            reference_total,
            values,
        })
    }

    pub fn layers(&self) -> usize {
        self.values.len()
    }

    pub fn column_index(&self, kind: ActivationKind) -> Option<usize> {
        self.columns.iter().position(|&c| c == kind)
    }

    pub fn delta(&self, layer: usize, kind: ActivationKind) -> Result<T> {
        let c = self.column_index(kind).ok_or(Error::UnknownColumn(kind))?;
        Ok(self.values[layer][c])
    }

    /// Sum of per-layer deltas, accumulated in layer order.
    pub fn delta_sum(&self, assignment: &[ActivationKind]) -> Result<T> {
        if assignment.len() != self.layers() {
            return Err(Error::AssignmentLength {
                expected: self.layers(),
                got: assignment.len(),
            });
        }
        let mut sum = T::zero();
        for (l, &kind) in assignment.iter().enumerate() {
            sum = sum + self.delta(l, kind)?;
        }
        Ok(sum)
    }

    /// `reference_total + Σ deltas`, the additive prediction for a multi-slot model.
    pub fn predicted_total(&self, assignment: &[ActivationKind]) -> Result<T> {
        Ok(self.reference_total + self.delta_sum(assignment)?)
    }

    pub fn to_table(&self) -> Result<CostTable<T>> {
        let mut entries = Vec::with_capacity(self.layers() * self.columns.len());
        for (l, row) in self.values.iter().enumerate() {
            for (&col, &v) in self.columns.iter().zip(row) {
                entries.push(CostEntry {
                    layer_index: l,
                    layer_name: self.layer_names[l].clone(),
                    activation: col,
                    reference_value: self.reference_total,
                    delta_value: v,
                });
            }
        }
        CostTable::new(self.metric, self.device.clone(), entries, self.reference_total, None, None)
    }
}

/// Relative improvement of `new_value` over `reference_value` in percent;
/// negative when the new value is worse.
pub fn improvement_pct<T: Scalar>(reference_value: T, new_value: T) -> Result<T> {
    if !(reference_value > T::zero()) || !reference_value.is_finite() {
        return Err(Error::NonPositiveReference(
            reference_value.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if !new_value.is_finite() {
        return Err(Error::NonFinite(new_value.to_f64().unwrap_or(f64::NAN)));
    }
    Ok((reference_value - new_value) / reference_value * T::of(100.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationKind::*;
    use crate::scalar::round2;
    use proptest::prelude::*;

    fn sample_table() -> CostTable<f64> {
        let values = vec![
            vec![-1.5, 0.0, -0.25, -1.0, -0.75],
            vec![-0.5, 0.0, 0.125, 3.0e-9, f64::NEG_INFINITY],
        ];
        let mut m = CostMatrix::from_values(Metric::Accuracy, 12.5, values).unwrap();
        m.device = "npu".into();
        m.layer_names = vec!["conv, stem".into(), "head".into()];
        m.to_table().unwrap()
    }

    #[test]
    fn csv_layout() {
        let text = sample_table().to_csv_string().unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "# metric=accuracy device=npu reference_total=12.5 weight_seed=none batch_seed=none"
        );
        assert_eq!(lines.next().unwrap(), "layer_index,layer_name,activation,reference_value,delta_value");
        assert_eq!(lines.next().unwrap(), "0,\"conv, stem\",relu,12.5,-1.5");
        assert_eq!(text.lines().count(), 12);
        assert!(text.contains("1,head,leakyrelu,12.5,-inf"));
    }

    #[test]
    fn csv_round_trip_keeps_seeds() {
        let table = sample_table();
        let seeded = CostTable::new(
            Metric::Accuracy,
            "npu",
            table.entries().to_vec(),
            12.5,
            Some(7),
            Some(11),
        )
        .unwrap();
        let back = CostTable::<f64>::from_csv_str(&seeded.to_csv_string().unwrap()).unwrap();
        assert_eq!(back, seeded);
        assert_eq!(back.weight_seed(), Some(7));
    }

    #[test]
    fn csv_rejects_wrong_header_and_missing_rows() {
        let text = sample_table().to_csv_string().unwrap();
        let bad_header = text.replace("delta_value", "delta");
        assert!(CostTable::<f64>::from_csv_str(&bad_header).is_err());
        let truncated: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        assert!(CostTable::<f64>::from_csv_str(&truncated).is_err());
        let no_meta: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(CostTable::<f64>::from_csv_str(&no_meta).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let table = sample_table();
        let m = table.to_matrix().unwrap();
        assert_eq!(m.layers(), 2);
        assert_eq!(m.columns, ActivationKind::ALL.to_vec());
        assert_eq!(m.to_table().unwrap().to_matrix().unwrap(), m);
    }

    #[test]
    fn missing_pair_is_an_error() {
        let mut entries = sample_table().entries().to_vec();
        entries.remove(3);
        assert!(CostTable::new(Metric::Accuracy, "npu", entries, 12.5, None, None).is_err());
    }

    #[test]
    fn reference_assignment_predicts_reference_total() {
        let m = sample_table().to_matrix().unwrap();
        assert_eq!(m.predicted_total(&[Silu, Silu]).unwrap(), 12.5);
        assert_eq!(m.predicted_total(&[Relu, Hardswish]).unwrap(), 12.5 - 1.5 + 0.125);
        assert!(m.predicted_total(&[Relu]).is_err());
    }

    #[test]
    fn improvement_cells() {
        let cases = [
            (22.35, 17.37, 22.28),
            (1230.00, 441.00, 64.15),
            (25.63, 31.15, -21.54),
            (18.53, 17.37, 6.26),
            (937.89, 809.96, 13.64),
        ];
        for (r, n, want) in cases {
            assert_eq!(round2(improvement_pct(r, n).unwrap()), want, "({r}, {n})");
        }
        assert_eq!(improvement_pct(3.5, 3.5).unwrap(), 0.0);
        assert!(improvement_pct(0.0, 1.0).is_err());
        assert!(improvement_pct(-2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn improvement_inverts_scaling(r in 1e-3f64..1e6, p in -100.0f64..100.0) {
            let got = improvement_pct(r, r * (1.0 - p / 100.0)).unwrap();
            prop_assert!((got - p).abs() < 1e-9, "{got} vs {p}");
        }
    }
}
