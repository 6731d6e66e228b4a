//! Multi-device comparison tables with improvement percentages against
//! named baselines.

use std::fmt::Write as _;

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::scalar::{round2, Scalar};
use crate::table::{improvement_pct, CostMatrix, Metric};

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow<T> {
    pub label: String,
    /// One value per device.
    pub values: Vec<T>,
    /// `improvements[device][baseline]`; `None` on the baseline rows themselves.
    pub improvements: Vec<Vec<Option<T>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable<T> {
    pub metric: Metric,
    pub devices: Vec<String>,
    pub baselines: Vec<String>,
    pub rows: Vec<ReportRow<T>>,
}

/// Improvement for `metric`: positive means `value` beats `baseline`.
pub fn metric_improvement<T: Scalar>(metric: Metric, baseline: T, value: T) -> Result<T> {
    let pct = improvement_pct(baseline, value)?;
    Ok(if metric.higher_is_better() { -pct } else { pct })
}

/// Two decimals, ties away from zero, never `-0.00`.
pub fn format_pct<T: Scalar>(pct: T) -> String {
    let r = round2(pct);
    let r = if r == T::zero() { T::zero() } else { r };
    format!("{:.2}%", r.to_f64().unwrap_or(f64::NAN))
}

fn format_value<T: Scalar>(v: T) -> String {
    format!("{:.2}", round2(v).to_f64().unwrap_or(f64::NAN))
}

/// Resolves a baseline label such as `silu` to its uniform assignment.
pub fn baseline_assignment(label: &str, layers: usize) -> Result<Vec<ActivationKind>> {
    let kind: ActivationKind = label
        .parse()
        .map_err(|_| Error::UnknownBaseline(label.to_string()))?;
    Ok(vec![kind; layers])
}

impl<T: Scalar> ReportTable<T> {
    /// Builds a table from raw per-device values. Every baseline label must
    /// name one of the rows.
    pub fn from_values(
        metric: Metric,
        devices: Vec<String>,
        baselines: Vec<String>,
        rows: Vec<(String, Vec<T>)>,
    ) -> Result<Self> {
        if let Some((label, _)) = rows.iter().find(|(_, v)| v.len() != devices.len()) {
            return Err(Error::InvalidTable(format!(
                "row `{label}` has a value count different from the {} devices",
                devices.len()
            )));
        }
        let baseline_values: Vec<&Vec<T>> = baselines
            .iter()
            .map(|b| {
                rows.iter()
                    .find(|(label, _)| label == b)
                    .map(|(_, v)| v)
                    .ok_or_else(|| Error::UnknownBaseline(b.clone()))
            })
            .collect::<Result<_>>()?;
        let mut out_rows = Vec::with_capacity(rows.len());
        for (label, values) in &rows {
            let is_baseline = baselines.contains(label);
            let improvements = (0..devices.len())
                .map(|d| {
                    baseline_values
                        .iter()
                        .map(|b| {
                            if is_baseline {
                                Ok(None)
                            } else {
                                metric_improvement(metric, b[d], values[d]).map(Some)
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            out_rows.push(ReportRow {
                label: label.clone(),
                values: values.clone(),
                improvements,
            });
        }
        Ok(Self {
            metric,
            devices,
            baselines,
            rows: out_rows,
        })
    }

    /// Predicts each model's value on every device from that device's matrix,
    /// adding uniform-activation rows for the baselines first.
    pub fn from_matrices(
        metric: Metric,
        matrices: &[CostMatrix<T>],
        baselines: &[String],
        models: &[(String, Vec<ActivationKind>)],
    ) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::MissingMatrix { metric });
        };
        if let Some(m) = matrices.iter().find(|m| m.metric != metric) {
            return Err(Error::InvalidTable(format!(
                "device `{}` supplied a {} matrix for a {metric} report",
                m.device, m.metric
            )));
        }
        let layers = first.layers();
        let mut rows = Vec::new();
        for b in baselines {
            rows.push((b.clone(), baseline_assignment(b, layers)?));
        }
        rows.extend(models.iter().cloned());
        let values = rows
            .into_iter()
            .map(|(label, assignment)| {
                let v = matrices
                    .iter()
                    .map(|m| m.predicted_total(&assignment))
                    .collect::<Result<Vec<T>>>()?;
                Ok((label, v))
            })
            .collect::<Result<Vec<_>>>()?;
        let devices = matrices.iter().map(|m| m.device.clone()).collect();
        Self::from_values(metric, devices, baselines.to_vec(), values)
    }

    /// Aligned text table in the layout `model | value | vs baseline ... ` per device.
    pub fn render_text(&self) -> String {
        let mut header = vec!["model".to_string()];
        for d in &self.devices {
            header.push(format!("{d} {} ({})", self.metric, self.metric.unit()));
            for b in &self.baselines {
                header.push(format!("vs {b}"));
            }
        }
        let mut lines = vec![header];
        for row in &self.rows {
            let mut cells = vec![row.label.clone()];
            for (d, v) in row.values.iter().enumerate() {
                cells.push(format_value(*v));
                for imp in &row.improvements[d] {
                    cells.push(imp.map_or_else(|| "-".to_string(), format_pct));
                }
            }
            lines.push(cells);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, line) in lines.iter().enumerate() {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    if c == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(" | ").trim_end());
            if i == 0 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                let _ = writeln!(out, "{}", rule.join("-+-"));
            }
        }
        out
    }

    /// Long-format CSV: one line per (model, device) with raw values and
    /// rounded improvement cells.
    pub fn render_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["model".to_string(), "device".into(), "metric".into(), "value".into()];
        header.extend(self.baselines.iter().map(|b| format!("improvement_vs_{b}")));
        writer.write_record(&header)?;
        for row in &self.rows {
            for (d, device) in self.devices.iter().enumerate() {
                let mut rec = vec![
                    row.label.clone(),
                    device.clone(),
                    self.metric.to_string(),
                    row.values[d].to_string(),
                ];
                rec.extend(row.improvements[d].iter().map(|imp| {
                    imp.map_or_else(|| "-".to_string(), |p| format_pct(p).trim_end_matches('%').to_string())
                }));
                writer.write_record(&rec)?;
            }
        }
        let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npu_latency() -> ReportTable<f64> {
        ReportTable::from_values(
            Metric::Latency,
            vec!["npu".into()],
            vec!["silu".into(), "hardswish".into()],
            vec![
                ("silu".into(), vec![22.35]),
                ("hardswish".into(), vec![18.53]),
                ("actnas1".into(), vec![17.37]),
                ("same".into(), vec![22.35]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn published_cells() {
        let t = npu_latency();
        let row = &t.rows[2];
        assert_eq!(format_pct(row.improvements[0][0].unwrap()), "22.28%");
        assert_eq!(format_pct(row.improvements[0][1].unwrap()), "6.26%");
        assert_eq!(format_pct(t.rows[3].improvements[0][0].unwrap()), "0.00%");
        assert!(t.rows[0].improvements[0].iter().all(Option::is_none));
    }

    #[test]
    fn text_and_csv_layout() {
        let t = npu_latency();
        let text = t.render_text();
        assert!(text.lines().next().unwrap().starts_with("model"));
        assert!(text.contains("22.28%"));
        assert!(text.contains(" - "));
        let csv = t.render_csv().unwrap();
        assert!(csv.starts_with("model,device,metric,value,improvement_vs_silu,improvement_vs_hardswish\n"));
        assert!(csv.contains("actnas1,npu,latency,17.37,22.28,6.26\n"));
    }

    #[test]
    fn unknown_baseline() {
        let err = ReportTable::<f64>::from_values(
            Metric::Latency,
            vec!["npu".into()],
            vec!["gelu".into()],
            vec![("silu".into(), vec![1.0])],
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownBaseline(b) if b == "gelu"));
        assert!(baseline_assignment("gelu", 3).is_err());
    }

    #[test]
    fn negative_zero_is_normalized() {
        assert_eq!(format_pct(-0.001f64), "0.00%");
        assert_eq!(format_pct(-21.537f64), "-21.54%");
    }

    #[test]
    fn accuracy_improvement_is_sign_flipped() {
        assert!(metric_improvement(Metric::Accuracy, 10.0, 11.0).unwrap() > 0.0);
        assert!(metric_improvement(Metric::Latency, 10.0, 11.0).unwrap() < 0.0);
    }

    #[test]
    fn matrices_predict_rows() {
        let values: Vec<Vec<f64>> = vec![vec![-1.0, 0.0, -0.5, -0.8, -0.9]; 2];
        let mut m = CostMatrix::from_values(Metric::Latency, 10.0, values).unwrap();
        m.device = "npu".into();
        let t = ReportTable::from_matrices(
            Metric::Latency,
            &[m],
            &["silu".into(), "relu".into()],
            &[("mix".into(), vec![ActivationKind::Relu, ActivationKind::Silu])],
        )
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[1].values, vec![8.0]);
        assert_eq!(t.rows[2].values, vec![9.0]);
        assert!((t.rows[2].improvements[0][0].unwrap() - 10.0).abs() < 1e-12);
    }
}
