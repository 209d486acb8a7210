use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use super::records::{ExperimentRecord, MaxCurvePoint, Status};
use super::stats::{LinearFit, Summary, SummaryBundle};
use crate::bounds::StakeProfile;
use crate::error::{Error, Result};
use crate::games::RegretSeries;
use crate::simplex::SimplexPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::invalid(format!("unknown format '{s}' (csv|json)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
        })
    }
}

/// A header and string rows, ready for CSV.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub trait ToTable {
    fn to_table(&self) -> Table;
}

/// Floats with 17 significant digits; empty for missing values.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn point(p: &Option<SimplexPoint>) -> String {
    p.as_ref()
        .map(|p| p.as_slice().iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(";"))
        .unwrap_or_default()
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

impl ToTable for [ExperimentRecord] {
    fn to_table(&self) -> Table {
        Table {
            header: header(&ExperimentRecord::HEADER),
            rows: self
                .iter()
                .map(|r| {
                    vec![
                        r.trial.map(|t| t.to_string()).unwrap_or_default(),
                        r.env.clone(),
                        opt(r.alpha),
                        opt(r.p_star1),
                        fmt_f64(r.op_norm),
                        opt(r.inaccuracy),
                        opt(r.dist_to_fp),
                        opt(r.dist_fp_uniform),
                        opt(r.dist_report_uniform),
                        opt(r.bound_lf),
                        opt(r.bound_pointwise),
                        r.runtime_ms.to_string(),
                        match r.status {
                            Status::Ok => "ok".into(),
                            Status::Timeout => "timeout".into(),
                        },
                        opt(r.logit_inaccuracy),
                        opt(r.bound_dist_lf),
                        opt(r.bound_dist_pointwise),
                        point(&r.report),
                        point(&r.fixed_point),
                    ]
                })
                .collect(),
        }
    }
}

impl ToTable for [MaxCurvePoint] {
    fn to_table(&self) -> Table {
        Table {
            header: header(&[
                "alpha",
                "max_inaccuracy",
                "max_dist_to_fp",
                "bound_inaccuracy",
                "bound_dist",
            ]),
            rows: self
                .iter()
                .map(|m| {
                    vec![
                        fmt_f64(m.alpha),
                        fmt_f64(m.max_inaccuracy),
                        opt(m.max_dist_to_fp),
                        opt(m.bound_inaccuracy),
                        opt(m.bound_dist),
                    ]
                })
                .collect(),
        }
    }
}

impl ToTable for SummaryBundle {
    fn to_table(&self) -> Table {
        let mut rows = vec![
            vec!["trials".into(), self.trials.to_string()],
            vec!["n_ok".into(), self.n_ok.to_string()],
            vec!["n_timeout".into(), self.n_timeout.to_string()],
        ];
        let summaries: [(&str, &Summary); 6] = [
            ("op_norm", &self.op_norm),
            ("inaccuracy", &self.inaccuracy),
            ("dist_to_fp", &self.dist_to_fp),
            ("dist_fp_uniform", &self.dist_fp_uniform),
            ("slack_lf", &self.slack_lf),
            ("slack_pointwise", &self.slack_pointwise),
        ];
        for (name, s) in summaries {
            for (stat, v) in [("mean", s.mean), ("std", s.std), ("q1", s.q1), ("q2", s.q2), ("q3", s.q3)] {
                rows.push(vec![format!("{name}.{stat}"), fmt_f64(v)]);
            }
        }
        for (name, v) in [
            ("corr_op_norm_inaccuracy", self.corr_op_norm_inaccuracy),
            ("corr_op_norm_dist_to_fp", self.corr_op_norm_dist_to_fp),
            ("corr_fp_uniform_inaccuracy", self.corr_fp_uniform_inaccuracy),
            ("corr_fp_uniform_dist_to_fp", self.corr_fp_uniform_dist_to_fp),
            ("corr_report_uniform_inaccuracy", self.corr_report_uniform_inaccuracy),
            ("corr_report_uniform_dist_to_fp", self.corr_report_uniform_dist_to_fp),
            ("corr_inaccuracy_dist_to_fp", self.corr_inaccuracy_dist_to_fp),
        ] {
            rows.push(vec![name.into(), fmt_f64(v)]);
        }
        let fits: [(&str, &LinearFit); 4] = [
            ("fit_inaccuracy_on_op_norm", &self.fit_inaccuracy_on_op_norm),
            ("fit_dist_to_fp_on_op_norm", &self.fit_dist_to_fp_on_op_norm),
            ("fit_inaccuracy_on_fp_uniform", &self.fit_inaccuracy_on_fp_uniform),
            ("fit_dist_to_fp_on_fp_uniform", &self.fit_dist_to_fp_on_fp_uniform),
        ];
        for (name, fit) in fits {
            rows.push(vec![format!("{name}.intercept"), fmt_f64(fit.intercept)]);
            rows.push(vec![format!("{name}.slope"), fmt_f64(fit.slope)]);
        }
        Table {
            header: header(&["metric", "value"]),
            rows,
        }
    }
}

impl ToTable for RegretSeries {
    fn to_table(&self) -> Table {
        Table {
            header: header(&["t", "cumulative_regret", "prediction_error_cumsum"]),
            rows: self
                .cumulative_regret
                .iter()
                .zip(&self.prediction_error_cumsum)
                .enumerate()
                .map(|(t, (r, e))| vec![(t + 1).to_string(), fmt_f64(*r), fmt_f64(*e)])
                .collect(),
        }
    }
}

impl ToTable for StakeProfile {
    fn to_table(&self) -> Table {
        Table {
            header: header(&["p1", "stake"]),
            rows: self
                .grid
                .iter()
                .map(|(x, s)| vec![fmt_f64(*x), fmt_f64(*s)])
                .collect(),
        }
    }
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header)
            .map_err(|e| Error::Serialization(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| Error::Serialization(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn render<T: ToTable + Serialize + ?Sized>(value: &T, format: Format) -> Result<String> {
    match format {
        Format::Csv => value.to_table().to_csv(),
        Format::Json => to_json(value),
    }
}

/// Writes `contents` to `path`; failures carry the path.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn emit<T: ToTable + Serialize + ?Sized>(value: &T, format: Format, path: &Path) -> Result<()> {
    write_file(path, &render(value, format)?)
}
