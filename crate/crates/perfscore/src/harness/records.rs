use serde::{Deserialize, Serialize};

use crate::simplex::SimplexPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Timeout,
}

/// One trial of a sweep or of the many-outcome experiment. Optional fields
/// are empty in CSV and `null` in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub trial: Option<usize>,
    pub env: String,
    pub alpha: Option<f64>,
    pub p_star1: Option<f64>,
    pub op_norm: f64,
    pub inaccuracy: Option<f64>,
    pub dist_to_fp: Option<f64>,
    pub dist_fp_uniform: Option<f64>,
    pub dist_report_uniform: Option<f64>,
    /// `L_f · sup ‖g‖/γ`.
    pub bound_lf: Option<f64>,
    /// `‖Df(p)‖·‖g(p)‖/γ_p` at the report.
    pub bound_pointwise: Option<f64>,
    pub runtime_ms: u64,
    pub status: Status,
    pub logit_inaccuracy: Option<f64>,
    pub bound_dist_lf: Option<f64>,
    pub bound_dist_pointwise: Option<f64>,
    pub report: Option<SimplexPoint>,
    pub fixed_point: Option<SimplexPoint>,
}

impl ExperimentRecord {
    pub const HEADER: [&'static str; 18] = [
        "trial",
        "env",
        "alpha",
        "p_star1",
        "op_norm",
        "inaccuracy",
        "dist_to_fp",
        "dist_fp_uniform",
        "dist_report_uniform",
        "bound_lf",
        "bound_pointwise",
        "runtime_ms",
        "status",
        "logit_inaccuracy",
        "bound_dist_lf",
        "bound_dist_pointwise",
        "report",
        "fixed_point",
    ];

    pub(crate) fn timeout(trial: usize, env: String, op_norm: f64, runtime_ms: u64) -> Self {
        Self {
            trial: Some(trial),
            env,
            alpha: None,
            p_star1: None,
            op_norm,
            inaccuracy: None,
            dist_to_fp: None,
            dist_fp_uniform: None,
            dist_report_uniform: None,
            bound_lf: None,
            bound_pointwise: None,
            runtime_ms,
            status: Status::Timeout,
            logit_inaccuracy: None,
            bound_dist_lf: None,
            bound_dist_pointwise: None,
            report: None,
            fixed_point: None,
        }
    }
}

/// Worst case over `p*₁` at one slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCurvePoint {
    pub alpha: f64,
    pub max_inaccuracy: f64,
    pub max_dist_to_fp: Option<f64>,
    pub bound_inaccuracy: Option<f64>,
    pub bound_dist: Option<f64>,
}
