use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Distribution, OrderStatistics, Statistics};

use super::records::{ExperimentRecord, Status};

/// Mean, sample standard deviation and quartiles.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                q1: f64::NAN,
                q2: f64::NAN,
                q3: f64::NAN,
            };
        }
        let mut data = Data::new(xs.to_vec());
        Self {
            mean: data.mean().unwrap_or(f64::NAN),
            std: data.std_dev().unwrap_or(f64::NAN),
            q1: data.lower_quartile(),
            q2: data.median(),
            q3: data.upper_quartile(),
        }
    }
}

/// Least-squares line `y = intercept + slope·x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearFit {
    pub fn of(x: &[f64], y: &[f64]) -> Self {
        let slope = x.covariance(y) / x.variance();
        Self {
            intercept: y.mean() - slope * x.mean(),
            slope,
        }
    }
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    x.covariance(y) / (x.std_dev() * y.std_dev())
}

/// Statistics of the many-outcome experiment, over `ok` records only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryBundle {
    pub trials: usize,
    pub n_ok: usize,
    pub n_timeout: usize,
    pub op_norm: Summary,
    pub inaccuracy: Summary,
    pub dist_to_fp: Summary,
    pub dist_fp_uniform: Summary,
    /// `bound_lf − inaccuracy`.
    pub slack_lf: Summary,
    /// `bound_pointwise − inaccuracy`.
    pub slack_pointwise: Summary,
    pub corr_op_norm_inaccuracy: f64,
    pub corr_op_norm_dist_to_fp: f64,
    pub corr_fp_uniform_inaccuracy: f64,
    pub corr_fp_uniform_dist_to_fp: f64,
    pub corr_report_uniform_inaccuracy: f64,
    pub corr_report_uniform_dist_to_fp: f64,
    pub corr_inaccuracy_dist_to_fp: f64,
    pub fit_inaccuracy_on_op_norm: LinearFit,
    pub fit_dist_to_fp_on_op_norm: LinearFit,
    pub fit_inaccuracy_on_fp_uniform: LinearFit,
    pub fit_dist_to_fp_on_fp_uniform: LinearFit,
}

impl SummaryBundle {
    pub fn from_records(records: &[ExperimentRecord]) -> Self {
        let ok: Vec<&ExperimentRecord> = records.iter().filter(|r| r.status == Status::Ok).collect();
        let col = |f: fn(&ExperimentRecord) -> Option<f64>| -> Vec<f64> {
            ok.iter().map(|r| f(r).unwrap_or(f64::NAN)).collect()
        };
        let op = col(|r| Some(r.op_norm));
        let inacc = col(|r| r.inaccuracy);
        let dist = col(|r| r.dist_to_fp);
        let fpu = col(|r| r.dist_fp_uniform);
        let rpu = col(|r| r.dist_report_uniform);
        let slack_lf = col(|r| Some(r.bound_lf? - r.inaccuracy?));
        let slack_pw = col(|r| Some(r.bound_pointwise? - r.inaccuracy?));
        Self {
            trials: records.len(),
            n_ok: ok.len(),
            n_timeout: records.len() - ok.len(),
            op_norm: Summary::of(&op),
            inaccuracy: Summary::of(&inacc),
            dist_to_fp: Summary::of(&dist),
            dist_fp_uniform: Summary::of(&fpu),
            slack_lf: Summary::of(&slack_lf),
            slack_pointwise: Summary::of(&slack_pw),
            corr_op_norm_inaccuracy: correlation(&op, &inacc),
            corr_op_norm_dist_to_fp: correlation(&op, &dist),
            corr_fp_uniform_inaccuracy: correlation(&fpu, &inacc),
            corr_fp_uniform_dist_to_fp: correlation(&fpu, &dist),
            corr_report_uniform_inaccuracy: correlation(&rpu, &inacc),
            corr_report_uniform_dist_to_fp: correlation(&rpu, &dist),
            corr_inaccuracy_dist_to_fp: correlation(&inacc, &dist),
            fit_inaccuracy_on_op_norm: LinearFit::of(&op, &inacc),
            fit_dist_to_fp_on_op_norm: LinearFit::of(&op, &dist),
            fit_inaccuracy_on_fp_uniform: LinearFit::of(&fpu, &inacc),
            fit_dist_to_fp_on_fp_uniform: LinearFit::of(&fpu, &dist),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_a_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let fit = LinearFit::of(&x, &y);
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((correlation(&x, &y) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartiles_of_small_sample() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.q2, 3.0);
        assert!((s.mean - 3.0).abs() < 1e-15);
        assert!((s.std - 2.5f64.sqrt()).abs() < 1e-12);
    }
}
