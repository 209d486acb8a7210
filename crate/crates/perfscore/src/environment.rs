//! Environment maps f: Δ(N) → Δ(N), describing how a report moves the
//! outcome distribution.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::{
    l2_distance, tangent_basis, tangent_operator_norm, SimplexPoint, TangentMatrix,
};

/// Step of the central-difference Jacobian.
pub const FD_STEP: f64 = 1e-6;

/// Anything that maps the simplex into itself.
pub trait Environment: Sync {
    fn n(&self) -> usize;

    fn eval(&self, p: &SimplexPoint) -> SimplexPoint;

    /// Jacobian in any representation with the right action on T.
    fn jacobian(&self, p: &SimplexPoint) -> TangentMatrix {
        finite_difference_jacobian(self, p)
    }

    fn is_smooth_at(&self, _p: &SimplexPoint) -> bool {
        true
    }

    /// `f(x, 1−x)₁` for binary maps.
    fn eval_p1(&self, x: f64) -> f64 {
        let p = SimplexPoint::new(vec![x, 1.0 - x]).expect("x in [0, 1]");
        self.eval(&p).p1()
    }

    fn is_identity(&self) -> bool {
        false
    }
}

/// Central differences along an orthonormal basis of T. Points too close to
/// the boundary are first pulled toward the uniform point.
pub fn finite_difference_jacobian<E: Environment + ?Sized>(f: &E, p: &SimplexPoint) -> TangentMatrix {
    let n = p.n();
    let h = FD_STEP;
    let u = tangent_basis(n);
    let mut base = p.to_dvector();
    let reach = (0..n - 1)
        .map(|k| u.column(k).amax())
        .fold(0.0f64, f64::max)
        * h;
    if base.min() < reach {
        let tau = (reach - base.min()) / (1.0 / n as f64 - base.min()) + 1e-12;
        base = base.map(|x| (1.0 - tau) * x + tau / n as f64);
    }
    let mut ju = DMatrix::zeros(n, n - 1);
    for k in 0..n - 1 {
        let dir = u.column(k);
        let plus = point_unchecked(&base + dir * h);
        let minus = point_unchecked(&base - dir * h);
        let d = (f.eval(&plus).to_dvector() - f.eval(&minus).to_dvector()) / (2.0 * h);
        ju.set_column(k, &d);
    }
    TangentMatrix::new(ju * u.transpose()).expect("finite Jacobian")
}

fn point_unchecked(v: DVector<f64>) -> SimplexPoint {
    let clipped: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    SimplexPoint::new(clipped.into_iter().map(|x| x / s).collect()).expect("valid point")
}

/// The shipped families of environment maps.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvironmentMap {
    /// `f(p) = p* + α(p − p*)` on two outcomes.
    AffineBinary { p_star: SimplexPoint, alpha: f64 },
    /// Cubic with fixed points at `p₁ ∈ {0.1, 0.6, 0.9}`.
    BankRun,
    /// `f(p) = Ap` with column-stochastic `A`.
    Linear { a: DMatrix<f64> },
    /// `f(p) = (1 − α)p + αp*`, any `n`.
    ShrinkTo { p_star: SimplexPoint, alpha: f64 },
    /// Slope `1 − ε` up to `1 − ζ`, then constant `1 − ζ`. The mirrored form
    /// is constant `ζ` on `[0, ζ]` and has slope `1 − ε` after it.
    RampBinary { zeta: f64, eps: f64, mirrored: bool },
    /// Piecewise-linear `f₁` through `values` on a uniform grid over `[0, 1]`.
    Tabulated { values: Vec<f64> },
}

impl EnvironmentMap {
    pub fn affine_binary(p_star1: f64, alpha: f64) -> Result<Self> {
        let p_star = SimplexPoint::binary(p_star1)?;
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            for x in [0.0, 1.0] {
                let y = p_star1 + alpha * (x - p_star1);
                if !(0.0..=1.0).contains(&y) {
                    return Err(Error::invalid(format!(
                        "affine map with p*1 = {p_star1}, alpha = {alpha} leaves the simplex"
                    )));
                }
            }
        }
        Ok(EnvironmentMap::AffineBinary { p_star, alpha })
    }

    pub fn bank_run() -> Self {
        EnvironmentMap::BankRun
    }

    pub fn linear(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() < 2 {
            return Err(Error::invalid("linear map needs a square matrix with n >= 2"));
        }
        for (j, col) in a.column_iter().enumerate() {
            if col.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::invalid(format!("column {j} has a negative or non-finite entry")));
            }
            if (col.sum() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("column {j} sums to {}", col.sum())));
            }
        }
        Ok(EnvironmentMap::Linear { a })
    }

    /// Columns drawn independently and uniformly from the simplex.
    pub fn random_linear<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = SimplexPoint::sample_uniform(n, rng);
            for i in 0..n {
                a[(i, j)] = col.get(i);
            }
        }
        EnvironmentMap::Linear { a }
    }

    pub fn shrink_to(p_star: SimplexPoint, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("shrink weight {alpha} outside [0, 1]")));
        }
        Ok(EnvironmentMap::ShrinkTo { p_star, alpha })
    }

    pub fn ramp_binary(zeta: f64, eps: f64) -> Result<Self> {
        Self::ramp(zeta, eps, false)
    }

    pub fn ramp(zeta: f64, eps: f64, mirrored: bool) -> Result<Self> {
        if !(zeta > 0.0 && zeta < 0.5) {
            return Err(Error::invalid(format!("zeta = {zeta} must lie in (0, 0.5)")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::invalid(format!("eps = {eps} must lie in (0, 1)")));
        }
        Ok(EnvironmentMap::RampBinary { zeta, eps, mirrored })
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("a table needs at least two values"));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("table values must lie in [0, 1]"));
        }
        Ok(EnvironmentMap::Tabulated { values })
    }

    /// Reads a row-major CSV matrix without header.
    pub fn linear_from_csv(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| Error::Io {
            path: path.to_path_buf(),
            source: e,
        };
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(e) => io(e),
                other => Error::invalid(format!("{}: {other:?}", path.display())),
            })?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| Error::invalid(format!("{}: bad entry '{s}': {e}", path.display())))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid(format!("{}: matrix is not square", path.display())));
        }
        let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::linear(a)
    }

    /// The ramp's fixed point coordinate and its kink.
    fn ramp_f1(x: f64, zeta: f64, eps: f64, mirrored: bool) -> f64 {
        if mirrored {
            if x <= zeta {
                zeta
            } else {
                zeta + (x - zeta) * (1.0 - eps)
            }
        } else if x >= 1.0 - zeta {
            1.0 - zeta
        } else {
            1.0 - zeta - (1.0 - zeta - x) * (1.0 - eps)
        }
    }

    fn binary_f1(&self, x: f64) -> Option<f64> {
        Some(match self {
            EnvironmentMap::AffineBinary { p_star, alpha } => {
                p_star.p1() + alpha * (x - p_star.p1())
            }
            EnvironmentMap::BankRun => x - 1.5 * (x - 0.1) * (x - 0.6) * (x - 0.9),
            EnvironmentMap::RampBinary { zeta, eps, mirrored } => {
                Self::ramp_f1(x, *zeta, *eps, *mirrored)
            }
            EnvironmentMap::Tabulated { values } => {
                let m = (values.len() - 1) as f64;
                let t = x * m;
                let i = (t.floor() as usize).min(values.len() - 2);
                let w = t - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
            _ => return None,
        })
    }

    /// Bank-run derivative `f₁′(x)`.
    fn bank_run_slope(x: f64) -> f64 {
        -4.5 * x * x + 4.8 * x - 0.035
    }

    /// Largest tangent operator norm of the Jacobian over `samples` random
    /// interior points; exact for affine, shrink and linear maps.
    pub fn lipschitz_estimate(&self, samples: usize, seed: u64) -> f64 {
        match self {
            EnvironmentMap::AffineBinary { alpha, .. } => alpha.abs(),
            EnvironmentMap::ShrinkTo { alpha, .. } => 1.0 - alpha,
            EnvironmentMap::Linear { a } => {
                tangent_operator_norm(&TangentMatrix::new(a.clone()).expect("square"))
            }
            EnvironmentMap::RampBinary { eps, .. } => 1.0 - eps,
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..samples.max(1))
                    .map(|_| {
                        let p = SimplexPoint::sample_uniform(self.n(), &mut rng);
                        tangent_operator_norm(&self.jacobian(&p))
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Fixed points of the map; see [`FixedPointConfig`].
    pub fn find_fixed_points(&self, cfg: &FixedPointConfig) -> Result<FixedPointSet> {
        let n = self.n();
        let start = match &cfg.start {
            Some(p) => p.clone(),
            None => SimplexPoint::uniform(n)?,
        };
        if self.is_identity() {
            return Ok(FixedPointSet {
                points: vec![start],
                method: FixedPointMethod::Identity,
                unique: false,
            });
        }
        let (points, method) = match self {
            EnvironmentMap::Linear { a } => (vec![perron_vector(a)?], FixedPointMethod::Eigen),
            _ if n == 2 => {
                let mut pts = self.sign_scan(cfg.scan_step)?;
                if self.lipschitz_estimate(cfg.lipschitz_samples, cfg.seed) < 1.0 {
                    let b = banach(self, start, cfg.max_iters, cfg.tol)?;
                    if pts.iter().all(|q| l2_distance(q, &b).unwrap() > 1e-9) {
                        pts.push(b);
                        pts.sort_by(|a, b| a.p1().total_cmp(&b.p1()));
                    }
                }
                (pts, FixedPointMethod::SignScan)
            }
            _ => (
                vec![banach(self, start, cfg.max_iters, cfg.tol)?],
                FixedPointMethod::Banach,
            ),
        };
        for p in &points {
            let r = l2_distance(&self.eval(p), p)?;
            if r > 1e-8 {
                return Err(Error::IterationLimit {
                    iterations: cfg.max_iters,
                    residual: r,
                    best: p.as_slice().to_vec(),
                });
            }
        }
        let unique = points.len() == 1
            && (self.lipschitz_estimate(cfg.lipschitz_samples, cfg.seed) < 1.0 || n == 2);
        Ok(FixedPointSet {
            points,
            method,
            unique,
        })
    }

    fn sign_scan(&self, step: f64) -> Result<Vec<SimplexPoint>> {
        let m = (1.0 / step).round() as usize;
        let g = |x: f64| self.eval_p1(x) - x;
        let mut roots: Vec<f64> = Vec::new();
        let push = |r: f64, roots: &mut Vec<f64>| {
            if roots.last().map_or(true, |&l| (r - l).abs() > 1e-9) {
                roots.push(r);
            }
        };
        let mut x0 = 0.0;
        let mut g0 = g(x0);
        for k in 1..=m {
            let x1 = k as f64 / m as f64;
            let g1 = g(x1);
            if g0 == 0.0 {
                push(x0, &mut roots);
            } else if g0 * g1 < 0.0 {
                let (mut lo, mut hi, mut glo) = (x0, x1, g0);
                while hi - lo > 1e-13 {
                    let mid = 0.5 * (lo + hi);
                    let gm = g(mid);
                    if gm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if (gm < 0.0) == (glo < 0.0) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                push(0.5 * (lo + hi), &mut roots);
            }
            x0 = x1;
            g0 = g1;
        }
        if g0 == 0.0 {
            push(x0, &mut roots);
        }
        roots.into_iter().map(SimplexPoint::binary).collect()
    }
}

fn banach<E: Environment + ?Sized>(
    f: &E,
    start: SimplexPoint,
    max_iters: usize,
    tol: f64,
) -> Result<SimplexPoint> {
    let mut p = start;
    let mut step = f64::INFINITY;
    for _ in 0..max_iters {
        let next = f.eval(&p);
        step = l2_distance(&next, &p)?;
        p = next;
        if step <= tol {
            return Ok(p);
        }
    }
    Err(Error::IterationLimit {
        iterations: max_iters,
        residual: step,
        best: p.into_vec(),
    })
}

/// Solves `(A − I)x = 0, 1ᵀx = 1`.
fn perron_vector(a: &DMatrix<f64>) -> Result<SimplexPoint> {
    let n = a.nrows();
    let mut m = a - DMatrix::identity(n, n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let x = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::domain("eigenvalue 1 is not simple; fixed point not unique"))?;
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = clipped.iter().sum();
    SimplexPoint::new(clipped.into_iter().map(|v| v / s).collect())
}

impl Environment for EnvironmentMap {
    fn n(&self) -> usize {
        match self {
            EnvironmentMap::Linear { a } => a.nrows(),
            EnvironmentMap::ShrinkTo { p_star, .. } => p_star.n(),
            _ => 2,
        }
    }

    fn eval(&self, p: &SimplexPoint) -> SimplexPoint {
        assert_eq!(p.n(), self.n(), "dimension mismatch");
        if let Some(y) = self.binary_f1(p.p1()) {
            let y = y.clamp(0.0, 1.0);
            return SimplexPoint::binary(y).expect("clamped");
        }
        let v: Vec<f64> = match self {
            EnvironmentMap::Linear { a } => (a * p.to_dvector()).iter().copied().collect(),
            EnvironmentMap::ShrinkTo { p_star, alpha } => p
                .as_slice()
                .iter()
                .zip(p_star.as_slice())
                .map(|(x, s)| (1.0 - alpha) * x + alpha * s)
                .collect(),
            _ => unreachable!("binary kinds handled above"),
        };
        point_unchecked(DVector::from_vec(v))
    }

    fn eval_p1(&self, x: f64) -> f64 {
        match self.binary_f1(x) {
            Some(y) => y.clamp(0.0, 1.0),
            None => self.eval(&SimplexPoint::binary(x).expect("x in [0, 1]")).p1(),
        }
    }

    fn jacobian(&self, p: &SimplexPoint) -> TangentMatrix {
        let n = self.n();
        match self {
            EnvironmentMap::AffineBinary { alpha, .. } => TangentMatrix::scaled_projector(2, *alpha),
            EnvironmentMap::ShrinkTo { alpha, .. } => TangentMatrix::scaled_projector(n, 1.0 - alpha),
            EnvironmentMap::Linear { a } => TangentMatrix::new(a.clone()).expect("square"),
            EnvironmentMap::BankRun => {
                TangentMatrix::scaled_projector(2, Self::bank_run_slope(p.p1()))
            }
            EnvironmentMap::RampBinary { zeta, eps, mirrored } => {
                let x = p.p1();
                let flat = if *mirrored { x < *zeta } else { x > 1.0 - zeta };
                TangentMatrix::scaled_projector(2, if flat { 0.0 } else { 1.0 - eps })
            }
            EnvironmentMap::Tabulated { .. } => finite_difference_jacobian(self, p),
        }
    }

    fn is_smooth_at(&self, p: &SimplexPoint) -> bool {
        match self {
            EnvironmentMap::RampBinary { zeta, mirrored, .. } => {
                let kink = if *mirrored { *zeta } else { 1.0 - zeta };
                (p.p1() - kink).abs() > 1e-12
            }
            EnvironmentMap::Tabulated { values } => {
                let t = p.p1() * (values.len() - 1) as f64;
                (t - t.round()).abs() > 1e-9 || t.round() == 0.0 || t.round() as usize == values.len() - 1
            }
            _ => true,
        }
    }

    fn is_identity(&self) -> bool {
        match self {
            EnvironmentMap::AffineBinary { alpha, .. } => *alpha == 1.0,
            EnvironmentMap::ShrinkTo { alpha, .. } => *alpha == 0.0,
            EnvironmentMap::Linear { a } => *a == DMatrix::identity(a.nrows(), a.ncols()),
            _ => false,
        }
    }
}

impl fmt::Display for EnvironmentMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvironmentMap::AffineBinary { p_star, alpha } => {
                write!(f, "affine:p1={},alpha={}", p_star.p1(), alpha)
            }
            EnvironmentMap::BankRun => write!(f, "bankrun"),
            EnvironmentMap::Linear { a } => write!(f, "linear:n={}", a.nrows()),
            EnvironmentMap::ShrinkTo { p_star, alpha } => {
                write!(f, "shrink:alpha={alpha},p=")?;
                let parts: Vec<String> = p_star.as_slice().iter().map(|x| x.to_string()).collect();
                write!(f, "{}", parts.join(";"))
            }
            EnvironmentMap::RampBinary { zeta, eps, mirrored } => {
                write!(f, "ramp:zeta={zeta},eps={eps}")?;
                if *mirrored {
                    write!(f, ",mirrored")?;
                }
                Ok(())
            }
            EnvironmentMap::Tabulated { values } => write!(f, "tabulated:{}", values.len()),
        }
    }
}

/// Parsed `--env` argument. Linear maps by seed are sampled on demand.
#[derive(Clone, Debug, PartialEq)]
pub enum EnvSpec {
    Affine { p1: f64, alpha: f64 },
    BankRun,
    LinearSeed { seed: u64, n: usize },
    LinearFile { path: String },
    Ramp { zeta: f64, eps: f64 },
}

impl EnvSpec {
    pub fn build(&self) -> Result<EnvironmentMap> {
        match self {
            EnvSpec::Affine { p1, alpha } => EnvironmentMap::affine_binary(*p1, *alpha),
            EnvSpec::BankRun => Ok(EnvironmentMap::bank_run()),
            EnvSpec::LinearSeed { seed, n } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Ok(EnvironmentMap::random_linear(*n, &mut rng))
            }
            EnvSpec::LinearFile { path } => EnvironmentMap::linear_from_csv(Path::new(path)),
            EnvSpec::Ramp { zeta, eps } => EnvironmentMap::ramp_binary(*zeta, *eps),
        }
    }
}

fn parse_kv(body: &str) -> Result<Vec<(&str, &str)>> {
    body.split(',')
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::invalid(format!("expected key=value, got '{kv}'")))
        })
        .collect()
}

fn take<T: FromStr>(kvs: &[(&str, &str)], key: &str, spec: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match kvs.iter().find(|(k, _)| *k == key) {
        None => Ok(None),
        Some((_, v)) => v
            .parse::<T>()
            .map(Some)
            .map_err(|e| Error::invalid(format!("bad {key} in '{spec}': {e}"))),
    }
}

fn require<T>(v: Option<T>, key: &str, spec: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("'{spec}' is missing {key}")))
}

fn reject_unknown(kvs: &[(&str, &str)], allowed: &[&str], spec: &str) -> Result<()> {
    for (k, _) in kvs {
        if !allowed.contains(k) {
            return Err(Error::invalid(format!("unknown key '{k}' in '{spec}'")));
        }
    }
    Ok(())
}

impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "bankrun" {
            return Ok(EnvSpec::BankRun);
        }
        let (head, body) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("unknown environment '{s}'")))?;
        match head {
            "affine" => {
                let kvs = parse_kv(body)?;
                reject_unknown(&kvs, &["p1", "alpha"], s)?;
                Ok(EnvSpec::Affine {
                    p1: require(take(&kvs, "p1", s)?, "p1", s)?,
                    alpha: require(take(&kvs, "alpha", s)?, "alpha", s)?,
                })
            }
            "ramp" => {
                let kvs = parse_kv(body)?;
                reject_unknown(&kvs, &["zeta", "eps"], s)?;
                Ok(EnvSpec::Ramp {
                    zeta: require(take(&kvs, "zeta", s)?, "zeta", s)?,
                    eps: require(take(&kvs, "eps", s)?, "eps", s)?,
                })
            }
            "linear" => {
                if let Some(path) = body.strip_prefix("file=") {
                    return Ok(EnvSpec::LinearFile {
                        path: path.to_string(),
                    });
                }
                let kvs = parse_kv(body)?;
                reject_unknown(&kvs, &["seed", "n"], s)?;
                let n = take(&kvs, "n", s)?.unwrap_or(5);
                if n < 2 {
                    return Err(Error::invalid("linear maps need n >= 2"));
                }
                Ok(EnvSpec::LinearSeed {
                    seed: require(take(&kvs, "seed", s)?, "seed", s)?,
                    n,
                })
            }
            _ => Err(Error::invalid(format!("unknown environment '{s}'"))),
        }
    }
}

/// How a fixed-point set was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixedPointMethod {
    Banach,
    SignScan,
    Eigen,
    /// The map is the identity; the start point is returned.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointSet {
    pub points: Vec<SimplexPoint>,
    pub method: FixedPointMethod,
    /// `false` when the map may have other fixed points (identity maps).
    pub unique: bool,
}

#[derive(Clone, Debug)]
pub struct FixedPointConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub scan_step: f64,
    pub lipschitz_samples: usize,
    pub seed: u64,
    pub start: Option<SimplexPoint>,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            max_iters: 1_000_000,
            tol: 1e-12,
            scan_step: 1e-4,
            lipschitz_samples: 2000,
            seed: 0,
            start: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_has_fixed_point_at_one_minus_zeta() {
        let f = EnvironmentMap::ramp_binary(0.1, 0.01).unwrap();
        assert!((f.eval_p1(0.9) - 0.9).abs() < 1e-15);
        assert!((f.eval_p1(0.0) - 0.01 * 0.9).abs() < 1e-15);
        let m = EnvironmentMap::ramp(0.1, 0.01, true).unwrap();
        assert!((m.eval_p1(0.1) - 0.1).abs() < 1e-15);
        assert!((m.eval_p1(1.0) - (1.0 - 0.01 * 0.9)).abs() < 1e-15);
    }

    #[test]
    fn bank_run_slope_matches_closed_form() {
        for &x in &[0.0, 0.3, 0.6, 1.0] {
            let h = 1e-6;
            let f = |x: f64| x - 1.5 * (x - 0.1) * (x - 0.6) * (x - 0.9);
            let fd = (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((EnvironmentMap::bank_run_slope(x) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn env_grammar() {
        assert_eq!(
            "affine:p1=0.5,alpha=0.3".parse::<EnvSpec>().unwrap(),
            EnvSpec::Affine { p1: 0.5, alpha: 0.3 }
        );
        assert_eq!("bankrun".parse::<EnvSpec>().unwrap(), EnvSpec::BankRun);
        assert_eq!(
            "linear:seed=7".parse::<EnvSpec>().unwrap(),
            EnvSpec::LinearSeed { seed: 7, n: 5 }
        );
        assert!("affine:p1=0.5".parse::<EnvSpec>().is_err());
        assert!("affine:p1=0.5,alpha=0.3,beta=1".parse::<EnvSpec>().is_err());
        assert!("cubic".parse::<EnvSpec>().is_err());
    }
}
