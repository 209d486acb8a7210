//! Proper scoring rules in potential form, S(p,q) = G(p) + g(p)ᵀ(q−p).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::{
    l2_distance, tangent_min_eigenvalue, tangent_project, SimplexPoint, TangentMatrix,
    TangentVector,
};

/// A real number or −∞. Scores are never NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInfinity,
    Finite(f64),
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::NegInfinity => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    /// Lossy conversion, −∞ becomes `f64::NEG_INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::NegInfinity => f64::NEG_INFINITY,
        }
    }

    fn from_f64(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            ExtReal::NegInfinity
        } else {
            ExtReal::Finite(x)
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::NegInfinity, ExtReal::NegInfinity) => Some(Ordering::Equal),
            (ExtReal::NegInfinity, _) => Some(Ordering::Less),
            (_, ExtReal::NegInfinity) => Some(Ordering::Greater),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::NegInfinity => write!(f, "-inf"),
        }
    }
}

/// `Σ wᵢ vᵢ` with `0·(−∞) = 0`.
pub fn weighted_sum(weights: &[f64], values: &[ExtReal]) -> ExtReal {
    let mut acc = 0.0;
    for (&w, &v) in weights.iter().zip(values) {
        if w == 0.0 {
            continue;
        }
        match v {
            ExtReal::Finite(x) => acc += w * x,
            ExtReal::NegInfinity => return ExtReal::NegInfinity,
        }
    }
    ExtReal::Finite(acc)
}

/// The family of a scoring rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleKind {
    Quadratic,
    Logarithmic,
    /// Binary rule with potential `G(p) = (2/K)·exp(K p₁)`.
    ExponentialBinary { k: f64 },
}

impl FromStr for RuleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "quadratic" => Ok(RuleKind::Quadratic),
            "log" => Ok(RuleKind::Logarithmic),
            other => {
                let k = other
                    .strip_prefix("exp:K=")
                    .ok_or_else(|| {
                        Error::invalid(format!(
                            "unknown rule '{other}' (expected quadratic, log or exp:K=<float>)"
                        ))
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad K in '{other}': {e}")))?;
                Ok(RuleKind::ExponentialBinary { k })
            }
        }
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleKind::Quadratic => write!(f, "quadratic"),
            RuleKind::Logarithmic => write!(f, "log"),
            RuleKind::ExponentialBinary { k } => write!(f, "exp:K={k}"),
        }
    }
}

/// A subgradient that may have infinite entries (log rule on the boundary).
#[derive(Clone, Debug, PartialEq)]
pub enum Subgradient {
    Finite(TangentVector),
    /// Entries are ±∞ (or finite where the coordinate is positive).
    Unbounded(Vec<f64>),
}

impl Subgradient {
    pub fn is_finite(&self) -> bool {
        matches!(self, Subgradient::Finite(_))
    }
}

/// A proper scoring rule over `n` outcomes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoringRule {
    kind: RuleKind,
    n: usize,
}

/// Smallest admissible exponent for the exponential rule.
pub const K_MIN: f64 = 1e-6;

impl ScoringRule {
    pub fn new(kind: RuleKind, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("scoring rules need n >= 2"));
        }
        if let RuleKind::ExponentialBinary { k } = kind {
            if n != 2 {
                return Err(Error::invalid("the exponential rule is binary only"));
            }
            if !(k.is_finite() && k >= K_MIN) {
                return Err(Error::invalid(format!("K = {k} must be finite and >= {K_MIN}")));
            }
            if k > 700.0 {
                return Err(Error::invalid(format!("K = {k} overflows exp(K)")));
            }
        }
        Ok(Self { kind, n })
    }

    pub fn quadratic(n: usize) -> Result<Self> {
        Self::new(RuleKind::Quadratic, n)
    }

    pub fn logarithmic(n: usize) -> Result<Self> {
        Self::new(RuleKind::Logarithmic, n)
    }

    pub fn exponential_binary(k: f64) -> Result<Self> {
        Self::new(RuleKind::ExponentialBinary { k }, 2)
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check(&self, p: &SimplexPoint) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::invalid(format!(
                "rule has n = {}, point has n = {}",
                self.n,
                p.n()
            )));
        }
        Ok(())
    }

    /// Score of report `p` when outcome `outcome` (zero-based) occurs.
    pub fn score(&self, p: &SimplexPoint, outcome: usize) -> Result<ExtReal> {
        self.check(p)?;
        if outcome >= self.n {
            return Err(Error::invalid(format!(
                "outcome {outcome} out of range for n = {}",
                self.n
            )));
        }
        Ok(self.score_unchecked(p.as_slice(), outcome))
    }

    fn score_unchecked(&self, p: &[f64], i: usize) -> ExtReal {
        match self.kind {
            RuleKind::Quadratic => {
                let sq: f64 = p.iter().map(|x| x * x).sum();
                ExtReal::Finite(2.0 * p[i] - sq)
            }
            RuleKind::Logarithmic => ExtReal::from_f64(p[i].ln()),
            RuleKind::ExponentialBinary { k } => {
                let e = (k * p[0]).exp();
                let sign = if i == 0 { 1.0 } else { -1.0 };
                // g(p)ᵀ(eᵢ − p) = e·(δᵢ₀ − p₁) − e·(δᵢ₁ − p₂)
                let dot = e * (sign - (p[0] - p[1]));
                ExtReal::Finite(2.0 / k * e + dot)
            }
        }
    }

    /// `E_{i∼q} S(p, i)` with `0·(−∞) = 0`.
    pub fn expected_score(&self, p: &SimplexPoint, q: &SimplexPoint) -> Result<ExtReal> {
        self.check(p)?;
        self.check(q)?;
        let scores: Vec<ExtReal> = (0..self.n)
            .map(|i| self.score_unchecked(p.as_slice(), i))
            .collect();
        Ok(weighted_sum(q.as_slice(), &scores))
    }

    /// Binary fast path: `S((x, 1−x), (y, 1−y))` as an `f64` (may be −∞).
    pub(crate) fn binary_score(&self, x: f64, y: f64) -> f64 {
        match self.kind {
            RuleKind::Quadratic => {
                let (x2, y2) = (1.0 - x, 1.0 - y);
                2.0 * (x * y + x2 * y2) - x * x - x2 * x2
            }
            RuleKind::Logarithmic => {
                let a = if y == 0.0 { 0.0 } else { y * x.ln() };
                let b = if y == 1.0 { 0.0 } else { (1.0 - y) * (1.0 - x).ln() };
                a + b
            }
            RuleKind::ExponentialBinary { k } => {
                let e = (k * x).exp();
                e * (2.0 / k + 2.0 * (y - x))
            }
        }
    }

    /// The convex potential `G(p) = S(p, p)`.
    pub fn potential(&self, p: &SimplexPoint) -> Result<ExtReal> {
        self.check(p)?;
        let v = match self.kind {
            RuleKind::Quadratic => p.as_slice().iter().map(|x| x * x).sum(),
            RuleKind::Logarithmic => p
                .as_slice()
                .iter()
                .map(|&x| if x == 0.0 { 0.0 } else { x * x.ln() })
                .sum(),
            RuleKind::ExponentialBinary { k } => 2.0 / k * (k * p.p1()).exp(),
        };
        Ok(ExtReal::Finite(v))
    }

    /// Tangent-normalized subgradient `g(p)`.
    pub fn subgradient(&self, p: &SimplexPoint) -> Result<Subgradient> {
        self.check(p)?;
        Ok(match self.kind {
            RuleKind::Quadratic => Subgradient::Finite(
                tangent_project(&p.as_slice().iter().map(|x| 2.0 * x).collect::<Vec<_>>())?,
            ),
            RuleKind::Logarithmic => {
                if p.is_interior() {
                    let logs: Vec<f64> = p.as_slice().iter().map(|x| x.ln()).collect();
                    Subgradient::Finite(tangent_project(&logs)?)
                } else {
                    Subgradient::Unbounded(
                        p.as_slice()
                            .iter()
                            .map(|&x| if x > 0.0 { f64::INFINITY } else { f64::NEG_INFINITY })
                            .collect(),
                    )
                }
            }
            RuleKind::ExponentialBinary { k } => {
                let e = (k * p.p1()).exp();
                Subgradient::Finite(TangentVector::new(vec![e, -e])?)
            }
        })
    }

    /// Finite subgradient, or a domain error on the boundary of the log rule.
    pub fn gradient(&self, p: &SimplexPoint) -> Result<TangentVector> {
        match self.subgradient(p)? {
            Subgradient::Finite(g) => Ok(g),
            Subgradient::Unbounded(_) => Err(Error::domain(
                "log-rule subgradient is unbounded on the simplex boundary",
            )),
        }
    }

    /// Tangent-normalized Hessian `Π Dg(p) Π`.
    pub fn hessian(&self, p: &SimplexPoint) -> Result<TangentMatrix> {
        self.check(p)?;
        let n = self.n;
        match self.kind {
            RuleKind::Quadratic => Ok(TangentMatrix::scaled_projector(n, 2.0)),
            RuleKind::Logarithmic => {
                if !p.is_interior() {
                    return Err(Error::domain("log-rule Hessian undefined on the boundary"));
                }
                let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    p.as_slice().iter().map(|x| 1.0 / x),
                ));
                let proj = TangentMatrix::scaled_projector(n, 1.0);
                let pm = proj.entries();
                TangentMatrix::new(pm * d * pm)
            }
            RuleKind::ExponentialBinary { k } => {
                Ok(TangentMatrix::scaled_projector(2, k * (k * p.p1()).exp()))
            }
        }
    }

    /// Smallest eigenvalue of the Hessian on T.
    pub fn gamma_at(&self, p: &SimplexPoint) -> Result<f64> {
        let g = tangent_min_eigenvalue(&self.hessian(p)?);
        if g <= 0.0 {
            return Err(Error::domain(format!("non-positive curvature {g}")));
        }
        Ok(g)
    }

    /// Samples `(p, q)` pairs and records the largest `S(p,q) − S(q,q)`.
    pub fn check_propriety(&self, trials: usize, seed: u64) -> Result<ProprietyReport> {
        if trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_violation = f64::NEG_INFINITY;
        let mut strict = true;
        for _ in 0..trials {
            let p = SimplexPoint::sample_uniform(self.n, &mut rng);
            let q = SimplexPoint::sample_uniform(self.n, &mut rng);
            let spq = self.expected_score(&p, &q)?.to_f64();
            let sqq = self.expected_score(&q, &q)?.to_f64();
            let gap = spq - sqq;
            if gap.is_finite() || gap == f64::NEG_INFINITY {
                max_violation = max_violation.max(gap);
            }
            if l2_distance(&p, &q)? > 1e-3 && gap >= 0.0 {
                strict = false;
            }
        }
        Ok(ProprietyReport {
            samples_tested: trials,
            max_violation,
            strictly_proper_witnessed: strict,
        })
    }
}

impl fmt::Display for ScoringRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.kind.fmt(f)
    }
}

/// Outcome of [`ScoringRule::check_propriety`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProprietyReport {
    pub samples_tested: usize,
    pub max_violation: f64,
    pub strictly_proper_witnessed: bool,
}
