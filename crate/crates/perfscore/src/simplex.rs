//! Points of the probability simplex Δ(N), tangent vectors, and linear maps
//! restricted to the tangent space T = {x : Σxᵢ = 0}.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector.
pub const SUM_TOL: f64 = 1e-9;

/// Negative entries down to this value are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// A probability vector over `n ≥ 2` outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint {
    probs: Vec<f64>,
}

impl SimplexPoint {
    /// Validates `probs`, clamping entries in `[-1e-12, 0)` to zero and
    /// renormalizing.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid(format!(
                "a simplex point needs at least 2 entries, got {}",
                probs.len()
            )));
        }
        if probs.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite probability"));
        }
        if let Some(x) = probs.iter().find(|&&x| !(-CLAMP_TOL..=1.0 + SUM_TOL).contains(&x)) {
            return Err(Error::invalid(format!("probability {x} outside [0, 1]")));
        }
        for x in probs.iter_mut() {
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
        }
        for x in probs.iter_mut() {
            *x = (*x / sum).min(1.0);
        }
        Ok(Self { probs })
    }

    /// The binary point `(p1, 1 - p1)`.
    pub fn binary(p1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::invalid(format!("p1 = {p1} outside [0, 1]")));
        }
        Ok(Self {
            probs: vec![p1, 1.0 - p1],
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n must be at least 2"));
        }
        Ok(Self {
            probs: vec![1.0 / n as f64; n],
        })
    }

    /// The vertex `e_i` (zero-based).
    pub fn vertex(n: usize, i: usize) -> Result<Self> {
        if n < 2 || i >= n {
            return Err(Error::invalid(format!("vertex {i} of a {n}-simplex")));
        }
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        Ok(Self { probs })
    }

    /// Draws a point uniformly from the simplex (flat Dirichlet) using the
    /// gaps between sorted uniforms.
    pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        assert!(n >= 2, "n must be at least 2");
        let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        let mut probs = Vec::with_capacity(n);
        let mut prev = 0.0;
        for c in cuts {
            probs.push(c - prev);
            prev = c;
        }
        probs.push(1.0 - prev);
        Self { probs }
    }

    pub fn n(&self) -> usize {
        self.probs.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    /// First coordinate, the natural scalar for binary points.
    pub fn p1(&self) -> f64 {
        self.probs[0]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    pub fn is_interior(&self) -> bool {
        self.probs.iter().all(|&x| x > 0.0)
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.probs)
    }

    /// `self - other` as a tangent vector.
    pub fn diff(&self, other: &SimplexPoint) -> Result<TangentVector> {
        same_dim(self.n(), other.n())?;
        let comps: Vec<f64> = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| a - b)
            .collect();
        tangent_project(&comps)
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.probs
    }
}

/// A vector in T, the tangent space of the simplex.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TangentVector {
    comps: Vec<f64>,
}

impl TangentVector {
    /// Accepts `comps` when they sum to zero up to `1e-9` relative to their
    /// largest magnitude.
    pub fn new(comps: Vec<f64>) -> Result<Self> {
        if comps.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite tangent component"));
        }
        let scale = comps.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let sum: f64 = comps.iter().sum();
        if sum.abs() > SUM_TOL * scale {
            return Err(Error::invalid(format!(
                "tangent components sum to {sum}, not 0"
            )));
        }
        Ok(Self { comps })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            comps: vec![0.0; n],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.comps
    }

    pub fn n(&self) -> usize {
        self.comps.len()
    }

    pub fn norm(&self) -> f64 {
        self.comps.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &TangentVector) -> f64 {
        self.comps.iter().zip(&other.comps).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, s: f64) -> TangentVector {
        TangentVector {
            comps: self.comps.iter().map(|x| x * s).collect(),
        }
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.comps)
    }
}

/// An `n×n` matrix that is only ever read through its action on T.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentMatrix {
    entries: DMatrix<f64>,
}

impl TangentMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::invalid(format!(
                "tangent matrix must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() < 2 {
            return Err(Error::invalid("tangent matrix needs n >= 2"));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("non-finite matrix entry"));
        }
        Ok(Self { entries })
    }

    /// `s` times the centering projector.
    pub fn scaled_projector(n: usize, s: f64) -> Self {
        let mut m = DMatrix::from_element(n, n, -s / n as f64);
        for i in 0..n {
            m[(i, i)] += s;
        }
        Self { entries: m }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// `Mv`, re-centered into T.
    pub fn apply(&self, v: &TangentVector) -> TangentVector {
        let out = &self.entries * v.to_dvector();
        center(out.as_slice())
    }

    /// `Mᵀv`, re-centered into T.
    pub fn apply_transpose(&self, v: &TangentVector) -> TangentVector {
        let out = self.entries.tr_mul(&v.to_dvector());
        center(out.as_slice())
    }

    /// `vᵀ M w`.
    pub fn bilinear(&self, v: &TangentVector, w: &TangentVector) -> f64 {
        v.to_dvector().dot(&(&self.entries * w.to_dvector()))
    }

    /// `Uᵀ M U` for an orthonormal basis `U` of T.
    pub fn restricted(&self) -> DMatrix<f64> {
        let u = tangent_basis(self.n());
        u.transpose() * &self.entries * u
    }
}

/// Orthonormal basis of T as the columns of an `n×(n-1)` matrix (Helmert
/// construction).
pub fn tangent_basis(n: usize) -> DMatrix<f64> {
    let mut u = DMatrix::zeros(n, n - 1);
    for k in 0..n - 1 {
        let m = (k + 1) as f64;
        let c = 1.0 / (m * (m + 1.0)).sqrt();
        for i in 0..=k {
            u[(i, k)] = c;
        }
        u[(k + 1, k)] = -m * c;
    }
    u
}

fn center(v: &[f64]) -> TangentVector {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    TangentVector {
        comps: v.iter().map(|x| x - mean).collect(),
    }
}

fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::invalid(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("non-finite input"));
    }
    Ok(())
}

/// Euclidean projection onto Δ(N) by sort-and-shift.
pub fn project_to_simplex(v: &[f64]) -> Result<SimplexPoint> {
    if v.len() < 2 {
        return Err(Error::invalid("projection needs n >= 2"));
    }
    check_finite(v)?;
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut probs: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    let sum: f64 = probs.iter().sum();
    for x in probs.iter_mut() {
        *x /= sum;
    }
    Ok(SimplexPoint { probs })
}

/// Euclidean projection onto `{p ∈ Δ(N) : pᵢ ≥ eps}`.
pub fn project_to_shrunk_simplex(v: &[f64], eps: f64) -> Result<SimplexPoint> {
    let n = v.len() as f64;
    if !(eps >= 0.0 && eps * n < 1.0) {
        return Err(Error::invalid(format!("shrink margin {eps} too large")));
    }
    let scale = 1.0 - n * eps;
    let inner: Vec<f64> = v.iter().map(|x| (x - eps) / scale).collect();
    let p = project_to_simplex(&inner)?;
    Ok(SimplexPoint {
        probs: p.probs.iter().map(|x| eps + scale * x).collect(),
    })
}

/// `v - mean(v)·1`.
pub fn tangent_project(v: &[f64]) -> Result<TangentVector> {
    check_finite(v)?;
    if v.is_empty() {
        return Err(Error::invalid("empty vector"));
    }
    Ok(center(v))
}

pub fn l2_distance(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64> {
    same_dim(p.n(), q.n())?;
    Ok(p.probs
        .iter()
        .zip(&q.probs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// `|log(p₁/p₂) − log(q₁/q₂)|` for binary points strictly inside the simplex.
pub fn logit_distance(p: &SimplexPoint, q: &SimplexPoint) -> Result<f64> {
    if p.n() != 2 || q.n() != 2 {
        return Err(Error::invalid("logit distance is defined for n = 2 only"));
    }
    if !p.is_interior() || !q.is_interior() {
        return Err(Error::domain("logit undefined at 0 or 1"));
    }
    let lp = (p.probs[0] / p.probs[1]).ln();
    let lq = (q.probs[0] / q.probs[1]).ln();
    Ok((lp - lq).abs())
}

/// Largest singular value of `M` restricted to T.
pub fn tangent_operator_norm(m: &TangentMatrix) -> f64 {
    let r = m.restricted();
    if r.nrows() == 1 {
        return r[(0, 0)].abs();
    }
    r.singular_values().max()
}

/// Smallest eigenvalue of the symmetrized restriction of `M` to T.
pub fn tangent_min_eigenvalue(m: &TangentMatrix) -> f64 {
    let r = m.restricted();
    if r.nrows() == 1 {
        return r[(0, 0)];
    }
    let sym = (&r + r.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helmert_basis_is_orthonormal_and_centered() {
        for n in 2..7 {
            let u = tangent_basis(n);
            let g = u.transpose() * &u;
            assert!((g - DMatrix::identity(n - 1, n - 1)).norm() < 1e-12);
            for k in 0..n - 1 {
                assert!(u.column(k).sum().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constructor_clamps_tiny_negatives() {
        let p = SimplexPoint::new(vec![-1e-13, 1.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 1.0]);
        assert!(SimplexPoint::new(vec![-1e-6, 1.0 + 1e-6]).is_err());
        assert!(SimplexPoint::new(vec![1.0]).is_err());
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn shrunk_projection_respects_margin() {
        let p = project_to_shrunk_simplex(&[2.0, -1.0, 0.0], 1e-3).unwrap();
        assert!(p.as_slice().iter().all(|&x| x >= 1e-3 - 1e-15));
        assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
