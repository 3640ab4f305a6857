//! Minkowski metric (+,−,…,−) and the Lorentz maps used on test functions.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const MIN_DIM: usize = 2;
pub const MAX_DIM: usize = 4;

pub fn check_dim(dim: usize) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

#[inline]
pub fn metric_sign(mu: usize) -> f64 {
    if mu == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `a·b = a⁰b⁰ − a⃗·b⃗`
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = a[0] * b[0];
    for i in 1..a.len() {
        s -= a[i] * b[i];
    }
    s
}

/// Lower (or raise) an index: flips the sign of the spatial components.
pub fn lower(v: &[f64]) -> Vec<f64> {
    v.iter().enumerate().map(|(i, x)| metric_sign(i) * x).collect()
}

/// Boost with the given rapidity in the (t, axis) plane.
pub fn boost_matrix(dim: usize, axis: usize, rapidity: f64) -> Result<DMatrix<f64>> {
    check_dim(dim)?;
    if axis == 0 || axis >= dim {
        return Err(Error::AxisOutOfRange { axis, dim });
    }
    let mut m = DMatrix::identity(dim, dim);
    let (c, s) = (rapidity.cosh(), rapidity.sinh());
    m[(0, 0)] = c;
    m[(axis, axis)] = c;
    m[(0, axis)] = s;
    m[(axis, 0)] = s;
    Ok(m)
}

pub fn parity_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i != j { 0.0 } else if i == 0 { 1.0 } else { -1.0 })
}

pub fn time_reversal_matrix(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i != j { 0.0 } else if i == 0 { -1.0 } else { 1.0 })
}

pub fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum()).collect()
}

/// Checks `Λᵀ η Λ = η` to a loose tolerance.
pub fn is_lorentz(m: &DMatrix<f64>) -> bool {
    let d = m.nrows();
    let eta = DMatrix::from_fn(d, d, |i, j| if i == j { metric_sign(i) } else { 0.0 });
    let r = m.transpose() * &eta * m - &eta;
    r.amax() < 1e-10 * m.amax().powi(2).max(1.0)
}

/// Separation class of two spacetime points or regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Separation {
    Spacelike,
    Timelike,
    Lightlike,
}

impl std::fmt::Display for Separation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Separation::Spacelike => "spacelike",
            Separation::Timelike => "timelike",
            Separation::Lightlike => "lightlike",
        })
    }
}
