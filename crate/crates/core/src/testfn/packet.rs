//! Gaussian wave packets with exact Fourier transforms.
//!
//! A term is
//!
//! ```text
//! h(x) = A · exp(−½ (x−c)ᵀ P (x−c)) · exp(−i q·(x−c)),      P = Σ⁻¹
//! h̃(k) = A · (2π)^{d/2} √det Σ · exp(i k·c) · exp(−½ (k−q)ᵀ ηΣη (k−q))
//! ```
//!
//! optionally multiplied in Fourier space by a first-order factor
//! `β + γ^μ k_μ` (a derivative operator in position space). The family is
//! closed under conjugation, translations and the full Lorentz group.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FrequencyFilter, FrequencySign};
use crate::error::{Error, Result};
use crate::lorentz::{self, metric_sign};
use crate::special;

/// Spectral multiplier `constant + gradient^μ k_μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFactor {
    pub constant: Complex64,
    pub gradient: Vec<Complex64>,
}

impl SpectralFactor {
    #[inline]
    fn eval(&self, k: &[f64]) -> Complex64 {
        let mut s = self.constant;
        for (mu, g) in self.gradient.iter().enumerate() {
            s += g * (metric_sign(mu) * k[mu]);
        }
        s
    }

    fn mdot(&self, v: &[f64]) -> Complex64 {
        self.gradient.iter().enumerate().map(|(mu, g)| g * (metric_sign(mu) * v[mu])).sum()
    }
}

#[derive(Debug, Clone)]
pub struct PacketTerm {
    amplitude: Complex64,
    center: Vec<f64>,
    covariance: DMatrix<f64>,
    carrier: Vec<f64>,
    factor: Option<SpectralFactor>,
    // derived
    precision: DMatrix<f64>,
    spectral_precision: [f64; 16],
    norm: f64,
}

impl PartialEq for PacketTerm {
    fn eq(&self, other: &Self) -> bool {
        self.amplitude == other.amplitude
            && self.center == other.center
            && self.covariance == other.covariance
            && self.carrier == other.carrier
            && self.factor == other.factor
    }
}

impl PacketTerm {
    /// Axis-aligned packet with per-axis position widths.
    pub fn new(amplitude: Complex64, center: Vec<f64>, widths: &[f64], carrier: Vec<f64>) -> Result<Self> {
        if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidTestFunction("packet widths must be positive".into()));
        }
        let d = widths.len();
        let cov = DMatrix::from_fn(d, d, |i, j| if i == j { widths[i] * widths[i] } else { 0.0 });
        Self::with_covariance(amplitude, center, cov, carrier)
    }

    pub fn with_covariance(
        amplitude: Complex64,
        center: Vec<f64>,
        covariance: DMatrix<f64>,
        carrier: Vec<f64>,
    ) -> Result<Self> {
        let d = center.len();
        lorentz::check_dim(d)?;
        if carrier.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: carrier.len() });
        }
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: covariance.nrows() });
        }
        if !amplitude.is_finite() || center.iter().chain(&carrier).any(|v| !v.is_finite()) {
            return Err(Error::InvalidTestFunction("non-finite packet parameter".into()));
        }
        let asym = (&covariance - covariance.transpose()).amax();
        if asym > 1e-12 * covariance.amax() {
            return Err(Error::InvalidTestFunction("packet covariance is not symmetric".into()));
        }
        let covariance = (&covariance + covariance.transpose()) * 0.5;
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidTestFunction("packet covariance is not positive definite".into()))?;
        let precision = chol.inverse();
        let det: f64 = chol.l().diagonal().iter().map(|v| v * v).product();
        let norm = (2.0 * PI).powf(d as f64 / 2.0) * det.sqrt();
        let mut spectral_precision = [0.0; 16];
        for i in 0..d {
            for j in 0..d {
                spectral_precision[i * d + j] = metric_sign(i) * metric_sign(j) * covariance[(i, j)];
            }
        }
        Ok(Self { amplitude, center, covariance, carrier, factor: None, precision, spectral_precision, norm })
    }

    pub fn with_factor(mut self, factor: SpectralFactor) -> Result<Self> {
        if factor.gradient.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: factor.gradient.len() });
        }
        self.factor = Some(factor);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn amplitude(&self) -> Complex64 {
        self.amplitude
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn carrier(&self) -> &[f64] {
        &self.carrier
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn factor(&self) -> Option<&SpectralFactor> {
        self.factor.as_ref()
    }

    /// Per-axis widths when the covariance is diagonal.
    pub fn widths(&self) -> Option<Vec<f64>> {
        let d = self.dim();
        for i in 0..d {
            for j in 0..d {
                if i != j && self.covariance[(i, j)] != 0.0 {
                    return None;
                }
            }
        }
        Some((0..d).map(|i| self.covariance[(i, i)].sqrt()).collect())
    }

    /// Standard deviation of the spectral envelope along `axis`.
    pub fn spectral_width(&self, axis: usize) -> f64 {
        self.precision[(axis, axis)].sqrt()
    }

    /// Standard deviation of the position envelope along `axis`.
    pub fn position_width(&self, axis: usize) -> f64 {
        self.covariance[(axis, axis)].sqrt()
    }

    #[inline]
    pub fn spectrum(&self, k: &[f64]) -> Complex64 {
        let d = self.dim();
        let mut u = [0.0; 4];
        for i in 0..d {
            u[i] = k[i] - self.carrier[i];
        }
        let mut quad = 0.0;
        for i in 0..d {
            let row = &self.spectral_precision[i * d..i * d + d];
            let mut s = 0.0;
            for j in 0..d {
                s += row[j] * u[j];
            }
            quad += u[i] * s;
        }
        let phase = lorentz::dot(k, &self.center);
        let envelope = self.norm * (-0.5 * quad).exp();
        let mut v = self.amplitude * Complex64::from_polar(envelope, phase);
        if let Some(f) = &self.factor {
            v *= f.eval(k);
        }
        v
    }

    fn quadratic(&self, a: &[f64], b: &[f64]) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                s += a[i] * self.precision[(i, j)] * b[j];
            }
        }
        s
    }

    /// Position-space value, unfiltered.
    pub fn value(&self, x: &[f64]) -> Complex64 {
        let d = self.dim();
        let y: Vec<f64> = (0..d).map(|i| x[i] - self.center[i]).collect();
        let e1 = -0.5 * self.quadratic(&y, &y);
        let phase = -lorentz::dot(&self.carrier, &y);
        let base = self.amplitude * Complex64::from_polar(e1.exp(), phase);
        match &self.factor {
            None => base,
            Some(f) => {
                // β + γ·q + i γᵀ P (c − x)
                let neg_y: Vec<f64> = y.iter().map(|v| -v).collect();
                let py = self.mat_vec(&neg_y);
                let gp: Complex64 = f.gradient.iter().zip(&py).map(|(g, p)| g * p).sum();
                base * (f.constant + f.mdot(&self.carrier) + Complex64::i() * gp)
            }
        }
    }

    fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d).map(|i| (0..d).map(|j| self.precision[(i, j)] * v[j]).sum()).collect()
    }

    /// Position-space value of the term with its spectrum restricted to the
    /// half space selected by `filter`.
    pub fn value_filtered(&self, x: &[f64], filter: &FrequencyFilter) -> Complex64 {
        let d = self.dim();
        let sign = match filter.sign {
            FrequencySign::Positive => 1.0,
            FrequencySign::Negative => -1.0,
        };
        let n: Vec<f64> = filter.direction.iter().map(|v| sign * v).collect();
        let i = Complex64::i();
        // y = c − x; b = iηy; M⁻¹ = ηPη; v = ηn
        let y: Vec<f64> = (0..d).map(|m| self.center[m] - x[m]).collect();
        let py = self.mat_vec(&y);
        let pn = self.mat_vec(&n);
        // μ = vᵀM⁻¹b = i nᵀ P y, τ² = nᵀ P n
        let mu = i * n.iter().zip(&py).map(|(a, b)| a * b).sum::<f64>();
        let tau = n.iter().zip(&pn).map(|(a, b)| a * b).sum::<f64>().sqrt();
        let e1 = -0.5 * y.iter().zip(&py).map(|(a, b)| a * b).sum::<f64>();
        let a = lorentz::dot(&n, &self.carrier);
        let zeta = -(a + mu) / (std::f64::consts::SQRT_2 * tau);

        let (beta_tot, g_mv) = match &self.factor {
            None => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            Some(f) => {
                // β' + gᵀM⁻¹b with g = ηγ, and gᵀM⁻¹v = γᵀPn
                let gb: Complex64 = f.gradient.iter().zip(&py).map(|(g, p)| g * p).sum::<Complex64>() * i;
                let gv: Complex64 = f.gradient.iter().zip(&pn).map(|(g, p)| g * p).sum();
                (f.constant + f.mdot(&self.carrier) + gb, gv)
            }
        };
        let pref = self.amplitude * Complex64::from_polar(1.0, lorentz::dot(&self.carrier, &y));
        let slope = g_mv / ((2.0 * PI).sqrt() * tau);
        let gauss = (Complex64::new(e1, 0.0) - zeta * zeta).exp();
        let body = if zeta.re >= 0.0 {
            gauss * (beta_tot * 0.5 * special::faddeeva(i * zeta) + slope)
        } else {
            beta_tot * e1.exp() + gauss * (-beta_tot * 0.5 * special::faddeeva(-i * zeta) + slope)
        };
        pref * body
    }

    pub fn conjugate(&self) -> Self {
        let mut t = self.clone();
        t.amplitude = self.amplitude.conj();
        t.carrier = self.carrier.iter().map(|v| -v).collect();
        t.factor = self.factor.as_ref().map(|f| SpectralFactor {
            constant: f.constant.conj(),
            gradient: f.gradient.iter().map(|g| -g.conj()).collect(),
        });
        t
    }

    pub fn translate(&self, a: &[f64]) -> Self {
        let mut t = self.clone();
        for (c, s) in t.center.iter_mut().zip(a) {
            *c += s;
        }
        t
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut t = self.clone();
        t.amplitude *= alpha;
        t
    }

    /// `(Λh)(x) = h(Λ⁻¹x)`, equivalently `(Λh)~(k) = h̃(Λ⁻¹k)`.
    pub fn transform(&self, lambda: &DMatrix<f64>) -> Result<Self> {
        let center = lorentz::apply(lambda, &self.center);
        let carrier = lorentz::apply(lambda, &self.carrier);
        let cov = lambda * &self.covariance * lambda.transpose();
        let mut t = Self::with_covariance(self.amplitude, center, cov, carrier)?;
        if let Some(f) = &self.factor {
            let d = self.dim();
            let gradient = (0..d)
                .map(|i| (0..d).map(|j| f.gradient[j] * lambda[(i, j)]).sum())
                .collect();
            t.factor = Some(SpectralFactor { constant: f.constant, gradient });
        }
        Ok(t)
    }
}
