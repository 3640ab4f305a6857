//! Compactly supported test functions sampled on a uniform grid.
//!
//! Samples on the boundary of the support box are exactly zero. The Fourier
//! transform is the trapezoid sum over the samples, band-limited to the
//! Nyquist box `|k_μ| ≤ π/h_μ`; position-space values between nodes are
//! multilinear interpolants.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::FrequencySign;
use crate::error::{Error, Result};
use crate::lorentz::{self, Separation};

/// Below this many samples per axis the discrete spectrum is not trusted.
pub const MIN_GRID_POINTS: usize = 16;

/// Zero-padding factor applied before the discrete transform.
pub const PADDING: usize = 4;

#[derive(Debug, Clone)]
pub struct GridBump {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    samples: Arc<Vec<Complex64>>,
}

impl PartialEq for GridBump {
    fn eq(&self, other: &Self) -> bool {
        self.lower == other.lower && self.upper == other.upper && self.counts == other.counts && self.samples == other.samples
    }
}

impl GridBump {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>, samples: Vec<Complex64>) -> Result<Self> {
        let d = lower.len();
        lorentz::check_dim(d)?;
        if upper.len() != d || counts.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: upper.len().min(counts.len()) });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::InvalidTestFunction("grid support box must have lower < upper".into()));
        }
        if counts.iter().any(|&n| n < 3) {
            return Err(Error::InvalidTestFunction("grid needs at least 3 points per axis".into()));
        }
        let total: usize = counts.iter().product();
        if samples.len() != total {
            return Err(Error::InvalidTestFunction(format!("expected {total} samples, got {}", samples.len())));
        }
        let g = Self { lower, upper, counts, samples: Arc::new(samples) };
        for (idx, v) in g.samples.iter().enumerate() {
            if *v != Complex64::new(0.0, 0.0) && g.on_boundary(idx) {
                return Err(Error::InvalidTestFunction("grid samples must vanish on the support boundary".into()));
            }
        }
        Ok(g)
    }

    /// Samples `f` on the grid, forcing boundary samples to zero.
    pub fn from_fn<F: Fn(&[f64]) -> Complex64>(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>, f: F) -> Result<Self> {
        let d = lower.len();
        lorentz::check_dim(d)?;
        if upper.len() != d || counts.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: upper.len().min(counts.len()) });
        }
        if counts.iter().any(|&n| n < 3) {
            return Err(Error::InvalidTestFunction("grid needs at least 3 points per axis".into()));
        }
        let shell = Self { lower, upper, counts, samples: Arc::new(Vec::new()) };
        let total: usize = shell.counts.iter().product();
        let mut x = vec![0.0; d];
        let samples = (0..total)
            .map(|idx| {
                if shell.on_boundary(idx) {
                    return Complex64::new(0.0, 0.0);
                }
                shell.point_into(idx, &mut x);
                f(&x)
            })
            .collect();
        Self::new(shell.lower, shell.upper, shell.counts, samples)
    }

    /// The standard mollifier `exp(−1/(1−|x−c|²/r²))` on the box `c ± r`.
    pub fn standard_bump(center: &[f64], radius: f64, points_per_axis: usize) -> Result<Self> {
        Self::modulated_bump(center, radius, points_per_axis, &[])
    }

    /// Standard mollifier multiplied by `1 + Σ tilt_μ (x−c)^μ / r`.
    pub fn modulated_bump(center: &[f64], radius: f64, points_per_axis: usize, tilt: &[f64]) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidTestFunction("bump radius must be positive".into()));
        }
        let d = center.len();
        if !tilt.is_empty() && tilt.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: tilt.len() });
        }
        let lower = center.iter().map(|c| c - radius).collect();
        let upper = center.iter().map(|c| c + radius).collect();
        let c = center.to_vec();
        let tilt = tilt.to_vec();
        Self::from_fn(lower, upper, vec![points_per_axis; d], move |x| {
            let r2: f64 = x.iter().zip(&c).map(|(a, b)| ((a - b) / radius).powi(2)).sum();
            if r2 >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let m = 1.0 + tilt.iter().zip(x.iter().zip(&c)).map(|(t, (a, b))| t * (a - b) / radius).sum::<f64>();
            Complex64::new(m * (-1.0 / (1.0 - r2)).exp(), 0.0)
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / (self.counts[axis] - 1) as f64
    }

    pub fn nyquist(&self, axis: usize) -> f64 {
        PI / self.spacing(axis)
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.lower == other.lower && self.upper == other.upper && self.counts == other.counts
    }

    fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        for axis in (0..self.dim()).rev() {
            out[axis] = idx % self.counts[axis];
            idx /= self.counts[axis];
        }
    }

    fn on_boundary(&self, idx: usize) -> bool {
        let mut mi = [0usize; 4];
        self.multi_index(idx, &mut mi[..self.dim()]);
        (0..self.dim()).any(|a| mi[a] == 0 || mi[a] == self.counts[a] - 1)
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        if i == self.counts[axis] - 1 {
            self.upper[axis]
        } else {
            self.lower[axis] + i as f64 * self.spacing(axis)
        }
    }

    fn point_into(&self, idx: usize, out: &mut [f64]) {
        let mut mi = [0usize; 4];
        self.multi_index(idx, &mut mi[..self.dim()]);
        for a in 0..self.dim() {
            out[a] = self.coord(a, mi[a]);
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(idx, &mut x);
        x
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| v >= l && v <= u)
    }

    /// Multilinear interpolation over the axes `from..d`, with the axes
    /// before `from` pinned to `fixed`.
    fn interpolate(&self, x: &[f64], from: usize, fixed: &[usize]) -> Complex64 {
        let d = self.dim();
        let mut base = [0usize; 4];
        let mut frac = [0.0f64; 4];
        base[..from].copy_from_slice(&fixed[..from]);
        for a in from..d {
            let h = self.spacing(a);
            let s = (x[a] - self.lower[a]) / h;
            if !(0.0..=(self.counts[a] - 1) as f64).contains(&s) {
                return Complex64::new(0.0, 0.0);
            }
            let i = (s.floor() as usize).min(self.counts[a] - 2);
            base[a] = i;
            frac[a] = s - i as f64;
        }
        let free = d - from;
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..(1usize << free) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for a in 0..d {
                let mut i = base[a];
                if a >= from {
                    let bit = (corner >> (a - from)) & 1;
                    i += bit;
                    w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                }
                flat = flat * self.counts[a] + i;
            }
            if w != 0.0 {
                acc += self.samples[flat] * w;
            }
        }
        acc
    }

    pub fn value(&self, x: &[f64]) -> Complex64 {
        if !self.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        self.interpolate(x, 0, &[])
    }

    /// Band-limited positive (or negative) time-frequency part at `x`.
    ///
    /// Along the time axis the samples are read as a band-limited signal and
    /// projected exactly with the kernel `h(1 − e^{−iΩτ})/(2πiτ)`; the
    /// spatial axes are interpolated multilinearly.
    pub fn value_time_filtered(&self, x: &[f64], sign: FrequencySign) -> Complex64 {
        if self.dim() > 1 && !x[1..].iter().zip(self.lower[1..].iter().zip(&self.upper[1..])).all(|(v, (l, u))| v >= l && v <= u) {
            return Complex64::new(0.0, 0.0);
        }
        let h = self.spacing(0);
        let omega = PI / h;
        let i = Complex64::i();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.counts[0] {
            let column = self.interpolate(x, 1, &[j]);
            if column == Complex64::new(0.0, 0.0) {
                continue;
            }
            let tau = x[0] - self.coord(0, j);
            let kernel = if tau == 0.0 {
                Complex64::new(0.5, 0.0)
            } else {
                let ph = Complex64::from_polar(1.0, omega * tau);
                match sign {
                    FrequencySign::Positive => h * (1.0 - ph.conj()) / (2.0 * PI * i * tau),
                    FrequencySign::Negative => h * (ph - 1.0) / (2.0 * PI * i * tau),
                }
            };
            acc += column * kernel;
        }
        acc
    }

    /// Trapezoid-sum spectrum at an arbitrary wave vector.
    pub fn spectrum(&self, k: &[f64]) -> Complex64 {
        let d = self.dim();
        for a in 0..d {
            if k[a].abs() > self.nyquist(a) {
                return Complex64::new(0.0, 0.0);
            }
        }
        let phases: Vec<Vec<Complex64>> = (0..d)
            .map(|a| {
                let s = lorentz::metric_sign(a) * k[a];
                (0..self.counts[a]).map(|i| Complex64::from_polar(1.0, s * self.coord(a, i))).collect()
            })
            .collect();
        let cell: f64 = (0..d).map(|a| self.spacing(a)).product();
        self.contract(&phases) * cell
    }

    /// `Σ_n f[n] Π_a phases[a][n_a]`, contracting the last axis first.
    fn contract(&self, phases: &[Vec<Complex64>]) -> Complex64 {
        let d = self.dim();
        let last = self.counts[d - 1];
        let rows = self.samples.len() / last;
        let p_last = &phases[d - 1];
        let mut level: Vec<Complex64> = (0..rows)
            .map(|r| {
                let row = &self.samples[r * last..(r + 1) * last];
                row.iter().zip(p_last).map(|(a, b)| a * b).sum()
            })
            .collect();
        for a in (0..d - 1).rev() {
            let n = self.counts[a];
            let outer = level.len() / n;
            level = (0..outer)
                .map(|r| level[r * n..(r + 1) * n].iter().zip(&phases[a]).map(|(x, p)| x * p).sum())
                .collect();
        }
        level[0]
    }

    pub fn conjugate(&self) -> Self {
        let mut g = self.clone();
        g.samples = Arc::new(self.samples.iter().map(|v| v.conj()).collect());
        g
    }

    pub fn translate(&self, a: &[f64]) -> Self {
        let mut g = self.clone();
        for i in 0..self.dim() {
            g.lower[i] += a[i];
            g.upper[i] += a[i];
        }
        g
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let mut g = self.clone();
        g.samples = Arc::new(self.samples.iter().map(|v| v * alpha).collect());
        g
    }

    /// Pointwise sum of two grids with identical geometry.
    pub fn add(&self, other: &Self) -> Option<Self> {
        if !self.same_geometry(other) {
            return None;
        }
        let mut g = self.clone();
        g.samples = Arc::new(self.samples.iter().zip(other.samples.iter()).map(|(a, b)| a + b).collect());
        Some(g)
    }

    /// `x ↦ f(Rx)` for a reflection `R` flipping the listed axes. Exact.
    pub fn reflect(&self, axes: &[usize]) -> Self {
        let d = self.dim();
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for &a in axes {
            lower[a] = -self.upper[a];
            upper[a] = -self.lower[a];
        }
        let mut mi = [0usize; 4];
        let samples = (0..self.samples.len())
            .map(|idx| {
                self.multi_index(idx, &mut mi[..d]);
                let mut flat = 0;
                for a in 0..d {
                    let i = if axes.contains(&a) { self.counts[a] - 1 - mi[a] } else { mi[a] };
                    flat = flat * self.counts[a] + i;
                }
                self.samples[flat]
            })
            .collect();
        Self { lower, upper, counts: self.counts.clone(), samples: Arc::new(samples) }
    }

    /// Resamples `x ↦ f(Λ⁻¹x)` onto the bounding box of the image of the
    /// support box, keeping the per-axis sample counts. Approximate.
    pub fn resample(&self, lambda: &DMatrix<f64>) -> Result<Self> {
        let d = self.dim();
        let inv = lambda
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotRepresentable("singular transformation".into()))?;
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for corner in 0..(1usize << d) {
            let x: Vec<f64> = (0..d)
                .map(|a| if (corner >> a) & 1 == 1 { self.upper[a] } else { self.lower[a] })
                .collect();
            let y = lorentz::apply(lambda, &x);
            for a in 0..d {
                lower[a] = lower[a].min(y[a]);
                upper[a] = upper[a].max(y[a]);
            }
        }
        Self::from_fn(lower, upper, self.counts.clone(), |y| self.value(&lorentz::apply(&inv, y)))
    }

    /// Coordinates of nonzero samples having at least one zero neighbour.
    fn support_frontier(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let zero = Complex64::new(0.0, 0.0);
        let mut mi = [0usize; 4];
        let mut out = Vec::new();
        let strides: Vec<usize> = (0..d).map(|a| self.counts[a + 1..].iter().product()).collect();
        for (idx, v) in self.samples.iter().enumerate() {
            if *v == zero {
                continue;
            }
            self.multi_index(idx, &mut mi[..d]);
            let edge = (0..d).any(|a| {
                (mi[a] > 0 && self.samples[idx - strides[a]] == zero)
                    || (mi[a] + 1 < self.counts[a] && self.samples[idx + strides[a]] == zero)
            });
            if edge {
                out.push(self.point(idx));
            }
        }
        out
    }

    /// Causal relation between the supports of two grids.
    ///
    /// The interpolated support extends up to one cell beyond the nonzero
    /// samples, which shifts `|Δx⃗| − |Δt|` by at most √2 cell diagonals per
    /// grid; that is the classification margin.
    pub fn separation(&self, other: &Self) -> Separation {
        let a = self.support_frontier();
        let b = other.support_frontier();
        if a.is_empty() || b.is_empty() {
            return Separation::Spacelike;
        }
        let d = self.dim();
        let diag = |g: &Self| (0..d).map(|i| g.spacing(i).powi(2)).sum::<f64>().sqrt();
        let margin = std::f64::consts::SQRT_2 * (diag(self) + diag(other));
        let mut min_space = f64::INFINITY;
        let mut min_time = f64::INFINITY;
        let mut max_time_sign = f64::NEG_INFINITY;
        let mut min_time_sign = f64::INFINITY;
        for p in &a {
            for q in &b {
                let dt = q[0] - p[0];
                let dx = (1..d).map(|i| (q[i] - p[i]).powi(2)).sum::<f64>().sqrt();
                min_space = min_space.min(dx - dt.abs());
                min_time = min_time.min(dt.abs() - dx);
                max_time_sign = max_time_sign.max(dt);
                min_time_sign = min_time_sign.min(dt);
            }
        }
        if min_space > margin {
            Separation::Spacelike
        } else if min_time > margin && (min_time_sign > 0.0 || max_time_sign < 0.0) {
            Separation::Timelike
        } else {
            Separation::Lightlike
        }
    }

    /// Zero-padded discrete spectrum on the lattice `k_a = j·2π/(P·n_a·h_a)`.
    pub fn lattice(&self) -> Lattice {
        let d = self.dim();
        let padded: Vec<usize> = self.counts.iter().map(|n| n * PADDING).collect();
        let total: usize = padded.iter().product();
        let mut buf = vec![Complex64::new(0.0, 0.0); total];
        let mut mi = [0usize; 4];
        for (idx, v) in self.samples.iter().enumerate() {
            self.multi_index(idx, &mut mi[..d]);
            let mut flat = 0;
            for a in 0..d {
                flat = flat * padded[a] + mi[a];
            }
            buf[flat] = *v;
        }
        let mut planner = FftPlanner::<f64>::new();
        for a in 0..d {
            let n = padded[a];
            // e^{+ik₀t} on the time axis, e^{−ik·x} on spatial axes
            let fft = if a == 0 { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
            let stride: usize = padded[a + 1..].iter().product();
            let outer = total / (n * stride);
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for o in 0..outer {
                for s in 0..stride {
                    let start = o * n * stride + s;
                    for (j, l) in line.iter_mut().enumerate() {
                        *l = buf[start + j * stride];
                    }
                    fft.process(&mut line);
                    for (j, l) in line.iter().enumerate() {
                        buf[start + j * stride] = *l;
                    }
                }
            }
        }
        let spacing: Vec<f64> = (0..d).map(|a| 2.0 * PI / (padded[a] as f64 * self.spacing(a))).collect();
        let cell: f64 = (0..d).map(|a| self.spacing(a)).product();
        let mut k = vec![0.0; d];
        for (flat, v) in buf.iter_mut().enumerate() {
            let mut rem = flat;
            for a in (0..d).rev() {
                let j = rem % padded[a];
                rem /= padded[a];
                k[a] = lattice_frequency(j, padded[a]) * spacing[a];
            }
            let phase: f64 = (0..d).map(|a| lorentz::metric_sign(a) * k[a] * self.lower[a]).sum();
            *v *= Complex64::from_polar(cell, phase);
        }
        Lattice { counts: padded, spacing, values: buf }
    }
}

fn lattice_frequency(j: usize, n: usize) -> f64 {
    if j < n.div_ceil(2) {
        j as f64
    } else {
        j as f64 - n as f64
    }
}

/// Zero-padded discrete spectrum of a grid.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl Lattice {
    pub fn wave_vector(&self, flat: usize) -> Vec<f64> {
        let d = self.counts.len();
        let mut k = vec![0.0; d];
        let mut rem = flat;
        for a in (0..d).rev() {
            let j = rem % self.counts[a];
            rem /= self.counts[a];
            k[a] = lattice_frequency(j, self.counts[a]) * self.spacing[a];
        }
        k
    }

    /// Lattice value at `k` when `k` is a lattice point (to 1e−9 of a cell).
    pub fn lookup(&self, k: &[f64]) -> Option<Complex64> {
        let mut flat = 0;
        for a in 0..self.counts.len() {
            let s = k[a] / self.spacing[a];
            let j = s.round();
            if (s - j).abs() > 1e-9 {
                return None;
            }
            let n = self.counts[a] as i64;
            let j = j as i64;
            if j >= (n + 1) / 2 || j < -(n / 2) {
                return None;
            }
            flat = flat * self.counts[a] + j.rem_euclid(n) as usize;
        }
        Some(self.values[flat])
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Lazily built lattice attached to a grid spectrum.
#[derive(Debug, Clone)]
pub struct GridSpectrum {
    pub(crate) grid: GridBump,
    lattice: OnceLock<Arc<Lattice>>,
}

impl GridSpectrum {
    pub(crate) fn new(grid: GridBump) -> Self {
        Self { grid, lattice: OnceLock::new() }
    }

    pub fn lattice(&self) -> &Lattice {
        self.lattice.get_or_init(|| Arc::new(self.grid.lattice()))
    }

    /// Lattice value when `k` is on the lattice, else the exact trapezoid
    /// sum (the band-limited interpolant of the lattice).
    pub fn eval(&self, k: &[f64]) -> Complex64 {
        self.lattice().lookup(k).unwrap_or_else(|| self.grid.spectrum(k))
    }
}
