//! Mass-shell pairings.
//!
//! The `d`-dimensional integral against `2π δ(k² − m²)` is reduced to the
//! `(d−1)`-dimensional shell integral with weight `1/(2ω)`,
//! `ω = √(|k⃗|² + m²)`:
//!
//! ```text
//! quantum    (f, g)   = ħ ∫ dᵈ⁻¹k / ((2π)ᵈ⁻¹ 2ω) f̃(ω, k⃗)* g̃(ω, k⃗)
//! classical  (f, g)_C = ½ Σ_{s=±} ħ ∫ dᵈ⁻¹k / ((2π)ᵈ⁻¹ 2ω) f̃(sω, k⃗)* g̃(sω, k⃗)
//! ```
//!
//! The integral runs over a tensor node set on a symmetric box in k⃗-space.
//! The box and node counts are derived from the whole set of functions taking
//! part in a computation and are invariant under conjugating any of them, so
//! Hermiticity and the two-shell identities hold exactly at the node level.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::lorentz::{self, metric_sign};
use crate::quadrature::{self, Rule};
use crate::testfn::{Body, FrequencySign, GridBump, TestFunction};

/// Largest admissible ratio of on-shell spectrum at the box boundary to its peak.
pub const TAIL_TOLERANCE: f64 = 1e-4;
pub const MIN_NODES: usize = 16;

const SCAN_TOLERANCE: f64 = 1e-6;
const NYQUIST_FRACTION: f64 = 0.75;
const PACKET_SIGMAS: f64 = 9.0;
const EXTENT_SIGMAS: f64 = 6.0;
const MAX_TOTAL_NODES: usize = 1 << 24;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default)]
    pub rule: Rule,
    /// Nodes per k⃗ axis; derived from the functions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    /// Half-width of the k⃗ box; derived from the functions when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShellConfig {
    pub mass: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    pub dimension: usize,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

impl ShellConfig {
    pub fn new(mass: f64, dimension: usize) -> Result<Self> {
        let cfg = Self { mass, hbar: 1.0, dimension, quadrature: QuadratureConfig::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    pub fn with_quadrature(mut self, quadrature: QuadratureConfig) -> Result<Self> {
        self.quadrature = quadrature;
        self.validate()?;
        Ok(self)
    }

    pub fn with_nodes(self, nodes: usize) -> Result<Self> {
        let q = QuadratureConfig { nodes: Some(nodes), ..self.quadrature.clone() };
        self.with_quadrature(q)
    }

    pub fn with_cutoff(self, cutoff: f64) -> Result<Self> {
        let q = QuadratureConfig { cutoff: Some(cutoff), ..self.quadrature.clone() };
        self.with_quadrature(q)
    }

    pub fn with_rule(self, rule: Rule) -> Result<Self> {
        let q = QuadratureConfig { rule, ..self.quadrature.clone() };
        self.with_quadrature(q)
    }

    pub fn validate(&self) -> Result<()> {
        lorentz::check_dim(self.dimension)?;
        if !(self.mass.is_finite() && self.mass >= 0.0) {
            return Err(Error::InvalidConfig(format!("mass must be finite and non-negative, got {}", self.mass)));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::InvalidConfig(format!("hbar must be positive, got {}", self.hbar)));
        }
        if self.mass == 0.0 && self.dimension == 2 {
            return Err(Error::InvalidConfig(
                "massless shell pairings in 1+1 dimensions diverge logarithmically at k = 0".into(),
            ));
        }
        if let Some(n) = self.quadrature.nodes {
            if n < MIN_NODES {
                return Err(Error::InvalidConfig(format!("need at least {MIN_NODES} nodes per axis, got {n}")));
            }
        }
        if let Some(k) = self.quadrature.cutoff {
            if !(k.is_finite() && k > 4.0 * self.mass) {
                return Err(Error::InvalidConfig(format!("cutoff {k} must exceed 4·mass = {}", 4.0 * self.mass)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Quantum,
    Classical,
    #[serde(rename = "em_quantum")]
    EMQuantum,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Quantum => "quantum",
            KernelKind::Classical => "classical",
            KernelKind::EMQuantum => "em_quantum",
        }
    }

    fn shells(self) -> &'static [FrequencySign] {
        match self {
            KernelKind::Quantum | KernelKind::EMQuantum => &[FrequencySign::Positive],
            KernelKind::Classical => &[FrequencySign::Positive, FrequencySign::Negative],
        }
    }

    fn scalar(self) -> Result<()> {
        match self {
            KernelKind::EMQuantum => Err(Error::KernelUnsupported {
                kernel: self.name(),
                reason: "the EM kernel pairs bivector test functions".into(),
            }),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub half_width: f64,
    pub nodes: usize,
}

/// Tensor node set on the positive shell; the negative shell uses the same
/// k⃗ nodes with `k₀ = −ω`.
#[derive(Debug, Clone)]
pub struct Shell {
    dim: usize,
    rule: Rule,
    mass: f64,
    hbar: f64,
    axes: Vec<Axis>,
    spatial: Vec<f64>,
    omega: Vec<f64>,
    weight: Vec<f64>,
    outer: Vec<bool>,
}

impl Shell {
    /// Node set adapted to `fns` (see module docs), honouring explicit
    /// cutoff and node counts in `cfg`.
    pub fn build(cfg: &ShellConfig, fns: &[&TestFunction]) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.dimension;
        for f in fns {
            if f.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: f.dim() });
            }
        }
        if let Some(k) = cfg.quadrature.cutoff {
            let required = fns
                .iter()
                .flat_map(|f| f.packet_terms())
                .flat_map(|t| (1..d).map(move |a| t.carrier()[a].abs() + 6.0 * t.spectral_width(a)))
                .fold(0.0, f64::max);
            if k <= required {
                return Err(Error::InvalidConfig(format!(
                    "cutoff {k} must exceed carrier + 6 spectral widths = {required:.4}"
                )));
            }
        }
        let time_span = span(fns, 0);
        let mut axes = Vec::with_capacity(d - 1);
        for a in 1..d {
            let half_width = match cfg.quadrature.cutoff {
                Some(k) => k,
                None => fns.iter().map(|f| auto_half_width(f, a, cfg.mass)).fold(0.0, f64::max).max(1e-3),
            };
            let nodes = match cfg.quadrature.nodes {
                Some(n) => n,
                None => {
                    let base = if d == 2 { 64.0 } else { 32.0 };
                    let mut n = (0.6 * half_width * (span(fns, a) + time_span) + base).ceil() as usize;
                    n = n.max(MIN_NODES);
                    if cfg.mass == 0.0 && n % 2 == 1 {
                        n += 1;
                    }
                    n
                }
            };
            axes.push(Axis { half_width, nodes });
        }
        Self::from_axes(cfg, axes)
    }

    pub fn from_axes(cfg: &ShellConfig, axes: Vec<Axis>) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.dimension;
        if axes.len() != d - 1 {
            return Err(Error::DimensionMismatch { expected: d - 1, found: axes.len() });
        }
        let total = axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.nodes)).unwrap_or(usize::MAX);
        if total > MAX_TOTAL_NODES {
            return Err(Error::InvalidConfig(format!(
                "quadrature would need {total} nodes; set quadrature.nodes or quadrature.cutoff explicitly"
            )));
        }
        let rules: Vec<(Vec<f64>, Vec<f64>)> = axes.iter().map(|a| quadrature::nodes(cfg.quadrature.rule, a.nodes, a.half_width)).collect();
        let norm = cfg.hbar / (2.0 * PI).powi(d as i32 - 1);
        let mut spatial = Vec::with_capacity(total * (d - 1));
        let mut omega = Vec::with_capacity(total);
        let mut weight = Vec::with_capacity(total);
        let mut outer = Vec::with_capacity(total);
        let mut idx = vec![0usize; d - 1];
        for _ in 0..total {
            let mut w = norm;
            let mut k2 = cfg.mass * cfg.mass;
            let mut edge = false;
            for (a, &i) in idx.iter().enumerate() {
                let k = rules[a].0[i];
                spatial.push(k);
                w *= rules[a].1[i];
                k2 += k * k;
                edge |= i == 0 || i + 1 == axes[a].nodes;
            }
            let om = k2.sqrt();
            omega.push(om);
            weight.push(w / (2.0 * om));
            outer.push(edge);
            for a in (0..d - 1).rev() {
                idx[a] += 1;
                if idx[a] < axes[a].nodes {
                    break;
                }
                idx[a] = 0;
            }
        }
        Ok(Self { dim: d, rule: cfg.quadrature.rule, mass: cfg.mass, hbar: cfg.hbar, axes, spatial, omega, weight, outer })
    }

    /// Same box with half the nodes per axis, for error estimates.
    pub fn coarse(&self) -> Self {
        let axes = self
            .axes
            .iter()
            .map(|a| {
                let mut n = (a.nodes / 2).max(4);
                if self.mass == 0.0 && n % 2 == 1 {
                    n += 1;
                }
                Axis { half_width: a.half_width, nodes: n }
            })
            .collect();
        let cfg = ShellConfig {
            mass: self.mass,
            hbar: self.hbar,
            dimension: self.dim,
            quadrature: QuadratureConfig { rule: self.rule, nodes: None, cutoff: None },
        };
        Self::from_axes(&cfg, axes).expect("coarsening a valid node set")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `(sω, k⃗)` at node `j`.
    pub fn wave_vector(&self, j: usize, sign: FrequencySign) -> Vec<f64> {
        let mut k = Vec::with_capacity(self.dim);
        self.fill_wave_vector(j, sign, &mut k);
        k
    }

    fn fill_wave_vector(&self, j: usize, sign: FrequencySign, k: &mut Vec<f64>) {
        k.clear();
        let s = match sign {
            FrequencySign::Positive => 1.0,
            FrequencySign::Negative => -1.0,
        };
        k.push(s * self.omega[j]);
        k.extend_from_slice(&self.spatial[j * (self.dim - 1)..(j + 1) * (self.dim - 1)]);
    }

    /// Measure weight `ħ w / ((2π)ᵈ⁻¹ 2ω)` of node `j`.
    pub fn weight(&self, j: usize) -> f64 {
        self.weight[j]
    }

    pub fn sample(&self, f: &TestFunction, sign: FrequencySign) -> Vec<Complex64> {
        exec::map_indexed(self.len(), |j| {
            let mut k = Vec::with_capacity(self.dim);
            self.fill_wave_vector(j, sign, &mut k);
            f.spectrum(&k)
        })
    }

    /// `Σ_j w_j a_j* b_j`
    pub fn integrate(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        exec::sum_complex(self.len(), |j| (a[j].conj() * b[j]) * self.weight[j])
    }

    /// `Σ_j w_j density(j)`
    pub fn integrate_density<F: Fn(usize) -> Complex64 + Sync + Send>(&self, density: F) -> Complex64 {
        exec::sum_complex(self.len(), |j| density(j) * self.weight[j])
    }

    /// Largest boundary-layer magnitude relative to the peak over the given
    /// sample vectors of one function.
    pub fn tail_ratio(&self, samples: &[&[Complex64]]) -> f64 {
        let mut peak: f64 = 0.0;
        let mut tail: f64 = 0.0;
        for s in samples {
            for (j, v) in s.iter().enumerate() {
                let m = v.norm();
                peak = peak.max(m);
                if self.outer[j] {
                    tail = tail.max(m);
                }
            }
        }
        if peak > 0.0 {
            tail / peak
        } else {
            0.0
        }
    }

    fn check_tail(&self, samples: &[&[Complex64]]) -> Result<()> {
        let ratio = self.tail_ratio(samples);
        if ratio > TAIL_TOLERANCE {
            return Err(Error::CutoffTooSmall { ratio, limit: TAIL_TOLERANCE });
        }
        Ok(())
    }

    /// Samples of `f` on the shells used by `kind`, after the tail check.
    pub fn sample_kernel(&self, f: &TestFunction, kind: KernelKind) -> Result<ShellSamples> {
        let values: Vec<Vec<Complex64>> = kind.shells().iter().map(|s| self.sample(f, *s)).collect();
        let refs: Vec<&[Complex64]> = values.iter().map(|v| v.as_slice()).collect();
        self.check_tail(&refs)?;
        Ok(ShellSamples { values })
    }

    /// Pairing of two sampled functions under `kind`.
    pub fn pair(&self, kind: KernelKind, a: &ShellSamples, b: &ShellSamples) -> Complex64 {
        match kind {
            KernelKind::Classical => (self.integrate(&a.values[0], &b.values[0]) + self.integrate(&a.values[1], &b.values[1])) * 0.5,
            _ => self.integrate(&a.values[0], &b.values[0]),
        }
    }
}

/// On-shell samples of one function: one vector per shell used by the kernel.
#[derive(Debug, Clone)]
pub struct ShellSamples {
    values: Vec<Vec<Complex64>>,
}

impl ShellSamples {
    pub fn shell(&self, i: usize) -> &[Complex64] {
        &self.values[i]
    }
}

/// Union of the position-space extents of `fns` along `axis`.
fn span(fns: &[&TestFunction], axis: usize) -> f64 {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for f in fns {
        for p in f.parts() {
            match &p.body {
                Body::Packets(terms) => {
                    for t in terms {
                        let w = EXTENT_SIGMAS * t.position_width(axis);
                        lo = lo.min(t.center()[axis] - w);
                        hi = hi.max(t.center()[axis] + w);
                    }
                }
                Body::Grid(g) => {
                    lo = lo.min(g.lower()[axis]);
                    hi = hi.max(g.upper()[axis]);
                }
            }
        }
    }
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

fn auto_half_width(f: &TestFunction, axis: usize, mass: f64) -> f64 {
    let mut k: f64 = 0.0;
    for p in f.parts() {
        match &p.body {
            Body::Packets(terms) => {
                for t in terms {
                    k = k.max(t.carrier()[axis].abs() + PACKET_SIGMAS * t.spectral_width(axis));
                }
            }
            Body::Grid(g) => k = k.max(grid_half_width(g, axis, mass)),
        }
    }
    k
}

/// Scans the on-shell spectrum of a grid along `axis` (both directions, both
/// shells) and returns where it falls below the scan tolerance, capped below
/// the grid's Nyquist frequency.
fn grid_half_width(g: &GridBump, axis: usize, mass: f64) -> f64 {
    let d = g.dim();
    let cap = NYQUIST_FRACTION * g.nyquist(axis);
    let extent = (0..d).map(|a| g.upper()[a] - g.lower()[a]).fold(0.0, f64::max);
    let step = PI / (4.0 * extent);
    let n = (cap / step).ceil() as usize;
    let mags = exec::map_indexed(n + 1, |j| {
        let kk = (j as f64 * step).min(cap);
        let om = (kk * kk + mass * mass).sqrt();
        let mut best: f64 = 0.0;
        let mut k = vec![0.0; d];
        for s0 in [1.0, -1.0] {
            for s1 in [1.0, -1.0] {
                k[0] = s0 * om;
                k[axis] = s1 * kk;
                best = best.max(g.spectrum(&k).norm());
            }
        }
        best
    });
    let peak = mags.iter().copied().fold(0.0, f64::max);
    let last = mags.iter().rposition(|&m| m > SCAN_TOLERANCE * peak).unwrap_or(0);
    ((last + 1) as f64 * step).clamp(4.0 * step, cap)
}

/// A pairing value with an error estimate `|I_N − I_{N/2}|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub value: Complex64,
    pub est_error: f64,
}

fn pair_on(shell: &Shell, f: &TestFunction, g: &TestFunction, kind: KernelKind) -> Result<Complex64> {
    let a = shell.sample_kernel(f, kind)?;
    let b = if std::ptr::eq(f, g) { a.clone() } else { shell.sample_kernel(g, kind)? };
    Ok(shell.pair(kind, &a, &b))
}

/// Pairing of scalar test functions under the quantum or classical kernel.
pub fn ip(f: &TestFunction, g: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<Complex64> {
    kind.scalar()?;
    let shell = Shell::build(cfg, &[f, g])?;
    pair_on(&shell, f, g, kind)
}

/// Like [`ip`], with the quadrature error estimate.
pub fn pairing(f: &TestFunction, g: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<Pairing> {
    kind.scalar()?;
    let shell = Shell::build(cfg, &[f, g])?;
    let value = pair_on(&shell, f, g, kind)?;
    let coarse = shell.coarse();
    let a = coarse.sample_kernel(f, kind).unwrap_or_else(|_| ShellSamples {
        values: kind.shells().iter().map(|s| coarse.sample(f, *s)).collect(),
    });
    let b = coarse.sample_kernel(g, kind).unwrap_or_else(|_| ShellSamples {
        values: kind.shells().iter().map(|s| coarse.sample(g, *s)).collect(),
    });
    let est_error = (value - coarse.pair(kind, &a, &b)).norm();
    Ok(Pairing { value, est_error })
}

pub fn quantum_ip(f: &TestFunction, g: &TestFunction, cfg: &ShellConfig) -> Result<Complex64> {
    ip(f, g, KernelKind::Quantum, cfg)
}

pub fn classical_ip(f: &TestFunction, g: &TestFunction, cfg: &ShellConfig) -> Result<Complex64> {
    ip(f, g, KernelKind::Classical, cfg)
}

/// Scalar value of `[φ̂_f, φ̂_g] = ip(g*, f) − ip(f*, g)`.
pub fn commutator_kernel(f: &TestFunction, g: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<Complex64> {
    kind.scalar()?;
    let fc = f.conjugate();
    let gc = g.conjugate();
    let shell = Shell::build(cfg, &[f, g])?;
    Ok(pair_on(&shell, &gc, f, kind)? - pair_on(&shell, &fc, g, kind)?)
}

/// Pairings among a fixed list of functions on one common node set.
#[derive(Debug, Clone)]
pub struct PairingTable {
    kind: KernelKind,
    shell: Shell,
    samples: Vec<ShellSamples>,
}

impl PairingTable {
    pub fn new(fns: &[&TestFunction], kind: KernelKind, cfg: &ShellConfig) -> Result<Self> {
        kind.scalar()?;
        let shell = Shell::build(cfg, fns)?;
        let samples = fns.iter().map(|f| shell.sample_kernel(f, kind)).collect::<Result<_>>()?;
        Ok(Self { kind, shell, samples })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn shell(&self) -> &Shell {
        &self.shell
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `ip(fᵢ, fⱼ)`
    pub fn ip(&self, i: usize, j: usize) -> Complex64 {
        self.shell.pair(self.kind, &self.samples[i], &self.samples[j])
    }
}

/// Antisymmetric array of test functions `f_{μν}` (lower indices), stored
/// once per pair `μ < ν`; absent components are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BivectorTestFunction {
    dim: usize,
    upper_triangle: Vec<Option<TestFunction>>,
}

fn pair_index(dim: usize, mu: usize, nu: usize) -> usize {
    debug_assert!(mu < nu && nu < dim);
    mu * dim - mu * (mu + 1) / 2 + (nu - mu - 1)
}

impl BivectorTestFunction {
    pub fn zero(dim: usize) -> Result<Self> {
        lorentz::check_dim(dim)?;
        Ok(Self { dim, upper_triangle: vec![None; dim * (dim - 1) / 2] })
    }

    /// Sets `f_{μν} = f` (and so `f_{νμ} = −f`).
    pub fn with_component(mut self, mu: usize, nu: usize, f: TestFunction) -> Result<Self> {
        if mu >= self.dim || nu >= self.dim {
            return Err(Error::AxisOutOfRange { axis: mu.max(nu), dim: self.dim });
        }
        if mu == nu {
            return Err(Error::InvalidTestFunction("diagonal bivector components vanish identically".into()));
        }
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.dim() });
        }
        let (i, f) = if mu < nu { (pair_index(self.dim, mu, nu), f) } else { (pair_index(self.dim, nu, mu), f.scale(Complex64::new(-1.0, 0.0))) };
        self.upper_triangle[i] = Some(f);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `f_{μν}` for `μ < ν`; use [`Self::spectrum_matrix`] for signed access.
    pub fn component(&self, mu: usize, nu: usize) -> Option<&TestFunction> {
        if mu < nu && nu < self.dim {
            self.upper_triangle[pair_index(self.dim, mu, nu)].as_ref()
        } else {
            None
        }
    }

    pub fn components(&self) -> impl Iterator<Item = ((usize, usize), &TestFunction)> {
        let d = self.dim;
        (0..d).flat_map(move |mu| (mu + 1..d).map(move |nu| (mu, nu))).filter_map(move |(mu, nu)| {
            self.upper_triangle[pair_index(d, mu, nu)].as_ref().map(|f| ((mu, nu), f))
        })
    }

    /// `f̃_{μν}(k)` as a full antisymmetric matrix.
    pub fn spectrum_matrix(&self, k: &[f64]) -> [[Complex64; 4]; 4] {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for ((mu, nu), f) in self.components() {
            let v = f.spectrum(k);
            m[mu][nu] = v;
            m[nu][mu] = -v;
        }
        m
    }

    pub fn conjugate(&self) -> Self {
        Self { dim: self.dim, upper_triangle: self.upper_triangle.iter().map(|f| f.as_ref().map(|f| f.conjugate())).collect() }
    }
}

/// EM integrand at one wave vector: `−Σ_β η^{ββ} A_β(f)* A_β(g)` with
/// `A_β = k^μ f̃_{μβ}`, the contraction `f̃_{μβ}* k^μ k^ν g̃_ν{}^β` signed so
/// that the diagonal is non-negative on the massless shell.
pub fn em_density(k: &[f64], f: &[[Complex64; 4]; 4], g: &[[Complex64; 4]; 4]) -> Complex64 {
    let d = k.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for beta in 0..d {
        let mut af = Complex64::new(0.0, 0.0);
        let mut ag = Complex64::new(0.0, 0.0);
        for mu in 0..d {
            af += f[mu][beta] * k[mu];
            ag += g[mu][beta] * k[mu];
        }
        acc -= af.conj() * ag * metric_sign(beta);
    }
    acc
}

fn em_check(f: &BivectorTestFunction, g: &BivectorTestFunction, cfg: &ShellConfig) -> Result<()> {
    cfg.validate()?;
    let unsupported = |reason: String| Error::KernelUnsupported { kernel: KernelKind::EMQuantum.name(), reason };
    if cfg.dimension != 4 {
        return Err(unsupported(format!("needs 3+1 dimensions, configured {}", cfg.dimension)));
    }
    if cfg.mass != 0.0 {
        return Err(unsupported(format!("needs a massless shell, configured mass {}", cfg.mass)));
    }
    for b in [f, g] {
        if b.dim() != 4 {
            return Err(Error::DimensionMismatch { expected: 4, found: b.dim() });
        }
    }
    Ok(())
}

fn em_on(shell: &Shell, f: &BivectorTestFunction, g: &BivectorTestFunction) -> Result<Complex64> {
    let sample = |b: &BivectorTestFunction| -> Result<Vec<((usize, usize), Vec<Complex64>)>> {
        let mut out = Vec::new();
        for (idx, c) in b.components() {
            let v = shell.sample(c, FrequencySign::Positive);
            shell.check_tail(&[&v])?;
            out.push((idx, v));
        }
        Ok(out)
    };
    let fs = sample(f)?;
    let gs = if std::ptr::eq(f, g) { fs.clone() } else { sample(g)? };
    let matrix = |s: &[((usize, usize), Vec<Complex64>)], j: usize| {
        let mut m = [[Complex64::new(0.0, 0.0); 4]; 4];
        for ((mu, nu), v) in s {
            m[*mu][*nu] = v[j];
            m[*nu][*mu] = -v[j];
        }
        m
    };
    Ok(shell.integrate_density(|j| {
        let k = shell.wave_vector(j, FrequencySign::Positive);
        em_density(&k, &matrix(&fs, j), &matrix(&gs, j))
    }))
}

fn em_shell(f: &BivectorTestFunction, g: &BivectorTestFunction, cfg: &ShellConfig) -> Result<Shell> {
    let fns: Vec<&TestFunction> = f.components().chain(g.components()).map(|(_, c)| c).collect();
    if fns.is_empty() {
        return Shell::from_axes(cfg, vec![Axis { half_width: 1.0, nodes: MIN_NODES }; 3]);
    }
    Shell::build(cfg, &fns)
}

/// `ħ ∫ d³k/((2π)³ 2|k⃗|) (−Σ_β η^{ββ} A_β(f)* A_β(g))` on the positive massless shell.
pub fn em_ip(f: &BivectorTestFunction, g: &BivectorTestFunction, cfg: &ShellConfig) -> Result<Complex64> {
    em_check(f, g, cfg)?;
    em_on(&em_shell(f, g, cfg)?, f, g)
}

pub fn em_pairing(f: &BivectorTestFunction, g: &BivectorTestFunction, cfg: &ShellConfig) -> Result<Pairing> {
    em_check(f, g, cfg)?;
    let shell = em_shell(f, g, cfg)?;
    let value = em_on(&shell, f, g)?;
    let coarse = shell.coarse();
    let rough = em_on(&coarse, f, g).unwrap_or(value);
    Ok(Pairing { value, est_error: (value - rough).norm() })
}

#[cfg(test)]
mod tests;
