//! Monte Carlo presentation of the Gaussian random field: joint samples of
//! smeared values `φ_f` over a finite mode set, with covariance taken from
//! a shell kernel, and comparison against the operator-algebra moments.

use std::collections::HashSet;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::fock::FockContext;
use crate::shell::{self, KernelKind, PairingTable, ShellConfig};
use crate::testfn::TestFunction;

/// Draws per counter-derived substream.
pub const BLOCK: usize = 4096;
/// Relative eigenvalue floor below which a Gram matrix is rejected.
pub const PSD_TOLERANCE: f64 = 1e-10;
pub const MAX_EMPIRICAL_ORDER: usize = 8;
/// Jackknife group count (capped by the sample count).
pub const JACKKNIFE_GROUPS: usize = 64;
pub const GENERATOR: &str = "ChaCha20 (rand_chacha 0.9), stream = block index, 4096 draws per block, StandardNormal";

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSet {
    ids: Vec<String>,
    functions: Vec<TestFunction>,
}

impl ModeSet {
    pub fn new(modes: Vec<(String, TestFunction)>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidConfig("mode set is empty".into()));
        }
        let mut seen = HashSet::new();
        let dim = modes[0].1.dim();
        for (id, f) in &modes {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateMode(id.clone()));
            }
            if f.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
            }
        }
        let (ids, functions) = modes.into_iter().unzip();
        Ok(Self { ids, functions })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn functions(&self) -> &[TestFunction] {
        &self.functions
    }

    pub fn dim(&self) -> usize {
        self.functions[0].dim()
    }
}

/// A real linear functional of the field: `Σ coef · φ_{table[idx]}`.
type RealComponent = Vec<(Complex64, usize)>;

/// Pairings of a mode set under one kernel.
///
/// `matrix[i][j] = ip(f_i*, f_j) = E[φ_i φ_j]` and
/// `hermitian[i][j] = ip(f_i, f_j) = E[φ_i* φ_j]`; the two coincide for real
/// modes, where `matrix` is conjugate-symmetrized. Positivity is checked on
/// the Hermitian form. Sampling uses the real covariance of the real and
/// imaginary parts of every complex mode.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub kind: KernelKind,
    pub config: ShellConfig,
    pub matrix: DMatrix<Complex64>,
    pub hermitian: DMatrix<Complex64>,
    pub min_eigenvalue: f64,
    pub trace: f64,
    real_covariance: DMatrix<f64>,
    /// For each mode, the rows of `real_covariance` holding its real and
    /// (for complex modes) imaginary part.
    layout: Vec<(usize, Option<usize>)>,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.layout.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layout.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.layout.iter().all(|(_, im)| im.is_none())
    }

    pub fn real_covariance(&self) -> &DMatrix<f64> {
        &self.real_covariance
    }
}

fn min_eigenvalue_hermitian(m: &DMatrix<Complex64>) -> f64 {
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn gram(modes: &ModeSet, kind: KernelKind, cfg: &ShellConfig) -> Result<GramMatrix> {
    cfg.validate()?;
    let mut table_fns: Vec<TestFunction> = Vec::new();
    let mut idx = Vec::with_capacity(modes.len());
    for f in modes.functions() {
        let fc = f.conjugate();
        let a = table_fns.len();
        table_fns.push(f.clone());
        let b = if fc == *f {
            a
        } else {
            table_fns.push(fc);
            a + 1
        };
        idx.push((a, b));
    }
    let refs: Vec<&TestFunction> = table_fns.iter().collect();
    let table = PairingTable::new(&refs, kind, cfg)?;
    let t = table_fns.len();
    let mut p = DMatrix::from_element(t, t, ZERO);
    for a in 0..t {
        for b in 0..t {
            p[(a, b)] = table.ip(a, b);
        }
    }

    let m = modes.len();
    let hermitian = DMatrix::from_fn(m, m, |i, j| 0.5 * (p[(idx[i].0, idx[j].0)] + p[(idx[j].0, idx[i].0)].conj()));
    let real = |i: usize| idx[i].0 == idx[i].1;
    let matrix = DMatrix::from_fn(m, m, |i, j| {
        if real(i) && real(j) {
            hermitian[(i, j)]
        } else {
            p[(idx[i].1, idx[j].0)]
        }
    });
    let trace = (0..m).map(|i| hermitian[(i, i)].re).sum::<f64>();
    let min_eigenvalue = min_eigenvalue_hermitian(&hermitian);
    if !(min_eigenvalue >= -PSD_TOLERANCE * trace.abs()) {
        return Err(Error::NotPositiveSemiDefinite { min_eigenvalue, trace });
    }

    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    let mut comps: Vec<RealComponent> = Vec::new();
    let mut layout = Vec::with_capacity(m);
    for &(a, b) in &idx {
        if a == b {
            layout.push((comps.len(), None));
            comps.push(vec![(Complex64::new(1.0, 0.0), a)]);
        } else {
            layout.push((comps.len(), Some(comps.len() + 1)));
            comps.push(vec![(half, a), (half, b)]);
            comps.push(vec![(-half_i, a), (half_i, b)]);
        }
    }
    let pair = |x: &RealComponent, y: &RealComponent| {
        let mut s = ZERO;
        for (ca, a) in x {
            for (cb, b) in y {
                s += ca.conj() * cb * p[(*a, *b)];
            }
        }
        s.re
    };
    let r = comps.len();
    let raw = DMatrix::from_fn(r, r, |i, j| pair(&comps[i], &comps[j]));
    let real_covariance = DMatrix::from_fn(r, r, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]));

    Ok(GramMatrix { kind, config: cfg.clone(), matrix, hermitian, min_eigenvalue, trace, real_covariance, layout })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub kernel: KernelKind,
    pub config: ShellConfig,
    pub generator: String,
}

/// `n` joint draws of `(φ_1, …, φ_m)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub n: usize,
    pub seed: u64,
    pub modes: usize,
    pub draws: Vec<Complex64>,
    pub kernel: KernelKind,
    pub config: ShellConfig,
}

impl SampleBatch {
    pub fn draw(&self, sample: usize, mode: usize) -> Complex64 {
        self.draws[sample * self.modes + mode]
    }

    pub fn column(&self, mode: usize) -> Vec<Complex64> {
        (0..self.n).map(|s| self.draw(s, mode)).collect()
    }

    pub fn metadata(&self) -> BatchMetadata {
        BatchMetadata { kernel: self.kernel, config: self.config.clone(), generator: GENERATOR.into() }
    }

    /// Long-format CSV: `sample,mode-id,re,im`.
    pub fn write_csv<W: Write>(&self, ids: &[String], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sample", "mode-id", "re", "im"]).map_err(csv_err)?;
        for s in 0..self.n {
            for (i, id) in ids.iter().enumerate().take(self.modes) {
                let v = self.draw(s, i);
                w.write_record([s.to_string(), id.clone(), v.re.to_string(), v.im.to_string()]).map_err(csv_err)?;
            }
        }
        w.flush().map_err(|e| Error::InvalidConfig(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidConfig(format!("csv output failed: {e}"))
}

/// Symmetric square root factor `L` with `L Lᵀ = cov`, clipping small
/// negative eigenvalues.
fn factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let r = cov.nrows();
    if r == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let trace = cov.trace();
    let eig = cov.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min >= -PSD_TOLERANCE * trace.abs()) {
        return Err(Error::NotPositiveSemiDefinite { min_eigenvalue: min, trace });
    }
    let mut v = eig.eigenvectors;
    for (k, lam) in eig.eigenvalues.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        v.column_mut(k).scale_mut(s);
    }
    Ok(v)
}

/// Draws `n` samples of the mode vector with covariance `gm`, reproducible
/// bit for bit in `seed` regardless of thread count.
pub fn sample(gm: &GramMatrix, n: usize, seed: u64) -> Result<SampleBatch> {
    let l = factor(&gm.real_covariance)?;
    let r = l.nrows();
    let m = gm.len();
    let blocks = n.div_ceil(BLOCK);
    let chunks = exec::map_indexed(blocks, |b| {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BLOCK.min(n - b * BLOCK);
        let mut out = Vec::with_capacity(count * m);
        let mut z = vec![0.0; r];
        let mut x = vec![0.0; r];
        for _ in 0..count {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = (0..r).map(|k| l[(i, k)] * z[k]).sum();
            }
            for &(re, im) in &gm.layout {
                out.push(Complex64::new(x[re], im.map_or(0.0, |j| x[j])));
            }
        }
        out
    });
    Ok(SampleBatch {
        n,
        seed,
        modes: m,
        draws: chunks.concat(),
        kernel: gm.kind,
        config: gm.config.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: usize,
    pub value: Complex64,
    /// Grouped jackknife standard error of `value` (real and imaginary
    /// parts combined in quadrature).
    pub stderr: f64,
}

/// Sample moments `mean(φ_modeⁿ)` with jackknife errors.
pub fn empirical_moments(batch: &SampleBatch, mode: usize, orders: &[usize]) -> Result<Vec<MomentEstimate>> {
    if mode >= batch.modes {
        return Err(Error::InvalidConfig(format!("mode index {mode} out of range for {} modes", batch.modes)));
    }
    if let Some(&o) = orders.iter().find(|&&o| o > MAX_EMPIRICAL_ORDER) {
        return Err(Error::OrderTooLarge { order: o, limit: MAX_EMPIRICAL_ORDER });
    }
    if orders.is_empty() {
        return Ok(Vec::new());
    }
    if batch.n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 samples for moments, got {}", batch.n)));
    }
    let xs = batch.column(mode);
    let groups = JACKKNIFE_GROUPS.min(batch.n);
    Ok(orders
        .iter()
        .map(|&order| {
            let mut sums = vec![ZERO; groups];
            let mut counts = vec![0usize; groups];
            for (s, x) in xs.iter().enumerate() {
                let g = s * groups / batch.n;
                sums[g] += x.powu(order as u32);
                counts[g] += 1;
            }
            let total: Complex64 = sums.iter().sum();
            let value = total / batch.n as f64;
            let loo: Vec<Complex64> =
                (0..groups).map(|g| (total - sums[g]) / (batch.n - counts[g]) as f64).collect();
            let mean_loo: Complex64 = loo.iter().sum::<Complex64>() / groups as f64;
            let var = loo.iter().map(|v| (v - mean_loo).norm_sqr()).sum::<f64>() * (groups - 1) as f64 / groups as f64;
            MomentEstimate { order, value, stderr: var.sqrt() }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    #[serde(rename = "mode-id")]
    pub mode_id: String,
    pub order: usize,
    pub predicted: Complex64,
    pub empirical: Complex64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
    /// Standard error above half the predicted moment.
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTwoRow {
    #[serde(rename = "mode-id")]
    pub mode_id: String,
    pub quantum: Option<f64>,
    pub classical: Option<f64>,
    pub ratio: Option<f64>,
    pub pass: bool,
    pub note: Option<String>,
}

pub const FACTOR_TWO_TOLERANCE: f64 = 1e-6;
pub const Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub kernel: KernelKind,
    pub n: usize,
    pub seed: u64,
    pub generator: String,
    pub config: ShellConfig,
    pub rows: Vec<MomentRow>,
    pub factor_two: Vec<FactorTwoRow>,
}

fn z_score(predicted: Complex64, empirical: Complex64, stderr: f64) -> f64 {
    let d = (predicted - empirical).norm();
    if d == 0.0 {
        0.0
    } else {
        d / stderr
    }
}

fn factor_two_row(id: &str, f: &TestFunction, cfg: &ShellConfig) -> FactorTwoRow {
    let fail = |note: String| FactorTwoRow {
        mode_id: id.to_string(),
        quantum: None,
        classical: None,
        ratio: None,
        pass: false,
        note: Some(note),
    };
    let p = match f.positive_frequency_projection() {
        Ok(p) => p,
        Err(e) => return fail(e.to_string()),
    };
    let q = shell::quantum_ip(&p, &p, cfg);
    let c = shell::classical_ip(&p, &p, cfg);
    match (q, c) {
        (Ok(q), Ok(c)) => {
            let ratio = q.re / c.re;
            FactorTwoRow {
                mode_id: id.to_string(),
                quantum: Some(q.re),
                classical: Some(c.re),
                ratio: Some(ratio),
                pass: (ratio - 2.0).abs() <= FACTOR_TWO_TOLERANCE,
                note: None,
            }
        }
        (Err(e), _) | (_, Err(e)) => fail(e.to_string()),
    }
}

/// Classical-kernel operator moments against sampled moments, plus the
/// quantum/classical pairing ratio of each positive-frequency projection.
pub fn compare_to_fock(
    modes: &ModeSet,
    orders: &[usize],
    n: usize,
    seed: u64,
    cfg: &ShellConfig,
) -> Result<ComparisonReport> {
    let kernel = KernelKind::Classical;
    let mut rows = Vec::new();
    if !orders.is_empty() {
        let gm = gram(modes, kernel, cfg)?;
        let batch = sample(&gm, n, seed)?;
        let mut ctx = FockContext::new(kernel, cfg.clone())?;
        for (i, (id, f)) in modes.ids().iter().zip(modes.functions()).enumerate() {
            let l = ctx.register(id, f.clone())?;
            let est = empirical_moments(&batch, i, orders)?;
            for e in est {
                let predicted = ctx.field_moment(l, e.order)?;
                let z = z_score(predicted, e.value, e.stderr);
                rows.push(MomentRow {
                    mode_id: id.clone(),
                    order: e.order,
                    predicted,
                    empirical: e.value,
                    stderr: e.stderr,
                    z,
                    pass: z <= Z_LIMIT,
                    warning: predicted.norm() > 0.0 && e.stderr > 0.5 * predicted.norm(),
                });
            }
        }
    }
    let factor_two = modes.ids().iter().zip(modes.functions()).map(|(id, f)| factor_two_row(id, f, cfg)).collect();
    Ok(ComparisonReport { kernel, n, seed, generator: GENERATOR.into(), config: cfg.clone(), rows, factor_two })
}

pub const MOMENT_COLUMNS: [&str; 9] =
    ["mode-id", "order", "predicted", "empirical", "stderr", "z", "predicted-im", "empirical-im", "pass"];
pub const FACTOR_TWO_COLUMNS: [&str; 6] = ["mode-id", "quantum", "classical", "ratio", "pass", "note"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass) && self.factor_two.iter().all(|r| r.pass)
    }

    /// Moment table; `predicted` and `empirical` hold real parts, the
    /// imaginary parts follow in their own columns.
    pub fn write_moments_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(MOMENT_COLUMNS).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.mode_id.clone(),
                r.order.to_string(),
                r.predicted.re.to_string(),
                r.empirical.re.to_string(),
                r.stderr.to_string(),
                r.z.to_string(),
                r.predicted.im.to_string(),
                r.empirical.im.to_string(),
                r.pass.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn write_factor_two_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(FACTOR_TWO_COLUMNS).map_err(csv_err)?;
        for r in &self.factor_two {
            w.write_record([
                r.mode_id.clone(),
                opt(r.quantum),
                opt(r.classical),
                opt(r.ratio),
                r.pass.to_string(),
                r.note.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
