//! Experiment configuration: one JSON document per run.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;
use shellfield::shell::{self, BivectorTestFunction, KernelKind, ShellConfig};
use shellfield::testfn::{GridBump, TestFunction};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub shell: ShellConfig,
    #[serde(default)]
    pub modes: Vec<ModeSpec>,
    #[serde(default)]
    pub bivector_modes: Vec<BivectorSpec>,
    /// Shell used for the EM pairings (d = 4, m = 0).
    pub em_shell: Option<ShellConfig>,
    #[serde(default)]
    pub ip: IpParams,
    #[serde(default)]
    pub commutator_scan: ScanParams,
    #[serde(default)]
    pub symmetry: SymmetryParams,
    #[serde(default)]
    pub moments: MomentsParams,
    #[serde(default)]
    pub resonance: ResonanceParams,
    #[serde(default)]
    pub factor2: Factor2Params,
    pub output: Option<OutputSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Exactly one source per mode.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub id: String,
    /// Full test-function JSON tree.
    pub inline: Option<serde_json::Value>,
    /// Path to a test-function JSON file, relative to the config file.
    pub file: Option<PathBuf>,
    pub packet: Option<PacketSpec>,
    pub bump: Option<BumpSpec>,
    /// `mode` minus its projections onto `against` under `kernel`.
    pub orthogonalize: Option<OrthogonalizeSpec>,
    /// Positive-frequency projection of another mode.
    pub project: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    #[serde(default = "unit")]
    pub amplitude: Complex64,
    pub center: Vec<f64>,
    pub widths: Vec<f64>,
    pub carrier: Option<Vec<f64>>,
}

fn unit() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    /// Linear modulation `1 + Σ tilt_μ (x − c)^μ / r`.
    #[serde(default)]
    pub tilt: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_points() -> usize {
    121
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthogonalizeSpec {
    pub mode: String,
    pub against: Vec<String>,
    #[serde(default = "classical")]
    pub kernel: KernelKind,
}

fn classical() -> KernelKind {
    KernelKind::Classical
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BivectorSpec {
    pub id: String,
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub mu: usize,
    pub nu: usize,
    /// Id of a scalar mode.
    pub mode: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthogonalPair {
    pub pair: [String; 2],
    #[serde(default = "classical")]
    pub kernel: KernelKind,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IpParams {
    pub orthogonal_pairs: Vec<OrthogonalPair>,
    /// Relative to `√(ip(a,a) ip(b,b))`.
    pub orthogonal_tolerance: f64,
    /// Real diagonal `|quantum − classical| / quantum`.
    pub diagonal_tolerance: f64,
}

impl Default for IpParams {
    fn default() -> Self {
        Self { orthogonal_pairs: Vec::new(), orthogonal_tolerance: 1e-10, diagonal_tolerance: 1e-10 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanParams {
    pub f: Option<String>,
    pub g: Option<String>,
    pub offsets: Vec<Vec<f64>>,
    /// Absolute bound on the classical commutator.
    pub classical_tolerance: f64,
    /// Spacelike quantum commutator relative to the largest timelike one.
    pub microcausality_ratio: f64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self { f: None, g: None, offsets: Vec::new(), classical_tolerance: 1e-12, microcausality_ratio: 1e-6 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetryParams {
    pub f: Option<String>,
    pub g: Option<String>,
    pub translation: Vec<f64>,
    pub rapidity: f64,
    pub axis: usize,
    /// Mode whose quantum self-pairing must change under time reversal.
    pub witness: Option<String>,
    pub invariance_tolerance: f64,
    pub time_reversal_tolerance: f64,
    pub witness_min_change: f64,
    pub two_shell_tolerance: f64,
}

impl Default for SymmetryParams {
    fn default() -> Self {
        Self {
            f: None,
            g: None,
            translation: Vec::new(),
            rapidity: 0.5,
            axis: 1,
            witness: None,
            invariance_tolerance: 1e-8,
            time_reversal_tolerance: 1e-10,
            witness_min_change: 0.5,
            two_shell_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    #[serde(default = "default_samples")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mc_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "z_limit")]
    pub z_limit: f64,
}

fn default_samples() -> usize {
    100_000
}

fn default_mc_orders() -> Vec<usize> {
    vec![1, 2, 3, 4, 6]
}

fn z_limit() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentsParams {
    /// Modes to evaluate; all modes when empty.
    pub modes: Vec<String>,
    pub max_k: usize,
    pub kernels: Vec<KernelKind>,
    pub relative_tolerance: f64,
    pub odd_tolerance: f64,
    pub monte_carlo: Option<MonteCarloSpec>,
}

impl Default for MomentsParams {
    fn default() -> Self {
        Self {
            modes: Vec::new(),
            max_k: 5,
            kernels: vec![KernelKind::Quantum, KernelKind::Classical],
            relative_tolerance: 1e-10,
            odd_tolerance: 1e-12,
            monte_carlo: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceParams {
    /// `(detector, state)`; a state of `"vacuum"` means `|0⟩`.
    pub pairs: Vec<[String; 2]>,
    pub kernels: Vec<KernelKind>,
    pub witness_pairs: Vec<[String; 2]>,
    pub probability_slack: f64,
}

impl Default for ResonanceParams {
    fn default() -> Self {
        Self {
            pairs: Vec::new(),
            kernels: vec![KernelKind::Quantum, KernelKind::Classical],
            witness_pairs: Vec::new(),
            probability_slack: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Factor2Params {
    /// All ordered pairs `i ≤ j` when empty.
    pub pairs: Vec<[String; 2]>,
    pub tolerance: f64,
    /// Adds unprojected control rows, which carry no threshold.
    pub control: bool,
}

impl Default for Factor2Params {
    fn default() -> Self {
        Self { pairs: Vec::new(), tolerance: 1e-6, control: true }
    }
}

/// Config plus resolved test functions.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub ids: Vec<String>,
    pub functions: Vec<TestFunction>,
    pub bivectors: Vec<(String, BivectorTestFunction)>,
    index: HashMap<String, usize>,
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_config(config, &base)
    }

    pub fn from_config(config: ExperimentConfig, base: &Path) -> Result<Self> {
        ensure!(
            config.version == CONFIG_VERSION,
            "unsupported config version {} (expected {CONFIG_VERSION})",
            config.version
        );
        config.shell.validate().context("invalid shell settings")?;
        if let Some(em) = &config.em_shell {
            em.validate().context("invalid em_shell settings")?;
        }
        let mut exp = Self { config, ids: Vec::new(), functions: Vec::new(), bivectors: Vec::new(), index: HashMap::new() };
        let specs = exp.config.modes.clone();
        for spec in &specs {
            let f = exp.resolve(spec, base).with_context(|| format!("mode '{}'", spec.id))?;
            ensure!(
                f.dim() == exp.config.shell.dimension,
                "mode '{}' has dimension {} but the shell has dimension {}",
                spec.id,
                f.dim(),
                exp.config.shell.dimension
            );
            ensure!(!exp.index.contains_key(&spec.id), "duplicate mode id '{}'", spec.id);
            exp.index.insert(spec.id.clone(), exp.ids.len());
            exp.ids.push(spec.id.clone());
            exp.functions.push(f);
        }
        let bivector_specs = exp.config.bivector_modes.clone();
        for spec in &bivector_specs {
            let b = exp.resolve_bivector(spec).with_context(|| format!("bivector mode '{}'", spec.id))?;
            exp.bivectors.push((spec.id.clone(), b));
        }
        Ok(exp)
    }

    pub fn mode(&self, id: &str) -> Result<&TestFunction> {
        match self.index.get(id) {
            Some(&i) => Ok(&self.functions[i]),
            None => bail!("unknown mode id '{id}'"),
        }
    }

    pub fn shell(&self) -> &ShellConfig {
        &self.config.shell
    }

    fn resolve(&self, spec: &ModeSpec, base: &Path) -> Result<TestFunction> {
        let given = [
            spec.inline.is_some(),
            spec.file.is_some(),
            spec.packet.is_some(),
            spec.bump.is_some(),
            spec.orthogonalize.is_some(),
            spec.project.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        ensure!(given == 1, "give exactly one of inline, file, packet, bump, orthogonalize, project (got {given})");
        if let Some(v) = &spec.inline {
            return Ok(serde_json::from_value(v.clone())?);
        }
        if let Some(p) = &spec.file {
            let path = base.join(p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            return Ok(TestFunction::from_json(&text)?);
        }
        if let Some(p) = &spec.packet {
            let carrier = p.carrier.clone().unwrap_or_else(|| vec![0.0; p.center.len()]);
            return Ok(TestFunction::gaussian(p.amplitude, &p.center, &p.widths, &carrier)?);
        }
        if let Some(b) = &spec.bump {
            return Ok(TestFunction::grid(GridBump::modulated_bump(&b.center, b.radius, b.points, &b.tilt)?));
        }
        if let Some(o) = &spec.orthogonalize {
            return self.orthogonalize(o);
        }
        let source = spec.project.as_deref().unwrap_or_default();
        Ok(self.mode(source)?.positive_frequency_projection()?)
    }

    /// Gram–Schmidt of `mode` against `against`, in order.
    fn orthogonalize(&self, o: &OrthogonalizeSpec) -> Result<TestFunction> {
        let cfg = self.shell();
        let mut basis: Vec<TestFunction> = Vec::new();
        for id in &o.against {
            let mut v = self.mode(id)?.clone();
            for b in &basis {
                v = remove_component(&v, b, o.kernel, cfg)?;
            }
            basis.push(v);
        }
        let mut out = self.mode(&o.mode)?.clone();
        for b in &basis {
            out = remove_component(&out, b, o.kernel, cfg)?;
        }
        Ok(out)
    }

    fn resolve_bivector(&self, spec: &BivectorSpec) -> Result<BivectorTestFunction> {
        let mut b = BivectorTestFunction::zero(self.shell().dimension)?;
        for c in &spec.components {
            b = b.with_component(c.mu, c.nu, self.mode(&c.mode)?.clone())?;
        }
        Ok(b)
    }
}

fn remove_component(v: &TestFunction, b: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<TestFunction> {
    let bb = shell::ip(b, b, kind, cfg)?;
    ensure!(bb.norm() > 0.0, "cannot orthogonalize against a zero-norm mode");
    let coef = shell::ip(b, v, kind, cfg)? / bb;
    Ok(TestFunction::linear_combination(&[(Complex64::new(1.0, 0.0), v), (-coef, b)])?)
}
