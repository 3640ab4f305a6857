//! Test functions: construction, Poincaré and discrete maps, Fourier
//! representation and positive-frequency projection.
//!
//! Fourier convention: `f̃(k) = ∫ f(x) e^{i(k₀t − k⃗·x⃗)} dᵈx`, metric (+,−,…,−).
//!
//! A [`TestFunction`] is a finite sum of parts. Each part is either a sum of
//! Gaussian packets or a grid bump, optionally restricted in Fourier space to
//! one half of wave-vector space (`θ(±n·k)` for a future-timelike `n`).

mod grid;
mod packet;
mod serial;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use grid::{GridBump, GridSpectrum, Lattice, MIN_GRID_POINTS, PADDING};
pub use packet::{PacketTerm, SpectralFactor};
pub use serial::TestFunctionRepr;

use crate::error::{Error, Result};
use crate::lorentz::{self, Separation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveVector(pub Vec<f64>);

impl SpacetimePoint {
    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencySign {
    Positive,
    Negative,
}

impl FrequencySign {
    fn flip(self) -> Self {
        match self {
            FrequencySign::Positive => FrequencySign::Negative,
            FrequencySign::Negative => FrequencySign::Positive,
        }
    }
}

/// Fourier-space restriction `θ(±n·k)`, `n` future-pointing and timelike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyFilter {
    pub sign: FrequencySign,
    pub direction: Vec<f64>,
}

impl FrequencyFilter {
    pub fn positive(dim: usize) -> Self {
        let mut direction = vec![0.0; dim];
        direction[0] = 1.0;
        Self { sign: FrequencySign::Positive, direction }
    }

    /// Weight of the filter at `k`; one half on the boundary plane.
    #[inline]
    pub fn weight(&self, k: &[f64]) -> f64 {
        let s = lorentz::dot(&self.direction, k);
        let s = match self.sign {
            FrequencySign::Positive => s,
            FrequencySign::Negative => -s,
        };
        if s > 0.0 {
            1.0
        } else if s < 0.0 {
            0.0
        } else {
            0.5
        }
    }

    fn is_time_axis(&self) -> bool {
        self.direction[0] == 1.0 && self.direction[1..].iter().all(|v| *v == 0.0)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.direction.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.direction.len() });
        }
        let n2 = lorentz::dot(&self.direction, &self.direction);
        if !(n2 > 0.0 && self.direction[0] > 0.0) {
            return Err(Error::InvalidTestFunction("filter direction must be future timelike".into()));
        }
        Ok(())
    }

    fn transform(&self, lambda: &DMatrix<f64>) -> Self {
        let n = lorentz::apply(lambda, &self.direction);
        if n[0] >= 0.0 {
            Self { sign: self.sign, direction: n }
        } else {
            Self { sign: self.sign.flip(), direction: n.into_iter().map(|v| -v).collect() }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Body {
    Packets(Vec<PacketTerm>),
    Grid(GridBump),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    GaussianPacketSum,
    GridBump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub body: Body,
    pub filter: Option<FrequencyFilter>,
    /// Set when the part was produced by resampling.
    pub approximate: bool,
}

impl Part {
    #[inline]
    fn spectrum(&self, k: &[f64]) -> Complex64 {
        let w = self.filter.as_ref().map_or(1.0, |f| f.weight(k));
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let v = match &self.body {
            Body::Packets(terms) => terms.iter().map(|t| t.spectrum(k)).sum(),
            Body::Grid(g) => g.spectrum(k),
        };
        v * w
    }

    fn value(&self, x: &[f64]) -> Result<Complex64> {
        Ok(match (&self.body, &self.filter) {
            (Body::Packets(terms), None) => terms.iter().map(|t| t.value(x)).sum(),
            (Body::Packets(terms), Some(f)) => terms.iter().map(|t| t.value_filtered(x, f)).sum(),
            (Body::Grid(g), None) => g.value(x),
            (Body::Grid(g), Some(f)) => {
                if !f.is_time_axis() {
                    return Err(Error::NotRepresentable(
                        "grid position values are only available for time-axis frequency filters".into(),
                    ));
                }
                g.value_time_filtered(x, f.sign)
            }
        })
    }

    fn map_body(&self, packets: impl Fn(&PacketTerm) -> Result<PacketTerm>, grid: impl Fn(&GridBump) -> Result<GridBump>) -> Result<Part> {
        let body = match &self.body {
            Body::Packets(terms) => Body::Packets(terms.iter().map(packets).collect::<Result<_>>()?),
            Body::Grid(g) => Body::Grid(grid(g)?),
        };
        Ok(Part { body, filter: self.filter.clone(), approximate: self.approximate })
    }
}

/// A smooth, rapidly decaying spacetime function used to smear fields.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    dim: usize,
    parts: Vec<Part>,
}

impl TestFunction {
    pub fn from_parts(dim: usize, parts: Vec<Part>) -> Result<Self> {
        lorentz::check_dim(dim)?;
        if parts.is_empty() {
            return Err(Error::InvalidTestFunction("a test function needs at least one part".into()));
        }
        for p in &parts {
            match &p.body {
                Body::Packets(terms) => {
                    if terms.is_empty() {
                        return Err(Error::InvalidTestFunction("packet sum needs at least one term".into()));
                    }
                    if let Some(t) = terms.iter().find(|t| t.dim() != dim) {
                        return Err(Error::DimensionMismatch { expected: dim, found: t.dim() });
                    }
                }
                Body::Grid(g) => {
                    if g.dim() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, found: g.dim() });
                    }
                }
            }
            if let Some(f) = &p.filter {
                f.validate(dim)?;
            }
        }
        Ok(Self { dim, parts })
    }

    pub fn packets(terms: Vec<PacketTerm>) -> Result<Self> {
        let dim = terms.first().map(|t| t.dim()).ok_or_else(|| Error::InvalidTestFunction("empty packet sum".into()))?;
        Self::from_parts(dim, vec![Part { body: Body::Packets(terms), filter: None, approximate: false }])
    }

    /// Single axis-aligned Gaussian packet.
    pub fn gaussian(amplitude: Complex64, center: &[f64], widths: &[f64], carrier: &[f64]) -> Result<Self> {
        if widths.len() != center.len() || carrier.len() != center.len() {
            return Err(Error::DimensionMismatch { expected: center.len(), found: widths.len().min(carrier.len()) });
        }
        Self::packets(vec![PacketTerm::new(amplitude, center.to_vec(), widths, carrier.to_vec())?])
    }

    pub fn grid(grid: GridBump) -> Self {
        let dim = grid.dim();
        Self { dim, parts: vec![Part { body: Body::Grid(grid), filter: None, approximate: false }] }
    }

    pub fn standard_bump(center: &[f64], radius: f64, points_per_axis: usize) -> Result<Self> {
        Ok(Self::grid(GridBump::standard_bump(center, radius, points_per_axis)?))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[Part] {
        &self.parts
    }

    /// Kind of the first part; mixed sums report their leading part.
    pub fn kind(&self) -> TestFunctionKind {
        match self.parts[0].body {
            Body::Packets(_) => TestFunctionKind::GaussianPacketSum,
            Body::Grid(_) => TestFunctionKind::GridBump,
        }
    }

    pub fn is_positive_frequency(&self) -> bool {
        self.parts.iter().all(|p| matches!(&p.filter, Some(f) if f.sign == FrequencySign::Positive))
    }

    pub fn is_approximate(&self) -> bool {
        self.parts.iter().any(|p| p.approximate)
    }

    /// True when every part is an unfiltered grid, i.e. the support is compact.
    pub fn is_compact(&self) -> bool {
        self.parts.iter().all(|p| p.filter.is_none() && matches!(p.body, Body::Grid(_)))
    }

    pub fn grids(&self) -> impl Iterator<Item = &GridBump> {
        self.parts.iter().filter_map(|p| match &p.body {
            Body::Grid(g) => Some(g),
            Body::Packets(_) => None,
        })
    }

    pub fn packet_terms(&self) -> impl Iterator<Item = &PacketTerm> {
        self.parts.iter().flat_map(|p| match &p.body {
            Body::Packets(t) => t.as_slice(),
            Body::Grid(_) => &[],
        })
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: len });
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &SpacetimePoint) -> Result<Complex64> {
        self.check_point(x.0.len())?;
        let mut acc = Complex64::new(0.0, 0.0);
        for p in &self.parts {
            acc += p.value(&x.0)?;
        }
        Ok(acc)
    }

    /// `f̃(k)`; `k` must have the function's dimension.
    #[inline]
    pub fn spectrum(&self, k: &[f64]) -> Complex64 {
        debug_assert_eq!(k.len(), self.dim);
        self.parts.iter().map(|p| p.spectrum(k)).sum()
    }

    pub fn fourier(&self) -> Result<FourierRep> {
        let mut out = Vec::with_capacity(self.parts.len());
        for p in &self.parts {
            let body = match &p.body {
                Body::Packets(terms) => SpectrumBody::ClosedForm(terms.clone()),
                Body::Grid(g) => {
                    if let Some(n) = g.counts().iter().copied().find(|&n| n < MIN_GRID_POINTS) {
                        return Err(Error::ResolutionTooCoarse(format!(
                            "{n} samples on an axis, need at least {MIN_GRID_POINTS}"
                        )));
                    }
                    SpectrumBody::Grid(GridSpectrum::new(g.clone()))
                }
            };
            out.push(SpectrumPart { body, filter: p.filter.clone() });
        }
        Ok(FourierRep { dim: self.dim, parts: out })
    }

    pub fn conjugate(&self) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| Part {
                body: match &p.body {
                    Body::Packets(t) => Body::Packets(t.iter().map(|t| t.conjugate()).collect()),
                    Body::Grid(g) => Body::Grid(g.conjugate()),
                },
                // (f*)~(k) = f̃(−k)*, so θ(n·k) becomes θ(−n·k)
                filter: p.filter.as_ref().map(|f| FrequencyFilter { sign: f.sign.flip(), direction: f.direction.clone() }),
                approximate: p.approximate,
            })
            .collect();
        Self { dim: self.dim, parts }
    }

    pub fn translate(&self, a: &SpacetimePoint) -> Result<Self> {
        self.check_point(a.0.len())?;
        let parts = self
            .parts
            .iter()
            .map(|p| p.map_body(|t| Ok(t.translate(&a.0)), |g| Ok(g.translate(&a.0))))
            .collect::<Result<_>>()?;
        Ok(Self { dim: self.dim, parts })
    }

    pub fn scale(&self, alpha: Complex64) -> Self {
        let parts = self
            .parts
            .iter()
            .map(|p| p.map_body(|t| Ok(t.scale(alpha)), |g| Ok(g.scale(alpha))).expect("scaling is infallible"))
            .collect();
        Self { dim: self.dim, parts }
    }

    /// Pointwise sum. Parts with matching filters merge where possible.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut parts = self.parts.clone();
        'outer: for q in &other.parts {
            for p in parts.iter_mut() {
                if p.filter != q.filter || p.approximate != q.approximate {
                    continue;
                }
                match (&mut p.body, &q.body) {
                    (Body::Packets(a), Body::Packets(b)) => {
                        a.extend(b.iter().cloned());
                        continue 'outer;
                    }
                    (Body::Grid(a), Body::Grid(b)) => {
                        if let Some(sum) = a.add(b) {
                            *a = sum;
                            continue 'outer;
                        }
                    }
                    _ => {}
                }
            }
            parts.push(q.clone());
        }
        Ok(Self { dim: self.dim, parts })
    }

    /// `Σ αᵢ fᵢ`.
    pub fn linear_combination(terms: &[(Complex64, &TestFunction)]) -> Result<Self> {
        let (first, rest) = terms.split_first().ok_or_else(|| Error::InvalidTestFunction("empty combination".into()))?;
        let mut acc = first.1.scale(first.0);
        for (a, f) in rest {
            acc = acc.add(&f.scale(*a))?;
        }
        Ok(acc)
    }

    /// `(f + f*)/2`
    pub fn real_part(&self) -> Self {
        self.scale(Complex64::new(0.5, 0.0))
            .add(&self.conjugate().scale(Complex64::new(0.5, 0.0)))
            .expect("same dimension")
    }

    /// `(f − f*)/(2i)`
    pub fn imag_part(&self) -> Self {
        self.scale(Complex64::new(0.0, -0.5))
            .add(&self.conjugate().scale(Complex64::new(0.0, 0.5)))
            .expect("same dimension")
    }

    /// `(Λf)(x) = f(Λ⁻¹x)` for a Lorentz matrix. Exact for packets; grids
    /// are resampled and marked approximate unless `Λ` is a pure reflection.
    pub fn lorentz_transform(&self, lambda: &DMatrix<f64>) -> Result<Self> {
        if lambda.nrows() != self.dim || lambda.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: lambda.nrows() });
        }
        if !lorentz::is_lorentz(lambda) {
            return Err(Error::NotRepresentable("matrix is not a Lorentz transformation".into()));
        }
        let reflected_axes = reflection_axes(lambda);
        let mut parts = Vec::with_capacity(self.parts.len());
        for p in &self.parts {
            let mut approximate = p.approximate;
            let body = match &p.body {
                Body::Packets(t) => Body::Packets(t.iter().map(|t| t.transform(lambda)).collect::<Result<_>>()?),
                Body::Grid(g) => match &reflected_axes {
                    Some(axes) => Body::Grid(g.reflect(axes)),
                    None => {
                        if p.filter.is_some() {
                            return Err(Error::NotRepresentable("cannot resample a frequency-filtered grid".into()));
                        }
                        approximate = true;
                        Body::Grid(g.resample(lambda)?)
                    }
                },
            };
            parts.push(Part { body, filter: p.filter.as_ref().map(|f| f.transform(lambda)), approximate });
        }
        Ok(Self { dim: self.dim, parts })
    }

    pub fn boost(&self, rapidity: f64, axis: usize) -> Result<Self> {
        self.lorentz_transform(&lorentz::boost_matrix(self.dim, axis, rapidity)?)
    }

    /// `(Pf)(t, x⃗) = f(t, −x⃗)`
    pub fn parity_reverse(&self) -> Self {
        self.lorentz_transform(&lorentz::parity_matrix(self.dim)).expect("parity is a reflection")
    }

    /// `(Tf)(t, x⃗) = f(−t, x⃗)`
    pub fn time_reverse(&self) -> Self {
        self.lorentz_transform(&lorentz::time_reversal_matrix(self.dim)).expect("time reversal is a reflection")
    }

    /// `f̃₊(k) = θ(k₀) f̃(k)`. Idempotent; parts already restricted to negative
    /// frequencies vanish.
    pub fn positive_frequency_projection(&self) -> Result<Self> {
        let target = FrequencyFilter::positive(self.dim);
        let mut parts = Vec::new();
        for p in &self.parts {
            match &p.filter {
                None => {
                    if let Body::Grid(g) = &p.body {
                        if g.counts()[0] < MIN_GRID_POINTS {
                            return Err(Error::ResolutionTooCoarse(format!(
                                "{} time samples cannot resolve the spectrum near k₀ = 0",
                                g.counts()[0]
                            )));
                        }
                    }
                    parts.push(Part { filter: Some(target.clone()), ..p.clone() });
                }
                Some(f) if f.direction == target.direction || lorentz_equivalent(&f.direction, &target.direction) => {
                    if f.sign == FrequencySign::Positive {
                        parts.push(p.clone());
                    }
                }
                Some(_) => {
                    return Err(Error::NotRepresentable(
                        "part is already restricted along a different time direction".into(),
                    ))
                }
            }
        }
        if parts.is_empty() {
            return Err(Error::InvalidTestFunction("positive-frequency part is identically zero".into()));
        }
        Ok(Self { dim: self.dim, parts })
    }

    /// Causal relation of the supports of two compactly supported functions.
    pub fn separation(&self, other: &Self) -> Result<Separation> {
        if !self.is_compact() || !other.is_compact() {
            return Err(Error::NotRepresentable("separation requires compactly supported (grid) functions".into()));
        }
        let mut worst = Separation::Spacelike;
        for a in self.grids() {
            for b in other.grids() {
                match (worst, a.separation(b)) {
                    (_, Separation::Lightlike) => return Ok(Separation::Lightlike),
                    (Separation::Spacelike, s) => worst = s,
                    (Separation::Timelike, Separation::Spacelike) => return Ok(Separation::Lightlike),
                    _ => {}
                }
            }
        }
        Ok(worst)
    }
}

fn lorentz_equivalent(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-14)
}

/// Axes flipped by a diagonal ±1 matrix; `None` for anything else.
fn reflection_axes(m: &DMatrix<f64>) -> Option<Vec<usize>> {
    let d = m.nrows();
    let mut axes = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let v = m[(i, j)];
            if i == j {
                if v == -1.0 {
                    axes.push(i);
                } else if v != 1.0 {
                    return None;
                }
            } else if v != 0.0 {
                return None;
            }
        }
    }
    Some(axes)
}

#[derive(Debug, Clone)]
pub enum SpectrumBody {
    ClosedForm(Vec<PacketTerm>),
    Grid(GridSpectrum),
}

#[derive(Debug, Clone)]
pub struct SpectrumPart {
    pub body: SpectrumBody,
    pub filter: Option<FrequencyFilter>,
}

/// Fourier-space view of a test function.
#[derive(Debug, Clone)]
pub struct FourierRep {
    dim: usize,
    parts: Vec<SpectrumPart>,
}

impl FourierRep {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[SpectrumPart] {
        &self.parts
    }

    pub fn eval(&self, k: &WaveVector) -> Result<Complex64> {
        if k.0.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: k.0.len() });
        }
        Ok(self.eval_slice(&k.0))
    }

    #[inline]
    pub fn eval_slice(&self, k: &[f64]) -> Complex64 {
        self.parts
            .iter()
            .map(|p| {
                let w = p.filter.as_ref().map_or(1.0, |f| f.weight(k));
                if w == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                let v: Complex64 = match &p.body {
                    SpectrumBody::ClosedForm(terms) => terms.iter().map(|t| t.spectrum(k)).sum(),
                    SpectrumBody::Grid(g) => g.eval(k),
                };
                v * w
            })
            .sum()
    }
}
