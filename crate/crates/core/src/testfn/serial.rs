//! Stable JSON tree format for test functions.
//!
//! Single part:
//!
//! ```json
//! {"kind": "gaussian_packet_sum", "dimension": 2,
//!  "terms": [{"amplitude": [1.0, 0.0], "center": [0, 0], "widths": [1, 1], "carrier": [0, 0]}],
//!  "flags": {"positive_frequency": false, "approximate": false}}
//! ```
//!
//! `grid_bump` replaces `terms` by
//! `"grid": {"lower": [..], "upper": [..], "counts": [..], "samples": [[re, im], ..]}`
//! with samples in row-major order (last axis fastest). A term may give a
//! full `covariance` matrix instead of `widths`, and an optional spectral
//! `factor` `{constant, gradient}`. A non-default frequency restriction is
//! written as `flags.filter = {sign, direction}`.
//!
//! Sums of differently flagged parts are written as
//! `{"dimension": d, "parts": [<single part>, ..]}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Body, FrequencyFilter, FrequencySign, GridBump, Part, PacketTerm, SpectralFactor, TestFunction, TestFunctionKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRepr {
    pub amplitude: Complex64,
    pub center: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    pub carrier: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<SpectralFactor>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRepr {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub counts: Vec<usize>,
    pub samples: Vec<Complex64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsRepr {
    #[serde(default)]
    pub positive_frequency: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub filter: Option<FrequencyFilter>,
    #[serde(default)]
    pub approximate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartRepr {
    pub kind: TestFunctionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<TermRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridRepr>,
    #[serde(default)]
    pub flags: FlagsRepr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiRepr {
    pub dimension: usize,
    pub parts: Vec<PartRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestFunctionRepr {
    Multi(MultiRepr),
    Single(PartRepr),
}

fn term_to_repr(t: &PacketTerm) -> TermRepr {
    let (widths, covariance) = match t.widths() {
        Some(w) => (Some(w), None),
        None => {
            let c = t.covariance();
            (None, Some((0..c.nrows()).map(|i| c.row(i).iter().copied().collect()).collect()))
        }
    };
    TermRepr {
        amplitude: t.amplitude(),
        center: t.center().to_vec(),
        widths,
        covariance,
        carrier: t.carrier().to_vec(),
        factor: t.factor().cloned(),
    }
}

fn term_from_repr(r: TermRepr) -> Result<PacketTerm> {
    let term = match (r.widths, r.covariance) {
        (Some(w), None) => {
            if w.len() != r.center.len() {
                return Err(Error::DimensionMismatch { expected: r.center.len(), found: w.len() });
            }
            PacketTerm::new(r.amplitude, r.center, &w, r.carrier)?
        }
        (None, Some(rows)) => {
            let d = rows.len();
            if rows.iter().any(|row| row.len() != d) {
                return Err(Error::InvalidTestFunction("covariance must be square".into()));
            }
            let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
            PacketTerm::with_covariance(r.amplitude, r.center, m, r.carrier)?
        }
        _ => return Err(Error::InvalidTestFunction("a term needs exactly one of `widths` or `covariance`".into())),
    };
    match r.factor {
        Some(f) => term.with_factor(f),
        None => Ok(term),
    }
}

fn part_to_repr(p: &Part, dim: usize, with_dim: bool) -> PartRepr {
    let standard = FrequencyFilter::positive(dim);
    let flags = FlagsRepr {
        positive_frequency: p.filter.as_ref() == Some(&standard),
        filter: p.filter.clone().filter(|f| *f != standard),
        approximate: p.approximate,
    };
    let dimension = with_dim.then_some(dim);
    match &p.body {
        Body::Packets(terms) => PartRepr {
            kind: TestFunctionKind::GaussianPacketSum,
            dimension,
            terms: Some(terms.iter().map(term_to_repr).collect()),
            grid: None,
            flags,
        },
        Body::Grid(g) => PartRepr {
            kind: TestFunctionKind::GridBump,
            dimension,
            terms: None,
            grid: Some(GridRepr {
                lower: g.lower().to_vec(),
                upper: g.upper().to_vec(),
                counts: g.counts().to_vec(),
                samples: g.samples().to_vec(),
            }),
            flags,
        },
    }
}

fn part_from_repr(r: PartRepr, dim: usize) -> Result<Part> {
    if let Some(d) = r.dimension {
        if d != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: d });
        }
    }
    let body = match (r.kind, r.terms, r.grid) {
        (TestFunctionKind::GaussianPacketSum, Some(terms), None) => {
            Body::Packets(terms.into_iter().map(term_from_repr).collect::<Result<_>>()?)
        }
        (TestFunctionKind::GridBump, None, Some(g)) => Body::Grid(GridBump::new(g.lower, g.upper, g.counts, g.samples)?),
        (TestFunctionKind::GaussianPacketSum, _, _) => {
            return Err(Error::InvalidTestFunction("gaussian_packet_sum needs `terms` and no `grid`".into()))
        }
        (TestFunctionKind::GridBump, _, _) => {
            return Err(Error::InvalidTestFunction("grid_bump needs `grid` and no `terms`".into()))
        }
    };
    let filter = match (r.flags.filter, r.flags.positive_frequency) {
        (Some(f), false) => Some(f),
        (Some(f), true) if f.sign == FrequencySign::Positive => Some(f),
        (Some(_), true) => {
            return Err(Error::InvalidTestFunction("`positive_frequency` contradicts a negative `filter`".into()))
        }
        (None, true) => Some(FrequencyFilter::positive(dim)),
        (None, false) => None,
    };
    Ok(Part { body, filter, approximate: r.flags.approximate })
}

impl From<&TestFunction> for TestFunctionRepr {
    fn from(f: &TestFunction) -> Self {
        if f.parts.len() == 1 {
            TestFunctionRepr::Single(part_to_repr(&f.parts[0], f.dim, true))
        } else {
            TestFunctionRepr::Multi(MultiRepr {
                dimension: f.dim,
                parts: f.parts.iter().map(|p| part_to_repr(p, f.dim, false)).collect(),
            })
        }
    }
}

impl TryFrom<TestFunctionRepr> for TestFunction {
    type Error = Error;

    fn try_from(r: TestFunctionRepr) -> Result<Self> {
        match r {
            TestFunctionRepr::Single(p) => {
                let dim = p.dimension.ok_or_else(|| Error::InvalidTestFunction("missing `dimension`".into()))?;
                TestFunction::from_parts(dim, vec![part_from_repr(p, dim)?])
            }
            TestFunctionRepr::Multi(m) => {
                let parts = m.parts.into_iter().map(|p| part_from_repr(p, m.dimension)).collect::<Result<_>>()?;
                TestFunction::from_parts(m.dimension, parts)
            }
        }
    }
}

impl Serialize for TestFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TestFunctionRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for TestFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = TestFunctionRepr::deserialize(d)?;
        TestFunction::try_from(repr).map_err(serde::de::Error::custom)
    }
}

impl TestFunction {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let repr: TestFunctionRepr = serde_json::from_str(text)?;
        TestFunction::try_from(repr)
    }
}
