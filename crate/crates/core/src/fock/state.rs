use num_complex::Complex64;

use super::Label;
use crate::error::{Error, Result};

/// Largest particle number a [`FockState`] may carry.
pub const MAX_PARTICLES: usize = 2;

/// Vector state `Σ c · a†_{l1} … a†_{lk} |0⟩` with `k ≤ 2`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FockState {
    terms: Vec<(Complex64, Vec<Label>)>,
}

impl FockState {
    pub fn vacuum() -> Self {
        Self { terms: vec![(Complex64::new(1.0, 0.0), Vec::new())] }
    }

    /// `a†_l |0⟩`, not normalized.
    pub fn one_particle(l: Label) -> Self {
        Self { terms: vec![(Complex64::new(1.0, 0.0), vec![l])] }
    }

    pub fn two_particle(a: Label, b: Label) -> Self {
        Self { terms: vec![(Complex64::new(1.0, 0.0), vec![a, b])] }
    }

    pub fn from_terms(terms: Vec<(Complex64, Vec<Label>)>) -> Result<Self> {
        if let Some((_, w)) = terms.iter().find(|(_, w)| w.len() > MAX_PARTICLES) {
            return Err(Error::InvalidConfig(format!(
                "states are limited to {MAX_PARTICLES} particles, got {}",
                w.len()
            )));
        }
        Ok(Self { terms })
    }

    pub fn terms(&self) -> impl Iterator<Item = &(Complex64, Vec<Label>)> {
        self.terms.iter()
    }

    pub fn scale(&self, a: Complex64) -> Self {
        Self { terms: self.terms.iter().map(|(c, w)| (c * a, w.clone())).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    /// `a†_l` applied; fails past the particle limit.
    pub fn create(&self, l: Label) -> Result<Self> {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(c, w)| {
                    let mut nw = vec![l];
                    nw.extend_from_slice(w);
                    (*c, nw)
                })
                .collect(),
        )
    }
}
