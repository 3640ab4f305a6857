//! Formal polynomials in creation and annihilation symbols.

use std::collections::BTreeMap;

use num_complex::Complex64;

/// Index of a registered test function in a [`super::FockContext`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub(crate) usize);

impl Label {
    pub fn index(self) -> usize {
        self.0
    }
}

/// `Create < Annihilate`, so sorting a word puts it in normal order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flavor {
    Create,
    Annihilate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperatorSymbol {
    pub flavor: Flavor,
    pub label: Label,
}

impl OperatorSymbol {
    pub fn create(label: Label) -> Self {
        Self { flavor: Flavor::Create, label }
    }

    pub fn annihilate(label: Label) -> Self {
        Self { flavor: Flavor::Annihilate, label }
    }

    pub fn adjoint(self) -> Self {
        let flavor = match self.flavor {
            Flavor::Create => Flavor::Annihilate,
            Flavor::Annihilate => Flavor::Create,
        };
        Self { flavor, label: self.label }
    }
}

pub type Word = Vec<OperatorSymbol>;

pub fn is_normal_ordered(w: &[OperatorSymbol]) -> bool {
    w.windows(2).all(|p| p[0] <= p[1])
}

/// Formal sum of `coefficient × word`; the empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperatorExpr {
    pub(crate) terms: BTreeMap<Word, Complex64>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn scalar(c: Complex64) -> Self {
        let mut e = Self::zero();
        e.add_term(Vec::new(), c);
        e
    }

    pub fn symbol(s: OperatorSymbol) -> Self {
        let mut e = Self::zero();
        e.add_term(vec![s], Complex64::new(1.0, 0.0));
        e
    }

    pub fn word(w: Word, c: Complex64) -> Self {
        let mut e = Self::zero();
        e.add_term(w, c);
        e
    }

    pub fn annihilate(label: Label) -> Self {
        Self::symbol(OperatorSymbol::annihilate(label))
    }

    pub fn create(label: Label) -> Self {
        Self::symbol(OperatorSymbol::create(label))
    }

    pub(crate) fn add_term(&mut self, w: Word, c: Complex64) {
        if c == Complex64::new(0.0, 0.0) {
            return;
        }
        let slot = self.terms.entry(w).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Complex64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, w: &[OperatorSymbol]) -> Complex64 {
        self.terms.get(w).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_normal_ordered(&self) -> bool {
        self.terms.keys().all(|w| is_normal_ordered(w))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = self.clone();
        for (w, c) in &other.terms {
            e.add_term(w.clone(), *c);
        }
        e
    }

    pub fn scale(&self, a: Complex64) -> Self {
        let mut e = Self::zero();
        for (w, c) in &self.terms {
            e.add_term(w.clone(), c * a);
        }
        e
    }

    /// Formal product (word concatenation); no reordering.
    pub fn mul(&self, other: &Self) -> Self {
        let mut e = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend_from_slice(w2);
                e.add_term(w, c1 * c2);
            }
        }
        e
    }

    pub fn pow(&self, n: usize) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc.mul(self))
    }

    /// Hermitian adjoint: reverse each word, swap flavors, conjugate coefficients.
    pub fn adjoint(&self) -> Self {
        let mut e = Self::zero();
        for (w, c) in &self.terms {
            e.add_term(w.iter().rev().map(|s| s.adjoint()).collect(), c.conj());
        }
        e
    }

    /// Equality of coefficients word by word to `|a − b| ≤ tol·max(1, |a|, |b|)`.
    /// Meaningful on canonical (normal-ordered) forms.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let close = |a: Complex64, b: Complex64| (a - b).norm() <= tol * 1f64.max(a.norm()).max(b.norm());
        self.terms.iter().all(|(w, c)| close(*c, other.coefficient(w)))
            && other.terms.iter().all(|(w, c)| close(*c, self.coefficient(w)))
    }
}
