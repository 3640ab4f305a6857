//! Creation/annihilation algebra over labelled test functions.
//!
//! `a_f` is linear and `a†_f` antilinear in `f`, with
//! `[a_g, a†_f] = ip(f, g)` under the active kernel and all other basic
//! commutators zero. The smeared field is `φ̂_f = a_f + a†_{f*}`.
//! Vacuum expectation values are the identity coefficient of the normal
//! ordered form.

mod expr;
mod state;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use expr::{is_normal_ordered, Flavor, Label, OperatorExpr, OperatorSymbol, Word};
pub use state::FockState;

use crate::error::{Error, Result};
use crate::shell::{self, KernelKind, ShellConfig};
use crate::testfn::TestFunction;

/// Largest supported moment order.
pub const MAX_MOMENT_ORDER: usize = 12;

/// Self-pairings at or below this are treated as zero.
pub const ZERO_NORM_TOLERANCE: f64 = 1e-24;

/// Registry of labelled test functions plus a memo of their pairings.
#[derive(Debug)]
pub struct FockContext {
    kind: KernelKind,
    cfg: ShellConfig,
    names: Vec<String>,
    functions: Vec<TestFunction>,
    by_name: HashMap<String, Label>,
    conjugates: HashMap<Label, Label>,
    cache: Mutex<HashMap<(Label, Label), Complex64>>,
}

impl FockContext {
    pub fn new(kind: KernelKind, cfg: ShellConfig) -> Result<Self> {
        if kind == KernelKind::EMQuantum {
            return Err(Error::KernelUnsupported {
                kernel: kind.name(),
                reason: "the operator algebra is built on scalar test functions".into(),
            });
        }
        cfg.validate()?;
        Ok(Self {
            kind,
            cfg,
            names: Vec::new(),
            functions: Vec::new(),
            by_name: HashMap::new(),
            conjugates: HashMap::new(),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn config(&self) -> &ShellConfig {
        &self.cfg
    }

    pub fn register(&mut self, name: &str, f: TestFunction) -> Result<Label> {
        if self.by_name.contains_key(name) {
            return Err(Error::DuplicateMode(name.to_string()));
        }
        if f.dim() != self.cfg.dimension {
            return Err(Error::DimensionMismatch { expected: self.cfg.dimension, found: f.dim() });
        }
        let l = Label(self.functions.len());
        self.names.push(name.to_string());
        self.functions.push(f);
        self.by_name.insert(name.to_string(), l);
        Ok(l)
    }

    pub fn label(&self, name: &str) -> Result<Label> {
        self.by_name.get(name).copied().ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }

    pub fn name(&self, l: Label) -> &str {
        &self.names[l.0]
    }

    pub fn function(&self, l: Label) -> &TestFunction {
        &self.functions[l.0]
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        (0..self.functions.len()).map(Label)
    }

    /// Label of `f*`, registered as `name*` on first use.
    pub fn conjugate(&mut self, l: Label) -> Result<Label> {
        if let Some(c) = self.conjugates.get(&l) {
            return Ok(*c);
        }
        let f = self.functions[l.0].conjugate();
        let c = match self.functions.iter().position(|h| *h == f) {
            Some(i) => Label(i),
            None => {
                let mut name = format!("{}*", self.names[l.0]);
                while self.by_name.contains_key(&name) {
                    name.push('\'');
                }
                self.register(&name, f)?
            }
        };
        self.conjugates.insert(l, c);
        self.conjugates.insert(c, l);
        Ok(c)
    }

    /// `ip(f_a, f_b)` under the context kernel, memoised.
    pub fn ip(&self, a: Label, b: Label) -> Result<Complex64> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(&(a, b)) {
            return Ok(*v);
        }
        let v = shell::ip(&self.functions[a.0], &self.functions[b.0], self.kind, &self.cfg)?;
        let mut cache = self.cache.lock().expect("cache lock");
        cache.insert((a, b), v);
        cache.insert((b, a), v.conj());
        Ok(v)
    }

    /// Scalar commutator of two basic symbols.
    pub fn commutator(&self, x: OperatorSymbol, y: OperatorSymbol) -> Result<Complex64> {
        Ok(match (x.flavor, y.flavor) {
            (Flavor::Annihilate, Flavor::Create) => self.ip(y.label, x.label)?,
            (Flavor::Create, Flavor::Annihilate) => -self.ip(x.label, y.label)?,
            _ => Complex64::new(0.0, 0.0),
        })
    }

    /// `[a_g, a†_f] = ip(f, g)`
    pub fn ccr_commutator(&self, f: Label, g: Label) -> Result<Complex64> {
        self.commutator(OperatorSymbol::annihilate(g), OperatorSymbol::create(f))
    }

    /// `φ̂_f = a_f + a†_{f*}`
    pub fn field(&mut self, f: Label) -> Result<OperatorExpr> {
        let fc = self.conjugate(f)?;
        Ok(OperatorExpr::annihilate(f).add(&OperatorExpr::create(fc)))
    }

    /// Right-multiplies a normal-ordered expression by one symbol, keeping
    /// it normal ordered.
    fn right_mul(&self, state: &BTreeMap<Word, Complex64>, s: OperatorSymbol, out: &mut OperatorExpr) -> Result<()> {
        for (w, c) in state {
            match s.flavor {
                Flavor::Annihilate => {
                    let mut nw = w.clone();
                    let pos = nw.partition_point(|x| *x <= s);
                    nw.insert(pos, s);
                    out.add_term(nw, *c);
                }
                Flavor::Create => {
                    let split = w.partition_point(|x| x.flavor == Flavor::Create);
                    let (creations, anns) = w.split_at(split);
                    let mut moved = creations.to_vec();
                    let pos = moved.partition_point(|x| *x <= s);
                    moved.insert(pos, s);
                    moved.extend_from_slice(anns);
                    out.add_term(moved, *c);
                    for i in 0..anns.len() {
                        let v = self.ip(s.label, anns[i].label)?;
                        if v == Complex64::new(0.0, 0.0) {
                            continue;
                        }
                        let mut nw = creations.to_vec();
                        nw.extend(anns.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x));
                        out.add_term(nw, c * v);
                    }
                }
            }
        }
        Ok(())
    }

    /// `acc · e` with `acc` normal ordered; the result is normal ordered.
    fn ordered_product(&self, acc: &OperatorExpr, e: &OperatorExpr) -> Result<OperatorExpr> {
        let mut total = OperatorExpr::zero();
        for (w, c) in &e.terms {
            let mut cur = acc.scale(*c);
            for s in w {
                let mut next = OperatorExpr::zero();
                self.right_mul(&cur.terms, *s, &mut next)?;
                cur = next;
            }
            total = total.add(&cur);
        }
        Ok(total)
    }

    /// Canonical normal-ordered form.
    pub fn normal_order(&self, e: &OperatorExpr) -> Result<OperatorExpr> {
        self.ordered_product(&OperatorExpr::identity(), e)
    }

    /// `⟨0|e|0⟩`
    pub fn vev(&self, e: &OperatorExpr) -> Result<Complex64> {
        Ok(self.normal_order(e)?.coefficient(&[]))
    }

    /// `⟨0|φ̂_fⁿ|0⟩` by repeated normal-ordered multiplication.
    pub fn field_moment(&mut self, f: Label, n: usize) -> Result<Complex64> {
        if n > MAX_MOMENT_ORDER {
            return Err(Error::OrderTooLarge { order: n, limit: MAX_MOMENT_ORDER });
        }
        let phi = self.field(f)?;
        let mut acc = OperatorExpr::identity();
        for _ in 0..n {
            acc = self.ordered_product(&acc, &phi)?;
        }
        Ok(acc.coefficient(&[]))
    }

    /// `[φ̂_f, φ̂_g] = ip(g*, f) − ip(f*, g)`
    pub fn field_commutator(&mut self, f: Label, g: Label) -> Result<Complex64> {
        let fc = self.conjugate(f)?;
        let gc = self.conjugate(g)?;
        Ok(self.ip(gc, f)? - self.ip(fc, g)?)
    }

    /// Plain-text rendering, e.g. `a†[f1] a[f2] + (0.5+0i)·1`.
    pub fn render(&self, e: &OperatorExpr) -> String {
        if e.is_empty() {
            return "0".into();
        }
        let mut terms: Vec<(&Word, &Complex64)> = e.terms.iter().collect();
        terms.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(b.0)));
        terms
            .into_iter()
            .map(|(w, c)| {
                let word = w
                    .iter()
                    .map(|s| match s.flavor {
                        Flavor::Create => format!("a†[{}]", self.names[s.label.0]),
                        Flavor::Annihilate => format!("a[{}]", self.names[s.label.0]),
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                if w.is_empty() {
                    format!("({c})·1")
                } else if *c == Complex64::new(1.0, 0.0) {
                    word
                } else {
                    format!("({c})·{word}")
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// `⟨a|b⟩` for states of at most two particles.
    pub fn inner(&self, a: &FockState, b: &FockState) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (ca, wa) in a.terms() {
            let bra = OperatorExpr::word(wa.iter().rev().map(|l| OperatorSymbol::annihilate(*l)).collect(), ca.conj());
            for (cb, wb) in b.terms() {
                if wa.len() != wb.len() {
                    continue;
                }
                let ket = OperatorExpr::word(wb.iter().map(|l| OperatorSymbol::create(*l)).collect(), *cb);
                acc += self.vev(&bra.mul(&ket))?;
            }
        }
        Ok(acc)
    }

    fn self_norm(&self, f: Label) -> Result<f64> {
        let n = self.ip(f, f)?.re;
        if n <= ZERO_NORM_TOLERANCE {
            return Err(Error::ZeroNorm(self.names[f.0].clone()));
        }
        Ok(n)
    }

    fn state_norm(&self, state: &FockState) -> Result<f64> {
        let n = self.inner(state, state)?.re;
        if n <= ZERO_NORM_TOLERANCE {
            return Err(Error::NotNormalizable(n));
        }
        Ok(n)
    }

    /// `⟨ψ|X̂_f|ψ⟩ / ⟨ψ|ψ⟩` with `X̂_f = a†_f|0⟩⟨0|a_f / ip(f, f)`.
    pub fn resonance_probability(&self, f: Label, state: &FockState) -> Result<f64> {
        let nf = self.self_norm(f)?;
        let np = self.state_norm(state)?;
        let mut amp = Complex64::new(0.0, 0.0);
        for (c, w) in state.terms() {
            if w.len() == 1 {
                let e = OperatorExpr::word(vec![OperatorSymbol::annihilate(f), OperatorSymbol::create(w[0])], *c);
                amp += self.vev(&e)?;
            }
        }
        Ok(amp.norm_sqr() / (nf * np))
    }

    /// Orthonormal coordinates for the span of one-particle vectors
    /// `a†_b|0⟩`: returns `Q` with `⟨e_k|x⟩ = (Q v)_k` for overlaps
    /// `v_i = ⟨b_i|x⟩`.
    fn orthonormal_frame(&self, basis: &[Label]) -> Result<DMatrix<Complex64>> {
        let r = basis.len();
        let mut g = DMatrix::from_element(r, r, Complex64::new(0.0, 0.0));
        for i in 0..r {
            for j in 0..r {
                g[(i, j)] = self.ip(basis[j], basis[i])?;
            }
        }
        let eig = g.symmetric_eigen();
        let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..r).filter(|&k| eig.eigenvalues[k] > 1e-12 * top && eig.eigenvalues[k] > ZERO_NORM_TOLERANCE).collect();
        Ok(DMatrix::from_fn(keep.len(), r, |k, i| {
            let col = keep[k];
            eig.eigenvectors[(i, col)].conj() / eig.eigenvalues[col].sqrt()
        }))
    }

    /// Matrix of `X̂_target` on the span of `{a†_b|0⟩ : b ∈ basis}` in an
    /// orthonormal frame; `target` must lie in that span.
    pub fn projector_matrix(&self, target: Label, basis: &[Label]) -> Result<DMatrix<Complex64>> {
        let nt = self.self_norm(target)?;
        let q = self.orthonormal_frame(basis)?;
        let mut v = DMatrix::from_element(basis.len(), 1, Complex64::new(0.0, 0.0));
        for (i, b) in basis.iter().enumerate() {
            v[(i, 0)] = self.ip(target, *b)?;
        }
        let u = &q * v;
        Ok(&u * u.adjoint() / Complex64::new(nt, 0.0))
    }

    /// `⟨ψ|X̂_fⁿ|ψ⟩ / ⟨ψ|ψ⟩` for `n = 1..=orders`, from powers of the
    /// restricted matrix.
    pub fn resonance_moments(&self, f: Label, state: &FockState, orders: usize) -> Result<Vec<f64>> {
        let np = self.state_norm(state)?;
        let mut basis = vec![f];
        for (_, w) in state.terms() {
            if w.len() == 1 && !basis.contains(&w[0]) {
                basis.push(w[0]);
            }
        }
        let q = self.orthonormal_frame(&basis)?;
        let x = self.projector_matrix(f, &basis)?;
        let mut v = DMatrix::from_element(basis.len(), 1, Complex64::new(0.0, 0.0));
        for (c, w) in state.terms() {
            if w.len() == 1 {
                for (i, b) in basis.iter().enumerate() {
                    v[(i, 0)] += self.ip(w[0], *b)? * c;
                }
            }
        }
        let psi = &q * v;
        let mut out = Vec::with_capacity(orders);
        let mut xn = DMatrix::identity(x.nrows(), x.ncols());
        for _ in 0..orders {
            xn = &xn * &x;
            out.push((psi.adjoint() * &xn * &psi)[(0, 0)].re / np);
        }
        Ok(out)
    }

    /// Operator norm of `[X̂_f, X̂_g]` on the span of `a†_f|0⟩, a†_g|0⟩`.
    pub fn resonance_nonlocality_witness(&self, f: Label, g: Label) -> Result<f64> {
        let basis = [f, g];
        let xf = self.projector_matrix(f, &basis)?;
        let xg = self.projector_matrix(g, &basis)?;
        let c = &xf * &xg - &xg * &xf;
        Ok(c.singular_values().iter().copied().fold(0.0, f64::max))
    }
}

fn context_with(kind: KernelKind, cfg: &ShellConfig, fns: &[(&str, &TestFunction)]) -> Result<(FockContext, Vec<Label>)> {
    let mut ctx = FockContext::new(kind, cfg.clone())?;
    let labels = fns.iter().map(|(n, f)| ctx.register(n, (*f).clone())).collect::<Result<_>>()?;
    Ok((ctx, labels))
}

/// `[a_g, a†_f] = ip(f, g)`
pub fn ccr_commutator(f: &TestFunction, g: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<Complex64> {
    let (ctx, l) = context_with(kind, cfg, &[("f", f), ("g", g)])?;
    ctx.ccr_commutator(l[0], l[1])
}

pub fn field_moment(f: &TestFunction, n: usize, kind: KernelKind, cfg: &ShellConfig) -> Result<Complex64> {
    let (mut ctx, l) = context_with(kind, cfg, &[("f", f)])?;
    ctx.field_moment(l[0], n)
}

pub fn field_commutator(f: &TestFunction, g: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<Complex64> {
    let (mut ctx, l) = context_with(kind, cfg, &[("f", f), ("g", g)])?;
    ctx.field_commutator(l[0], l[1])
}

/// Resonance probability of `f` in the one-particle state `a†_g|0⟩`.
pub fn resonance_probability(f: &TestFunction, g: &TestFunction, kind: KernelKind, cfg: &ShellConfig) -> Result<f64> {
    let (ctx, l) = context_with(kind, cfg, &[("f", f), ("g", g)])?;
    ctx.resonance_probability(l[0], &FockState::one_particle(l[1]))
}

/// Quantum-kernel witness `‖[X̂_f, X̂_g]‖`.
pub fn resonance_nonlocality_witness(f: &TestFunction, g: &TestFunction, cfg: &ShellConfig) -> Result<f64> {
    let (ctx, l) = context_with(KernelKind::Quantum, cfg, &[("f", f), ("g", g)])?;
    ctx.resonance_nonlocality_witness(l[0], l[1])
}
