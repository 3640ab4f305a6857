use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::testfn::{PacketTerm, SpacetimePoint, SpectralFactor};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn cfg2() -> ShellConfig {
    ShellConfig::new(1.0, 2).unwrap()
}

fn gaussian(amp: Complex64, center: [f64; 2], widths: [f64; 2], carrier: [f64; 2]) -> TestFunction {
    TestFunction::gaussian(amp, &center, &widths, &carrier).unwrap()
}

/// Closed-form 1+1 packet spectrum written out independently of the library.
fn oracle_spectrum(amp: Complex64, center: [f64; 2], widths: [f64; 2], carrier: [f64; 2], k: [f64; 2]) -> Complex64 {
    let phase = k[0] * center[0] - k[1] * center[1];
    let p0 = k[0] - carrier[0];
    let p1 = k[1] - carrier[1];
    let env = (-0.5 * (widths[0] * widths[0] * p0 * p0 + widths[1] * widths[1] * p1 * p1)).exp();
    amp * 2.0 * PI * widths[0] * widths[1] * env * Complex64::from_polar(1.0, phase)
}

/// Trapezoid oracle on `[-K, K]` for `ħ ∫ dk/(2π 2ω) Σ_s a(sω,k)* b(sω,k)`.
fn oracle_pairing(
    a: impl Fn([f64; 2]) -> Complex64,
    b: impl Fn([f64; 2]) -> Complex64,
    shells: &[f64],
    m: f64,
    h: f64,
) -> Complex64 {
    let kmax = 16.0;
    let n = (2.0 * kmax / h).round() as i64;
    let mut s = c(0.0, 0.0);
    for i in 0..=n {
        let k = -kmax + i as f64 * h;
        let w = if i == 0 || i == n { 0.5 * h } else { h };
        let om = (k * k + m * m).sqrt();
        for &sg in shells {
            s += a([sg * om, k]).conj() * b([sg * om, k]) * (w / (2.0 * PI * 2.0 * om));
        }
    }
    s
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn config_validation() {
    assert!(ShellConfig::new(-1.0, 2).is_err());
    assert!(ShellConfig::new(1.0, 5).is_err());
    assert!(ShellConfig::new(0.0, 2).is_err());
    assert!(ShellConfig::new(0.0, 3).is_ok());
    assert!(cfg2().with_nodes(8).is_err());
    assert!(cfg2().with_cutoff(3.0).is_err());
    assert!(cfg2().with_hbar(0.0).is_err());
    let text = r#"{"mass": 1.0, "dimension": 2, "quadrature": {"rule": "trapezoid", "nodes": 64}}"#;
    let parsed: ShellConfig = serde_json::from_str(text).unwrap();
    assert_eq!(parsed.hbar, 1.0);
    assert_eq!(parsed.quadrature.rule, Rule::Trapezoid);
    assert!(serde_json::from_str::<ShellConfig>(r#"{"mass": 1.0, "dimension": 2, "extra": 1}"#).is_err());
}

#[test]
fn standard_packet_matches_golden_oracle() {
    let f = gaussian(c(1.0, 0.0), [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]);
    let q = quantum_ip(&f, &f, &cfg2()).unwrap();
    let spec = |k: [f64; 2]| oracle_spectrum(c(1.0, 0.0), [0.0, 0.0], [1.0, 1.0], [0.0, 0.0], k);
    let t: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&h| oracle_pairing(spec, spec, &[1.0], 1.0, h).re).collect();
    let r1 = [(4.0 * t[1] - t[0]) / 3.0, (4.0 * t[2] - t[1]) / 3.0];
    let richardson = (16.0 * r1[1] - r1[0]) / 15.0;
    const GOLDEN: f64 = 1.3226872821587789;
    assert!((richardson - GOLDEN).abs() < 1e-12 * GOLDEN);
    assert!(rel(q, c(GOLDEN, 0.0)) < 1e-8, "{q}");
    assert!(q.im.abs() < 1e-15);
}

#[test]
fn sub_mass_packet_misses_the_shell() {
    // spectrum concentrated at |k₀| ≲ 0.3 m, far from ω ≥ m
    let f = gaussian(c(1.0, 0.0), [0.0, 0.0], [12.0, 1.0], [0.2, 0.0]);
    let q = quantum_ip(&f, &f, &cfg2()).unwrap();
    let on = gaussian(c(1.0, 0.0), [0.0, 0.0], [12.0, 1.0], [1.2, 0.0]);
    let scale = quantum_ip(&on, &on, &cfg2()).unwrap().re;
    assert!(q.norm() < 1e-8 * scale, "{q} vs {scale}");
}

#[test]
fn diagonal_positive() {
    let f = gaussian(c(0.3, -0.8), [0.5, 1.0], [0.7, 1.4], [2.0, 0.5]);
    let q = quantum_ip(&f, &f, &cfg2()).unwrap();
    assert!(q.re > 0.0 && q.im == 0.0);
}

#[test]
fn two_shell_oracle_for_distinct_centers() {
    let (af, cf, wf, qf) = (c(1.0, 0.2), [0.3, -1.0], [0.8, 1.1], [1.5, 0.4]);
    let (ag, cg, wg, qg) = (c(-0.4, 0.9), [-0.2, 1.5], [1.2, 0.7], [-0.5, 1.0]);
    let f = gaussian(af, cf, wf, qf);
    let g = gaussian(ag, cg, wg, qg);
    let sf = |k: [f64; 2]| oracle_spectrum(af, cf, wf, qf, k);
    let sg = |k: [f64; 2]| oracle_spectrum(ag, cg, wg, qg, k);
    let want_c = oracle_pairing(sf, sg, &[1.0, -1.0], 1.0, 0.01) * 0.5;
    let want_q = oracle_pairing(sf, sg, &[1.0], 1.0, 0.01);
    let got_c = classical_ip(&f, &g, &cfg2()).unwrap();
    let got_q = quantum_ip(&f, &g, &cfg2()).unwrap();
    assert!(rel(got_c, want_c) < 1e-10, "{got_c} vs {want_c}");
    assert!(rel(got_q, want_q) < 1e-10, "{got_q} vs {want_q}");
}

#[test]
fn real_functions_have_equal_kernels() {
    let f = gaussian(c(1.0, 0.0), [0.4, -0.3], [0.9, 1.2], [1.3, 0.7]).real_part();
    let q = quantum_ip(&f, &f, &cfg2()).unwrap();
    let cl = classical_ip(&f, &f, &cfg2()).unwrap();
    assert!(rel(cl, q) < 1e-10);
}

#[test]
fn classical_is_symmetrized_quantum() {
    let f = gaussian(c(1.0, 0.5), [0.0, 0.3], [1.0, 0.8], [1.2, -0.4]);
    let g = gaussian(c(0.2, -1.0), [0.6, -0.2], [0.7, 1.1], [-0.8, 0.9]);
    let cfg = cfg2();
    let cl = classical_ip(&f, &g, &cfg).unwrap();
    let sym = (quantum_ip(&f, &g, &cfg).unwrap() + quantum_ip(&g.conjugate(), &f.conjugate(), &cfg).unwrap()) * 0.5;
    assert!((cl - sym).norm() < 1e-10 * cl.norm().max(1e-3));
}

#[test]
fn symmetries() {
    let cfg = cfg2();
    let f = gaussian(c(1.0, 0.3), [0.2, 0.1], [1.0, 0.8], [1.7, 0.6]);
    let g = gaussian(c(0.5, -0.2), [-0.4, 0.9], [0.9, 1.2], [1.1, -0.3]);
    for kind in [KernelKind::Quantum, KernelKind::Classical] {
        let base = ip(&f, &g, kind, &cfg).unwrap();
        let a = SpacetimePoint(vec![1.3, -2.1]);
        let tr = ip(&f.translate(&a).unwrap(), &g.translate(&a).unwrap(), kind, &cfg).unwrap();
        assert!(rel(tr, base) < 1e-10, "{kind} translate");
        let bo = ip(&f.boost(0.5, 1).unwrap(), &g.boost(0.5, 1).unwrap(), kind, &cfg).unwrap();
        assert!(rel(bo, base) < 1e-8, "{kind} boost {bo} {base}");
        let pa = ip(&f.parity_reverse(), &g.parity_reverse(), kind, &cfg).unwrap();
        assert!(rel(pa, base) < 1e-10, "{kind} parity");
    }
    let cl = classical_ip(&f, &g, &cfg).unwrap();
    let cl_t = classical_ip(&f.time_reverse(), &g.time_reverse(), &cfg).unwrap();
    assert!(rel(cl_t, cl) < 1e-10);
    let two_shell = quantum_ip(&f.time_reverse(), &g.time_reverse(), &cfg).unwrap() + quantum_ip(&f, &g, &cfg).unwrap() - cl * 2.0;
    assert!(two_shell.norm() < 1e-10 * cl.norm());
}

#[test]
fn time_reversal_witness() {
    let cfg = cfg2();
    let f = gaussian(c(1.0, 0.0), [0.0, 0.0], [1.0, 1.0], [3.0, 0.0]);
    let tf = f.time_reverse();
    let q = quantum_ip(&f, &f, &cfg).unwrap();
    let qt = quantum_ip(&tf, &tf, &cfg).unwrap();
    assert!(rel(qt, q) > 0.5, "{q} {qt}");
    let cl = classical_ip(&f, &f, &cfg).unwrap();
    let clt = classical_ip(&tf, &tf, &cfg).unwrap();
    assert!(rel(clt, cl) < 1e-10);
}

#[test]
fn hermitian_exactly() {
    let f = gaussian(c(1.0, 0.3), [0.2, 0.1], [1.0, 0.8], [1.7, 0.6]);
    let g = TestFunction::grid(crate::testfn::GridBump::modulated_bump(&[0.5, 0.0], 1.0, 41, &[0.3, 0.1]).unwrap());
    for kind in [KernelKind::Quantum, KernelKind::Classical] {
        let cfg = cfg2().with_cutoff(40.0).unwrap();
        let a = ip(&f, &g, kind, &cfg).unwrap();
        let b = ip(&g, &f, kind, &cfg).unwrap();
        assert_eq!(a, b.conj());
    }
}

#[test]
fn sesquilinear_on_fixed_nodes() {
    let cfg = cfg2().with_cutoff(14.0).unwrap().with_nodes(200).unwrap();
    let f1 = gaussian(c(1.0, 0.3), [0.2, 0.1], [1.0, 0.8], [1.7, 0.6]);
    let f2 = gaussian(c(-0.3, 0.5), [1.0, -0.5], [0.6, 0.9], [0.3, -0.6]);
    let g = gaussian(c(0.5, -0.2), [-0.4, 0.9], [0.9, 1.2], [1.1, -0.3]);
    let alpha = c(0.7, -1.3);
    let comb = f1.scale(alpha).add(&f2).unwrap();
    for kind in [KernelKind::Quantum, KernelKind::Classical] {
        let lhs = ip(&comb, &g, kind, &cfg).unwrap();
        let rhs = alpha.conj() * ip(&f1, &g, kind, &cfg).unwrap() + ip(&f2, &g, kind, &cfg).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1.0));
    }
}

#[test]
fn commutator_kernel_classical_vanishes() {
    let f = gaussian(c(1.0, 0.3), [0.2, 0.1], [1.0, 0.8], [1.7, 0.6]);
    let g = gaussian(c(0.5, -0.2), [-0.4, 0.9], [0.9, 1.2], [1.1, -0.3]);
    let cfg = cfg2();
    let v = commutator_kernel(&f, &g, KernelKind::Classical, &cfg).unwrap();
    let scale = classical_ip(&f.conjugate(), &f, &cfg).unwrap().norm().max(classical_ip(&g.conjugate(), &g, &cfg).unwrap().norm());
    assert!(v.norm() <= 1e-12 * scale.max(classical_ip(&f, &f, &cfg).unwrap().norm()), "{v}");
    let q = commutator_kernel(&f, &g, KernelKind::Quantum, &cfg).unwrap();
    assert!(q.norm() > 1e-6);
    assert!(commutator_kernel(&f, &g, KernelKind::EMQuantum, &cfg).is_err());
}

#[test]
fn cutoff_checks() {
    let f = gaussian(c(1.0, 0.0), [0.0, 0.0], [0.5, 0.5], [0.0, 3.0]);
    // carrier 3 + 6·2 = 15 required
    let err = quantum_ip(&f, &f, &cfg2().with_cutoff(10.0).unwrap()).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)), "{err}");
    let b = TestFunction::standard_bump(&[0.0, 0.0], 1.0, 41).unwrap();
    let err = quantum_ip(&b, &b, &cfg2().with_cutoff(8.0).unwrap()).unwrap_err();
    assert!(matches!(err, Error::CutoffTooSmall { .. }), "{err}");
    assert!(quantum_ip(&b, &b, &cfg2()).is_ok());
}

#[test]
fn error_estimate_is_small_when_converged() {
    let f = gaussian(c(1.0, 0.0), [0.0, 0.0], [1.0, 1.0], [0.0, 0.0]);
    let p = pairing(&f, &f, KernelKind::Quantum, &cfg2()).unwrap();
    // |I_N − I_{N/2}| bounds the error of the finer value
    let actual = (p.value.re - 1.3226872821587789).abs();
    assert!(p.est_error >= actual && p.est_error < 1e-4 * p.value.norm(), "{} {actual}", p.est_error);
    let coarse = pairing(&f, &f, KernelKind::Quantum, &cfg2().with_nodes(16).unwrap()).unwrap();
    assert!(coarse.est_error > p.est_error);
}

#[test]
fn higher_dimensions_run() {
    let cfg = ShellConfig::new(1.0, 3).unwrap();
    let f = TestFunction::gaussian(c(1.0, 0.0), &[0.0; 3], &[1.0; 3], &[1.0, 0.3, 0.0]).unwrap();
    let q = quantum_ip(&f, &f, &cfg).unwrap();
    assert!(q.re > 0.0);
    let rot = classical_ip(&f.parity_reverse(), &f.parity_reverse(), &cfg).unwrap();
    assert!(rel(rot, classical_ip(&f, &f, &cfg).unwrap()) < 1e-10);
}

fn em_packet(center: [f64; 4], carrier: [f64; 4]) -> PacketTerm {
    PacketTerm::new(c(1.0, 0.0), center.to_vec(), &[1.0, 1.0, 1.0, 1.0], carrier.to_vec()).unwrap()
}

fn em_cfg() -> ShellConfig {
    ShellConfig::new(0.0, 4).unwrap().with_cutoff(10.0).unwrap().with_nodes(24).unwrap()
}

/// `f̃_{μν} = (k_μ a_ν − k_ν a_μ) h̃`
fn pure_gauge(h: &PacketTerm, a: [f64; 4]) -> BivectorTestFunction {
    let mut b = BivectorTestFunction::zero(4).unwrap();
    for mu in 0..4 {
        for nu in mu + 1..4 {
            let mut gradient = vec![c(0.0, 0.0); 4];
            gradient[mu] = c(a[nu], 0.0);
            gradient[nu] = c(-a[mu], 0.0);
            let t = h.clone().with_factor(SpectralFactor { constant: c(0.0, 0.0), gradient }).unwrap();
            b = b.with_component(mu, nu, TestFunction::packets(vec![t]).unwrap()).unwrap();
        }
    }
    b
}

#[test]
fn em_contraction_matches_index_sum() {
    let h = em_packet([0.0, 0.2, -0.1, 0.3], [1.0, 0.5, 0.0, 0.2]);
    let mut f = BivectorTestFunction::zero(4).unwrap();
    let mut g = BivectorTestFunction::zero(4).unwrap();
    for (n, (mu, nu)) in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)].into_iter().enumerate() {
        let t = h.translate(&[0.1 * n as f64, 0.0, 0.2, 0.0]).scale(c(1.0 + n as f64, 0.5 - n as f64));
        f = f.with_component(mu, nu, TestFunction::packets(vec![t.clone()]).unwrap()).unwrap();
        g = g.with_component(nu, mu, TestFunction::packets(vec![t.conjugate()]).unwrap()).unwrap();
    }
    let eta = |i: usize| if i == 0 { 1.0 } else { -1.0 };
    for s in 0..50 {
        let kv = [0.3 + 0.1 * s as f64, -0.2 * s as f64, 0.05 * s as f64, 1.0];
        let k: Vec<f64> = vec![(kv[1] * kv[1] + kv[2] * kv[2] + kv[3] * kv[3]).sqrt(), kv[1], kv[2], kv[3]];
        let fm = f.spectrum_matrix(&k);
        let gm = g.spectrum_matrix(&k);
        let mut brute = c(0.0, 0.0);
        for mu in 0..4 {
            for nu in 0..4 {
                for beta in 0..4 {
                    // f̃_{μβ}* k^μ k^ν g̃_ν^β, with the sign making the diagonal non-negative
                    brute -= fm[mu][beta].conj() * k[mu] * k[nu] * gm[nu][beta] * eta(beta);
                }
            }
        }
        let got = em_density(&k, &fm, &gm);
        assert!((got - brute).norm() <= 1e-10 * brute.norm().max(1e-300));
    }
}

#[test]
fn em_pairing_properties() {
    let h = em_packet([0.0; 4], [1.5, 0.0, 0.0, 1.0]);
    let control = BivectorTestFunction::zero(4)
        .unwrap()
        .with_component(0, 1, TestFunction::packets(vec![h.clone()]).unwrap())
        .unwrap()
        .with_component(2, 3, TestFunction::packets(vec![h.scale(c(0.0, 0.5))]).unwrap())
        .unwrap();
    let cfg = em_cfg();
    let v = em_ip(&control, &control, &cfg).unwrap();
    assert!(v.re > 0.0 && v.im.abs() <= 1e-14 * v.re);
    let gauge = pure_gauge(&h, [0.3, -1.0, 0.5, 2.0]);
    let z = em_ip(&gauge, &gauge, &cfg).unwrap();
    assert!(z.norm() <= 1e-8 * v.norm(), "{z} vs {v}");
    assert!(matches!(em_ip(&control, &control, &ShellConfig::new(1.0, 4).unwrap()), Err(Error::KernelUnsupported { .. })));
    let small = BivectorTestFunction::zero(3).unwrap();
    assert!(em_ip(&small, &small, &ShellConfig::new(0.0, 3).unwrap()).is_err());
    assert!(ip(&TestFunction::packets(vec![h.clone()]).unwrap(), &TestFunction::packets(vec![h]).unwrap(), KernelKind::EMQuantum, &cfg).is_err());
}

#[test]
fn bivector_antisymmetry() {
    let f = TestFunction::gaussian(c(1.0, 0.0), &[0.0; 4], &[1.0; 4], &[0.0; 4]).unwrap();
    let b = BivectorTestFunction::zero(4).unwrap().with_component(3, 1, f.clone()).unwrap();
    let k = [1.0, 0.2, 0.3, 0.4];
    let m = b.spectrum_matrix(&k);
    assert_eq!(m[3][1], f.spectrum(&k));
    assert_eq!(m[1][3], -f.spectrum(&k));
    assert!(b.clone().with_component(2, 2, f.clone()).is_err());
    assert!(b.with_component(4, 1, f).is_err());
}

fn arb_pair() -> impl Strategy<Value = (TestFunction, TestFunction)> {
    let one = || {
        (
            (-1.0..1.0f64, -1.0..1.0f64),
            (-2.0..2.0f64, -2.0..2.0f64),
            (0.5..1.5f64, 0.5..1.5f64),
            (-2.0..2.0f64, -2.0..2.0f64),
        )
            .prop_map(|(a, x, w, q)| gaussian(c(a.0, a.1 + 0.05), [x.0, x.1], [w.0, w.1], [q.0, q.1]))
    };
    (one(), one())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hermiticity_and_classical_commutator((f, g) in arb_pair()) {
        let cfg = cfg2();
        for kind in [KernelKind::Quantum, KernelKind::Classical] {
            prop_assert_eq!(ip(&f, &g, kind, &cfg).unwrap(), ip(&g, &f, kind, &cfg).unwrap().conj());
        }
        let v = commutator_kernel(&f, &g, KernelKind::Classical, &cfg).unwrap();
        let scale = classical_ip(&f, &f, &cfg).unwrap().norm().max(classical_ip(&g, &g, &cfg).unwrap().norm());
        prop_assert!(v.norm() <= 1e-12 * scale);
    }

    #[test]
    fn two_shell_identity((f, g) in arb_pair()) {
        let cfg = cfg2();
        let q = quantum_ip(&f, &g, &cfg).unwrap();
        let qt = quantum_ip(&f.time_reverse(), &g.time_reverse(), &cfg).unwrap();
        let cl = classical_ip(&f, &g, &cfg).unwrap();
        let scale = classical_ip(&f, &f, &cfg).unwrap().norm().max(classical_ip(&g, &g, &cfg).unwrap().norm());
        prop_assert!((q + qt - cl * 2.0).norm() <= 1e-10 * scale);
    }
}
