//! One function per subcommand; each returns a [`Report`].

use anyhow::{bail, ensure, Context, Result};
use num_complex::Complex64;
use serde_json::{json, Value};
use shellfield::fock::{FockContext, FockState};
use shellfield::lorentz::Separation;
use shellfield::rf::{self, ModeSet};
use shellfield::shell::{self, KernelKind};
use shellfield::testfn::{SpacetimePoint, TestFunction};

use crate::config::Experiment;
use crate::report::{num, text, Report};
use crate::UsageError;

pub const IP_COLUMNS: &[&str] = &["kernel", "f", "g", "re", "im", "est_error"];
pub const SCAN_COLUMNS: &[&str] =
    &["offset", "separation", "quantum_abs", "classical_abs", "quantum_re", "quantum_im"];
pub const SYMMETRY_COLUMNS: &[&str] = &[
    "transform",
    "kernel",
    "base_re",
    "base_im",
    "transformed_re",
    "transformed_im",
    "relative_change",
    "threshold",
    "pass",
];
pub const MOMENT_COLUMNS: &[&str] = &[
    "source",
    "mode",
    "kernel",
    "order",
    "value_re",
    "value_im",
    "reference_re",
    "reference_im",
    "error",
    "stderr",
    "z",
    "pass",
];
pub const RESONANCE_COLUMNS: &[&str] =
    &["kind", "detector", "state", "kernel", "separation", "value", "reference", "pass", "error"];
pub const FACTOR2_COLUMNS: &[&str] = &[
    "f",
    "g",
    "projected",
    "already_projected",
    "quantum_re",
    "quantum_im",
    "classical_re",
    "classical_im",
    "ratio",
    "residual",
    "relative_residual",
    "pass",
];

const SCALAR_KERNELS: [KernelKind; 2] = [KernelKind::Quantum, KernelKind::Classical];

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn two<'a>(exp: &'a Experiment, f: &Option<String>, g: &Option<String>, what: &str) -> Result<(String, String)> {
    let pick = |x: &Option<String>, i: usize| -> Result<String> {
        match x {
            Some(id) => Ok(id.clone()),
            None => exp
                .ids
                .get(i)
                .cloned()
                .ok_or_else(|| UsageError(format!("{what} needs two modes")).into()),
        }
    };
    Ok((pick(f, 0)?, pick(g, 1)?))
}

fn is_real(f: &TestFunction) -> bool {
    f.conjugate() == *f
}

pub fn ip(exp: &Experiment) -> Result<Report> {
    if exp.ids.is_empty() && exp.bivectors.is_empty() {
        return Err(UsageError("ip needs at least one mode".into()).into());
    }
    let params = &exp.config.ip;
    let cfg = exp.shell();
    let mut report = Report::new("ip", IP_COLUMNS);
    let n = exp.ids.len();
    let mut values = vec![vec![[Complex64::default(); 2]; n]; n];
    for (ki, kind) in SCALAR_KERNELS.into_iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                let p = shell::pairing(&exp.functions[i], &exp.functions[j], kind, cfg)
                    .with_context(|| format!("{kind} pairing of '{}' and '{}'", exp.ids[i], exp.ids[j]))?;
                values[i][j][ki] = p.value;
                report.push(vec![
                    text(kind.name()),
                    text(&exp.ids[i]),
                    text(&exp.ids[j]),
                    num(p.value.re),
                    num(p.value.im),
                    num(p.est_error),
                ]);
            }
        }
    }
    if !exp.bivectors.is_empty() {
        let em_cfg = exp.config.em_shell.as_ref().unwrap_or(cfg);
        let mut em = Vec::with_capacity(exp.bivectors.len().pow(2));
        for (a, fa) in &exp.bivectors {
            for (b, fb) in &exp.bivectors {
                let p = shell::em_pairing(fa, fb, em_cfg).with_context(|| format!("EM pairing of '{a}' and '{b}'"))?;
                report.push(vec![text("em_quantum"), text(a), text(b), num(p.value.re), num(p.value.im), num(p.est_error)]);
                em.push(p.value);
            }
        }
        let m = exp.bivectors.len();
        for i in 0..m {
            let d = em[i * m + i];
            let scale = d.norm().max(f64::MIN_POSITIVE);
            report.check(
                format!("EM norm non-negative ({})", exp.bivectors[i].0),
                d.re >= -params.diagonal_tolerance * scale && d.im.abs() <= params.diagonal_tolerance * scale,
                format!("value {:.6e}{:+.2e}i", d.re, d.im),
            );
            for j in i + 1..m {
                let (a, b) = (em[i * m + j], em[j * m + i]);
                let r = (a - b.conj()).norm() / (em[i * m + i].norm() * em[j * m + j].norm()).sqrt().max(f64::MIN_POSITIVE);
                report.check(
                    format!("EM Hermitian ({}, {})", exp.bivectors[i].0, exp.bivectors[j].0),
                    r <= params.diagonal_tolerance,
                    format!("relative asymmetry {r:.2e}"),
                );
            }
        }
    }
    for i in 0..n {
        if is_real(&exp.functions[i]) {
            let [q, c] = values[i][i];
            let d = rel(c, q);
            report.check(
                format!("real diagonal quantum = classical ({})", exp.ids[i]),
                d <= params.diagonal_tolerance,
                format!("relative difference {d:.2e}"),
            );
        }
    }
    for pair in &params.orthogonal_pairs {
        let [a, b] = &pair.pair;
        let (fa, fb) = (exp.mode(a)?, exp.mode(b)?);
        let v = shell::ip(fa, fb, pair.kernel, cfg)?;
        let scale = (shell::ip(fa, fa, pair.kernel, cfg)?.norm() * shell::ip(fb, fb, pair.kernel, cfg)?.norm()).sqrt();
        let r = v.norm() / scale;
        report.check(
            format!("{} orthogonality ({a}, {b})", pair.kernel),
            r <= params.orthogonal_tolerance,
            format!("|ip| / norm = {r:.2e}"),
        );
    }
    report.meta("modes", json!(exp.ids));
    Ok(report)
}

pub fn commutator_scan(exp: &Experiment) -> Result<Report> {
    let params = &exp.config.commutator_scan;
    let cfg = exp.shell();
    let (fid, gid) = two(exp, &params.f, &params.g, "commutator-scan")?;
    let f = exp.mode(&fid)?;
    let g = exp.mode(&gid)?;
    if !f.is_compact() || !g.is_compact() {
        return Err(UsageError("commutator-scan needs compactly supported (bump or grid) modes".into()).into());
    }
    if params.offsets.is_empty() {
        return Err(UsageError("commutator-scan needs at least one offset".into()).into());
    }
    let mut report = Report::new("commutator-scan", SCAN_COLUMNS);
    let scale = [f, g]
        .iter()
        .map(|h| shell::classical_ip(&h.conjugate(), h, cfg).map(|v| v.norm()))
        .collect::<shellfield::Result<Vec<_>>>()?
        .into_iter()
        .fold(1.0, f64::max);
    let mut worst_classical = 0.0f64;
    let mut worst_spacelike: Option<f64> = None;
    let mut best_timelike: Option<f64> = None;
    for offset in &params.offsets {
        ensure!(offset.len() == cfg.dimension, "offset {offset:?} does not match dimension {}", cfg.dimension);
        let shifted = g.translate(&SpacetimePoint(offset.clone()))?;
        let sep = f.separation(&shifted)?;
        let q = shell::commutator_kernel(f, &shifted, KernelKind::Quantum, cfg)?;
        let c = shell::commutator_kernel(f, &shifted, KernelKind::Classical, cfg)?;
        worst_classical = worst_classical.max(c.norm());
        match sep {
            Separation::Spacelike => worst_spacelike = Some(worst_spacelike.unwrap_or(0.0).max(q.norm())),
            Separation::Timelike => best_timelike = Some(best_timelike.unwrap_or(0.0).max(q.norm())),
            Separation::Lightlike => {}
        }
        let label = offset.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        report.push(vec![text(label), text(sep.to_string()), num(q.norm()), num(c.norm()), num(q.re), num(q.im)]);
    }
    report.check(
        "classical commutator vanishes",
        worst_classical <= params.classical_tolerance * scale,
        format!("max |[φ_f, φ_g]| = {worst_classical:.2e}, limit {:.1e}", params.classical_tolerance * scale),
    );
    if let (Some(s), Some(t)) = (worst_spacelike, best_timelike) {
        report.check(
            "quantum microcausality",
            s <= params.microcausality_ratio * t,
            format!("max spacelike {s:.2e} vs max timelike {t:.2e} (ratio limit {:.0e})", params.microcausality_ratio),
        );
    }
    report.meta("f", json!(fid));
    report.meta("g", json!(gid));
    Ok(report)
}

pub fn symmetry(exp: &Experiment) -> Result<Report> {
    let params = &exp.config.symmetry;
    let cfg = exp.shell();
    let (fid, gid) = two(exp, &params.f, &params.g, "symmetry")?;
    let f = exp.mode(&fid)?;
    let g = exp.mode(&gid)?;
    if f.is_compact() || g.is_compact() {
        return Err(UsageError("symmetry needs packet modes".into()).into());
    }
    let translation = if params.translation.is_empty() { vec![1.0; cfg.dimension] } else { params.translation.clone() };
    let a = SpacetimePoint(translation);
    let transforms: Vec<(&str, TestFunction, TestFunction)> = vec![
        ("translate", f.translate(&a)?, g.translate(&a)?),
        ("boost", f.boost(params.rapidity, params.axis)?, g.boost(params.rapidity, params.axis)?),
        ("parity", f.parity_reverse(), g.parity_reverse()),
        ("time_reversal", f.time_reverse(), g.time_reverse()),
    ];
    let mut report = Report::new("symmetry", SYMMETRY_COLUMNS);
    let row = |report: &mut Report, name: &str, kind: &str, base: Complex64, t: Complex64, threshold: Option<(bool, f64)>| {
        let change = rel(t, base);
        let (label, pass) = match threshold {
            Some((true, lim)) => (format!("<= {lim:e}"), Some(change <= lim)),
            Some((false, lim)) => (format!(">= {lim:e}"), Some(change >= lim)),
            None => (String::new(), None),
        };
        report.push(vec![
            text(name),
            text(kind),
            num(base.re),
            num(base.im),
            num(t.re),
            num(t.im),
            num(change),
            text(label.clone()),
            pass.map_or(Value::Null, Value::Bool),
        ]);
        if let Some(p) = pass {
            report.check(format!("{name} ({kind})"), p, format!("relative change {change:.2e}, required {label}"));
        }
    };
    for kind in SCALAR_KERNELS {
        let base = shell::ip(f, g, kind, cfg)?;
        for (name, tf, tg) in &transforms {
            let t = shell::ip(tf, tg, kind, cfg)?;
            let threshold = match (*name, kind) {
                ("time_reversal", KernelKind::Quantum) => None,
                ("time_reversal", _) => Some((true, params.time_reversal_tolerance)),
                _ => Some((true, params.invariance_tolerance)),
            };
            row(&mut report, name, kind.name(), base, t, threshold);
        }
    }
    if let Some(w) = &params.witness {
        let h = exp.mode(w)?;
        let th = h.time_reverse();
        for kind in SCALAR_KERNELS {
            let base = shell::ip(h, h, kind, cfg)?;
            let t = shell::ip(&th, &th, kind, cfg)?;
            let threshold = match kind {
                KernelKind::Quantum => (false, params.witness_min_change),
                _ => (true, params.time_reversal_tolerance),
            };
            row(&mut report, "time_reversal_witness", kind.name(), base, t, Some(threshold));
        }
    }
    let c = shell::classical_ip(f, g, cfg)?;
    let q = shell::quantum_ip(f, g, cfg)?;
    let qt = shell::quantum_ip(&f.time_reverse(), &g.time_reverse(), cfg)?;
    let residual = (qt + q - c * 2.0).norm();
    let scale = q.norm().max(qt.norm()).max(c.norm());
    let r = residual / scale;
    report.push(vec![
        text("two_shell_identity"),
        text("both"),
        num((q + qt).re),
        num((q + qt).im),
        num((c * 2.0).re),
        num((c * 2.0).im),
        num(r),
        text(format!("<= {:e}", params.two_shell_tolerance)),
        Value::Bool(r <= params.two_shell_tolerance),
    ]);
    report.check(
        "two-shell identity",
        r <= params.two_shell_tolerance,
        format!("|q(Tf,Tg) + q(f,g) − 2c(f,g)| / scale = {r:.2e}"),
    );
    report.meta("f", json!(fid));
    report.meta("g", json!(gid));
    Ok(report)
}

fn double_factorial(k: usize) -> f64 {
    (1..=k).map(|i| (2 * i - 1) as f64).product()
}

pub fn moments(exp: &Experiment) -> Result<Report> {
    let params = &exp.config.moments;
    let cfg = exp.shell();
    if params.max_k > 5 {
        return Err(UsageError(format!("moments supports k ≤ 5, got {}", params.max_k)).into());
    }
    let ids: Vec<String> = if params.modes.is_empty() { exp.ids.clone() } else { params.modes.clone() };
    if ids.is_empty() {
        return Err(UsageError("moments needs at least one mode".into()).into());
    }
    let mut report = Report::new("moments", MOMENT_COLUMNS);
    for kind in &params.kernels {
        let mut ctx = FockContext::new(*kind, cfg.clone())?;
        for id in &ids {
            let l = ctx.register(id, exp.mode(id)?.clone())?;
            let lc = ctx.conjugate(l)?;
            let var = ctx.ip(lc, l)?;
            let mut worst_even = 0.0f64;
            let mut worst_odd = 0.0f64;
            for order in 1..=2 * params.max_k {
                let v = ctx.field_moment(l, order)?;
                let (reference, err, pass) = if order % 2 == 0 {
                    let k = order / 2;
                    let r = var.powu(k as u32) * double_factorial(k);
                    let e = rel(v, r);
                    worst_even = worst_even.max(e);
                    (r, e, e <= params.relative_tolerance)
                } else {
                    worst_odd = worst_odd.max(v.norm());
                    (Complex64::default(), v.norm(), v.norm() <= params.odd_tolerance)
                };
                report.push(vec![
                    text("engine"),
                    text(id),
                    text(kind.name()),
                    json!(order),
                    num(v.re),
                    num(v.im),
                    num(reference.re),
                    num(reference.im),
                    num(err),
                    Value::Null,
                    Value::Null,
                    Value::Bool(pass),
                ]);
            }
            report.check(
                format!("closed form ({id}, {kind})"),
                worst_even <= params.relative_tolerance && worst_odd <= params.odd_tolerance,
                format!("even relative error {worst_even:.2e}, odd magnitude {worst_odd:.2e}"),
            );
        }
    }
    if let Some(mc) = &params.monte_carlo {
        let modes = ModeSet::new(ids.iter().map(|id| Ok((id.clone(), exp.mode(id)?.clone()))).collect::<Result<_>>()?)?;
        let gm = rf::gram(&modes, KernelKind::Classical, cfg)?;
        let mut ctx = FockContext::new(KernelKind::Classical, cfg.clone())?;
        let labels = ids.iter().map(|id| Ok(ctx.register(id, exp.mode(id)?.clone())?)).collect::<Result<Vec<_>>>()?;
        let mut predicted = Vec::new();
        for &l in &labels {
            predicted.push(mc.orders.iter().map(|&o| ctx.field_moment(l, o)).collect::<shellfield::Result<Vec<_>>>()?);
        }
        let run = |seed: u64| -> Result<(bool, Vec<Vec<Value>>)> {
            let batch = rf::sample(&gm, mc.n, seed)?;
            let mut rows = Vec::new();
            let mut ok = true;
            for (i, id) in ids.iter().enumerate() {
                let est = rf::empirical_moments(&batch, i, &mc.orders)?;
                for (e, p) in est.iter().zip(&predicted[i]) {
                    let d = (e.value - p).norm();
                    let z = if d == 0.0 { 0.0 } else { d / e.stderr };
                    ok &= z <= mc.z_limit;
                    rows.push(vec![
                        text("monte_carlo"),
                        text(id),
                        text("classical"),
                        json!(e.order),
                        num(e.value.re),
                        num(e.value.im),
                        num(p.re),
                        num(p.im),
                        num(d),
                        num(e.stderr),
                        num(z),
                        Value::Bool(z <= mc.z_limit),
                    ]);
                }
            }
            Ok((ok, rows))
        };
        let mut seed = mc.seed;
        let (mut ok, mut rows) = run(seed)?;
        let mut retried = false;
        if !ok {
            retried = true;
            seed = mc.seed ^ 0x9e37_79b9_7f4a_7c15;
            (ok, rows) = run(seed)?;
        }
        for r in rows {
            report.push(r);
        }
        report.check(
            "Monte Carlo moments within z limit",
            ok,
            format!("n = {}, seed {seed}{}", mc.n, if retried { " (reseeded retry)" } else { "" }),
        );
        report.meta("generator", json!(rf::GENERATOR));
        report.meta("seed", json!(seed));
        report.meta("retried", json!(retried));
    }
    Ok(report)
}

pub fn resonance(exp: &Experiment) -> Result<Report> {
    let params = &exp.config.resonance;
    let cfg = exp.shell();
    if params.pairs.is_empty() && params.witness_pairs.is_empty() {
        return Err(UsageError("resonance needs pairs or witness_pairs".into()).into());
    }
    let mut report = Report::new("resonance", RESONANCE_COLUMNS);
    let mut any_ok = false;
    let mut in_range = true;
    for kind in &params.kernels {
        let mut ctx = FockContext::new(*kind, cfg.clone())?;
        for (id, f) in exp.ids.iter().zip(&exp.functions) {
            ctx.register(id, f.clone())?;
        }
        for [det, state] in &params.pairs {
            let result = (|| -> Result<f64> {
                let d = ctx.label(det)?;
                let psi = if state == "vacuum" { FockState::vacuum() } else { FockState::one_particle(ctx.label(state)?) };
                Ok(ctx.resonance_probability(d, &psi)?)
            })();
            match result {
                Ok(p) => {
                    any_ok = true;
                    let pass = (0.0..=1.0 + params.probability_slack).contains(&p);
                    in_range &= pass;
                    report.push(vec![
                        text("probability"),
                        text(det),
                        text(state),
                        text(kind.name()),
                        Value::Null,
                        num(p),
                        Value::Null,
                        Value::Bool(pass),
                        Value::Null,
                    ]);
                }
                Err(e) => report.push(vec![
                    text("probability"),
                    text(det),
                    text(state),
                    text(kind.name()),
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    Value::Null,
                    text(format!("{e:#}")),
                ]),
            }
        }
    }
    if !params.pairs.is_empty() {
        report.check(
            "probabilities in [0, 1]",
            in_range,
            format!("slack {:.0e}", params.probability_slack),
        );
    }
    let mut witness_ok = true;
    for [a, b] in &params.witness_pairs {
        let result = (|| -> Result<(f64, f64, Option<Separation>)> {
            let (fa, fb) = (exp.mode(a)?, exp.mode(b)?);
            let w = shellfield::fock::resonance_nonlocality_witness(fa, fb, cfg)?;
            let fg = shell::quantum_ip(fa, fb, cfg)?;
            let p = fg.norm_sqr() / (shell::quantum_ip(fa, fa, cfg)?.re * shell::quantum_ip(fb, fb, cfg)?.re);
            let sep = fa.separation(fb).ok();
            Ok((w, (p * (1.0 - p)).max(0.0).sqrt(), sep))
        })();
        match result {
            Ok((w, oracle, sep)) => {
                any_ok = true;
                let agrees = (w - oracle).abs() <= 1e-10 * oracle.max(1e-12);
                let positive = sep != Some(Separation::Spacelike) || w > 0.0;
                witness_ok &= agrees && positive;
                report.push(vec![
                    text("witness"),
                    text(a),
                    text(b),
                    text("quantum"),
                    sep.map_or(Value::Null, |s| text(s.to_string())),
                    num(w),
                    num(oracle),
                    Value::Bool(agrees && positive),
                    Value::Null,
                ]);
            }
            Err(e) => report.push(vec![
                text("witness"),
                text(a),
                text(b),
                text("quantum"),
                Value::Null,
                Value::Null,
                Value::Null,
                Value::Null,
                text(format!("{e:#}")),
            ]),
        }
    }
    if !params.witness_pairs.is_empty() {
        report.check(
            "witness matches 2×2 oracle, positive for spacelike pairs",
            witness_ok,
            "oracle √(p(1−p)), tolerance 1e-10 relative".to_string(),
        );
    }
    if !any_ok {
        bail!("every resonance row failed");
    }
    Ok(report)
}

pub fn factor2(exp: &Experiment) -> Result<Report> {
    let params = &exp.config.factor2;
    let cfg = exp.shell();
    let pairs: Vec<[String; 2]> = if params.pairs.is_empty() {
        (0..exp.ids.len())
            .flat_map(|i| (i..exp.ids.len()).map(move |j| (i, j)))
            .map(|(i, j)| [exp.ids[i].clone(), exp.ids[j].clone()])
            .collect()
    } else {
        params.pairs.clone()
    };
    if pairs.is_empty() {
        return Err(UsageError("factor2 needs at least one mode".into()).into());
    }
    let mut report = Report::new("factor2", FACTOR2_COLUMNS);
    let mut worst = 0.0f64;
    for [a, b] in &pairs {
        let (fa, fb) = (exp.mode(a)?, exp.mode(b)?);
        let pa = fa.positive_frequency_projection().with_context(|| format!("projecting '{a}'"))?;
        let pb = fb.positive_frequency_projection().with_context(|| format!("projecting '{b}'"))?;
        let already = pa == *fa && pb == *fb;
        let mut emit = |f: &TestFunction, g: &TestFunction, projected: bool| -> Result<()> {
            let q = shell::quantum_ip(f, g, cfg)?;
            let c = shell::classical_ip(f, g, cfg)?;
            let residual = (q - c * 2.0).norm();
            let relative = residual / q.norm().max(1e-300);
            let ratio = if c.norm() > 0.0 { num((q / c).re) } else { Value::Null };
            let pass = projected.then_some(relative <= params.tolerance);
            if projected {
                worst = worst.max(relative);
            }
            report.push(vec![
                text(a),
                text(b),
                Value::Bool(projected),
                Value::Bool(already),
                num(q.re),
                num(q.im),
                num(c.re),
                num(c.im),
                ratio,
                num(residual),
                num(relative),
                pass.map_or(Value::Null, Value::Bool),
            ]);
            Ok(())
        };
        emit(&pa, &pb, true)?;
        if params.control && !already {
            emit(fa, fb, false)?;
        }
    }
    report.check(
        "quantum = 2 × classical on projected modes",
        worst <= params.tolerance,
        format!("max |q − 2c| / |q| = {worst:.2e}, limit {:.0e}", params.tolerance),
    );
    Ok(report)
}
