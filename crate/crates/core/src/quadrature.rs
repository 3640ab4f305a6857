//! One-dimensional node rules used by the shell integrator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    #[default]
    GaussLegendre,
    /// Composite midpoint rule (the trapezoid rule on a staggered grid, so the
    /// origin is never a node for even counts).
    Trapezoid,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// three-term recurrence. Nodes are returned in ascending order and are
/// exactly antisymmetric about zero.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Tricomi initial guess for the i-th largest root
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Nodes and weights of `rule` on `[-half_width, half_width]`.
pub fn nodes(rule: Rule, n: usize, half_width: f64) -> (Vec<f64>, Vec<f64>) {
    match rule {
        Rule::GaussLegendre => {
            let (x, w) = gauss_legendre(n);
            (
                x.into_iter().map(|v| v * half_width).collect(),
                w.into_iter().map(|v| v * half_width).collect(),
            )
        }
        Rule::Trapezoid => {
            let h = 2.0 * half_width / n as f64;
            let mid = n as f64 / 2.0;
            let x = (0..n).map(|i| (i as f64 + 0.5 - mid) * h).collect();
            (x, vec![h; n])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        // degree 30 monomial: integral over [-1,1] is 2/31
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_orders_stay_accurate() {
        let (x, w) = gauss_legendre(1024);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (3.0 * x).cos()).sum();
        assert!((s - 2.0 * 3f64.sin() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn nodes_are_symmetric() {
        for n in [16, 17, 64] {
            let (x, w) = gauss_legendre(n);
            for i in 0..n {
                assert_eq!(x[i], -x[n - 1 - i]);
                assert_eq!(w[i], w[n - 1 - i]);
            }
        }
        let (x, _) = nodes(Rule::Trapezoid, 32, 2.0);
        assert!(x.iter().all(|v| *v != 0.0));
        assert_eq!(x[0], -x[31]);
    }

    #[test]
    fn midpoint_rule_on_gaussian() {
        let (x, w) = nodes(Rule::Trapezoid, 200, 10.0);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp()).sum();
        assert!((s - PI.sqrt()).abs() < 1e-13);
    }
}
