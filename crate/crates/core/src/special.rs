//! Faddeeva function `w(z) = exp(-z²) erfc(-iz)`.
//!
//! Weideman's rational expansion with 40 terms; relative error is below
//! about 3e-14 in the closed upper half plane. The lower half plane uses the
//! reflection `w(z) = 2 exp(-z²) - w(-z)`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

const TERMS: usize = 40;

struct Expansion {
    scale: f64,
    coeffs: [f64; TERMS],
}

fn expansion() -> &'static Expansion {
    static CELL: OnceLock<Expansion> = OnceLock::new();
    CELL.get_or_init(|| {
        let m = 2 * TERMS;
        let len = 2 * m;
        let scale = (TERMS as f64 / std::f64::consts::SQRT_2).sqrt();
        // samples[0] = 0, samples[1 + j] for k = -m+1 ..= m-1
        let mut samples = vec![0.0; len];
        for (j, k) in (-(m as i64) + 1..m as i64).enumerate() {
            let theta = k as f64 * PI / m as f64;
            let t = scale * (theta / 2.0).tan();
            samples[j + 1] = (-t * t).exp() * (scale * scale + t * t);
        }
        let mut coeffs = [0.0; TERMS];
        for (j, c) in coeffs.iter_mut().enumerate() {
            let freq = j + 1;
            let mut acc = 0.0;
            for n in 0..len {
                // fftshift by len/2
                let x = samples[(n + len / 2) % len];
                acc += x * (2.0 * PI * (freq * n) as f64 / len as f64).cos();
            }
            *c = acc / len as f64;
        }
        Expansion { scale, coeffs }
    })
}

fn upper(z: Complex64) -> Complex64 {
    let e = expansion();
    let i = Complex64::i();
    let denom = e.scale - i * z;
    let big_z = (e.scale + i * z) / denom;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in e.coeffs.iter().rev() {
        p = p * big_z + c;
    }
    2.0 * p / (denom * denom) + (1.0 / PI.sqrt()) / denom
}

pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im >= 0.0 {
        upper(z)
    } else {
        2.0 * (-z * z).exp() - upper(-z)
    }
}

/// Complementary error function for complex argument.
pub fn erfc(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    if z.re >= 0.0 {
        (-z * z).exp() * upper(i * z)
    } else {
        2.0 - (-z * z).exp() * upper(-i * z)
    }
}
