//! Smeared free fields on the mass shell: test functions, quantum and
//! classical shell pairings, creation/annihilation algebra with Wick
//! contraction, and a Gaussian random-field sampler.
//!
//! Conventions: metric (+,−,…,−), `f̃(k) = ∫ f(x) e^{i(k₀t − k⃗·x⃗)} dᵈx`,
//! spacetime dimension 2 to 4 with time first.
//!
//! ```
//! use num_complex::Complex64;
//! use shellfield::shell::{quantum_ip, ShellConfig};
//! use shellfield::testfn::TestFunction;
//!
//! let cfg = ShellConfig::new(1.0, 2)?;
//! let f = TestFunction::gaussian(Complex64::new(1.0, 0.0), &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0])?;
//! let norm = quantum_ip(&f, &f, &cfg)?;
//! assert!((norm.re - 1.3226872821587789).abs() < 1e-10 && norm.im.abs() < 1e-12);
//! # Ok::<(), shellfield::Error>(())
//! ```

pub mod error;
pub mod exec;
pub mod fock;
pub mod lorentz;
pub mod quadrature;
pub mod rf;
pub mod shell;
pub mod special;
pub mod testfn;

pub use error::{Error, Result};
