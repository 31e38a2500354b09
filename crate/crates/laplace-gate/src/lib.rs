//! Numerical gatekeeping for Laplace transforms on the right half-plane.
//!
//! Given an analytic candidate `F(p)`, the crate probes the sufficient
//! conditions for `F` to be the transform of a bounded causal signal with
//! `f(0) = 0` (axis decay with exponent `b > 1`, uniform semicircle decay,
//! a `C/s` growth bound, and vanishing Cauchy loop integrals), inverts the
//! transform along the imaginary axis with an explicit truncation budget,
//! and uses the same machinery to solve Volterra convolution equations whose
//! kernel `(t-τ)^{λ-1}/Γ(λ)` is hyper-singular for negative `λ`.
//!
//! The workhorse modules:
//!
//! * [`analytic_core`] — principal powers, the gamma function, and a catalog
//!   of closed-form transform pairs used as oracles throughout the tests.
//! * [`admissibility`] — the four numeric condition checks and the combined
//!   verdict.
//! * [`inversion`] — the truncated axis integral, partial sums `I_N`, and
//!   post-inversion verification (boundedness, `f(0)=0`, causality).
//! * [`forward`] — numerical forward transforms and the transform-domain
//!   operator residual.
//! * [`hypersingular`] — the transform-route solver for the convolution
//!   equation together with a classical product-integration oracle.
//! * [`cli`] — the `laplace-gate` command-line front end and its expression
//!   parser.
//!
//! ```
//! use laplace_gate::{assess, catalog, invert, InversionSettings, ProbeSettings, Verdict};
//!
//! let pair = catalog().into_iter().find(|p| p.name == "t_exp").unwrap();
//! let report = assess(&pair.transform, &ProbeSettings::default());
//! assert_eq!(report.verdict, Verdict::Admissible);
//!
//! let signal = invert(
//!     &pair.transform,
//!     &[0.0, 1.0],
//!     &InversionSettings::default(),
//!     &report,
//! )
//! .unwrap();
//! // f(t) = t e^{-t}: zero at the origin, 1/e at t = 1
//! assert!(signal.values[0].norm() < 1e-4);
//! assert!((signal.values[1].re - (-1.0f64).exp()).abs() < 1e-4);
//! ```

// Coefficient tables are kept at their published precision, and guards of
// the form `!(x > 0.0)` are deliberate: they reject NaN where `x <= 0.0`
// would let it through.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod admissibility;
pub mod analytic_core;
pub mod cli;
pub mod expr;
pub mod forward;
pub mod hypersingular;
pub mod inversion;
pub mod quadrature;
pub mod report;

pub use analytic_core::{
    catalog, gamma, principal_power, EvalError, TailBound, TimeSignal, TransformFunction,
    TransformPair,
};
pub use admissibility::{assess, AdmissibilityReport, ProbeSettings, Verdict};
pub use inversion::{invert, InversionSettings};
