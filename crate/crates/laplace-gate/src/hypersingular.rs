//! Solver for the convolution equation
//! `q(t) + (1/Γ(λ)) ∫_0^t (t-τ)^{λ-1} q(τ) dτ = f(t)`
//! through the transform domain: `L(q) = L(f)/(1 + p^{-λ})`.
//!
//! For `0 < λ < 2` the kernel integral exists classically and a
//! product-integration march provides an independent oracle. For negative
//! `λ` the integral diverges classically and the transform-domain route is
//! the *definition* of the solution; verification is then the operator
//! residual plus the bounded/causal/`q(0)=0` conclusions, never a
//! time-domain quadrature.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::admissibility::{assess, AdmissibilityReport, ProbeSettings, Verdict};
use crate::analytic_core::{gamma, principal_power, EvalError, TailBound, TimeSignal, TransformFunction};
use crate::forward::{operator_residual, ForwardError, ResidualSample, TimeDomainInput};
use crate::inversion::{invert, InversionError, InversionSettings};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("lambda must satisfy 0 < |lambda| < 2 (got {0})")]
    LambdaOutOfRange(f64),
    #[error("constructed transform judged {verdict:?}; solve refused")]
    NotAdmissible {
        verdict: Verdict,
        report: Box<AdmissibilityReport>,
    },
    #[error("time grid must start at 0 and be strictly increasing")]
    BadGrid,
    #[error("grid must be uniform for the product-integration oracle")]
    NonUniformGrid,
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Forward(#[from] ForwardError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `Q(p) = F_f(p) / (1 + p^{-λ})`.
///
/// The principal branch keeps `|arg p^{-λ}| ≤ |λ|π/2 < π` on the closed
/// right half-plane, so the denominator never vanishes there; `λ` outside
/// `(-2, 0) ∪ (0, 2)` is refused for exactly that reason.
pub fn transform_side(
    f_transform: &TransformFunction,
    lambda: f64,
) -> Result<TransformFunction, SolveError> {
    if lambda == 0.0 || !(lambda.abs() < 2.0) {
        return Err(SolveError::LambdaOutOfRange(lambda));
    }
    let inner = f_transform.clone();
    let label = format!("({}) / (1 + p^{})", f_transform.label, fmt_float(-lambda));
    Ok(TransformFunction::new(label, move |p: Complex64| {
        if p.re == 0.0 && p.im == 0.0 {
            // continuity at the branch point: |p^{-λ}| -> ∞ for λ > 0 kills
            // the quotient; for λ < 0 the power vanishes instead
            return if lambda > 0.0 {
                Ok(Complex64::new(0.0, 0.0))
            } else {
                inner.eval(p)
            };
        }
        let denom = Complex64::new(1.0, 0.0) + principal_power(p, -lambda)?;
        Ok(inner.eval(p)? / denom)
    }))
}

fn fmt_float(x: f64) -> String {
    format!("{x}")
}

/// Everything the transform-route solve needs beyond the grids.
#[derive(Debug, Clone)]
pub struct SolveSettings {
    pub inversion: InversionSettings,
    pub probe: ProbeSettings,
    /// Acceptance threshold on |q(0)|.
    pub q0_tol: f64,
    /// Acceptance threshold on each operator-residual magnitude.
    pub residual_tol: f64,
    /// Accuracy of the forward transforms inside the residual check.
    pub forward_tol: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        SolveSettings {
            inversion: InversionSettings::default(),
            probe: ProbeSettings::default(),
            q0_tol: 2e-3,
            residual_tol: 5e-3,
            forward_tol: 1e-8,
        }
    }
}

/// Default `p` samples for the operator-residual check.
pub const DEFAULT_RESIDUAL_P: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Outcome of a transform-route solve.
#[derive(Debug, Clone, Serialize)]
pub struct HyperSolveResult {
    #[serde(skip)]
    pub q: TimeSignal,
    pub q_report: AdmissibilityReport,
    pub residuals: Vec<ResidualSample>,
    pub q0_magnitude: f64,
    pub sup_estimate: f64,
    /// True when the report is admissible, |q(0)| and all residuals are
    /// within tolerance, and the inversion converged.
    pub verified: bool,
}

/// Solve the convolution equation through the transform domain.
///
/// Pipeline: build `Q`, assess it, invert it on `t_grid`, then check the
/// operator residual at `residual_p`. Refuses when `Q` is judged
/// inadmissible (or inconclusive on a nonzero transform).
pub fn solve(
    f_transform: &TransformFunction,
    lambda: f64,
    t_grid: &[f64],
    settings: &SolveSettings,
    residual_p: &[Complex64],
) -> Result<HyperSolveResult, SolveError> {
    if t_grid.is_empty() || t_grid[0] != 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(SolveError::BadGrid);
    }
    let q_transform = transform_side(f_transform, lambda)?;

    // trivial zero right-hand side: q ≡ 0 without any quadrature
    if transform_is_zero(f_transform) {
        let report = assess(&q_transform, &settings.probe);
        let mut q = TimeSignal::new(
            t_grid.to_vec(),
            vec![Complex64::new(0.0, 0.0); t_grid.len()],
        )
        .map_err(|_| SolveError::BadGrid)?;
        q.tail_bound = Some(TailBound::Exponential { scale: 0.0, rate: 1.0 });
        let residuals = operator_residual(
            TimeDomainInput::Signal(&q),
            lambda,
            f_transform,
            residual_p,
            settings.forward_tol,
        )?;
        let verified = report.verdict == Verdict::Admissible
            && residuals.iter().all(|r| r.magnitude <= settings.residual_tol);
        return Ok(HyperSolveResult {
            q,
            q_report: report,
            residuals,
            q0_magnitude: 0.0,
            sup_estimate: 0.0,
            verified,
        });
    }

    let report = assess(&q_transform, &settings.probe);
    if report.verdict != Verdict::Admissible && !settings.inversion.force {
        return Err(SolveError::NotAdmissible {
            verdict: report.verdict,
            report: Box::new(report),
        });
    }

    let mut q = invert(&q_transform, t_grid, &settings.inversion, &report)?;
    q.tail_bound = Some(fit_tail_envelope(&q));

    let residuals = operator_residual(
        TimeDomainInput::Signal(&q),
        lambda,
        f_transform,
        residual_p,
        settings.forward_tol,
    )?;

    let q0_magnitude = q.values[0].norm();
    let verified = report.verdict == Verdict::Admissible
        && !q.low_confidence
        && q0_magnitude <= settings.q0_tol
        && residuals.iter().all(|r| r.magnitude <= settings.residual_tol);

    Ok(HyperSolveResult {
        sup_estimate: q.sup_estimate,
        q,
        q_report: report,
        residuals,
        q0_magnitude,
        verified,
    })
}

fn transform_is_zero(f: &TransformFunction) -> bool {
    let probes = [
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 3.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -17.0),
        Complex64::new(0.0, 250.0),
        Complex64::new(4.0, -40.0),
    ];
    probes
        .iter()
        .all(|&p| matches!(f.eval(p), Ok(v) if v.norm() == 0.0))
}

/// Fit a decaying envelope to the last quarter of a signal, preferring the
/// model (exponential vs power) with the smaller log-space residual. The
/// intercept is shifted up so the envelope dominates the fitted window.
fn fit_tail_envelope(signal: &TimeSignal) -> TailBound {
    let n = signal.t_grid.len();
    let start = (3 * n) / 4;
    let pts: Vec<(f64, f64)> = signal.t_grid[start..]
        .iter()
        .zip(&signal.values[start..])
        .filter(|(t, v)| **t > 0.0 && v.norm() > 1e-300)
        .map(|(t, v)| (*t, v.norm().ln()))
        .collect();
    if pts.len() < 4 {
        return TailBound::Exponential {
            scale: if signal.sup_estimate > 0.0 { signal.sup_estimate } else { 0.0 },
            rate: 0.0,
        };
    }

    let fit = |xs: &[f64], ys: &[f64]| -> (f64, f64, f64) {
        let m = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        let icept = (sy - slope * sx) / m;
        let worst = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| y - (slope * x + icept))
            .fold(f64::NEG_INFINITY, f64::max);
        (slope, icept, worst)
    };

    let ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let logt: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();

    let (s_exp, i_exp, w_exp) = fit(&ts, &ys);
    let (s_pow, i_pow, w_pow) = fit(&logt, &ys);

    let rms = |slope: f64, icept: f64, xs: &[f64]| -> f64 {
        let ss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - (slope * x + icept);
                r * r
            })
            .sum();
        (ss / xs.len() as f64).sqrt()
    };

    let exp_ok = s_exp < 0.0;
    let pow_ok = s_pow < 0.0;
    match (exp_ok, pow_ok) {
        (true, false) => TailBound::Exponential {
            scale: (i_exp + w_exp).exp(),
            rate: -s_exp,
        },
        (false, true) => TailBound::Polynomial {
            scale: (i_pow + w_pow).exp(),
            power: -s_pow,
        },
        (true, true) => {
            if rms(s_exp, i_exp, &ts) <= rms(s_pow, i_pow, &logt) {
                TailBound::Exponential {
                    scale: (i_exp + w_exp).exp(),
                    rate: -s_exp,
                }
            } else {
                TailBound::Polynomial {
                    scale: (i_pow + w_pow).exp(),
                    power: -s_pow,
                }
            }
        }
        // not decaying on the window: declare a flat bound at the sup
        (false, false) => TailBound::Exponential {
            scale: signal.sup_estimate,
            rate: 0.0,
        },
    }
}

/// Classical product-integration oracle for `0 < λ < 2`.
///
/// Treats `q` as piecewise linear and integrates the kernel against the hat
/// basis exactly, which turns the equation into a lower-triangular march:
/// one scalar solve per step. Second-order accurate for smooth data; at
/// `λ = 1` it reduces to the trapezoidal rule.
pub fn oracle_volterra(f_samples: &TimeSignal, lambda: f64) -> Result<TimeSignal, SolveError> {
    if !(lambda > 0.0) {
        return Err(SolveError::LambdaOutOfRange(lambda));
    }
    let h = f_samples.uniform_step().ok_or(SolveError::NonUniformGrid)?;
    if !(h > 0.0) {
        return Err(SolveError::NonUniformGrid);
    }
    if f_samples.t_grid[0] != 0.0 {
        return Err(SolveError::BadGrid);
    }
    let n = f_samples.t_grid.len();
    let gamma_l = gamma(lambda)?;

    // Hat-function moments of the kernel over one segment at lag m:
    //   a[m] multiplies the left node, b[m] the right node.
    let hl = h.powf(lambda);
    let mut a = vec![0.0f64; n];
    let mut b = vec![0.0f64; n];
    for m in 1..n {
        let mf = m as f64;
        let m0 = mf - 1.0;
        let pw = |x: f64, e: f64| if x == 0.0 { 0.0 } else { x.powf(e) };
        let d_hi = (pw(mf, lambda + 1.0) - pw(m0, lambda + 1.0)) / (lambda + 1.0);
        let d_lo = (pw(mf, lambda) - pw(m0, lambda)) / lambda;
        a[m] = hl * (d_hi - m0 * d_lo);
        b[m] = hl * (mf * d_lo - d_hi);
    }

    let mut q = vec![Complex64::new(0.0, 0.0); n];
    q[0] = f_samples.values[0];
    let diag = 1.0 + b[1] / gamma_l;
    for i in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..i {
            let m = i - j;
            acc += q[j] * a[m];
            if j + 1 < i {
                acc += q[j + 1] * b[m];
            }
        }
        q[i] = (f_samples.values[i] - acc / gamma_l) / diag;
    }

    let mut out =
        TimeSignal::new(f_samples.t_grid.clone(), q).map_err(|_| SolveError::BadGrid)?;
    out.tail_bound = f_samples.tail_bound;
    Ok(out)
}
