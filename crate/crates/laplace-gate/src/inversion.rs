//! Inversion along the imaginary axis.
//!
//! `f(t) = (1/2π) ∫_{-H}^{H} e^{itη} F(iη) dη` with `H` chosen from the
//! fitted decay envelope so the discarded tail is below half the error
//! budget; the quadrature is refined until successive estimates differ by
//! less than the other half. Truncation is symmetric — that is what makes
//! the `f(0) = 0` cancellation visible numerically.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::admissibility::{AdmissibilityReport, Verdict};
use crate::analytic_core::{EvalError, TimeSignal, TransformFunction};
use crate::quadrature::{adaptive_gk15, fourier_many, FourierSettings};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InversionSettings {
    /// Target total error per output point (tail + quadrature).
    pub tol: f64,
    /// Cap on the truncation frequency.
    pub h_max: f64,
    /// Minimum oscillation resolution at the largest |t| in the grid.
    pub points_per_period: u32,
    /// Maximum number of quadrature refinements.
    pub refine_limit: u32,
    /// Contour abscissa; this crate works on the imaginary axis only.
    pub contour_abscissa: f64,
    /// Invert even when the admissibility verdict is not `admissible`.
    pub force: bool,
}

impl Default for InversionSettings {
    fn default() -> Self {
        InversionSettings {
            tol: 2e-5,
            h_max: 1e6,
            points_per_period: 16,
            refine_limit: 8,
            contour_abscissa: 0.0,
            force: false,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum InversionError {
    #[error("tail integral not summable (b_hat = {b_hat} ≤ 1)")]
    TailNotSummable { b_hat: f64 },
    #[error("invalid inversion settings: {0}")]
    InvalidSettings(&'static str),
    #[error("transform not admissible (verdict {verdict:?}); pass force to override")]
    NotAdmissible { verdict: Verdict },
    #[error("decay constants unavailable and force not set")]
    MissingDecayFit,
    #[error("evaluation failed on the contour: {0}")]
    Eval(#[from] EvalError),
    #[error("time grid must be finite and non-empty")]
    BadGrid,
}

/// Smallest `H` whose fitted-envelope tail `(c/π)·H^{1-b}/(b-1)` is below
/// `tol`, capped at `h_max`. Returns `(H, achieved_tail_bound)`.
pub fn truncation_bound(
    c_hat: f64,
    b_hat: f64,
    tol: f64,
    h_max: f64,
) -> Result<(f64, f64), InversionError> {
    if b_hat <= 1.0 {
        return Err(InversionError::TailNotSummable { b_hat });
    }
    if !(c_hat > 0.0) || !(tol > 0.0) || !(h_max > 0.0) {
        return Err(InversionError::InvalidSettings(
            "truncation needs c_hat > 0, tol > 0, h_max > 0",
        ));
    }
    let h = (c_hat / (PI * tol * (b_hat - 1.0))).powf(1.0 / (b_hat - 1.0));
    let h = if h.is_finite() { h } else { f64::INFINITY };
    let chosen = h.min(h_max);
    let achieved = c_hat / PI * chosen.powf(1.0 - b_hat) / (b_hat - 1.0);
    Ok((chosen, achieved))
}

// Panels never wider than this, so structure of F near the origin is
// resolved even when the time grid alone would not demand it.
const BASE_STEP_CAP: f64 = 0.25;

fn base_step(settings: &InversionSettings, t_absmax: f64) -> f64 {
    if t_absmax > 0.0 {
        (2.0 * PI / (settings.points_per_period as f64 * t_absmax)).min(BASE_STEP_CAP)
    } else {
        BASE_STEP_CAP
    }
}

/// Invert `F` on the given time grid.
///
/// Requires an admissible verdict (or `force`). The returned signal carries
/// `sup_estimate` and a per-point error budget composed of the truncation
/// tail and the last quadrature refinement difference.
pub fn invert(
    f: &TransformFunction,
    t_grid: &[f64],
    settings: &InversionSettings,
    report: &AdmissibilityReport,
) -> Result<TimeSignal, InversionError> {
    if settings.contour_abscissa != 0.0 {
        return Err(InversionError::InvalidSettings(
            "contour abscissa is fixed at 0",
        ));
    }
    if !(settings.tol > 0.0) || !(settings.h_max > 0.0) {
        return Err(InversionError::InvalidSettings(
            "tol and h_max must be positive",
        ));
    }
    if settings.points_per_period < 8 {
        return Err(InversionError::InvalidSettings(
            "points_per_period must be at least 8",
        ));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(InversionError::BadGrid);
    }
    if report.verdict != Verdict::Admissible && !settings.force {
        return Err(InversionError::NotAdmissible {
            verdict: report.verdict,
        });
    }

    // Half the budget goes to the discarded tail, half to the quadrature.
    let tail_budget = settings.tol / 2.0;
    let (h_trunc, achieved) = match (report.c_hat, report.b_hat) {
        (Some(c), Some(b)) if b > 1.0 && c > 0.0 => {
            truncation_bound(c, b, tail_budget, settings.h_max)?
        }
        (_, Some(b)) if !settings.force => return Err(InversionError::TailNotSummable { b_hat: b }),
        _ if !settings.force => return Err(InversionError::MissingDecayFit),
        // forced inversion without a summable fit: integrate to the cap and
        // report an unknown tail
        _ => (settings.h_max, f64::INFINITY),
    };

    let t_absmax = t_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let cfg = FourierSettings {
        base_step: base_step(settings, t_absmax),
        // fourier_many works on the raw integral, before the 1/2π factor
        abs_tol: settings.tol / 2.0 * (2.0 * PI),
        refine_limit: settings.refine_limit,
    };
    let g = |eta: f64| f.eval_axis(eta);
    let result = fourier_many(&g, h_trunc, t_grid, &cfg)?;

    let values: Vec<Complex64> = result.values.iter().map(|v| v / (2.0 * PI)).collect();
    let mut signal =
        TimeSignal::new(t_grid.to_vec(), values).map_err(|_| InversionError::BadGrid)?;
    signal.err_bounds = result
        .errs
        .iter()
        .map(|e| e / (2.0 * PI) + achieved)
        .collect();
    signal.low_confidence = !result.converged || !achieved.is_finite();
    Ok(signal)
}

/// Partial integrals `I_N = (1/2π) ∫_{-N}^{N} F(iη) dη` for each `N`.
///
/// For an admissible transform the sequence decays like `N^{1-b}`; a
/// nonzero limit is the signature of `f(0) ≠ 0`.
pub fn partial_sums(
    f: &TransformFunction,
    n_list: &[f64],
) -> Result<Vec<(f64, Complex64)>, InversionError> {
    if n_list.is_empty()
        || n_list.iter().any(|n| !(n.is_finite() && *n > 0.0))
        || n_list.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(InversionError::InvalidSettings(
            "N list must be positive and increasing",
        ));
    }
    // symmetric pairs folded into one integrand on [0, N]
    let mut g = |eta: f64| -> Result<Complex64, EvalError> {
        Ok(f.eval_axis(eta)? + f.eval_axis(-eta)?)
    };
    let mut out = Vec::with_capacity(n_list.len());
    let mut acc = Complex64::new(0.0, 0.0);
    let mut prev = 0.0f64;
    for &n in n_list {
        let q = adaptive_gk15(&mut g, prev, n, 1e-10, 1e-10, 48)?;
        acc += q.value;
        prev = n;
        out.push((n, acc / (2.0 * PI)));
    }
    Ok(out)
}

/// Default grid of negative times for the causality check.
pub const DEFAULT_NEGATIVE_T: [f64; 5] = [-5.0, -2.0, -1.0, -0.5, -0.1];

/// Default `N` values for the `I_N` table.
pub const DEFAULT_IN_GRID: [f64; 3] = [1e2, 1e3, 1e4];

/// Default threshold for the post-inversion conclusion checks.
pub const DEFAULT_CHECK_TOL: f64 = 1e-3;

/// Post-inversion verification of the expected conclusions.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationRecord {
    pub sup_estimate: f64,
    pub f0_magnitude: f64,
    pub f0_within_tol: bool,
    /// Largest |f(t)| over the negative-t grid.
    pub negative_max: f64,
    pub negative_within_tol: bool,
    /// `(N, Re I_N, Im I_N)` rows.
    pub i_n_table: Vec<(f64, f64, f64)>,
    /// Fitted slope of `log |I_N|` against `log N` (expected `1 - b`).
    pub i_n_slope: Option<f64>,
    /// Threshold used for the scalar checks.
    pub check_tol: f64,
}

/// Check boundedness, `f(0) = 0` and causality on a signal produced by
/// [`invert`], and fit the decay rate of the `I_N` sequence.
pub fn verify_conclusions(
    f: &TransformFunction,
    signal: &TimeSignal,
    negative_t_grid: &[f64],
    settings: &InversionSettings,
    report: &AdmissibilityReport,
    check_tol: f64,
) -> Result<VerificationRecord, InversionError> {
    if negative_t_grid.iter().any(|&t| t >= 0.0) {
        return Err(InversionError::InvalidSettings(
            "negative-t grid must be strictly negative",
        ));
    }

    let f0_magnitude = match signal
        .t_grid
        .iter()
        .position(|&t| t == 0.0)
    {
        Some(i) => signal.values[i].norm(),
        None => invert(f, &[0.0], settings, report)?.values[0].norm(),
    };

    let negative_max = if negative_t_grid.is_empty() {
        0.0
    } else {
        let mut grid = negative_t_grid.to_vec();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        invert(f, &grid, settings, report)?
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    };

    let i_n = partial_sums(f, &DEFAULT_IN_GRID)?;
    let i_n_table: Vec<(f64, f64, f64)> = i_n.iter().map(|(n, v)| (*n, v.re, v.im)).collect();
    let pts: Vec<(f64, f64)> = i_n
        .iter()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(n, v)| (n.ln(), v.norm().ln()))
        .collect();
    let i_n_slope = if pts.len() >= 2 {
        let m = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some((m * sxy - sx * sy) / (m * sxx - sx * sx))
    } else {
        None
    };

    Ok(VerificationRecord {
        sup_estimate: signal.sup_estimate,
        f0_magnitude,
        f0_within_tol: f0_magnitude <= check_tol,
        negative_max,
        negative_within_tol: negative_max <= check_tol,
        i_n_table,
        i_n_slope,
        check_tol,
    })
}
