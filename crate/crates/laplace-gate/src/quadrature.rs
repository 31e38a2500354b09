//! Quadrature kernels.
//!
//! Two workhorses: an adaptive 15-point Gauss–Kronrod rule for smooth
//! complex-valued integrands on real segments, and a uniform composite
//! two-point Gauss–Legendre rule for Fourier-type integrals
//! `∫_{-H}^{H} e^{itη} g(η) dη` evaluated at many `t` at once. The
//! two-point rule is open, so grid refinement never lands a node on
//! `η = 0` where `g` may have a branch point.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analytic_core::EvalError;

/// Result of one adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub err: f64,
    pub converged: bool,
}

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(Complex64, f64), EvalError>
where
    F: FnMut(f64) -> Result<Complex64, EvalError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        let sum = f1 + f2;
        kronrod += sum * WGK[j];
        if j % 2 == 1 {
            gauss += sum * WG[j / 2];
        }
    }
    kronrod *= half;
    gauss *= half;
    Ok((kronrod, (kronrod - gauss).norm()))
}

/// Adaptive Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Bisects until the local error estimate satisfies the absolute or
/// relative tolerance. Evaluation failures propagate; running out of depth
/// returns the best value with `converged = false`.
pub fn adaptive_gk15<F>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<Quadrature, EvalError>
where
    F: FnMut(f64) -> Result<Complex64, EvalError>,
{
    fn go<F>(
        f: &mut F,
        a: f64,
        b: f64,
        abs_tol: f64,
        rel_tol: f64,
        depth: u32,
        out: &mut Quadrature,
    ) -> Result<(), EvalError>
    where
        F: FnMut(f64) -> Result<Complex64, EvalError>,
    {
        let (v, e) = gk15(f, a, b)?;
        if e <= abs_tol.max(rel_tol * v.norm()) || depth == 0 {
            out.value += v;
            out.err += e;
            if depth == 0 && e > abs_tol.max(rel_tol * v.norm()) {
                out.converged = false;
            }
            return Ok(());
        }
        let mid = 0.5 * (a + b);
        go(f, a, mid, 0.5 * abs_tol, rel_tol, depth - 1, out)?;
        go(f, mid, b, 0.5 * abs_tol, rel_tol, depth - 1, out)
    }

    let mut out = Quadrature {
        value: Complex64::new(0.0, 0.0),
        err: 0.0,
        converged: true,
    };
    if a == b {
        return Ok(out);
    }
    go(f, a, b, abs_tol, rel_tol, max_depth, &mut out)?;
    Ok(out)
}

/// Pairwise (tree) summation in index order; deterministic and more
/// accurate than a running sum for long series.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Settings for [`fourier_many`].
#[derive(Debug, Clone, Copy)]
pub struct FourierSettings {
    /// Initial panel width; refinement halves it.
    pub base_step: f64,
    /// Per-point convergence threshold on successive level differences.
    pub abs_tol: f64,
    /// Maximum number of halvings.
    pub refine_limit: u32,
}

/// Result of [`fourier_many`]: one value and error proxy per requested `t`.
#[derive(Debug, Clone)]
pub struct FourierResult {
    pub values: Vec<Complex64>,
    /// Last inter-level difference per point (the quadrature error proxy).
    pub errs: Vec<f64>,
    pub levels_used: u32,
    pub converged: bool,
}

// Two-point Gauss-Legendre offsets within a unit panel.
const GL2_OFF_LO: f64 = 0.211324865405187118; // 1/2 - 1/(2*sqrt(3))
const GL2_OFF_HI: f64 = 0.788675134594812882; // 1/2 + 1/(2*sqrt(3))

const PANELS_PER_BLOCK: u64 = 1 << 16;
const PANELS_PER_CHUNK: usize = 512;

/// Evaluate `∫_{-H}^{H} e^{itη} g(η) dη` for every `t` in `ts`.
///
/// Uniform composite two-point Gauss–Legendre panels, refined globally by
/// halving until successive estimates differ by less than `abs_tol` at
/// every `t`. `g` is sampled once per node per level and shared across all
/// `t`; the per-`t` oscillatory sums run in parallel but each accumulates
/// in a fixed order, so results are bit-reproducible.
pub fn fourier_many<G>(
    g: &G,
    half_width: f64,
    ts: &[f64],
    cfg: &FourierSettings,
) -> Result<FourierResult, EvalError>
where
    G: Fn(f64) -> Result<Complex64, EvalError> + Sync,
{
    assert!(half_width > 0.0 && cfg.base_step > 0.0);
    let mut n0 = ((2.0 * half_width) / cfg.base_step).ceil() as u64;
    n0 = n0.max(2);
    if n0 % 2 == 1 {
        n0 += 1;
    }

    let mut prev: Option<Vec<Complex64>> = None;
    let mut errs = vec![f64::INFINITY; ts.len()];
    let mut best: Vec<Complex64> = Vec::new();

    for level in 0..=cfg.refine_limit {
        let n = n0 << level;
        let h = 2.0 * half_width / n as f64;
        let sums = level_sums(g, half_width, h, n, ts)?;
        let values: Vec<Complex64> = sums.iter().map(|s| s * (0.5 * h)).collect();

        if let Some(prev_vals) = &prev {
            for (i, (v, pv)) in values.iter().zip(prev_vals).enumerate() {
                errs[i] = (v - pv).norm();
            }
            if errs.iter().all(|&e| e < cfg.abs_tol) {
                return Ok(FourierResult {
                    values,
                    errs,
                    levels_used: level,
                    converged: true,
                });
            }
        }
        best = values.clone();
        prev = Some(values);
    }

    Ok(FourierResult {
        values: best,
        errs,
        levels_used: cfg.refine_limit,
        converged: false,
    })
}

/// One refinement level: raw node sums (without the h/2 weight), streamed
/// over blocks so the sample buffer stays small.
fn level_sums<G>(
    g: &G,
    half_width: f64,
    h: f64,
    n_panels: u64,
    ts: &[f64],
) -> Result<Vec<Complex64>, EvalError>
where
    G: Fn(f64) -> Result<Complex64, EvalError> + Sync,
{
    let mut acc = vec![Complex64::new(0.0, 0.0); ts.len()];
    let mut g_lo: Vec<Complex64> = Vec::new();
    let mut g_hi: Vec<Complex64> = Vec::new();

    let mut j0 = 0u64;
    while j0 < n_panels {
        let j1 = (j0 + PANELS_PER_BLOCK).min(n_panels);
        let count = (j1 - j0) as usize;
        g_lo.clear();
        g_hi.clear();
        g_lo.reserve(count);
        g_hi.reserve(count);
        for j in j0..j1 {
            let base = -half_width + j as f64 * h;
            g_lo.push(g(base + GL2_OFF_LO * h)?);
            g_hi.push(g(base + GL2_OFF_HI * h)?);
        }

        let x_lo0 = -half_width + (j0 as f64 + GL2_OFF_LO) * h;
        let x_hi0 = -half_width + (j0 as f64 + GL2_OFF_HI) * h;

        acc.par_iter_mut().zip(ts.par_iter()).for_each(|(a, &t)| {
            *a += block_sum(t, h, x_lo0, x_hi0, &g_lo, &g_hi);
        });

        j0 = j1;
    }
    Ok(acc)
}

/// Oscillatory sum over one block for a single `t`. The phase factors
/// advance by a complex multiply per panel; each block restarts from an
/// exact `sin_cos`, which keeps the phase drift far below the tolerances
/// in play.
fn block_sum(
    t: f64,
    h: f64,
    x_lo0: f64,
    x_hi0: f64,
    g_lo: &[Complex64],
    g_hi: &[Complex64],
) -> Complex64 {
    let rot = Complex64::new((t * h).cos(), (t * h).sin());
    let mut osc_lo = Complex64::new((t * x_lo0).cos(), (t * x_lo0).sin());
    let mut osc_hi = Complex64::new((t * x_hi0).cos(), (t * x_hi0).sin());

    let mut chunk_sums: Vec<Complex64> = Vec::with_capacity(g_lo.len() / PANELS_PER_CHUNK + 1);
    let mut chunk = Complex64::new(0.0, 0.0);
    for (i, (glo, ghi)) in g_lo.iter().zip(g_hi).enumerate() {
        chunk += osc_lo * glo + osc_hi * ghi;
        osc_lo *= rot;
        osc_hi *= rot;
        if (i + 1) % PANELS_PER_CHUNK == 0 {
            chunk_sums.push(chunk);
            chunk = Complex64::new(0.0, 0.0);
        }
    }
    if chunk != Complex64::new(0.0, 0.0) || chunk_sums.is_empty() {
        chunk_sums.push(chunk);
    }
    pairwise_sum(&chunk_sums)
}
