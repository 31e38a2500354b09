//! Cross-module invariants: algebraic identities of the primitives,
//! soundness of the verdicts on the reference catalog, linearity and shift
//! laws of the inversion, and cross-regime consistency of the two solver
//! routes.

use laplace_gate::admissibility::{assess, estimate_decay, ProbeSettings, Verdict};
use laplace_gate::analytic_core::{catalog, catalog_entry, gamma, principal_power, EvalError, TimeSignal, TransformFunction};
use laplace_gate::expr::{parse_expr, ExprAst};
use laplace_gate::forward::{forward_transform, TimeDomainInput};
use laplace_gate::hypersingular::{oracle_volterra, solve, transform_side, SolveSettings};
use laplace_gate::inversion::{invert, partial_sums, InversionSettings};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    // p^α · p^β = p^{α+β} on the right half-plane
    #[test]
    fn principal_power_law(
        re in 1e-3f64..50.0,
        im in -50.0f64..50.0,
        alpha in -1.9f64..1.9,
        beta in -1.9f64..1.9,
    ) {
        let p = Complex64::new(re, im);
        let lhs = principal_power(p, alpha).unwrap() * principal_power(p, beta).unwrap();
        let rhs = principal_power(p, alpha + beta).unwrap();
        let bound = 1e-12 * (1.0 + p.norm()).powf(alpha.abs() + beta.abs());
        prop_assert!((lhs - rhs).norm() <= bound);
    }
}

#[test]
fn gamma_recurrence_on_grid() {
    // Γ(x+1) = x Γ(x)
    let mut x = 0.1;
    while x <= 10.0 {
        let g = gamma(x).unwrap();
        let g1 = gamma(x + 1.0).unwrap();
        assert!(
            (g1 - x * g).abs() <= 1e-10 * g1.abs(),
            "recurrence off at x = {x}"
        );
        x += 0.1;
    }
}

#[test]
fn catalog_soundness_under_default_settings() {
    let st = ProbeSettings::default();
    for pair in catalog() {
        let report = assess(&pair.transform, &st);
        let expected = if pair.admissible {
            Verdict::Admissible
        } else {
            Verdict::Inadmissible
        };
        assert_eq!(
            report.verdict, expected,
            "{}: verdict {:?}, notes {:?}",
            pair.name, report.verdict, report.notes
        );
    }
}

#[test]
fn decay_fit_monotone_consistency() {
    // widening the window never moves b_hat away from 2 by more than the fit
    // residual (for the clean reference transform)
    let pair = catalog_entry("t_exp").unwrap();
    for eta_max in [1e4, 3e4, 1e5] {
        let st = ProbeSettings {
            eta_max,
            ..ProbeSettings::default()
        };
        let fit = estimate_decay(&pair.transform, &st).unwrap();
        assert!(
            (fit.b_hat - 2.0).abs() <= fit.fit_residual.max(1e-3),
            "eta_max {eta_max}: b_hat {}",
            fit.b_hat
        );
    }
}

fn scaled_sum(
    alpha: f64,
    f: TransformFunction,
    beta: f64,
    g: TransformFunction,
) -> TransformFunction {
    TransformFunction::new("combo", move |p| {
        Ok(f.eval(p)? * alpha + g.eval(p)? * beta)
    })
}

#[test]
fn inversion_linearity() {
    let st_probe = ProbeSettings::default();
    let settings = InversionSettings::default();
    let f = catalog_entry("t_exp").unwrap();
    let g = catalog_entry("t2_exp").unwrap();
    let ts = [0.5, 1.0, 2.0, 3.0];

    let report_f = assess(&f.transform, &st_probe);
    let report_g = assess(&g.transform, &st_probe);
    let inv_f = invert(&f.transform, &ts, &settings, &report_f).unwrap();
    let inv_g = invert(&g.transform, &ts, &settings, &report_g).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..6 {
        let alpha: f64 = rng.random_range(0.1..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let beta: f64 = rng.random_range(0.1..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        let combo = scaled_sum(alpha, f.transform.clone(), beta, g.transform.clone());
        let report = assess(&combo, &st_probe);
        let inv_c = invert(&combo, &ts, &settings, &report).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let expect = inv_f.values[i] * alpha + inv_g.values[i] * beta;
            let diff = (inv_c.values[i] - expect).norm();
            assert!(
                diff <= 2.0 * settings.tol,
                "alpha={alpha}, beta={beta}, t={t}: diff {diff:.3e}"
            );
        }
    }
}

#[test]
fn inversion_shift_property() {
    // e^{-t0 p} F inverts to the causally shifted signal
    let pair = catalog_entry("t_exp").unwrap();
    let settings = InversionSettings::default();
    let st_probe = ProbeSettings::default();

    let base_report = assess(&pair.transform, &st_probe);
    for t0 in [0.5, 1.0] {
        let inner = pair.transform.clone();
        let shifted = TransformFunction::new("shifted", move |p: Complex64| {
            Ok((-p * t0).exp() * inner.eval(p)?)
        });
        let report = assess(&shifted, &st_probe);
        assert_eq!(report.verdict, Verdict::Admissible);

        let ts: Vec<f64> = (0..=10).map(|i| t0 + (5.0 - t0) * i as f64 / 10.0).collect();
        let shifted_vals = invert(&shifted, &ts, &settings, &report).unwrap();
        let back: Vec<f64> = ts.iter().map(|t| t - t0).collect();
        let base_vals = invert(&pair.transform, &back, &settings, &base_report).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let diff = (shifted_vals.values[i] - base_vals.values[i]).norm();
            assert!(diff <= 2.0 * settings.tol, "t0={t0}, t={t}: {diff:.3e}");
        }

        // before the shift arrives the signal is flat zero
        let early: Vec<f64> = (0..5).map(|i| i as f64 * t0 / 5.0).collect();
        let early_vals = invert(&shifted, &early, &settings, &report).unwrap();
        for (t, v) in early.iter().zip(&early_vals.values) {
            assert!(v.norm() <= settings.tol, "t={t}: {}", v.norm());
        }
    }
}

#[test]
fn inversion_conjugate_symmetry() {
    // real-symmetric transforms invert to (numerically) real signals
    let settings = InversionSettings::default();
    let st_probe = ProbeSettings::default();
    for name in ["t_exp", "t2_exp", "t_exp_cos"] {
        let pair = catalog_entry(name).unwrap();
        let report = assess(&pair.transform, &st_probe);
        let ts: Vec<f64> = (0..=20).map(|i| i as f64 * 0.25).collect();
        let signal = invert(&pair.transform, &ts, &settings, &report).unwrap();
        let max_im = signal.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        assert!(max_im <= 2.0 * settings.tol, "{name}: max imag {max_im:.3e}");
    }
}

#[test]
fn forward_linearity_and_scaling() {
    let f = catalog_entry("t_exp").unwrap();
    let g = catalog_entry("t2_exp").unwrap();
    let tol = 1e-8;
    let ps = [real(0.5), real(1.0), Complex64::new(2.0, 1.0)];

    let ff = f.f_closed.clone();
    let gg = g.f_closed.clone();
    let fa = move |t: f64| Ok(ff(t));
    let ga = move |t: f64| Ok(gg(t));
    let vf = forward_transform(&fa, Some(&f.f_tail), &ps, tol).unwrap();
    let vg = forward_transform(&ga, Some(&g.f_tail), &ps, tol).unwrap();

    let ff2 = f.f_closed.clone();
    let gg2 = g.f_closed.clone();
    let combo = move |t: f64| Ok(ff2(t) * 1.5 - gg2(t) * 0.75);
    let tail = laplace_gate::analytic_core::TailBound::Exponential { scale: 27.0, rate: 0.9 };
    let vc = forward_transform(&combo, Some(&tail), &ps, tol).unwrap();
    for i in 0..ps.len() {
        let expect = vf[i] * 1.5 - vg[i] * 0.75;
        assert!((vc[i] - expect).norm() <= 2.0 * tol);
    }

    // scaling law: L[f(kt)](p) = (1/k) L[f](p/k)
    for k in [0.5, 2.0] {
        let ff3 = f.f_closed.clone();
        let scaled = move |t: f64| Ok(ff3(k * t));
        let tail = laplace_gate::analytic_core::TailBound::Exponential {
            scale: 3.7,
            rate: 0.9 * k,
        };
        let vs = forward_transform(&scaled, Some(&tail), &ps, tol).unwrap();
        for (i, &p) in ps.iter().enumerate() {
            let base = forward_transform(&fa, Some(&f.f_tail), &[p / k], tol).unwrap()[0];
            assert!(
                (vs[i] - base / k).norm() <= 2.0 * tol,
                "k={k}, p={p}: {} vs {}",
                vs[i],
                base / k
            );
        }
    }
}

#[test]
fn i_n_decay_rate() {
    // I_N ~ N^{1-b}: slope -1 ± 0.15 for b = 2
    let pair = catalog_entry("t_exp").unwrap();
    let ns = [1e2, 1e3, 1e4];
    let sums = partial_sums(&pair.transform, &ns).unwrap();
    let pts: Vec<(f64, f64)> = sums.iter().map(|(n, v)| (n.ln(), v.norm().ln())).collect();
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    assert!((slope + 1.0).abs() <= 0.15, "slope {slope}");
}

#[test]
fn denominator_never_near_zero() {
    // |1 + p^{-λ}| stays above the half-plane sector bound
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for &lambda in &[-0.25f64, -0.5, 0.5, 1.0] {
        let sector_bound = ((PI - lambda.abs() * PI / 2.0) / 2.0).sin();
        for _ in 0..1000 {
            let re: f64 = rng.random_range(0.0..10.0);
            let im: f64 = rng.random_range(-1e4..1e4);
            let p = Complex64::new(re, im);
            if p.norm() == 0.0 {
                continue;
            }
            let denom = (real(1.0) + principal_power(p, -lambda).unwrap()).norm();
            assert!(denom >= 0.05, "lambda={lambda}, p={p}: |1+p^-λ| = {denom}");
            assert!(
                denom + 1e-12 >= sector_bound,
                "lambda={lambda}, p={p}: {denom} < sector bound {sector_bound}"
            );
        }
    }
}

fn uniform_signal(t_max: f64, h: f64, f: impl Fn(f64) -> f64) -> TimeSignal {
    let n = (t_max / h).round() as usize + 1;
    let t: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let v: Vec<Complex64> = t.iter().map(|&t| real(f(t))).collect();
    TimeSignal::new(t, v).unwrap()
}

#[test]
fn classical_regimes_agree_with_oracle() {
    // transform route vs product integration (oracle at h = 0.005) for the
    // λ where both exist; comparison on a 0.1-spaced grid over [0, 5]
    let pair = catalog_entry("t_exp").unwrap();
    let h = 0.005;
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
    let st = SolveSettings::default();
    let ps = [real(1.0)];
    let f_samples = uniform_signal(5.0, h, |t| t * (-t).exp());
    for lambda in [0.25, 0.5, 1.0] {
        let result = solve(&pair.transform, lambda, &grid, &st, &ps).unwrap();
        let oracle = oracle_volterra(&f_samples, lambda).unwrap();
        let mut worst = 0.0f64;
        for (i, &t) in grid.iter().enumerate() {
            let j = (t / h).round() as usize;
            assert!((oracle.t_grid[j] - t).abs() < 1e-9);
            worst = worst.max((result.q.values[i] - oracle.values[j]).norm());
        }
        assert!(worst <= 1e-3, "lambda={lambda}: worst {worst:.3e}");
    }
}

#[test]
fn transform_side_quarter_case_cross_checked() {
    // frozen reference values for λ = -1/4, f = t e^{-t} (computed with a
    // high-precision deformed-contour inversion at 30 digits)
    let pair = catalog_entry("t_exp").unwrap();
    let grid: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
    let st = SolveSettings::default();
    let ps = [real(0.5), real(1.0), real(2.0), real(4.0)];
    let result = solve(&pair.transform, -0.25, &grid, &st, &ps).unwrap();
    assert!(result.verified);

    let reference = [
        (0.5, 0.135376272241972),
        (1.0, 0.187825833497513),
        (2.0, 0.16534083000171),
        (5.0, 0.0390912002823827),
        (10.0, 0.00780824174596232),
    ];
    for (t, want) in reference {
        let i = grid.iter().position(|&x| (x - t).abs() < 1e-12).unwrap();
        let got = result.q.values[i].re;
        assert!(
            (got - want).abs() <= 2.0 * st.inversion.tol,
            "q({t}) = {got}, reference {want}"
        );
    }
}

#[test]
fn zero_transform_gives_zero_signal() {
    let zero = TransformFunction::new("0", |_| Ok(Complex64::new(0.0, 0.0)));
    let report = laplace_gate::admissibility::AdmissibilityReport::assume_admissible(1.0, 2.0);
    let settings = InversionSettings::default();
    let ts = [0.0, 1.0, 5.0];
    let signal = invert(&zero, &ts, &settings, &report).unwrap();
    assert!(signal.values.iter().all(|v| v.norm() == 0.0));

    let q = transform_side(&zero, -0.25).unwrap();
    assert_eq!(q.eval(real(1.0)).unwrap(), Complex64::new(0.0, 0.0));
}

// ---------------------------------------------------------------------
// parser invariants

fn arb_expr() -> impl Strategy<Value = ExprAst> {
    // canonical shapes only: the parser folds Neg(Const) into Const, so the
    // generator never produces that form
    let leaf = prop_oneof![
        (0.01f64..100.0).prop_map(ExprAst::Const),
        (0.01f64..100.0).prop_map(|c| ExprAst::Const(-c)),
        Just(ExprAst::Var),
    ];
    leaf.prop_recursive(4, 64, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| ExprAst::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| ExprAst::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| ExprAst::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| ExprAst::Div(Box::new(a), Box::new(b))),
            inner.clone().prop_filter_map("no Neg(Const)", |a| match a {
                ExprAst::Const(_) => None,
                other => Some(ExprAst::Neg(Box::new(other))),
            }),
            (inner.clone(), -3.0f64..3.0).prop_map(|(a, e)| ExprAst::Pow(Box::new(a), e)),
            inner.prop_map(|a| ExprAst::Exp(Box::new(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pretty_print_reparses_identically(ast in arb_expr()) {
        let printed = ast.pretty("p");
        let reparsed = parse_expr(&printed, "p")
            .unwrap_or_else(|e| panic!("'{printed}' failed to reparse: {e}"));
        prop_assert_eq!(ast, reparsed, "printed form: {}", printed);
    }
}

#[test]
fn parser_corpus_round_trip() {
    let corpus: Vec<String> = vec![
        "1/(p+1)^2",
        "1/(p+1)^3",
        "((p+1)^2-1)/((p+1)^2+1)^2",
        "1/((1+p^0.25)*(1+p))",
        "1/(1+p^0.25)",
        "p",
        "-p",
        "3.25",
        "-3.25",
        "p^-0.25",
        "p^2",
        "p^0",
        "exp(-p)",
        "exp(-0.5*p)/(p+1)",
        "exp(p - 1/(p+1))",
        "1 + 2*p - 3/(p+4)",
        "1 - (2 - p)",
        "8/4/2",
        "2*-3 + p",
        "(p+1)*(p+2)*(p+3)",
        "p/(p+1)/(p+2)",
        "1/(p*(p+1))",
        "-(p+1)",
        "--p",
        "-p^2",
        "(-2)^3",
        "0.5*exp(-2*p) + 0.25*exp(-4*p)",
        "exp(exp(p))",
        "p^1.5/(1+p^1.5)",
        "(1+p)^-2",
        "1e-3*p",
        "2.5e2 + p",
        "p*p*p",
        "1/(1+1/(1+1/(1+p)))",
        "((((p))))",
        "exp(-p)*exp(-p)",
        "p^-1/(1+p^-1)",
        "7 - p^3*2",
        "0.1+0.2*p^-0.5",
        "4*(p - 2.5)^2 + 1",
        "exp(2)",
        "-exp(-p)",
        "1/p",
        "p^-2.75",
        "(p^0.5+1)^2",
        "1/(p^0.5+1)^2",
        "3*p - 2*p + p",
        "p/(1+p^0.25)",
        "(1+p^0.25)^-1*(1+p)^-1",
        "6.02214e23*p^-1.5",
    ]
    .into_iter()
    .map(String::from)
    .collect();
    assert!(corpus.len() >= 50);
    for text in &corpus {
        let ast = parse_expr(text, "p").unwrap_or_else(|e| panic!("'{text}': {e}"));
        let printed = ast.pretty("p");
        let reparsed =
            parse_expr(&printed, "p").unwrap_or_else(|e| panic!("'{printed}': {e}"));
        assert_eq!(ast, reparsed, "'{text}' -> '{printed}'");
    }
}

#[test]
fn residual_affine_in_f() {
    // residual(αF1 + βF2) = α·residual(F1) + β·residual(F2) when α + β = 1
    // (the L(q)(1+p^{-λ}) term is common to all three)
    let tol = 1e-8;
    let f1 = catalog_entry("t_exp").unwrap();
    let f2 = catalog_entry("t2_exp").unwrap();
    let combo = scaled_sum(2.0, f1.transform.clone(), -1.0, f2.transform.clone());
    let q = |t: f64| Ok(real(t * (-t).exp()));
    let tail = laplace_gate::analytic_core::TailBound::Exponential { scale: 3.7, rate: 0.9 };
    let ps = [real(1.0), real(2.0)];
    let run = |tf: &TransformFunction| {
        laplace_gate::forward::operator_residual(
            TimeDomainInput::Function { f: &q, tail },
            0.5,
            tf,
            &ps,
            tol,
        )
        .unwrap()
    };
    let (r1, r2, rc) = (run(&f1.transform), run(&f2.transform), run(&combo));
    for i in 0..ps.len() {
        let want = Complex64::new(
            2.0 * r1[i].residual_re - r2[i].residual_re,
            2.0 * r1[i].residual_im - r2[i].residual_im,
        );
        let got = Complex64::new(rc[i].residual_re, rc[i].residual_im);
        assert!((got - want).norm() <= 2.0 * tol);
    }
}

#[test]
fn eval_errors_are_explicit() {
    // no NaN/Inf escapes: a pole evaluation is an error, not an Inf
    let pole = catalog_entry("pole").unwrap();
    assert!(matches!(
        pole.transform.eval(real(1.0)),
        Err(EvalError::Domain(_)) | Err(EvalError::NonFinite)
    ));
    let f = TransformFunction::new("inf", |_| Ok(Complex64::new(f64::INFINITY, 0.0)));
    assert_eq!(f.eval(real(1.0)), Err(EvalError::NonFinite));
}
