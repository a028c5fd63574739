use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taupsd::euclid::{Endo, Grid};
use taupsd::kernelfactory::{dyadic_path, kernel_ab, KernelMatrix};
use taupsd::quantize::*;
use taupsd::symbolcalc::{bracket_power_symbol, gaussian, zero};
use taupsd::{Error, C64};

fn gauss_phase(g: Grid, sx: f64, sp: f64) -> PhaseSymbol {
    PhaseSymbol::from_fn(g, "gauss", move |x, p| {
        let r: f64 =
            x.iter().map(|v| v * v / (sx * sx)).sum::<f64>() + p.iter().map(|v| v * v / (sp * sp)).sum::<f64>();
        C64::new((-r / 2.0).exp(), 0.0)
    })
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

#[test]
fn quantize_matches_kernel_construction_on_products() {
    let g = Grid::new(1, 48, 8.0).unwrap();
    let a = gaussian(1.3).unwrap();
    let b = bracket_power_symbol(-3.0);
    let sym = PhaseSymbol::cordes_product(&a, &b, g).unwrap();
    for s in [0.0, 0.5, 1.0, 0.3, -0.7] {
        let tau = Endo::scalar(1, s).unwrap();
        let q = quantize(&sym, &tau).unwrap();
        let k = kernel_ab(&a, &b, &tau, &g).unwrap();
        let d = max_abs(&(&q.values - &k.values));
        assert!(d < 1e-10 * max_abs(&k.values), "tau {s}: {d}");
    }
    let g2 = Grid::new(2, 8, 4.0).unwrap();
    let sym = PhaseSymbol::cordes_product(&a, &b, g2).unwrap();
    let tau = Endo::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
    let q = quantize(&sym, &tau).unwrap();
    let k = kernel_ab(&a, &b, &tau, &g2).unwrap();
    assert!(max_abs(&(&q.values - &k.values)) < 1e-10 * max_abs(&k.values));
}

#[test]
fn x_only_symbol_is_multiplication() {
    let g = Grid::new(1, 32, 6.0).unwrap();
    let sym = PhaseSymbol::from_fn(g, "u", |x, _| C64::new((x[0] / 3.0).cos(), x[0].sin() * 0.1));
    for s in [0.0, 0.5, 1.0] {
        let k = quantize(&sym, &Endo::scalar(1, s).unwrap()).unwrap();
        let h = g.spacing();
        for i in 0..g.len() {
            for l in 0..g.len() {
                let x = g.point(i)[0];
                let expect = if i == l {
                    C64::new((x / 3.0).cos(), x.sin() * 0.1) / h
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((k.values[(i, l)] - expect).norm() < 1e-11, "{i} {l}");
            }
        }
    }
}

#[test]
fn hs_identity_scalar_taus() {
    let g = Grid::new(1, 64, 10.0).unwrap();
    let a = gauss_phase(g, 1.0, 1.5);
    let taus = [Endo::zero(1), Endo::scalar(1, 0.5).unwrap(), Endo::identity(1)];
    let rows = hs_identity_check(&a, &taus).unwrap();
    for r in &rows {
        assert!(r.rel_error < 0.01, "{r:?}");
        assert!((r.ratio.unwrap() - 0.39894).abs() < 0.004);
    }
    // tau invariance
    let hs: Vec<f64> = rows.iter().map(|r| r.hs_norm).collect();
    let spread = hs.iter().cloned().fold(0.0, f64::max) / hs.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    assert!(spread < 0.005, "{spread}");
}

#[test]
fn hs_identity_non_scalar_tau() {
    let g = Grid::new(2, 16, 6.0).unwrap();
    let a = gauss_phase(g, 1.0, 1.0);
    let tau = Endo::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap();
    let rows = hs_identity_check(&a, &[tau, Endo::zero(2)]).unwrap();
    for r in &rows {
        assert!(r.rel_error < 0.01, "{r:?}");
    }
}

#[test]
fn hs_identity_refines() {
    let tau = Endo::scalar(1, 0.5).unwrap();
    let errs: Vec<f64> = [16, 32, 64]
        .iter()
        .map(|&n| {
            let a = gauss_phase(Grid::new(1, n, 10.0).unwrap(), 1.0, 1.5);
            hs_identity_check(&a, std::slice::from_ref(&tau)).unwrap()[0].rel_error
        })
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] <= (w[0] / 2.0).max(1e-12), "{errs:?}");
    }
}

#[test]
fn hs_identity_zero_symbol() {
    let g = Grid::new(1, 16, 4.0).unwrap();
    let a = PhaseSymbol::from_fn(g, "0", |_, _| C64::new(0.0, 0.0));
    let r = &hs_identity_check(&a, &[Endo::zero(1)]).unwrap()[0];
    assert_eq!(r.hs_norm, 0.0);
    assert!(r.ratio.is_none());
}

#[test]
fn rank_one_oracle() {
    let g = Grid::new(1, 40, 5.0).unwrap();
    let h = g.spacing();
    let f: Vec<C64> = (0..g.len())
        .map(|i| C64::new((-g.point(i)[0].powi(2)).exp(), 0.2))
        .collect();
    let gg: Vec<C64> = (0..g.len())
        .map(|i| C64::new(1.0 / (1.0 + g.point(i)[0].powi(2)), g.point(i)[0] * 0.01))
        .collect();
    let m = DMatrix::from_fn(g.len(), g.len(), |i, l| f[i] * gg[l]);
    let k = KernelMatrix::new(g, m, "rank1").unwrap();
    let norm = |v: &[C64]| (v.iter().map(|c| c.norm_sqr()).sum::<f64>() * h).sqrt();
    let expect = norm(&f) * norm(&gg);
    let r = schatten(&k, &[1.0, 2.0]).unwrap();
    assert!((r.singular_values[0] - expect).abs() < 1e-8 * expect);
    assert!(r.singular_values[1] < 1e-8 * expect);
}

#[test]
fn weighted_identity() {
    let g = Grid::new(1, 16, 2.0).unwrap();
    let k = KernelMatrix::new(g, DMatrix::identity(16, 16) * C64::new(1.0 / g.spacing(), 0.0), "id").unwrap();
    let r = schatten(&k, &[1.0, 2.0, 4.0]).unwrap();
    assert!(r.singular_values.iter().all(|s| (s - 1.0).abs() < 1e-12));
    for &(p, v) in &r.p_norms {
        let expect = if p.is_infinite() { 1.0 } else { 16f64.powf(1.0 / p) };
        assert!((v - expect).abs() < 1e-11, "p = {p}");
    }
}

#[test]
fn random_reports_are_monotone_and_log_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = Grid::new(1, 24, 3.0).unwrap();
    for _ in 0..10 {
        let m = DMatrix::from_fn(24, 24, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let k = KernelMatrix::new(g, m, "random").unwrap();
        let r = schatten(&k, &[1.0, 1.5, 2.0, 3.0, 4.0, 8.0]).unwrap();
        assert_eq!(r.monotonicity_defect(), 0.0);
        assert!(r.log_convexity_defect() < 1e-12, "{}", r.log_convexity_defect());
        // Schatten 2 is the Frobenius norm
        assert!((r.norm(2.0) - k.hs_norm()).abs() < 1e-10 * k.hs_norm());
    }
}

#[test]
fn report_json_truncates() {
    let g = Grid::new(1, 4, 1.0).unwrap();
    let r = SchattenReport::from_singular_values(vec![1.0, 1e-3, 1e-16, 0.0], &[1.0], g, None).unwrap();
    let j = r.to_json();
    assert_eq!(j.singular_values, vec![1.0, 1e-3]);
    assert_eq!(j.truncated, 2);
    assert!(j.p_norms.contains_key("inf"));
    assert!(serde_json::to_string(&j).is_ok());
}

#[test]
fn mixed_derivative_closed_form() {
    let g = Grid::new(1, 64, 10.0).unwrap();
    let a = gauss_phase(g, 1.0, 1.0);
    let c = mixed_derivative_symbol(&a, &[1.0], &[1.0]).unwrap();
    // (1 - d^2)^2 e^{-x^2/2} = (x^4 - 8x^2 + 6) e^{-x^2/2}
    let poly = |x: f64| x.powi(4) - 8.0 * x * x + 6.0;
    let len = g.len();
    let mut worst = 0.0f64;
    for k in 0..len * len {
        let x = g.point(k / len)[0];
        let p = g.freq(k % len)[0];
        let expect = poly(x) * poly(p) * (-(x * x + p * p) / 2.0).exp();
        worst = worst.max((c.values[k] - expect).norm());
    }
    assert!(worst < 1e-6, "{worst}");
    let same = mixed_derivative_symbol(&a, &[0.0], &[0.0]).unwrap();
    assert_eq!(same.values, a.values);
    assert!(matches!(
        mixed_derivative_symbol(&a, &[1.0, 1.0], &[1.0]),
        Err(Error::Shape(_))
    ));
}

#[test]
fn mixed_derivative_groups_commute() {
    let g = Grid::new(2, 12, 5.0).unwrap();
    let a = gauss_phase(g, 1.0, 1.2).with_decomposition(vec![1, 1]).unwrap();
    let first = mixed_derivative_symbol(&a, &[1.0, 0.0], &[0.0, 0.5]).unwrap();
    let both_a = mixed_derivative_symbol(&first, &[0.0, 0.5], &[1.0, 0.0]).unwrap();
    let second = mixed_derivative_symbol(&a, &[0.0, 0.5], &[1.0, 0.0]).unwrap();
    let both_b = mixed_derivative_symbol(&second, &[1.0, 0.0], &[0.0, 0.5]).unwrap();
    let direct = mixed_derivative_symbol(&a, &[1.0, 0.5], &[1.0, 0.5]).unwrap();
    let scale = direct.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (u, v) in both_a
        .values
        .iter()
        .zip(&both_b.values)
        .chain(both_a.values.iter().zip(&direct.values))
    {
        assert!((u - v).norm() < 1e-12 * scale);
    }
}

#[test]
fn mixed_seminorm_gaussian() {
    let g = Grid::new(1, 128, 10.0).unwrap();
    let sx = 0.5;
    let a = gauss_phase(g, sx, 1.0);
    let spec = MixedSeminormSpec {
        p: f64::INFINITY,
        t: vec![1],
        s: vec![1],
    };
    let got = mixed_seminorm(&a, &spec).unwrap();
    let len = g.len();
    let mut hand = 0.0f64;
    for k in 0..len * len {
        let x = g.point(k / len)[0];
        let p = g.freq(k % len)[0];
        let e = (-(x * x / (sx * sx) + p * p) / 2.0).exp();
        let dx = x / (sx * sx);
        for v in [e, dx * e, p * e, dx * p * e] {
            hand = hand.max(v.abs());
        }
    }
    assert!((got - hand).abs() < 1e-8, "{got} {hand}");
    let l2 = mixed_seminorm(
        &a,
        &MixedSeminormSpec {
            p: 2.0,
            t: vec![0],
            s: vec![0],
        },
    )
    .unwrap();
    assert!((l2 - a.lp_norm(2.0)).abs() < 1e-14);
    // enlarging the order box never decreases the value
    let mut last = 0.0;
    for o in 0..4 {
        let v = mixed_seminorm(
            &a,
            &MixedSeminormSpec {
                p: 1.0,
                t: vec![o],
                s: vec![o / 2],
            },
        )
        .unwrap();
        assert!(v >= last);
        last = v;
    }
}

fn modulated(g: Grid, lambda: f64) -> PhaseSymbol {
    PhaseSymbol::from_fn(g, format!("modgauss(lambda={lambda})"), move |x, p| {
        C64::from_polar((-(x[0] * x[0] + p[0] * p[0]) / 2.0).exp(), lambda * x[0])
    })
}

#[test]
fn tcp2_bounded_over_family() {
    let g = Grid::new(1, 64, 12.0).unwrap();
    let taus = [Endo::zero(1), Endo::scalar(1, 0.5).unwrap(), Endo::identity(1)];
    let mut ratios = Vec::new();
    for lambda in [1.0, 2.0, 4.0, 8.0] {
        for r in tcp2_check(&modulated(g, lambda), &[1.0], &[1.0], 1.0, &taus).unwrap() {
            ratios.push(r.ratio.unwrap());
        }
    }
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
    let base = ratios[..3].iter().cloned().fold(0.0, f64::max);
    assert!(ratios.iter().all(|r| *r <= 2.0 * base), "{ratios:?}");
    let z = PhaseSymbol::from_fn(g, "0", |_, _| C64::new(0.0, 0.0));
    assert!(tcp2_check(&z, &[1.0], &[1.0], 1.0, &taus).unwrap()[0].ratio.is_none());
    assert!(matches!(
        tcp2_check(&z, &[0.25], &[1.0], 1.0, &taus),
        Err(Error::Hypothesis(_))
    ));
    assert!(tcp2_check(&z, &[1.0], &[1.0], 0.5, &taus).is_err());
}

#[test]
fn tcp2_p2_consistent_with_hs() {
    let g = Grid::new(1, 48, 10.0).unwrap();
    let a = gauss_phase(g, 1.0, 1.0);
    let c = mixed_derivative_symbol(&a, &[0.5], &[0.5]).unwrap();
    let rows = tcp2_check(&a, &[0.5], &[0.5], 2.0, &[Endo::scalar(1, 0.5).unwrap()]).unwrap();
    let bound = (2.0 * PI).powf(-0.5) * a.lp_norm(2.0) / c.lp_norm(2.0);
    assert!((rows[0].ratio.unwrap() / bound - 1.0).abs() < 1e-3);
}

#[test]
fn cv_identity_and_modulation() {
    let g = Grid::new(1, 32, 6.0).unwrap();
    let one = PhaseSymbol::from_fn(g, "1", |_, _| C64::new(1.0, 0.0));
    let taus = [Endo::zero(1), Endo::scalar(1, 0.5).unwrap(), Endo::identity(1)];
    for r in cv_check(&one, &taus).unwrap() {
        assert!((r.ratio.unwrap() - 1.0).abs() < 1e-10, "{r:?}");
    }
    let g = Grid::new(1, 64, 12.0).unwrap();
    let mut ratios = Vec::new();
    for lambda in [1.0, 2.0, 4.0, 8.0] {
        for r in cv_check(&modulated(g, lambda), &taus).unwrap() {
            ratios.push(r.ratio.unwrap());
        }
    }
    let base = ratios[..3].iter().cloned().fold(0.0, f64::max);
    assert!(ratios.iter().all(|r| r.is_finite() && *r <= 2.0 * base), "{ratios:?}");
}

#[test]
fn sobolev_phase_bounds() {
    let g = Grid::new(1, 48, 10.0).unwrap();
    let a = gauss_phase(g, 1.0, 1.0);
    let taus = [Endo::zero(1), Endo::identity(1)];
    let bound = (2.0 * PI).powf(-0.5);
    for s in [0.0, 1.0, 3.0] {
        let rep = sobolev_phase_check(&a, s, 2.0, &taus).unwrap();
        for r in &rep.rows {
            assert!(r.ratio.unwrap() <= bound * (1.0 + 1e-3), "s = {s}: {r:?}");
        }
    }
    // the interpolation exponent vanishes at p = 2: the HS identity
    let s0 = interpolation_exponent(1.5, 1, 2.0);
    let rep = sobolev_phase_check(&a, s0, 2.0, &taus).unwrap();
    for r in &rep.rows {
        assert!((r.ratio.unwrap() / bound - 1.0).abs() < 0.01);
    }
    let rep = sobolev_phase_check(&a, 3.0, 1.0, &taus).unwrap();
    assert!(rep.hypothesis);
    assert!(rep.rows.iter().all(|r| r.ratio.unwrap().is_finite()));
}

#[test]
fn cordes_trace_norm_and_continuity() {
    let a = gaussian(1.0).unwrap();
    let b = gaussian(1.0).unwrap();
    let tau0 = Endo::zero(1);
    let path = dyadic_path(&tau0, 3..=10);
    let g = Grid::new(1, 64, 10.0).unwrap();
    let coarse = cordes_check(&a, &b, &tau0, &path, 2.0, 2.0, &g).unwrap();
    let fine = cordes_check(&a, &b, &tau0, &[], 2.0, 2.0, &g.refined()).unwrap();
    let drift = (coarse.base_trace_norm / fine.base_trace_norm - 1.0).abs();
    assert!(drift < 0.05, "{drift}");
    assert!(coarse.slope.unwrap() >= 0.9, "{:?}", coarse.slope);
    let none = cordes_check(&a, &zero(), &tau0, &path[..2], 2.0, 2.0, &g);
    // zero has degree -inf, so the hypothesis holds and the operator vanishes
    let none = none.unwrap();
    assert_eq!(none.base_trace_norm, 0.0);
    assert!(matches!(
        cordes_check(&a, &b, &tau0, &path, 1.0, 2.0, &g),
        Err(Error::Hypothesis(_))
    ));
}
