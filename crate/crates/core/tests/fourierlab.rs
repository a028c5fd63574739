use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taupsd::euclid::Grid;
use taupsd::fourierlab::*;
use taupsd::symbolcalc::{bracket_power_symbol, from_fn, gaussian, product, scalar_multiple};
use taupsd::C64;

/// Brute-force `h^n sum_k e^{-i<x_k,p_j>} f_k`.
fn direct_forward(f: &GridFunction) -> Vec<C64> {
    let g = f.grid;
    (0..g.len())
        .map(|j| {
            let p = g.freq(j);
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..g.len() {
                let x = g.point(k);
                let phase: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
                acc += f.values[k] * C64::from_polar(1.0, -phase);
            }
            acc * g.cell_volume()
        })
        .collect()
}

fn random_function(g: Grid, seed: u64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len())
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    GridFunction::new(g, values, Side::Space).unwrap()
}

#[test]
fn fft_matches_direct_sum() {
    for (dim, n, l) in [(1, 64, 5.0), (1, 30, 2.0), (2, 16, 3.0), (3, 8, 1.5)] {
        let g = Grid::new(dim, n, l).unwrap();
        let f = random_function(g, 7 + n as u64);
        let fast = forward_fft(&f).unwrap();
        let slow = direct_forward(&f);
        let err = fast
            .values
            .iter()
            .zip(&slow)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12 * g.len() as f64, "dim {dim} N {n}: {err}");
        let back = inverse_fft(&fast).unwrap();
        for (a, b) in back.values.iter().zip(&f.values) {
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn partition_derivative_in_t() {
    let pp = build_partition(DEFAULT_PARTITION_CENTER).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let p = [rng.gen_range(-6.0..6.0), rng.gen_range(-6.0..6.0)];
        let t: f64 = rng.gen_range(1.0..5.0);
        let dt = 1e-5;
        let at = |t: f64| pp.phi.eval(&[p[0] / t, p[1] / t]).re;
        let fd = (at(t + dt) - at(t - dt)) / (2.0 * dt);
        let exact = pp.psi.eval(&[p[0] / t, p[1] / t]).re / t;
        assert!((fd - exact).abs() < 1e-6, "p {p:?} t {t}: {fd} vs {exact}");
    }
}

#[test]
fn partition_values_bounded_and_supported() {
    let pp = build_partition(DEFAULT_PARTITION_CENTER).unwrap();
    for i in 0..=400 {
        let r = 3.0 * i as f64 / 400.0;
        let phi = pp.phi_radial(r);
        assert!((0.0..=1.0).contains(&phi));
        if !(1.0..=2.0).contains(&r) {
            assert_eq!(pp.psi_radial(r), 0.0);
        }
    }
    assert!(partition_completeness(&pp, 64.0, 400, 4000).unwrap() < 1e-6);
}

#[test]
fn dyadic_reconstruction_of_bracket() {
    let pp = build_partition(DEFAULT_PARTITION_CENTER).unwrap();
    let a = bracket_power_symbol(-2.0);
    // frequencies up to 32 with spacing pi/L
    let g = Grid::new(1, 256, 4.0 * PI).unwrap();
    let rec = dyadic_reconstruct(&a, -2.0, &pp, 64.0, 400, &g).unwrap();
    let mut worst = 0.0f64;
    for i in 0..g.len() {
        let p = g.freq(i);
        if p[0].abs() <= 32.0 {
            worst = worst.max((rec.function.values[i] - a.eval(&p)).norm());
        }
    }
    assert!(worst < 1e-6, "{worst}");
    assert!(rec.covers_grid);
}

#[test]
fn band_constant_stable_under_refinement() {
    let pp = build_partition(DEFAULT_PARTITION_CENTER).unwrap();
    let a = taupsd::symbolcalc::constant(C64::new(1.0, 0.0));
    let g = Grid::new(1, 256, 20.0).unwrap();
    let c1 = band_term_decay(&a, 0.0, &pp, 1.0, 2, 4, &g).unwrap().constant;
    let c2 = band_term_decay(&a, 0.0, &pp, 1.0, 2, 4, &g.refined()).unwrap().constant;
    assert!((c1 / c2 - 1.0).abs() < 0.05, "{c1} {c2}");
    // log-spaced t in [1, 64]: the constant must not grow with t and must be
    // stable when the grid is refined
    let fine = Grid::new(1, 2048, 20.0).unwrap();
    let finer = fine.refined();
    let mut consts = Vec::new();
    for k in 0..=6 {
        let t = 2f64.powi(k);
        let b = band_term_decay(&a, 0.0, &pp, t, 2, 4, &fine).unwrap();
        let b2 = band_term_decay(&a, 0.0, &pp, t, 2, 4, &finer).unwrap();
        assert!(b.resolved && b.constant.is_finite());
        assert!(
            (b.constant / b2.constant - 1.0).abs() < 0.05,
            "t = {t}: {} {}",
            b.constant,
            b2.constant
        );
        consts.push(b.constant);
    }
    let early = consts[..3].iter().cloned().fold(0.0, f64::max);
    let late = consts[3..].iter().cloned().fold(0.0, f64::max);
    assert!(late <= early, "{consts:?}");
}

#[test]
fn decay_profile_bracket_half() {
    let a = bracket_power_symbol(-0.5);
    let coarse = decay_profile(&a, -0.5, 3, &Grid::new(1, 256, 20.0).unwrap()).unwrap();
    let fine = decay_profile(&a, -0.5, 3, &Grid::new(1, 512, 20.0).unwrap()).unwrap();
    let drift = coarse.pointwise_drift(&fine).unwrap();
    assert!(drift < 0.1, "{drift}");
    assert!(coarse.sup.is_finite() && fine.sup.is_finite());
    assert_eq!(coarse.rows.len(), 255);
}

#[test]
fn decay_profile_gaussian_decays() {
    let a = gaussian(1.0).unwrap();
    let g = Grid::new(1, 256, 20.0).unwrap();
    let prof = decay_profile(&a, -0.5, 3, &g).unwrap();
    let far = prof
        .rows
        .iter()
        .filter(|r| r.radius > 10.0)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    assert!(far < 1e-6 * prof.sup);
}

#[test]
fn schwartz_outside_origin() {
    let pp = build_partition(DEFAULT_PARTITION_CENTER).unwrap();
    let g = Grid::new(1, 256, 20.0).unwrap();
    for m in [-0.5, -2.0, 1.0] {
        let f = continuum_inverse(&bracket_power_symbol(m), &pp, &g, DEFAULT_CUTOFF).unwrap();
        for k in [2, 4, 8] {
            let sup = (0..g.len())
                .filter(|&i| g.point(i)[0].abs() >= 4.0 * g.spacing())
                .map(|i| {
                    let x = g.point(i)[0];
                    (1.0 + x * x).powf(k as f64 / 2.0) * f.values[i].norm()
                })
                .fold(0.0, f64::max);
            assert!(sup.is_finite() && sup < 1e6, "m {m} K {k}: {sup}");
        }
    }
}

#[test]
fn l1_examples() {
    let g = Grid::new(1, 1024, 20.0).unwrap();
    // F^{-1} of a Gaussian is a positive Gaussian with integral a(0) = 1
    let a = gaussian(0.8).unwrap();
    assert!((l1_check(&a, -1.0, &g).unwrap() - 1.0).abs() < 1e-6);
    let b = bracket_power_symbol(-0.25);
    let v1 = l1_check(&b, -0.25, &g).unwrap();
    let v2 = l1_check(&b, -0.25, &g.refined()).unwrap();
    assert!(v1.is_finite() && (v1 / v2 - 1.0).abs() < 0.01, "{v1} {v2}");
    let c = C64::new(0.0, -3.0);
    let scaled = l1_check(&scalar_multiple(c, &b), -0.25, &g).unwrap();
    assert!((scaled - 3.0 * v1).abs() < 1e-10 * scaled);
    assert!(l1_check(&b, 0.0, &g).is_err());
}

#[test]
fn weighted_l2_examples() {
    let g = Grid::new(1, 512, 20.0).unwrap();
    let sigma: f64 = 1.3;
    let a = gaussian(sigma).unwrap();
    let one = taupsd::symbolcalc::constant(C64::new(1.0, 0.0));
    // ||a||_2^2 = sigma sqrt(pi)
    let expect = (sigma * PI.sqrt()).sqrt() / (2.0 * PI).sqrt();
    assert!((weighted_l2_check(&a, &one, -1.0, &g).unwrap() - expect).abs() < 1e-8);
    let b3 = bracket_power_symbol(3.0);
    let a5 = bracket_power_symbol(-5.0);
    let v1 = weighted_l2_check(&a5, &b3, -5.0, &g).unwrap();
    let v2 = weighted_l2_check(&a5, &b3, -5.0, &g.refined()).unwrap();
    assert!((v1 / v2 - 1.0).abs() < 0.01, "{v1} {v2}");
    let zero = taupsd::symbolcalc::zero();
    assert_eq!(weighted_l2_check(&zero, &b3, -5.0, &g).unwrap(), 0.0);
    assert!(weighted_l2_check(&a5, &b3, -0.4, &g).is_err());
}

#[test]
fn bessel_examples() {
    let g = Grid::new(1, 128, 10.0).unwrap();
    let delta = discrete_delta(&g);
    let k0 = bessel_kernel(0.0, &g).unwrap();
    for (a, b) in k0.values.iter().zip(&delta.values) {
        assert!((a - b).norm() < 1e-10);
    }
    for r in [0.5, 1.0, 2.0, 3.7] {
        assert!(bessel_delta_residual(r, &g).unwrap() < 1e-8);
        let k = bessel_kernel(r, &g).unwrap();
        // psi_r(-x) = psi_r(x): index k <-> N - k around the origin
        let o = g.points / 2;
        for j in 1..o {
            assert!((k.values[o + j] - k.values[o - j]).norm() < 1e-12);
        }
        // convolving psi_r with psi_{-r} spectrally gives the delta
        let back = apply_multiplier(&k, bessel_multiplier(r)).unwrap();
        for (a, b) in back.values.iter().zip(&delta.values) {
            assert!((a - b).norm() < 1e-8 / g.cell_volume());
        }
    }
}

#[test]
fn sobolev_fourier_examples() {
    let g = Grid::new(1, 256, 16.0).unwrap();
    let f = GridFunction::sample_space(&gaussian(1.0).unwrap(), g);
    assert!((sobolev_norm_fourier(&f, 0.0).unwrap() - f.l2_norm()).abs() < 1e-12);
    // ||e^{-x^2/2}||_{H^1}^2 = int (1 + p^2) e^{-p^2} dp = 3 sqrt(pi) / 2
    let exact = (1.5 * PI.sqrt()).sqrt();
    assert!((sobolev_norm_fourier(&f, 1.0).unwrap() - exact).abs() < 1e-6);
    let mut prev = 0.0;
    for m in [0.0, 0.5, 1.0, 1.5, 2.5] {
        let v = sobolev_norm_fourier(&f, m).unwrap();
        assert!(v >= prev);
        prev = v;
    }
}

#[test]
fn slobodeckij_examples() {
    let g = Grid::new(1, 128, 16.0).unwrap();
    let zero = GridFunction::zeros(g, Side::Space);
    assert_eq!(sobolev_norm_slobodeckij(&zero, 1.5, 1.0).unwrap(), 0.0);
    let f = GridFunction::sample_space(&gaussian(1.0).unwrap(), g);
    // integer order: sum of derivative norms only
    let d1 = spectral_derivative(&f, &[1]).unwrap();
    let expect = (f.l2_norm().powi(2) + d1.l2_norm().powi(2)).sqrt();
    assert!((sobolev_norm_slobodeckij(&f, 1.0, 1.0).unwrap() - expect).abs() < 1e-12);
    let mut ratios = Vec::new();
    for n in [128, 256, 512] {
        let g = Grid::new(1, n, 16.0).unwrap();
        let f = GridFunction::sample_space(&gaussian(1.0).unwrap(), g);
        ratios.push(sobolev_norm_slobodeckij(&f, 1.5, 1.0).unwrap() / sobolev_norm_fourier(&f, 1.5).unwrap());
    }
    for w in ratios.windows(2) {
        assert!((0.1..=10.0).contains(&w[0]));
        assert!((w[1] / w[0] - 1.0).abs() < 0.1, "{ratios:?}");
    }
}

#[test]
fn slobodeckij_two_dimensional() {
    let g = Grid::new(2, 32, 6.0).unwrap();
    let f = GridFunction::sample_space(&gaussian(1.0).unwrap(), g);
    let s = sobolev_norm_slobodeckij(&f, 1.5, 1.0).unwrap();
    let four = sobolev_norm_fourier(&f, 1.5).unwrap();
    assert!((0.1..=10.0).contains(&(s / four)), "{s} {four}");
}

#[test]
fn spectral_derivative_of_product() {
    let g = Grid::new(1, 256, 12.0).unwrap();
    let a = product(&gaussian(1.0).unwrap(), &taupsd::symbolcalc::plane_wave(1.5));
    let f = GridFunction::sample_space(&a, g);
    let d = spectral_derivative(&f, &[2]).unwrap();
    for i in 0..g.len() {
        let x = g.point(i);
        let exact = a.deriv(&[2], &x).unwrap();
        assert!((d.values[i] - exact).norm() < 1e-9);
    }
}

#[test]
fn grid_function_files() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new(2, 8, 3.0).unwrap();
    let f = GridFunction::sample_space(&from_fn("x0", 0.0, |x| C64::new(x[0], x[1])), g);
    let stem = dir.path().join("f");
    f.save(&stem).unwrap();
    assert_eq!(GridFunction::load(&stem).unwrap(), f);
    let header: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!(header["N"], 8);
    assert_eq!(header["side"], "space");
}
