//! Default tolerances of the harness checks. Each can be overridden per run
//! through the `tolerances` map of an experiment config, keyed by the
//! lower-case constant name.

/// Relative error of `||a^tau||_2 / ||a||_2` against `(2 pi)^{-n/2}`.
pub const HS_REL: f64 = 0.01;
/// Refinement floor below which an HS error counts as converged.
pub const REFINEMENT_FLOOR: f64 = 1e-12;
/// Relative Frobenius residual of the `K^1` / `K^0` factorizations.
pub const FACTORIZATION: f64 = 1e-8;
/// Relative drift of the Cordes trace norm between refinement levels.
pub const TRACE_DRIFT: f64 = 0.05;
/// Allowed shortfall of a continuity slope below 1.
pub const CONTINUITY_SLOPE: f64 = 0.1;
/// `max |phi + int psi - 1|` of the partition of unity.
pub const PARTITION: f64 = 1e-6;
/// Reconstruction error of `dyadic_reconstruct`.
pub const RECONSTRUCTION: f64 = 1e-6;
/// Pointwise drift of the decay profile under refinement.
pub const DECAY_DRIFT: f64 = 0.10;
/// Relative change of `l1_check` under refinement.
pub const L1_CAUCHY: f64 = 0.01;
/// Sup error of the `r = 2` Bessel kernel against `e^{-|x|}/2`.
pub const BESSEL_KERNEL: f64 = 1e-4;
/// Round trip of the Bessel multiplier to the discrete delta.
pub const BESSEL_DELTA: f64 = 1e-8;
/// Growth allowed over the baseline of a bounded family, beyond 1.
pub const FAMILY_GROWTH: f64 = 1.0;
/// Rank-one singular value oracle.
pub const RANK_ONE: f64 = 1e-8;
/// FFT against the direct sum, per grid point.
pub const DFT_PER_POINT: f64 = 1e-12;
/// Monotonicity and log-convexity defects of Schatten norms.
pub const SCHATTEN_ORDER: f64 = 1e-12;
/// Agreement of two routes to the same discrete object.
pub const CROSS_CHECK: f64 = 1e-10;
/// Allowed shortfall of the scaling-lemma slope below `m`.
pub const SCALING_SLACK: f64 = 0.1;
/// Fourier / Slobodeckij ratios must lie in `[1/f, f]`.
pub const SOBOLEV_FACTOR: f64 = 10.0;
/// Refinement drift of the Fourier / Slobodeckij ratio.
pub const SOBOLEV_DRIFT: f64 = 0.10;
/// Warn threshold for drift rows of a convergence study.
pub const CONVERGENCE_DRIFT: f64 = 0.05;

/// Largest matrix dimension `N^n` the harness will factor.
pub const MATRIX_CAP: usize = 4096;

/// Every overridable tolerance with its default, in a fixed order.
pub const ALL: &[(&str, f64)] = &[
    ("hs_rel", HS_REL),
    ("refinement_floor", REFINEMENT_FLOOR),
    ("factorization", FACTORIZATION),
    ("trace_drift", TRACE_DRIFT),
    ("continuity_slope", CONTINUITY_SLOPE),
    ("partition", PARTITION),
    ("reconstruction", RECONSTRUCTION),
    ("decay_drift", DECAY_DRIFT),
    ("l1_cauchy", L1_CAUCHY),
    ("bessel_kernel", BESSEL_KERNEL),
    ("bessel_delta", BESSEL_DELTA),
    ("family_growth", FAMILY_GROWTH),
    ("rank_one", RANK_ONE),
    ("dft_per_point", DFT_PER_POINT),
    ("schatten_order", SCHATTEN_ORDER),
    ("cross_check", CROSS_CHECK),
    ("scaling_slack", SCALING_SLACK),
    ("sobolev_factor", SOBOLEV_FACTOR),
    ("sobolev_drift", SOBOLEV_DRIFT),
    ("convergence_drift", CONVERGENCE_DRIFT),
];
