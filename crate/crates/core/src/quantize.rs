//! `tau`-quantization of phase-space symbols, Schatten-class diagnostics and
//! the verifiers built on them.
//!
//! A phase symbol `a(x, p)` is sampled at the points `x` of a grid and at its
//! frequencies `p`. The quantized operator has kernel
//! `K(x, y) = A((1 - tau) x + tau y, x - y)` with `A = (id (x) F^{-1}) a`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::linalg::SVD;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::euclid::{Endo, Grid};
use crate::fourierlab::{forward_fft, inverse_fft, transform_axes, Direction, GridFunction, Side, TrigSeries};
use crate::kernelfactory::KernelMatrix;
use crate::symbolcalc::{multi_indices, Symbol};
use crate::C64;

/// Samples of `a(x, p)` over the phase grid: `x` at the points of `grid`, `p`
/// at its frequencies; flat index `ix * N^n + jp`, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSymbol {
    pub grid: Grid,
    pub values: Vec<C64>,
    /// Dimensions of the orthogonal splitting `X = X_1 + ... + X_k` into
    /// consecutive axis groups.
    pub decomposition: Option<Vec<usize>>,
    pub name: String,
}

impl PhaseSymbol {
    pub fn new(grid: Grid, values: Vec<C64>, name: impl Into<String>) -> Result<Self> {
        let len = grid.len() * grid.len();
        if values.len() != len {
            return Err(Error::GridMismatch(format!(
                "phase symbol on {} points needs {len} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid,
            values,
            decomposition: None,
            name: name.into(),
        })
    }

    pub fn from_fn(grid: Grid, name: impl Into<String>, f: impl Fn(&[f64], &[f64]) -> C64 + Sync) -> Self {
        let len = grid.len();
        let values = (0..len * len)
            .into_par_iter()
            .map(|k| f(&grid.point(k / len), &grid.freq(k % len)))
            .collect();
        Self {
            grid,
            values,
            decomposition: None,
            name: name.into(),
        }
    }

    /// `u(x) v(p)`.
    pub fn tensor(u: &Symbol, v: &Symbol, grid: Grid) -> Self {
        let us = u.sample(&grid);
        let vs = v.sample_freq(&grid);
        Self::from_samples(grid, &us, &vs, format!("{} (x) {}", u.name(), v.name()))
    }

    /// `g = F^{-1}a (x) F b`, both transforms taken on the grid.
    pub fn cordes_product(a: &Symbol, b: &Symbol, grid: Grid) -> Result<Self> {
        let inv_a = inverse_fft(&GridFunction::sample_freq(a, grid))?;
        let fb = forward_fft(&GridFunction::sample_space(b, grid))?;
        Ok(Self::from_samples(
            grid,
            &inv_a.values,
            &fb.values,
            format!("F^-1[{}] (x) F[{}]", a.name(), b.name()),
        ))
    }

    fn from_samples(grid: Grid, us: &[C64], vs: &[C64], name: String) -> Self {
        let len = grid.len();
        let values = (0..len * len).map(|k| us[k / len] * vs[k % len]).collect();
        Self {
            grid,
            values,
            decomposition: None,
            name,
        }
    }

    pub fn with_decomposition(mut self, dims: Vec<usize>) -> Result<Self> {
        if dims.iter().sum::<usize>() != self.grid.dim || dims.contains(&0) {
            return Err(Error::Shape(format!(
                "decomposition {dims:?} does not split dimension {}",
                self.grid.dim
            )));
        }
        self.decomposition = Some(dims);
        Ok(self)
    }

    /// The decomposition, or the single group `X` when none is set.
    pub fn groups(&self) -> Vec<usize> {
        self.decomposition.clone().unwrap_or_else(|| vec![self.grid.dim])
    }

    /// Phase-space cell `h^n dp^n`.
    pub fn cell(&self) -> f64 {
        self.grid.cell_volume() * self.grid.freq_cell_volume()
    }

    /// `L^p(X x X*)` grid norm; `p = inf` is the grid max.
    pub fn lp_norm(&self, p: f64) -> f64 {
        lp_norm(&self.values, p, self.cell())
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == C64::new(0.0, 0.0))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    /// Applies `m(xi, eta)` in the Fourier variables dual to `(x, p)`.
    pub fn multiplier(&self, m: impl Fn(&[f64], &[f64]) -> C64 + Sync) -> Self {
        let g = self.grid;
        let n = g.dim;
        let np = g.points;
        let dual = g.dual();
        let mut data = self.values.clone();
        let x_axes: Vec<usize> = (0..n).collect();
        let p_axes: Vec<usize> = (n..2 * n).collect();
        transform_axes(&mut data, 2 * n, np, &x_axes, Direction::Forward, g.spacing());
        transform_axes(&mut data, 2 * n, np, &p_axes, Direction::Forward, dual.spacing());
        let len = g.len();
        data.par_iter_mut().enumerate().for_each(|(k, v)| {
            // xi dual to x lives on g's frequencies, eta dual to p on dual's
            *v *= m(&g.freq(k / len), &dual.freq(k % len));
        });
        transform_axes(
            &mut data,
            2 * n,
            np,
            &x_axes,
            Direction::Inverse,
            g.freq_spacing() / (2.0 * PI),
        );
        transform_axes(
            &mut data,
            2 * n,
            np,
            &p_axes,
            Direction::Inverse,
            dual.freq_spacing() / (2.0 * PI),
        );
        Self {
            values: data,
            ..self.clone()
        }
    }

    /// `d_x^alpha d_p^beta a`, spectrally; odd orders drop the Nyquist mode.
    pub fn derivative(&self, alpha: &[usize], beta: &[usize]) -> Result<Self> {
        let n = self.grid.dim;
        ensure_dim(n, alpha.len())?;
        ensure_dim(n, beta.len())?;
        let nyq_x = -self.grid.nyquist();
        let nyq_p = -self.grid.dual().nyquist();
        Ok(self.multiplier(|xi, eta| {
            let mut acc = C64::new(1.0, 0.0);
            for d in 0..n {
                if (alpha[d] % 2 == 1 && xi[d] == nyq_x) || (beta[d] % 2 == 1 && eta[d] == nyq_p) {
                    return C64::new(0.0, 0.0);
                }
                acc *= C64::new(0.0, xi[d]).powi(alpha[d] as i32) * C64::new(0.0, eta[d]).powi(beta[d] as i32);
            }
            acc
        }))
    }
}

fn lp_norm(values: &[C64], p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    }
    let top = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = values.iter().map(|v| (v.norm() / top).powf(p)).sum();
    top * (s * cell).powf(1.0 / p)
}

/// Grid offset index of `x_i - y_l`, if it stays inside `[-L, L)^n`.
fn offset_index(g: &Grid, i: usize, l: usize) -> Option<usize> {
    let n = g.points as isize;
    let xi = g.multi_index(i);
    let yl = g.multi_index(l);
    let mut off = Vec::with_capacity(g.dim);
    for (a, b) in xi.iter().zip(&yl) {
        let d = *a as isize - *b as isize + n / 2;
        if !(0..n).contains(&d) {
            return None;
        }
        off.push(d as usize);
    }
    Some(g.flat_index(&off))
}

/// Kernel of `a^tau(Q, P)` at the grid pairs.
///
/// `F^{-1}` is taken in the `p`-slot on the grid; the `x`-slot is evaluated at
/// `(1 - tau) x + tau y` through its exact trigonometric series. Offsets
/// `x - y` outside `[-L, L)^n` give zero.
pub fn quantize(a: &PhaseSymbol, tau: &Endo) -> Result<KernelMatrix> {
    let g = a.grid;
    ensure_dim(g.dim, tau.dim())?;
    if a.values.len() != g.len() * g.len() {
        return Err(Error::GridMismatch("phase symbol values do not match its grid".into()));
    }
    let n = g.dim;
    let len = g.len();
    let mut data = a.values.clone();
    let p_axes: Vec<usize> = (n..2 * n).collect();
    let x_axes: Vec<usize> = (0..n).collect();
    // A(x_k, u_m), then its spectrum in the first slot
    transform_axes(
        &mut data,
        2 * n,
        g.points,
        &p_axes,
        Direction::Inverse,
        g.freq_spacing() / (2.0 * PI),
    );
    transform_axes(&mut data, 2 * n, g.points, &x_axes, Direction::Forward, g.spacing());
    let series: Vec<TrigSeries> = (0..len)
        .map(|m| {
            let spec: Vec<C64> = (0..len).map(|q| data[q * len + m]).collect();
            TrigSeries::new(&GridFunction::new(g, spec, Side::Frequency)?)
        })
        .collect::<Result<_>>()?;
    let values = assemble_by_offset(&series, tau, &g);
    Ok(KernelMatrix::new(g, values, "quantize")?
        .with_tau(tau)
        .with_params(serde_json::json!({ "symbol": a.name })))
}

fn assemble_by_offset(series: &[TrigSeries], tau: &Endo, g: &Grid) -> DMatrix<C64> {
    let len = g.len();
    let cols: Vec<Vec<C64>> = (0..len)
        .into_par_iter()
        .map(|l| {
            let y = g.point(l);
            (0..len)
                .map(|i| match offset_index(g, i, l) {
                    None => C64::new(0.0, 0.0),
                    Some(m) => {
                        let x = g.point(i);
                        let u: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                        let tu = tau.apply(&u);
                        let v: Vec<f64> = x.iter().zip(&tu).map(|(a, b)| a - b).collect();
                        series[m].eval(&v)
                    }
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(len, len, |i, l| cols[l][i])
}

// ---------------------------------------------------------------------------
// Schatten norms

/// Singular values of an operator and its Schatten norms.
#[derive(Debug, Clone, PartialEq)]
pub struct SchattenReport {
    /// Non-increasing.
    pub singular_values: Vec<f64>,
    /// `p -> (sum s_k^p)^{1/p}`, including `inf -> s_1`.
    pub p_norms: Vec<(f64, f64)>,
    pub grid: Grid,
    pub tau: Option<Endo>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchattenJson {
    pub singular_values: Vec<f64>,
    pub truncated: usize,
    pub p_norms: BTreeMap<String, f64>,
    pub grid: Grid,
    pub tau: Option<Vec<Vec<f64>>>,
}

/// `(sum s^p)^{1/p}`; `p = inf` gives the largest value.
pub fn schatten_norm(sv: &[f64], p: f64) -> f64 {
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if p.is_infinite() || top == 0.0 {
        return top;
    }
    top * sv.iter().map(|s| (s / top).powf(p)).sum::<f64>().powf(1.0 / p)
}

impl SchattenReport {
    pub fn from_singular_values(mut sv: Vec<f64>, p_list: &[f64], grid: Grid, tau: Option<Endo>) -> Result<Self> {
        check_p_list(p_list)?;
        sv.sort_by(|a, b| b.partial_cmp(a).expect("finite singular values"));
        let mut ps: Vec<f64> = p_list.to_vec();
        if !ps.iter().any(|p| p.is_infinite()) {
            ps.push(f64::INFINITY);
        }
        ps.sort_by(|a, b| a.partial_cmp(b).expect("finite or infinite p"));
        ps.dedup();
        let p_norms = ps.iter().map(|&p| (p, schatten_norm(&sv, p))).collect();
        Ok(Self {
            singular_values: sv,
            p_norms,
            grid,
            tau,
        })
    }

    pub fn norm(&self, p: f64) -> f64 {
        schatten_norm(&self.singular_values, p)
    }

    pub fn operator_norm(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    pub fn trace_norm(&self) -> f64 {
        self.norm(1.0)
    }

    /// Largest increase of the reported norms as `p` grows (0 when monotone).
    pub fn monotonicity_defect(&self) -> f64 {
        self.p_norms
            .windows(2)
            .map(|w| (w[1].1 - w[0].1).max(0.0) / w[0].1.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    /// Largest violation of convexity of `ln ||.||_p` in `1/p` over consecutive
    /// triples of the reported `p` values.
    pub fn log_convexity_defect(&self) -> f64 {
        if self.operator_norm() == 0.0 {
            return 0.0;
        }
        let mut pts: Vec<(f64, f64)> = self.p_norms.iter().map(|&(p, v)| (1.0 / p, v.ln())).collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        pts.windows(3)
            .map(|w| {
                let (t1, f1) = w[0];
                let (t2, f2) = w[1];
                let (t3, f3) = w[2];
                let chord = ((t3 - t2) * f1 + (t2 - t1) * f3) / (t3 - t1);
                (f2 - chord).max(0.0)
            })
            .fold(0.0, f64::max)
    }

    /// JSON form; singular values below `1e-14 s_1` are dropped.
    pub fn to_json(&self) -> SchattenJson {
        let cut = 1e-14 * self.operator_norm();
        let kept: Vec<f64> = self.singular_values.iter().copied().filter(|&s| s > cut).collect();
        SchattenJson {
            truncated: self.singular_values.len() - kept.len(),
            singular_values: kept,
            p_norms: self
                .p_norms
                .iter()
                .map(|&(p, v)| {
                    (
                        if p.is_infinite() {
                            "inf".to_string()
                        } else {
                            format!("{p}")
                        },
                        v,
                    )
                })
                .collect(),
            grid: self.grid,
            tau: self.tau.as_ref().map(Endo::rows),
        }
    }
}

fn check_p_list(p_list: &[f64]) -> Result<()> {
    if let Some(p) = p_list.iter().find(|p| !(**p >= 1.0)) {
        return Err(Error::Domain(format!("Schatten exponents must be at least 1, got {p}")));
    }
    Ok(())
}

/// Singular values of the weighted matrix `K h^n`.
pub fn singular_values(k: &KernelMatrix) -> Result<Vec<f64>> {
    let w = k.weighted();
    let (r, c) = w.shape();
    let frob = w.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if !frob.is_finite() {
        return Err(Error::Numerical(format!("{r}x{c} kernel has non-finite entries")));
    }
    let svd = SVD::try_new(w, false, false, f64::EPSILON, 10_000).ok_or_else(|| {
        Error::Numerical(format!(
            "SVD of the {r}x{c} kernel did not converge (Frobenius norm {frob:.3e})"
        ))
    })?;
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    Ok(sv)
}

pub fn schatten(k: &KernelMatrix, p_list: &[f64]) -> Result<SchattenReport> {
    check_p_list(p_list)?;
    SchattenReport::from_singular_values(singular_values(k)?, p_list, k.grid, k.tau.clone())
}

// ---------------------------------------------------------------------------
// verifiers

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HsRow {
    pub tau: Vec<Vec<f64>>,
    /// `||a^tau(Q, P)||_2`.
    pub hs_norm: f64,
    /// `||a||_{L^2(X x X*)}`.
    pub l2_norm: f64,
    /// `hs_norm / l2_norm`; `None` when `a = 0`.
    pub ratio: Option<f64>,
    /// `|ratio / (2 pi)^{-n/2} - 1|`.
    pub rel_error: f64,
}

/// `(2 pi)^{-n/2}`.
pub fn hs_constant(n: usize) -> f64 {
    (2.0 * PI).powf(-(n as f64) / 2.0)
}

/// Compares `||a^tau||_2` with `(2 pi)^{-n/2} ||a||_{L^2}` for every `tau`.
pub fn hs_identity_check(a: &PhaseSymbol, taus: &[Endo]) -> Result<Vec<HsRow>> {
    let target = hs_constant(a.grid.dim);
    let l2 = a.lp_norm(2.0);
    taus.iter()
        .map(|tau| {
            let hs = quantize(a, tau)?.hs_norm();
            let ratio = (l2 > 0.0).then(|| hs / l2);
            Ok(HsRow {
                tau: tau.rows(),
                hs_norm: hs,
                l2_norm: l2,
                ratio,
                rel_error: match ratio {
                    Some(r) => (r / target - 1.0).abs(),
                    None => hs,
                },
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CordesRow {
    pub tau: Vec<Vec<f64>>,
    pub trace_norm: f64,
    /// `||tau - tau_0||`.
    pub tau_distance: f64,
    /// `||A(tau) - A(tau_0)||_1`.
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CordesReport {
    pub base_trace_norm: f64,
    pub rows: Vec<CordesRow>,
    /// Log-log slope of `distance` against `tau_distance`.
    pub slope: Option<f64>,
}

/// Trace norms of the quantizations of `g = F^{-1}a (x) F b` along `path`,
/// for `a in S^{-t}` on `X*` and `b in S^{-s}` on `X` with `s, t > n`.
pub fn cordes_check(
    a: &Symbol,
    b: &Symbol,
    tau0: &Endo,
    path: &[Endo],
    s: f64,
    t: f64,
    g: &Grid,
) -> Result<CordesReport> {
    let n = g.dim as f64;
    if !(s > n && t > n) {
        return Err(Error::Hypothesis(format!("need s, t > {n}, got s = {s}, t = {t}")));
    }
    if a.degree() > -t || b.degree() > -s {
        return Err(Error::Hypothesis(format!(
            "{} has degree {} > -t = {}, or {} has degree {} > -s = {}",
            a.name(),
            a.degree(),
            -t,
            b.name(),
            b.degree(),
            -s
        )));
    }
    for tau in std::iter::once(tau0).chain(path) {
        if !tau.class.in_u() {
            return Err(Error::Classification(format!("tau = {} lies outside U", tau.label())));
        }
    }
    let sym = PhaseSymbol::cordes_product(a, b, *g)?;
    let base = quantize(&sym, tau0)?;
    let base_trace = schatten_norm(&singular_values(&base)?, 1.0);
    let rows = path
        .par_iter()
        .map(|tau| {
            let k = quantize(&sym, tau)?;
            let trace_norm = schatten_norm(&singular_values(&k)?, 1.0);
            let diff = KernelMatrix::new(*g, &k.values - &base.values, "difference")?;
            Ok(CordesRow {
                tau: tau.rows(),
                trace_norm,
                tau_distance: tau.distance(tau0),
                distance: schatten_norm(&singular_values(&diff)?, 1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.tau_distance, r.distance)).collect();
    Ok(CordesReport {
        base_trace_norm: base_trace,
        slope: crate::symbolcalc::loglog_slope(&pts),
        rows,
    })
}

/// `p` and the orders `t = (t_1..t_k)`, `s = (s_1..s_k)` of `|a|_{p,t,s}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedSeminormSpec {
    pub p: f64,
    pub t: Vec<usize>,
    pub s: Vec<usize>,
}

fn group_ranges(groups: &[usize]) -> Vec<std::ops::Range<usize>> {
    let mut start = 0;
    groups
        .iter()
        .map(|&d| {
            let r = start..start + d;
            start += d;
            r
        })
        .collect()
}

/// All `(alpha_1..alpha_k)` with `|alpha_j| <= orders_j`, as full multi-indices.
fn group_box(groups: &[usize], orders: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for (&d, &o) in groups.iter().zip(orders) {
        let local = multi_indices(d, o);
        out = out
            .into_iter()
            .flat_map(|pre| {
                local.iter().map(move |l| {
                    let mut v = pre.clone();
                    v.extend(l);
                    v
                })
            })
            .collect();
    }
    out
}

fn check_arity(a: &PhaseSymbol, t: usize, s: usize) -> Result<Vec<usize>> {
    let groups = a.groups();
    if t != groups.len() || s != groups.len() {
        return Err(Error::Shape(format!(
            "orders of arity ({t}, {s}) do not match the {} groups of the decomposition",
            groups.len()
        )));
    }
    Ok(groups)
}

/// `max ||d_{X_1}^{alpha_1} .. d_{X_k*}^{beta_k} a||_{L^p}` over the order box.
pub fn mixed_seminorm(a: &PhaseSymbol, spec: &MixedSeminormSpec) -> Result<f64> {
    if !(spec.p >= 1.0) {
        return Err(Error::Domain(format!("p must be at least 1, got {}", spec.p)));
    }
    let groups = check_arity(a, spec.t.len(), spec.s.len())?;
    let alphas = group_box(&groups, &spec.t);
    let betas = group_box(&groups, &spec.s);
    let pairs: Vec<(&Vec<usize>, &Vec<usize>)> = alphas
        .iter()
        .flat_map(|al| betas.iter().map(move |be| (al, be)))
        .collect();
    let norms = pairs
        .par_iter()
        .map(|(al, be)| Ok(a.derivative(al, be)?.lp_norm(spec.p)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

fn integer_exponent(order: f64) -> Result<i32> {
    let e = 2.0 * order;
    if !(e >= 0.0) || (e - e.round()).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "order {order} must be a nonnegative multiple of 1/2"
        )));
    }
    Ok(e.round() as i32)
}

/// `prod_j (1 - Delta_{X_j})^{2 t_j} (1 - Delta_{X_j*})^{2 s_j} a`.
pub fn mixed_derivative_symbol(a: &PhaseSymbol, t: &[f64], s: &[f64]) -> Result<PhaseSymbol> {
    let groups = check_arity(a, t.len(), s.len())?;
    let et: Vec<i32> = t.iter().map(|&o| integer_exponent(o)).collect::<Result<_>>()?;
    let es: Vec<i32> = s.iter().map(|&o| integer_exponent(o)).collect::<Result<_>>()?;
    if et.iter().chain(&es).all(|&e| e == 0) {
        return Ok(a.clone());
    }
    let ranges = group_ranges(&groups);
    let out = a.multiplier(|xi, eta| {
        let mut acc = 1.0;
        for (j, r) in ranges.iter().enumerate() {
            let x2: f64 = xi[r.clone()].iter().map(|v| v * v).sum();
            let p2: f64 = eta[r.clone()].iter().map(|v| v * v).sum();
            acc *= (1.0 + x2).powi(et[j]) * (1.0 + p2).powi(es[j]);
        }
        C64::new(acc, 0.0)
    });
    Ok(PhaseSymbol {
        name: format!("mixed[{t:?},{s:?}]({})", a.name),
        ..out
    })
}

/// Smallest orders with `2 t_j` integer and `t_j > dim X_j / 4`.
pub fn admissible_orders(groups: &[usize]) -> Vec<f64> {
    groups.iter().map(|&d| ((d / 2) as f64 + 1.0) / 2.0).collect()
}

/// A ratio `||a^tau||_p / (bound)` for one `tau`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioRow {
    pub tau: Vec<Vec<f64>>,
    pub operator_side: f64,
    pub symbol_side: f64,
    /// `None` when both sides vanish.
    pub ratio: Option<f64>,
}

fn ratio_rows(
    a: &PhaseSymbol,
    taus: &[Endo],
    symbol_side: f64,
    op: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<Vec<RatioRow>> {
    taus.par_iter()
        .map(|tau| {
            let operator_side = if a.is_zero() {
                0.0
            } else {
                op(&singular_values(&quantize(a, tau)?)?)
            };
            let ratio = if symbol_side > 0.0 {
                Some(operator_side / symbol_side)
            } else if operator_side == 0.0 {
                None
            } else {
                Some(f64::INFINITY)
            };
            Ok(RatioRow {
                tau: tau.rows(),
                operator_side,
                symbol_side,
                ratio,
            })
        })
        .collect()
}

/// `||a^tau||_p / ||c||_{L^p}` with `c` from [`mixed_derivative_symbol`].
pub fn tcp2_check(a: &PhaseSymbol, t: &[f64], s: &[f64], p: f64, taus: &[Endo]) -> Result<Vec<RatioRow>> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Domain(format!("p must lie in [1, inf), got {p}")));
    }
    let groups = check_arity(a, t.len(), s.len())?;
    for (j, &d) in groups.iter().enumerate() {
        let min = d as f64 / 4.0;
        if !(t[j] > min && s[j] > min) {
            return Err(Error::Hypothesis(format!(
                "group {j} of dimension {d} needs t, s > {min}, got t = {}, s = {}",
                t[j], s[j]
            )));
        }
    }
    let c = mixed_derivative_symbol(a, t, s)?;
    ratio_rows(a, taus, c.lp_norm(p), |sv| schatten_norm(sv, p))
}

/// `m_j = [dim X_j / 2] + 1`.
pub fn cv_orders(groups: &[usize]) -> Vec<usize> {
    groups.iter().map(|&d| d / 2 + 1).collect()
}

/// Operator norm over `|a|_{inf, 2m_1, .., 2m_k}`.
pub fn cv_check(a: &PhaseSymbol, taus: &[Endo]) -> Result<Vec<RatioRow>> {
    let groups = a.groups();
    let orders: Vec<usize> = cv_orders(&groups).iter().map(|m| 2 * m).collect();
    let spec = MixedSeminormSpec {
        p: f64::INFINITY,
        t: orders.clone(),
        s: orders,
    };
    let semi = mixed_seminorm(a, &spec)?;
    ratio_rows(a, taus, semi, |sv| schatten_norm(sv, f64::INFINITY))
}

/// `||(1 - Delta)^{s/2} a||_{L^p}` over phase space.
pub fn phase_sobolev_norm(a: &PhaseSymbol, s: f64, p: f64) -> f64 {
    a.multiplier(|xi, eta| {
        let r2: f64 = xi.iter().chain(eta).map(|v| v * v).sum();
        C64::new((1.0 + r2).powf(s / 2.0), 0.0)
    })
    .lp_norm(p)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevPhaseReport {
    pub s: f64,
    pub p: f64,
    /// Whether `s > 2n`.
    pub hypothesis: bool,
    pub rows: Vec<RatioRow>,
}

/// `||a^tau||_p / ||a||_{H_p^s}` per `tau`.
pub fn sobolev_phase_check(a: &PhaseSymbol, s: f64, p: f64, taus: &[Endo]) -> Result<SobolevPhaseReport> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(Error::Domain(format!("p must lie in [1, inf), got {p}")));
    }
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("s must be nonnegative, got {s}")));
    }
    let rows = ratio_rows(a, taus, phase_sobolev_norm(a, s, p), |sv| schatten_norm(sv, p))?;
    Ok(SobolevPhaseReport {
        s,
        p,
        hypothesis: s > 2.0 * a.grid.dim as f64,
        rows,
    })
}

/// `s = 2 mu n |1 - 2/p|`.
pub fn interpolation_exponent(mu: f64, n: usize, p: f64) -> f64 {
    2.0 * mu * n as f64 * (1.0 - 2.0 / p).abs()
}
