//! Discrete Fourier machinery on [`Grid`]s, the continuous dyadic partition of
//! unity `(phi, psi)`, symbol reconstruction, decay and integrability estimates
//! for `F^{-1} a`, Bessel potentials and the two equivalent `H^m` norms.
//!
//! Convention: `F f(p) = int e^{-i<x,p>} f(x) dx`, `F^{-1} g(x) = (2 pi)^{-n} int e^{i<x,p>} g(p) dp`.
//! Discretely `F f(p_j) = h^n sum_k e^{-i<x_k,p_j>} f_k` and
//! `F^{-1} g(x_k) = (dp / 2 pi)^n sum_j e^{i<x_k,p_j>} g_j`; the pair is an exact round trip.

use std::f64::consts::PI;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use log::warn;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::euclid::{bracket_unchecked, norm, norm_sq, Grid};
use crate::quadrature::integrate;
use crate::symbolcalc::jet::{factorial, Jet};
use crate::symbolcalc::{mollifier_value, Symbol, SymbolFn};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Space,
    Frequency,
}

/// Values over the `N^n` points of a grid, either in space or in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionHeader {
    pub dim: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub side: Side,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<C64>, side: Side) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "grid function needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values, side })
    }

    pub fn zeros(grid: Grid, side: Side) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.len()],
            side,
        }
    }

    /// Samples of `a` at the spatial points.
    pub fn sample_space(a: &Symbol, grid: Grid) -> Self {
        Self {
            grid,
            values: a.sample(&grid),
            side: Side::Space,
        }
    }

    /// Samples of `a` at the frequency points.
    pub fn sample_freq(a: &Symbol, grid: Grid) -> Self {
        Self {
            grid,
            values: a.sample_freq(&grid),
            side: Side::Frequency,
        }
    }

    /// Coordinates of entry `i` on this function's side.
    pub fn coord(&self, i: usize) -> Vec<f64> {
        match self.side {
            Side::Space => self.grid.point(i),
            Side::Frequency => self.grid.freq(i),
        }
    }

    fn measure(&self) -> f64 {
        match self.side {
            Side::Space => self.grid.cell_volume(),
            Side::Frequency => self.grid.freq_cell_volume(),
        }
    }

    /// Riemann-sum `L^2` norm with the side's cell volume.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.measure()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.measure()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * c).collect(),
            ..self.clone()
        }
    }

    pub fn header(&self) -> GridFunctionHeader {
        GridFunctionHeader {
            dim: self.grid.dim,
            points: self.grid.points,
            half_width: self.grid.half_width,
            side: self.side,
        }
    }

    /// Little-endian `(re, im)` doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        complex_to_bytes(&self.values)
    }

    pub fn from_parts(header: &GridFunctionHeader, bytes: &[u8]) -> Result<Self> {
        let grid = Grid::new(header.dim, header.points, header.half_width)?;
        let values = complex_from_bytes(bytes)?;
        Self::new(grid, values, header.side)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        fs::File::create(stem.with_extension("bin"))?.write_all(&self.to_bytes())?;
        fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&self.header())?,
        )?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let header: GridFunctionHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        let mut bytes = Vec::new();
        fs::File::open(stem.with_extension("bin"))?.read_to_end(&mut bytes)?;
        Self::from_parts(&header, &bytes)
    }
}

pub(crate) fn complex_to_bytes(values: &[C64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub(crate) fn complex_from_bytes(bytes: &[u8]) -> Result<Vec<C64>> {
    if !bytes.len().is_multiple_of(16) {
        return Err(Error::Format(format!(
            "payload length {} is not a multiple of 16",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect())
}

// ---------------------------------------------------------------------------
// transforms

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    match dir {
        Direction::Forward => planner.plan_fft_forward(n),
        Direction::Inverse => planner.plan_fft_inverse(n),
    }
}

/// In-place physical transform along `axes` of a row-major array with `ndim`
/// axes of `n` points each. `weight` is `h` (forward) or `dp / 2 pi` (inverse)
/// per transformed axis; the grid phases `(-1)^k` and `(-1)^{j - N/2}` are applied.
pub(crate) fn transform_axes(data: &mut [C64], ndim: usize, n: usize, axes: &[usize], dir: Direction, weight: f64) {
    debug_assert_eq!(data.len(), n.pow(ndim as u32));
    let fft = plan(n, dir);
    let half_sign = if (n / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
    let alt = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    for &axis in axes {
        let stride = n.pow((ndim - 1 - axis) as u32);
        let block = stride * n;
        let starts: Vec<usize> = (0..data.len())
            .step_by(block)
            .flat_map(|b| (0..stride).map(move |s| b + s))
            .collect();
        let lines: Vec<Vec<C64>> = starts
            .par_iter()
            .map(|&s| {
                let mut line: Vec<C64> = (0..n).map(|k| data[s + k * stride] * alt(k)).collect();
                fft.process(&mut line);
                for (j, v) in line.iter_mut().enumerate() {
                    *v *= alt(j) * half_sign * weight;
                }
                line
            })
            .collect();
        for (s, line) in starts.iter().zip(lines) {
            for (k, v) in line.into_iter().enumerate() {
                data[s + k * stride] = v;
            }
        }
    }
}

/// `F f` sampled at the frequency points.
pub fn forward_fft(f: &GridFunction) -> Result<GridFunction> {
    if f.side != Side::Space {
        return Err(Error::Side("forward transform expects a space-side function".into()));
    }
    let g = f.grid;
    let mut values = f.values.clone();
    let all: Vec<usize> = (0..g.dim).collect();
    transform_axes(&mut values, g.dim, g.points, &all, Direction::Forward, g.spacing());
    Ok(GridFunction {
        grid: g,
        values,
        side: Side::Frequency,
    })
}

/// `F^{-1} g` sampled at the spatial points.
pub fn inverse_fft(f: &GridFunction) -> Result<GridFunction> {
    if f.side != Side::Frequency {
        return Err(Error::Side(
            "inverse transform expects a frequency-side function".into(),
        ));
    }
    let g = f.grid;
    let mut values = f.values.clone();
    let all: Vec<usize> = (0..g.dim).collect();
    transform_axes(
        &mut values,
        g.dim,
        g.points,
        &all,
        Direction::Inverse,
        g.freq_spacing() / (2.0 * PI),
    );
    Ok(GridFunction {
        grid: g,
        values,
        side: Side::Space,
    })
}

/// Largest grid (total points) [`direct_transform`] accepts.
pub const DIRECT_POINT_CAP: usize = 4096;

/// `F f` by the defining sum `h^n sum_k e^{-i<x_k,p_j>} f_k`, in `O(len^2)`.
/// Reference for [`forward_fft`].
pub fn direct_transform(f: &GridFunction) -> Result<GridFunction> {
    if f.side != Side::Space {
        return Err(Error::Side("forward transform expects a space-side function".into()));
    }
    let g = f.grid;
    if g.len() > DIRECT_POINT_CAP {
        return Err(Error::Resource(format!(
            "direct transform of {} points exceeds the cap {DIRECT_POINT_CAP}",
            g.len()
        )));
    }
    let w = g.cell_volume();
    let xs: Vec<Vec<f64>> = g.points_iter().collect();
    let values = (0..g.len())
        .into_par_iter()
        .map(|j| {
            let p = g.freq(j);
            let acc: C64 = xs
                .iter()
                .zip(&f.values)
                .map(|(x, v)| {
                    let phase: f64 = x.iter().zip(&p).map(|(a, b)| a * b).sum();
                    v * C64::from_polar(1.0, -phase)
                })
                .sum();
            acc * w
        })
        .collect();
    GridFunction::new(g, values, Side::Frequency)
}

/// `F^{-1}(m . F f)` for a multiplier given on frequencies.
pub fn apply_multiplier(f: &GridFunction, m: impl Fn(&[f64]) -> C64 + Sync) -> Result<GridFunction> {
    let mut spec = forward_fft(f)?;
    let g = spec.grid;
    spec.values
        .par_iter_mut()
        .enumerate()
        .for_each(|(i, v)| *v *= m(&g.freq(i)));
    inverse_fft(&spec)
}

/// `d^alpha f` via the multiplier `(i p)^alpha`; odd orders drop the Nyquist mode.
pub fn spectral_derivative(f: &GridFunction, alpha: &[usize]) -> Result<GridFunction> {
    ensure_dim(f.grid.dim, alpha.len())?;
    let g = f.grid;
    let nyq = -g.nyquist();
    apply_multiplier(f, |p| {
        let mut acc = C64::new(1.0, 0.0);
        for (d, &k) in alpha.iter().enumerate() {
            if k % 2 == 1 && p[d] == nyq {
                return C64::new(0.0, 0.0);
            }
            acc *= C64::new(0.0, p[d]).powi(k as i32);
        }
        acc
    })
}

/// `(1 + |p|^2)^{r/2}`.
pub fn bessel_multiplier(r: f64) -> impl Fn(&[f64]) -> C64 + Sync + Copy {
    move |p: &[f64]| C64::new((1.0 + norm_sq(p)).powf(r / 2.0), 0.0)
}

/// The trigonometric series `(dp / 2 pi)^n sum_j G_j e^{i v.p_j}` through the
/// frequency samples `G`, evaluated at arbitrary points `v`.
///
/// At grid points it reproduces [`inverse_fft`]; elsewhere it is the exact
/// band-limited (and `2L`-periodic) continuation, with no interpolation.
#[derive(Debug, Clone)]
pub struct TrigSeries {
    grid: Grid,
    coeffs: Vec<C64>,
}

impl TrigSeries {
    pub fn new(spectrum: &GridFunction) -> Result<Self> {
        if spectrum.side != Side::Frequency {
            return Err(Error::Side("trigonometric series needs frequency samples".into()));
        }
        let scale = (spectrum.grid.freq_spacing() / (2.0 * PI)).powi(spectrum.grid.dim as i32);
        Ok(Self {
            grid: spectrum.grid,
            coeffs: spectrum.values.iter().map(|c| c * scale).collect(),
        })
    }

    /// Series through the spectrum of the space-side samples `f`.
    pub fn from_space(f: &GridFunction) -> Result<Self> {
        Self::new(&forward_fft(f)?)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eval(&self, v: &[f64]) -> C64 {
        let g = &self.grid;
        let n = g.points;
        let freqs = g.axis_freqs();
        // per-axis phases e^{i v_d p_j}
        let phases: Vec<Vec<C64>> = v
            .iter()
            .map(|&vd| freqs.iter().map(|&p| C64::cis(vd * p)).collect())
            .collect();
        contract(&self.coeffs, &phases, n)
    }
}

/// `sum_j c_j prod_d phases[d][j_d]` over a row-major `n^dim` array.
fn contract(coeffs: &[C64], phases: &[Vec<C64>], n: usize) -> C64 {
    match phases.len() {
        1 => coeffs.iter().zip(&phases[0]).map(|(c, e)| c * e).sum(),
        _ => {
            let block = coeffs.len() / n;
            phases[0]
                .iter()
                .enumerate()
                .map(|(j, e)| e * contract(&coeffs[j * block..(j + 1) * block], &phases[1..], n))
                .sum()
        }
    }
}

// ---------------------------------------------------------------------------
// partition of unity

/// `int_{-1}^{1} exp(1 - 1/(1 - u^2)) du`.
fn mollifier_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| 2.0 * integrate(|u| mollifier_value(u * u), -1.0, 0.0, 64, 16))
}

/// CDF of the normalized mollifier on `[-1, 1]`.
fn mollifier_cdf(u: f64) -> f64 {
    if u <= -1.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    if u > 0.0 {
        return 1.0 - mollifier_cdf(-u);
    }
    integrate(|v| mollifier_value(v * v), -1.0, u, 32, 16) / mollifier_mass()
}

/// Radial profile data: `phi(p) = 1 - E((ln |p| - ln c)/delta)`, with `E` the
/// CDF of the normalized 1D mollifier on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Profile {
    center: f64,
    half_width: f64,
}

impl Profile {
    /// `eta_delta(s) = eta(s/delta) / (delta Z)` and its derivatives up to `order`.
    fn eta_derivs(&self, s: f64, order: usize) -> Vec<f64> {
        let u = s / self.half_width;
        if u.abs() >= 1.0 {
            return vec![0.0; order + 1];
        }
        let jet = crate::symbolcalc::mollifier().jet(&[u], order).expect("mollifier jets");
        let z = mollifier_mass();
        (0..=order)
            .map(|k| jet.derivative_value(&[k]).re / (z * self.half_width.powi(k as i32 + 1)))
            .collect()
    }

    fn log_offset(&self, r: f64) -> f64 {
        if r <= 0.0 {
            f64::NEG_INFINITY
        } else {
            r.ln() - self.center.ln()
        }
    }

    fn phi_radial(&self, r: f64) -> f64 {
        1.0 - mollifier_cdf(self.log_offset(r) / self.half_width)
    }

    /// `-r phi'(r) = eta_delta(ln r - ln c)`.
    fn psi_radial(&self, r: f64) -> f64 {
        let u = self.log_offset(r) / self.half_width;
        if !(u.abs() < 1.0) {
            return 0.0;
        }
        mollifier_value(u * u) / (mollifier_mass() * self.half_width)
    }

    fn inner(&self) -> f64 {
        self.center * (-self.half_width).exp()
    }

    fn outer(&self) -> f64 {
        self.center * self.half_width.exp()
    }

    /// Jet of `ln |p| - ln c` at `p != 0`.
    fn offset_jet(&self, p: &[f64], order: usize) -> Jet {
        let r0 = norm(p);
        let r = Jet::norm_squared(p, order).powf(0.5);
        let mut derivs = vec![C64::new(self.log_offset(r0), 0.0)];
        let mut fact = 1.0;
        for k in 1..=order {
            // d^k ln r = (-1)^(k-1) (k-1)! / r^k
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            derivs.push(C64::new(sign * fact / r0.powi(k as i32), 0.0));
            fact *= k as f64;
        }
        r.compose(&derivs)
    }
}

struct PhiFn(Profile);

impl SymbolFn for PhiFn {
    fn jet(&self, p: &[f64], order: usize) -> Jet {
        let pr = self.0;
        let r0 = norm(p);
        if r0 <= pr.inner() {
            return Jet::constant(p.len(), order, C64::new(1.0, 0.0));
        }
        if r0 >= pr.outer() {
            return Jet::zero(p.len(), order);
        }
        let eta = pr.eta_derivs(pr.log_offset(r0), order);
        let mut derivs = vec![C64::new(pr.phi_radial(r0), 0.0)];
        derivs.extend((1..=order).map(|k| C64::new(-eta[k - 1], 0.0)));
        pr.offset_jet(p, order).compose(&derivs)
    }
}

struct PsiFn(Profile);

impl SymbolFn for PsiFn {
    fn jet(&self, p: &[f64], order: usize) -> Jet {
        let pr = self.0;
        let r0 = norm(p);
        if r0 <= pr.inner() || r0 >= pr.outer() {
            return Jet::zero(p.len(), order);
        }
        let eta = pr.eta_derivs(pr.log_offset(r0), order);
        pr.offset_jet(p, order)
            .compose(&eta.iter().map(|&v| C64::new(v, 0.0)).collect::<Vec<_>>())
    }
}

/// The pair `(phi, psi)` with `psi(p) = -<grad phi(p), p>`.
#[derive(Debug, Clone)]
pub struct PartitionPair {
    pub phi: Symbol,
    pub psi: Symbol,
    profile_center: f64,
    profile_half_width: f64,
}

impl PartitionPair {
    fn profile(&self) -> Profile {
        Profile {
            center: self.profile_center,
            half_width: self.profile_half_width,
        }
    }

    /// `phi` at radius `|p| = r`.
    pub fn phi_radial(&self, r: f64) -> f64 {
        self.profile().phi_radial(r)
    }

    /// `psi` at radius `|p| = r`.
    pub fn psi_radial(&self, r: f64) -> f64 {
        self.profile().psi_radial(r)
    }

    /// Radii where `phi` leaves 1 and reaches 0.
    pub fn transition(&self) -> (f64, f64) {
        (self.profile().inner(), self.profile().outer())
    }
}

/// Default transition center: `phi` is smoothed across `|p| = sqrt 2`.
pub const DEFAULT_PARTITION_CENTER: f64 = std::f64::consts::SQRT_2;

/// Radial `phi` equal to 1 on `|p| <= 1` and 0 on `|p| >= 2`, smoothed in
/// `ln |p|` across `|p| = center` with the widest mollifier fitting in `[1, 2]`.
pub fn build_partition(center: f64) -> Result<PartitionPair> {
    if !(center > 1.0 && center < 2.0) {
        return Err(Error::Domain(format!(
            "transition center must lie in (1, 2), got {center}"
        )));
    }
    let half_width = center.ln().min(2f64.ln() - center.ln());
    let profile = Profile { center, half_width };
    Ok(PartitionPair {
        phi: Symbol::new(format!("phi(c={center})"), f64::NEG_INFINITY, PhiFn(profile)),
        psi: Symbol::new(format!("psi(c={center})"), f64::NEG_INFINITY, PsiFn(profile)),
        profile_center: center,
        profile_half_width: half_width,
    })
}

/// Width in `ln t` of the smooth grading at each end of [`log_nodes`].
pub const LOG_NODE_GRADING: f64 = 0.4;

/// Nodes `(t, w)` for `int_1^T f(t) dt/t`.
///
/// Midpoint rule in `sigma` with `ln t = g(sigma)`, where `g'` rises from 0
/// to 1 as a mollifier CDF over the first and last [`LOG_NODE_GRADING`] of the
/// range. The endpoint grading keeps the rule accurate for integrands that do
/// not vanish at `t = 1` or `t = T`.
pub fn log_nodes(t_max: f64, count: usize) -> Result<Vec<(f64, f64)>> {
    if !(t_max >= 2.0) {
        return Err(Error::Domain(format!("T must be at least 2, got {t_max}")));
    }
    if count < 16 {
        return Err(Error::Domain(format!("need at least 16 quadrature nodes, got {count}")));
    }
    let big_s = t_max.ln();
    let s1 = LOG_NODE_GRADING.min(big_s / 2.0);
    let half = s1 / 2.0;
    let sigma_max = big_s + s1;
    let step = |y: f64| mollifier_cdf((y - half) / half);
    // g on the lower ramp [0, s1]
    let ramp = |x: f64| integrate(step, 0.0, x, 8, 16);
    let g = |x: f64| {
        if x <= s1 {
            ramp(x)
        } else if x >= sigma_max - s1 {
            big_s - ramp(sigma_max - x)
        } else {
            x - half
        }
    };
    let gp = |x: f64| {
        let a = x.min(sigma_max - x);
        if a < s1 {
            step(a)
        } else {
            1.0
        }
    };
    let ds = sigma_max / count as f64;
    Ok((0..count)
        .map(|j| {
            let x = (j as f64 + 0.5) * ds;
            (g(x).exp(), ds * gp(x))
        })
        .collect())
}

/// `phi(p) + int_1^T psi(p/t) dt/t` at radius `r`, by the given nodes.
pub fn partition_sum(pp: &PartitionPair, nodes: &[(f64, f64)], r: f64) -> f64 {
    pp.phi_radial(r) + nodes.iter().map(|&(t, w)| w * pp.psi_radial(r / t)).sum::<f64>()
}

/// `max |partition_sum - 1|` over the radii `0..=T/2` (`samples` equispaced).
pub fn partition_completeness(pp: &PartitionPair, t_max: f64, count: usize, samples: usize) -> Result<f64> {
    let nodes = log_nodes(t_max, count)?;
    let top = t_max / 2.0;
    Ok((0..=samples)
        .into_par_iter()
        .map(|i| {
            let r = top * i as f64 / samples as f64;
            (partition_sum(pp, &nodes, r) - 1.0).abs()
        })
        .reduce(|| 0.0, f64::max))
}

/// Output of [`dyadic_reconstruct`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `a_0 + int_1^T t^m (psi a_t)_{1/t} dt/t` at the frequency points.
    pub function: GridFunction,
    /// Radius `T/2` inside which the reconstruction is asserted.
    pub covered_radius: f64,
    /// Whether every grid frequency lies inside the covered radius.
    pub covers_grid: bool,
}

/// Rebuilds `a` from `phi a` and the band pieces `t^m (psi a_t)(p/t)`,
/// `a_t(p) = t^{-m} a(t p)`, over `t in [1, T]`.
pub fn dyadic_reconstruct(
    a: &Symbol,
    m: f64,
    pp: &PartitionPair,
    t_max: f64,
    quad_nodes: usize,
    g: &Grid,
) -> Result<Reconstruction> {
    let nodes = log_nodes(t_max, quad_nodes)?;
    let values = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let p = g.freq(i);
            let r = norm(&p);
            let mut acc = a.eval(&p) * pp.phi_radial(r);
            for &(t, w) in &nodes {
                let psi = pp.psi_radial(r / t);
                if psi != 0.0 {
                    // (psi a_t)(p/t) = psi(p/t) t^{-m} a(p)
                    let band = a.eval(&p) * (psi * t.powf(-m));
                    acc += band * (w * t.powf(m));
                }
            }
            acc
        })
        .collect();
    let covered_radius = t_max / 2.0;
    let max_freq = g.nyquist() * (g.dim as f64).sqrt();
    let covers_grid = max_freq <= covered_radius;
    if !covers_grid {
        warn!("T = {t_max} covers |p| <= {covered_radius}, grid frequencies reach {max_freq:.3}");
    }
    Ok(Reconstruction {
        function: GridFunction::new(*g, values, Side::Frequency)?,
        covered_radius,
        covers_grid,
    })
}

/// Smallest constant making `|F^{-1}((psi a_t)_{1/t})(x)| <= C t^{m+n} <x>^{-K} <t x>^{-M}` on the grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandDecay {
    pub t: f64,
    pub constant: f64,
    /// Grid point attaining the constant.
    pub argmax: Vec<f64>,
    /// Whether the band `t <= |p| <= 2t` fits under the Nyquist frequency.
    pub resolved: bool,
}

pub fn band_term_decay(
    a: &Symbol,
    m: f64,
    pp: &PartitionPair,
    t: f64,
    big_m: usize,
    k: usize,
    g: &Grid,
) -> Result<BandDecay> {
    let n = g.dim as f64;
    let need = 1.0 + (m + n).max(0.0);
    if (big_m as f64) < need {
        return Err(Error::Precondition(format!(
            "M = {big_m} below the threshold 1 + max(0, m + n) = {need}"
        )));
    }
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("t = {t} must be at least 1")));
    }
    let band: Vec<C64> = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let p = g.freq(i);
            let psi = pp.psi_radial(norm(&p) / t);
            if psi == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                a.eval(&p) * (psi * t.powf(-m))
            }
        })
        .collect();
    let spatial = inverse_fft(&GridFunction::new(*g, band, Side::Frequency)?)?;
    let scale = t.powf(m + n);
    let (constant, idx) = spatial
        .values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let x = g.point(i);
            let tx: Vec<f64> = x.iter().map(|c| c * t).collect();
            let bound = scale * bracket_unchecked(&x).powi(-(k as i32)) * bracket_unchecked(&tx).powi(-(big_m as i32));
            (v.norm() / bound, i)
        })
        .reduce(|| (0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
    let resolved = 2.0 * t <= g.nyquist();
    if !resolved {
        warn!("band t = {t} exceeds the grid Nyquist frequency {}", g.nyquist());
    }
    Ok(BandDecay {
        t,
        constant,
        argmax: g.point(idx),
        resolved,
    })
}

// ---------------------------------------------------------------------------
// pointwise F^{-1} a for symbols of positive growth order

/// Truncation factor: the dyadic sum is cut at `T = DEFAULT_CUTOFF / h`.
pub const DEFAULT_CUTOFF: f64 = 40.0;

/// Largest padded transform (total points) [`continuum_inverse`] may allocate.
pub const PADDED_POINT_CAP: usize = 1 << 22;

/// `F^{-1}(phi(./T) a)` at the spatial points of `g`, `T = cutoff / h`.
///
/// This is the dyadic reconstruction truncated at `T`, transformed on a grid
/// twice as wide and `r` times finer, so the grid points of `g` are exact
/// nodes and the values approximate the continuum transform away from `0`.
pub fn continuum_inverse(a: &Symbol, pp: &PartitionPair, g: &Grid, cutoff: f64) -> Result<GridFunction> {
    let t_max = cutoff / g.spacing();
    let (_, outer) = pp.transition();
    // nyquist of the padded grid is r pi / h; it must reach outer * T
    let need = outer * cutoff / PI;
    let r = (need.ceil() as usize).next_power_of_two().max(1);
    let padded = Grid::new(g.dim, 2 * r * g.points, 2.0 * g.half_width)?;
    if padded.len() > PADDED_POINT_CAP {
        return Err(Error::Resource(format!(
            "padded transform needs {} points, cap is {PADDED_POINT_CAP}",
            padded.len()
        )));
    }
    let spec: Vec<C64> = (0..padded.len())
        .into_par_iter()
        .map(|i| {
            let p = padded.freq(i);
            let w = pp.phi_radial(norm(&p) / t_max);
            if w == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                a.eval(&p) * w
            }
        })
        .collect();
    let fine = inverse_fft(&GridFunction::new(padded, spec, Side::Frequency)?)?;
    let offset = g.points / 2;
    let values = (0..g.len())
        .map(|i| {
            let idx: Vec<usize> = g.multi_index(i).iter().map(|&k| r * (offset + k)).collect();
            fine.values[padded.flat_index(&idx)]
        })
        .collect();
    GridFunction::new(*g, values, Side::Space)
}

/// One row of a decay profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    pub measured: f64,
    pub bound_shape: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayProfile {
    pub grid: Grid,
    pub exponent: usize,
    /// One row per grid point except the origin, in grid order.
    pub rows: Vec<DecayRow>,
    pub sup: f64,
}

impl DecayProfile {
    /// `max |ratio_fine - ratio_coarse| / max ratio_coarse` over the coarse
    /// points, `fine` being this profile on a grid refined `2^k` times.
    pub fn pointwise_drift(&self, fine: &DecayProfile) -> Result<f64> {
        let (c, f) = (self.grid, fine.grid);
        if c.dim != f.dim || c.half_width != f.half_width || f.points % c.points != 0 {
            return Err(Error::GridMismatch("profiles are not on nested grids".into()));
        }
        let step = f.points / c.points;
        let origin_c = c.origin_index();
        let origin_f = f.origin_index();
        let pick = |i: usize, origin: usize| if i < origin { i } else { i - 1 };
        let mut worst = 0.0f64;
        for i in 0..c.len() {
            if i == origin_c {
                continue;
            }
            let fi = f.flat_index(&c.multi_index(i).iter().map(|&k| k * step).collect::<Vec<_>>());
            let a = self.rows[pick(i, origin_c)].ratio;
            let b = fine.rows[pick(fi, origin_f)].ratio;
            worst = worst.max((a - b).abs());
        }
        Ok(worst / self.sup)
    }
}

/// `<x>^K |F^{-1} a(x)| / (1 + |x|^{-m-n})` over the punctured grid (case `m + n > 0`).
pub fn decay_profile(a: &Symbol, m: f64, k: usize, g: &Grid) -> Result<DecayProfile> {
    let n = g.dim as f64;
    if m + n <= 0.0 {
        return Err(Error::Case(format!(
            "decay profile covers m + n > 0, got m + n = {}",
            m + n
        )));
    }
    let pp = build_partition(DEFAULT_PARTITION_CENTER)?;
    let f = continuum_inverse(a, &pp, g, DEFAULT_CUTOFF)?;
    let origin = g.origin_index();
    let rows: Vec<DecayRow> = (0..g.len())
        .filter(|&i| i != origin)
        .map(|i| {
            let x = g.point(i);
            let radius = norm(&x);
            let measured = f.values[i].norm();
            let bound_shape = bracket_unchecked(&x).powi(-(k as i32)) * (1.0 + radius.powf(-m - n));
            DecayRow {
                radius,
                measured,
                bound_shape,
                ratio: measured / bound_shape,
            }
        })
        .collect();
    let sup = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(DecayProfile {
        grid: *g,
        exponent: k,
        rows,
        sup,
    })
}

/// Discrete `F^{-1}` of the frequency samples of `a`.
pub fn inverse_of_symbol(a: &Symbol, g: &Grid) -> Result<GridFunction> {
    inverse_fft(&GridFunction::sample_freq(a, *g))
}

/// `sum |F^{-1} a| h^n` for `a` of negative order.
pub fn l1_check(a: &Symbol, m: f64, g: &Grid) -> Result<f64> {
    if !(m < 0.0) {
        return Err(Error::Precondition(format!("integrability needs m < 0, got {m}")));
    }
    Ok(inverse_of_symbol(a, g)?.l1_norm())
}

/// `||b F^{-1} a||_{L^2}` for `m < -n/2`.
pub fn weighted_l2_check(a: &Symbol, b: &Symbol, m: f64, g: &Grid) -> Result<f64> {
    if !(m < -(g.dim as f64) / 2.0) {
        return Err(Error::Precondition(format!(
            "square integrability needs m < -n/2 = {}, got {m}",
            -(g.dim as f64) / 2.0
        )));
    }
    let f = inverse_of_symbol(a, g)?;
    let bv = b.sample(g);
    let s: f64 = f.values.iter().zip(&bv).map(|(u, w)| (u * w).norm_sqr()).sum();
    Ok((s * g.cell_volume()).sqrt())
}

/// `psi_r = F^{-1}(1 + |p|^2)^{-r/2}` on the grid.
pub fn bessel_kernel(r: f64, g: &Grid) -> Result<GridFunction> {
    let m = bessel_multiplier(-r);
    let spec: Vec<C64> = (0..g.len()).map(|i| m(&g.freq(i))).collect();
    inverse_fft(&GridFunction::new(*g, spec, Side::Frequency)?)
}

/// The discrete delta `h^{-n}` at the origin.
pub fn discrete_delta(g: &Grid) -> GridFunction {
    let mut f = GridFunction::zeros(*g, Side::Space);
    f.values[g.origin_index()] = C64::new(1.0 / g.cell_volume(), 0.0);
    f
}

/// `max |(1 - Delta)^{r/2} psi_r - delta| / h^{-n}`.
pub fn bessel_delta_residual(r: f64, g: &Grid) -> Result<f64> {
    let psi = bessel_kernel(r, g)?;
    let back = apply_multiplier(&psi, bessel_multiplier(r))?;
    let delta = discrete_delta(g);
    let peak = 1.0 / g.cell_volume();
    Ok(back
        .values
        .iter()
        .zip(&delta.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / peak)
}

/// `||(1 + |p|^2)^{m/2} F f||_{L^2} (2 pi)^{-n/2}`.
pub fn sobolev_norm_fourier(f: &GridFunction, m: f64) -> Result<f64> {
    if f.side != Side::Space {
        return Err(Error::Side("Sobolev norm expects a space-side function".into()));
    }
    let spec = forward_fft(f)?;
    let g = f.grid;
    let s: f64 = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (1.0 + norm_sq(&g.freq(i))).powf(m) * v.norm_sqr())
        .sum();
    Ok((s * g.freq_cell_volume()).sqrt() / (2.0 * PI).powf(g.dim as f64 / 2.0))
}

fn unit_sphere_area(n: usize) -> f64 {
    // 2 pi^{n/2} / Gamma(n/2)
    let half = n as f64 / 2.0;
    let gamma = if n.is_multiple_of(2) {
        factorial(n / 2 - 1)
    } else {
        // Gamma(k + 1/2) = (2k)! sqrt(pi) / (4^k k!)
        let k = (n - 1) / 2;
        factorial(2 * k) * PI.sqrt() / (4f64.powi(k as i32) * factorial(k))
    };
    2.0 * PI.powf(half) / gamma
}

/// `H^m` norm without the Fourier transform: `sum_{|alpha| <= [m]} ||d^alpha f||^2`
/// plus, for non-integer `m`, the difference quotients of the top derivatives
/// over `0 < |z| <= r` with weight `|z|^{-n - 2 mu}`, `mu = m - [m]`.
pub fn sobolev_norm_slobodeckij(f: &GridFunction, m: f64, r: f64) -> Result<f64> {
    if f.side != Side::Space {
        return Err(Error::Side("Sobolev norm expects a space-side function".into()));
    }
    if !(m >= 0.0) {
        return Err(Error::Domain(format!("order m = {m} must be nonnegative")));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius r = {r} must be positive")));
    }
    let g = f.grid;
    let n = g.dim;
    let h = g.spacing();
    let vol = g.cell_volume();
    let top = m.floor() as usize;
    let mu = m - top as f64;
    let mut total = 0.0;
    let mut tops = Vec::new();
    for alpha in crate::symbolcalc::multi_indices(n, top) {
        let d = spectral_derivative(f, &alpha)?;
        total += d.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * vol;
        if alpha.iter().sum::<usize>() == top {
            tops.push((alpha, d));
        }
    }
    if mu == 0.0 {
        return Ok(total.sqrt());
    }
    let reach = (r / h).floor() as isize;
    let mut offsets = Vec::new();
    let span: Vec<isize> = (-reach..=reach).collect();
    let mut cur = vec![0isize; n];
    loop {
        let z = cur.iter().map(|&k| k as f64 * h).collect::<Vec<_>>();
        let dist = norm(&z);
        if dist > 0.0 && dist <= r + 1e-12 {
            offsets.push((cur.clone(), dist));
        }
        // odometer over span^n
        let mut d = 0;
        loop {
            if d == n {
                break;
            }
            let pos = span.iter().position(|&v| v == cur[d]).expect("in span");
            if pos + 1 < span.len() {
                cur[d] = span[pos + 1];
                break;
            }
            cur[d] = span[0];
            d += 1;
        }
        if d == n {
            break;
        }
    }
    if reach == 0 {
        offsets.clear();
    }
    // cell around z = 0 as a ball of equal volume: int_{|z|<rho} z_d^2 |z|^{-n-2mu} dz
    let rho = (vol * n as f64 / unit_sphere_area(n)).powf(1.0 / n as f64);
    let near = unit_sphere_area(n) / n as f64 * rho.powf(2.0 - 2.0 * mu) / (2.0 - 2.0 * mu);
    let np = g.points as isize;
    for (alpha, d) in &tops {
        let vals = &d.values;
        let double: f64 = offsets
            .par_iter()
            .map(|(z, dist)| {
                let mut s = 0.0;
                for i in 0..g.len() {
                    let idx = g.multi_index(i);
                    let shifted: Vec<usize> = idx
                        .iter()
                        .zip(z)
                        .map(|(&k, &dz)| (k as isize + dz).rem_euclid(np) as usize)
                        .collect();
                    s += (vals[g.flat_index(&shifted)] - vals[i]).norm_sqr();
                }
                s * vol * vol / dist.powf(n as f64 + 2.0 * mu)
            })
            .sum();
        total += double;
        for axis in 0..n {
            let mut beta = alpha.clone();
            beta[axis] += 1;
            let grad = spectral_derivative(f, &beta)?;
            total += grad.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * vol * near;
        }
    }
    Ok(total.sqrt())
}
