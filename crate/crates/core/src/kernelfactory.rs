//! The kernels `K_{a,b}(x, y; tau) = b(x - y) F^{-1}a((1 - tau) x + tau y)`,
//! their smoothed versions `K^1`, `K^0`, the Hilbert–Schmidt smoothing factor
//! `<x>^{-s/2} psi_m(x - y)`, and the factorization identities between them.
//!
//! Kernels are stored as their values at grid pairs `(x_i, y_l)`; the operator
//! on `L^2` acts by `sum_l K(x_i, y_l) f(y_l) h^n`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::euclid::{bracket_unchecked, Endo, EndoClass, Grid};
use crate::fourierlab::{
    apply_multiplier, bessel_kernel, bessel_multiplier, complex_from_bytes, complex_to_bytes, GridFunction, Side,
    TrigSeries,
};
use crate::symbolcalc::{bracket_power_symbol, loglog_slope, Symbol};
use crate::C64;

/// Kernel values at grid pairs; row index `x`, column index `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub grid: Grid,
    pub values: DMatrix<C64>,
    pub tau: Option<Endo>,
    /// Construction tag, e.g. `"ab"`, `"k1"`, `"smoothing"`.
    pub tag: String,
    pub params: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelHeader {
    pub dim: usize,
    #[serde(rename = "N")]
    pub points: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub rows: usize,
    pub cols: usize,
    pub tau: Option<Vec<Vec<f64>>>,
    pub tag: String,
    pub params: serde_json::Value,
}

impl KernelMatrix {
    pub fn new(grid: Grid, values: DMatrix<C64>, tag: impl Into<String>) -> Result<Self> {
        let n = grid.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(Error::Shape(format!(
                "kernel on {n} points needs a {n}x{n} matrix, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(Self {
            grid,
            values,
            tau: None,
            tag: tag.into(),
            params: serde_json::Value::Null,
        })
    }

    pub fn with_tau(mut self, tau: &Endo) -> Self {
        self.tau = Some(tau.clone());
        self
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    /// Quadrature weight `h^n` per index.
    pub fn weight(&self) -> f64 {
        self.grid.cell_volume()
    }

    /// The operator's matrix on grid functions: `K h^n`.
    pub fn weighted(&self) -> DMatrix<C64> {
        &self.values * C64::new(self.weight(), 0.0)
    }

    /// `(sum |K|^2 h^{2n})^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt() * self.weight()
    }

    /// Hilbert–Schmidt norm of the difference.
    pub fn hs_distance(&self, other: &KernelMatrix) -> Result<f64> {
        self.same_grid(other)?;
        let s: f64 = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok(s.sqrt() * self.weight())
    }

    /// `||K - K'||_F / ||K'||_F` (0 when both vanish).
    pub fn relative_residual(&self, reference: &KernelMatrix) -> Result<f64> {
        let d = self.hs_distance(reference)?;
        let r = reference.hs_norm();
        Ok(if r == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / r
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn same_grid(&self, other: &KernelMatrix) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!(
                "kernels live on different grids ({:?} vs {:?})",
                self.grid, other.grid
            )));
        }
        Ok(())
    }

    pub fn header(&self) -> KernelHeader {
        KernelHeader {
            dim: self.grid.dim,
            points: self.grid.points,
            half_width: self.grid.half_width,
            rows: self.values.nrows(),
            cols: self.values.ncols(),
            tau: self.tau.as_ref().map(Endo::rows),
            tag: self.tag.clone(),
            params: self.params.clone(),
        }
    }

    /// Row-major little-endian complex doubles.
    pub fn to_bytes(&self) -> Vec<u8> {
        let row_major: Vec<C64> = self.values.transpose().iter().copied().collect();
        complex_to_bytes(&row_major)
    }

    pub fn from_parts(header: &KernelHeader, bytes: &[u8]) -> Result<Self> {
        let grid = Grid::new(header.dim, header.points, header.half_width)?;
        let values = complex_from_bytes(bytes)?;
        if values.len() != header.rows * header.cols {
            return Err(Error::Format(format!(
                "kernel payload holds {} values, header says {}x{}",
                values.len(),
                header.rows,
                header.cols
            )));
        }
        let m = DMatrix::from_row_slice(header.rows, header.cols, &values);
        let mut k = Self::new(grid, m, header.tag.clone())?;
        if let Some(rows) = &header.tau {
            k.tau = Some(Endo::from_rows(rows)?);
        }
        k.params = header.params.clone();
        Ok(k)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: &Path) -> Result<()> {
        fs::write(stem.with_extension("bin"), self.to_bytes())?;
        fs::write(
            stem.with_extension("json"),
            serde_json::to_string_pretty(&self.header())?,
        )?;
        Ok(())
    }

    pub fn load(stem: &Path) -> Result<Self> {
        let header: KernelHeader = serde_json::from_str(&fs::read_to_string(stem.with_extension("json"))?)?;
        let bytes = fs::read(stem.with_extension("bin"))?;
        Self::from_parts(&header, &bytes)
    }
}

/// `s, t > n` and `m in (n/2, t/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub s: f64,
    pub t: f64,
    pub m: f64,
}

impl SmoothingParams {
    pub fn new(s: f64, t: f64, m: f64, n: usize) -> Result<Self> {
        let p = Self { s, t, m };
        p.validate(n)?;
        Ok(p)
    }

    /// `s = t = n + 1`, `m` halfway between `n/2` and `t/2`.
    pub fn standard(n: usize) -> Self {
        let t = n as f64 + 1.0;
        Self {
            s: t,
            t,
            m: (n as f64 / 2.0 + t / 2.0) / 2.0,
        }
    }

    pub fn holds(&self, n: usize) -> bool {
        let n = n as f64;
        self.s > n && self.t > n && self.m > n / 2.0 && self.m < self.t / 2.0
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.holds(n) {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!(
                "need s, t > {n} and m in ({}, t/2), got s = {}, t = {}, m = {}",
                n as f64 / 2.0,
                self.s,
                self.t,
                self.m
            )))
        }
    }
}

/// Which smoothed kernel: `K^1` (multiplier in `x`, `tau in U1`) or `K^0`
/// (multiplier in `y`, `tau in U0`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factorization {
    U1,
    U0,
}

impl Factorization {
    pub fn admits(self, class: EndoClass) -> bool {
        match self {
            Factorization::U1 => class.in_u1(),
            Factorization::U0 => class.in_u0(),
        }
    }

    fn require(self, tau: &Endo) -> Result<()> {
        if self.admits(tau.class) {
            Ok(())
        } else {
            Err(Error::Classification(format!(
                "tau = {} is {:?}, the {self:?} construction needs tau in {}",
                tau.label(),
                tau.class,
                match self {
                    Factorization::U1 => "U1",
                    Factorization::U0 => "U0",
                }
            )))
        }
    }
}

fn check_grid_and_tau(tau: &Endo, g: &Grid) -> Result<()> {
    ensure_dim(g.dim, tau.dim())?;
    crate::error::ensure_finite(tau.matrix.as_slice(), "tau")
}

/// Whether the grid offset `x_i - y_l` stays inside the box `[-L, L)^n`.
fn offset_on_grid(g: &Grid, i: usize, l: usize) -> bool {
    let n = g.points as isize;
    let half = n / 2;
    g.multi_index(i).iter().zip(g.multi_index(l)).all(|(&a, b)| {
        let d = a as isize - b as isize + half;
        (0..n).contains(&d)
    })
}

/// `K_{a,b}` from the series of `F^{-1} a` and samples of `b` at the offsets.
fn assemble_ab(series: &TrigSeries, b_at: impl Fn(usize, usize) -> C64 + Sync, tau: &Endo, g: &Grid) -> DMatrix<C64> {
    let len = g.len();
    let cols: Vec<Vec<C64>> = (0..len)
        .into_par_iter()
        .map(|l| {
            let y = g.point(l);
            (0..len)
                .map(|i| {
                    if !offset_on_grid(g, i, l) {
                        return C64::new(0.0, 0.0);
                    }
                    let bv = b_at(i, l);
                    if bv == C64::new(0.0, 0.0) {
                        return bv;
                    }
                    let x = g.point(i);
                    let u: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                    let tu = tau.apply(&u);
                    let v: Vec<f64> = x.iter().zip(&tu).map(|(a, b)| a - b).collect();
                    bv * series.eval(&v)
                })
                .collect()
        })
        .collect();
    DMatrix::from_fn(len, len, |i, l| cols[l][i])
}

/// The series of `F^{-1} a` for `a` sampled at the frequencies of `g`.
pub fn inverse_series(a: &Symbol, g: &Grid) -> Result<TrigSeries> {
    TrigSeries::new(&GridFunction::sample_freq(a, *g))
}

fn require_decay(a: &Symbol, b: &Symbol, n: usize) -> Result<()> {
    let nf = n as f64;
    if !(a.degree() < -nf && b.degree() < -nf) {
        return Err(Error::Hypothesis(format!(
            "need a in S^-t, b in S^-s with s, t > {n}; got degrees {} ({}) and {} ({})",
            a.degree(),
            a.name(),
            b.degree(),
            b.name()
        )));
    }
    Ok(())
}

/// `K_{a,b}(x, y; tau) = b(x - y) F^{-1}a((1 - tau) x + tau y)` on grid pairs.
///
/// `F^{-1} a` is the exact trigonometric series through the samples of `a` at
/// the frequencies of `g`; `b` is taken as zero where `x - y` leaves `[-L, L)^n`.
pub fn kernel_ab(a: &Symbol, b: &Symbol, tau: &Endo, g: &Grid) -> Result<KernelMatrix> {
    check_grid_and_tau(tau, g)?;
    require_decay(a, b, g.dim)?;
    Ok(kernel_ab_unchecked(a, b, tau, g)?.with_tau(tau))
}

pub(crate) fn kernel_ab_unchecked(a: &Symbol, b: &Symbol, tau: &Endo, g: &Grid) -> Result<KernelMatrix> {
    let series = inverse_series(a, g)?;
    let values = assemble_ab(
        &series,
        |i, l| {
            let u: Vec<f64> = g.point(i).iter().zip(g.point(l)).map(|(x, y)| x - y).collect();
            b.eval(&u)
        },
        tau,
        g,
    );
    Ok(KernelMatrix::new(*g, values, "ab")?
        .with_tau(tau)
        .with_params(serde_json::json!({ "a": a.name(), "b": b.name() })))
}

/// Applies `(1 + |p|^2)^{r/2}` along columns (`x`, [`Factorization::U1`]) or
/// rows (`y`, [`Factorization::U0`]) after multiplying by `c` in that variable.
fn smooth(k: &DMatrix<C64>, c: &[C64], r: f64, side: Factorization, g: &Grid) -> Result<DMatrix<C64>> {
    let len = g.len();
    let lines: Vec<Vec<C64>> = (0..len)
        .into_par_iter()
        .map(|j| {
            let line: Vec<C64> = (0..len)
                .map(|i| {
                    let v = match side {
                        Factorization::U1 => k[(i, j)],
                        Factorization::U0 => k[(j, i)],
                    };
                    v * c[i]
                })
                .collect();
            if r == 0.0 {
                return Ok(line);
            }
            let f = GridFunction::new(*g, line, Side::Space)?;
            Ok(apply_multiplier(&f, bessel_multiplier(r))?.values)
        })
        .collect::<Result<_>>()?;
    Ok(match side {
        Factorization::U1 => DMatrix::from_fn(len, len, |i, j| lines[j][i]),
        Factorization::U0 => DMatrix::from_fn(len, len, |i, j| lines[i][j]),
    })
}

fn smoothed(
    a: &Symbol,
    b: &Symbol,
    c: &Symbol,
    tau: &Endo,
    m: f64,
    g: &Grid,
    side: Factorization,
) -> Result<KernelMatrix> {
    check_grid_and_tau(tau, g)?;
    side.require(tau)?;
    require_decay(a, b, g.dim)?;
    let k = kernel_ab_unchecked(a, b, tau, g)?;
    let cv = c.sample(g);
    let values = smooth(&k.values, &cv, m, side, g)?;
    let tag = match side {
        Factorization::U1 => "k1",
        Factorization::U0 => "k0",
    };
    Ok(KernelMatrix::new(*g, values, tag)?
        .with_tau(tau)
        .with_params(serde_json::json!({ "a": a.name(), "b": b.name(), "c": c.name(), "m": m })))
}

/// `K^1(x, y) = (1 - Delta_x)^{m/2} (c(x) K_{a,b}(x, y; tau))`, column by column.
pub fn kernel_k1(a: &Symbol, b: &Symbol, c: &Symbol, tau: &Endo, m: f64, g: &Grid) -> Result<KernelMatrix> {
    smoothed(a, b, c, tau, m, g, Factorization::U1)
}

/// `K^0(x, y) = (1 - Delta_y)^{m/2} (c(y) K_{a,b}(x, y; tau))`, row by row.
pub fn kernel_k0(a: &Symbol, b: &Symbol, c: &Symbol, tau: &Endo, m: f64, g: &Grid) -> Result<KernelMatrix> {
    smoothed(a, b, c, tau, m, g, Factorization::U0)
}

/// Kernel of `<Q>^{-s/2} (1 - Delta)^{-m/2}`: `<x>^{-s/2} psi_m(x - y)`.
///
/// `psi_m` is the discrete Bessel kernel, with `x - y` taken periodically, so
/// the matrix is exactly the grid operator built from the spectral multiplier.
pub fn smoothing_factor(s: f64, m: f64, g: &Grid) -> Result<KernelMatrix> {
    let n = g.dim as f64;
    if !(s > n && m > n / 2.0) {
        return Err(Error::Hypothesis(format!(
            "smoothing factor needs s > {n} and m > {}, got s = {s}, m = {m}",
            n / 2.0
        )));
    }
    let psi = bessel_kernel(m, g)?;
    let len = g.len();
    let np = g.points;
    let half = np / 2;
    let weights: Vec<f64> = (0..len)
        .map(|i| bracket_unchecked(&g.point(i)).powf(-s / 2.0))
        .collect();
    let values = DMatrix::from_fn(len, len, |i, l| {
        let xi = g.multi_index(i);
        let yl = g.multi_index(l);
        // periodic offset index of x - y
        let off: Vec<usize> = xi.iter().zip(&yl).map(|(&a, &b)| (a + np + half - b) % np).collect();
        psi.values[g.flat_index(&off)] * weights[i]
    });
    Ok(KernelMatrix::new(*g, values, "smoothing")?.with_params(serde_json::json!({ "s": s, "m": m })))
}

/// Output of [`factorization_check`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub side: Factorization,
    pub tau: Vec<Vec<f64>>,
    /// Relative Frobenius residual between `K_{a,b}` and the factored product.
    pub residual: f64,
    /// Whether `s, t, m` satisfy [`SmoothingParams`]; the identity is checked either way.
    pub hypothesis: bool,
}

/// Rebuilds `K_{a,b}` from `K^1` (or `K^0`) with `c = <.>^{s/2}`:
/// `K = <Q>^{-s/2} (1 - Delta)^{-m/2} K^1` for `tau in U1`,
/// `K = K^0 (1 - Delta)^{-m/2} <Q>^{-s/2}` for `tau in U0`.
/// Both factors are applied spectrally on the same grid.
pub fn factorization_check(
    a: &Symbol,
    b: &Symbol,
    tau: &Endo,
    side: Factorization,
    params: SmoothingParams,
    g: &Grid,
) -> Result<FactorizationReport> {
    check_grid_and_tau(tau, g)?;
    side.require(tau)?;
    let k = kernel_ab_unchecked(a, b, tau, g)?;
    let c = bracket_power_symbol(params.s / 2.0);
    let cv = c.sample(g);
    let smoothed = smooth(&k.values, &cv, params.m, side, g)?;
    let inv: Vec<C64> = cv.iter().map(|v| v.inv()).collect();
    let back = smooth(&smoothed, &vec![C64::new(1.0, 0.0); g.len()], -params.m, side, g)?;
    let len = g.len();
    let rebuilt = match side {
        Factorization::U1 => DMatrix::from_fn(len, len, |i, j| back[(i, j)] * inv[i]),
        Factorization::U0 => DMatrix::from_fn(len, len, |i, j| back[(i, j)] * inv[j]),
    };
    let rebuilt = KernelMatrix::new(*g, rebuilt, "factored")?;
    Ok(FactorizationReport {
        side,
        tau: tau.rows(),
        residual: rebuilt.relative_residual(&k)?,
        hypothesis: params.holds(g.dim),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityRow {
    pub tau: Vec<Vec<f64>>,
    /// `||tau - tau_0||`.
    pub tau_distance: f64,
    /// `||K(tau) - K(tau_0)||_HS`.
    pub hs_distance: f64,
    /// `||K(tau)||_HS`.
    pub hs_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityScan {
    pub side: Factorization,
    pub rows: Vec<ContinuityRow>,
    /// Log-log slope of the HS distance against `||tau - tau_0||`, over rows
    /// with both positive.
    pub slope: Option<f64>,
}

/// HS distances `||K^j(tau) - K^j(tau_0)||` along `path`.
#[allow(clippy::too_many_arguments)]
pub fn tau_continuity_scan(
    a: &Symbol,
    b: &Symbol,
    c: &Symbol,
    tau0: &Endo,
    path: &[Endo],
    m: f64,
    side: Factorization,
    g: &Grid,
) -> Result<ContinuityScan> {
    side.require(tau0)?;
    for tau in path {
        side.require(tau)?;
    }
    let base = smoothed(a, b, c, tau0, m, g, side)?;
    let rows = path
        .iter()
        .map(|tau| {
            let k = smoothed(a, b, c, tau, m, g, side)?;
            Ok(ContinuityRow {
                tau: tau.rows(),
                tau_distance: tau.distance(tau0),
                hs_distance: k.hs_distance(&base)?,
                hs_norm: k.hs_norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.tau_distance > 0.0 && r.hs_distance > 0.0)
        .map(|r| (r.tau_distance, r.hs_distance))
        .collect();
    Ok(ContinuityScan {
        side,
        slope: loglog_slope(&pts),
        rows,
    })
}

/// `tau_0 + h 1_X` for `h = 2^{-k}`, `k` in `ks`.
pub fn dyadic_path(tau0: &Endo, ks: impl IntoIterator<Item = i32>) -> Vec<Endo> {
    ks.into_iter().map(|k| tau0.shifted(2f64.powi(-k))).collect()
}
