//! Euclidean primitives: uniform grids on `[-L, L)^n` and their Fourier duals,
//! the Japanese bracket, endomorphism classification against `U0`/`U1`, and
//! the affine change of variables `C_tau` on `X x X`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ensure_dim, ensure_finite, Error, Result};

/// Relative singularity margin for determinants (scaled by `1 + ||M||^n`).
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-10;

/// Truncated uniform discretization of `R^n`.
///
/// Points per axis are `x_k = -L + k h` with `h = 2L/N`; the dual frequencies
/// are `p_j = (j - N/2) pi/L`, covering `[-pi/h, pi/h)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
}

impl Grid {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Domain("grid dimension must be positive".into()));
        }
        if points < 2 || !points.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "points per axis must be a positive even integer, got {points}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::Domain(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(Self {
            dim,
            points,
            half_width,
        })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn freq_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Largest (Nyquist) frequency magnitude `pi/h`.
    pub fn nyquist(&self) -> f64 {
        PI / self.spacing()
    }

    /// Total number of grid points `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^n` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Quadrature weight `(pi/L)^n` of one dual cell.
    pub fn freq_cell_volume(&self) -> f64 {
        self.freq_spacing().powi(self.dim as i32)
    }

    pub fn axis_point(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.spacing()
    }

    pub fn axis_freq(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.freq_spacing()
    }

    pub fn axis_points(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.axis_point(k)).collect()
    }

    pub fn axis_freqs(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.axis_freq(j)).collect()
    }

    /// Row-major multi-index of a flat index (last axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for d in (0..self.dim).rev() {
            idx[d] = flat % self.points;
            flat /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &k| acc * self.points + k)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|k| self.axis_point(k)).collect()
    }

    pub fn freq(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).into_iter().map(|j| self.axis_freq(j)).collect()
    }

    pub fn points_iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn freqs_iter(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.freq(i))
    }

    /// Flat index of the origin (`k = N/2` on every axis).
    pub fn origin_index(&self) -> usize {
        self.flat_index(&vec![self.points / 2; self.dim])
    }

    /// The frequency grid viewed as a spatial grid: same `N`, half width `pi/h`.
    pub fn dual(&self) -> Grid {
        Grid {
            dim: self.dim,
            points: self.points,
            half_width: self.nyquist(),
        }
    }

    /// Same box, twice as many points per axis.
    pub fn refined(&self) -> Grid {
        Grid {
            points: self.points * 2,
            ..*self
        }
    }

    pub fn with_dim(&self, dim: usize) -> Grid {
        Grid { dim, ..*self }
    }
}

/// A point of phase space `X x X*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        ensure_dim(x.len(), p.len())?;
        Ok(Self { x, p })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// `|x|^2`.
pub fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `|x|`.
pub fn norm(x: &[f64]) -> f64 {
    norm_sq(x).sqrt()
}

/// The Japanese bracket `<x> = (1 + |x|^2)^{1/2}`.
pub fn bracket(x: &[f64]) -> Result<f64> {
    ensure_finite(x, "bracket argument")?;
    Ok((1.0 + norm_sq(x)).sqrt())
}

pub(crate) fn bracket_unchecked(x: &[f64]) -> f64 {
    (1.0 + norm_sq(x)).sqrt()
}

/// Slack in Peetre's inequality: `2^{|s|/2} <x>^{|s|} <y>^s - <x+y>^s`.
pub fn peetre_gap(x: &[f64], y: &[f64], s: f64) -> Result<f64> {
    ensure_dim(x.len(), y.len())?;
    ensure_finite(x, "x")?;
    ensure_finite(y, "y")?;
    if !s.is_finite() {
        return Err(Error::Domain("exponent must be finite".into()));
    }
    let sum: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
    let lhs = bracket_unchecked(&sum).powf(s);
    let rhs = 2f64.powf(s.abs() / 2.0) * bracket_unchecked(x).powf(s.abs()) * bracket_unchecked(y).powf(s);
    Ok(rhs - lhs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndoClass {
    U0Only,
    U1Only,
    Both,
    OutsideU,
}

impl EndoClass {
    pub fn in_u0(self) -> bool {
        matches!(self, EndoClass::U0Only | EndoClass::Both)
    }

    pub fn in_u1(self) -> bool {
        matches!(self, EndoClass::U1Only | EndoClass::Both)
    }

    pub fn in_u(self) -> bool {
        self != EndoClass::OutsideU
    }
}

/// An endomorphism `tau` of `X` together with its `U0`/`U1` classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endo {
    #[serde(with = "matrix_rows")]
    pub matrix: DMatrix<f64>,
    pub det_tau: f64,
    pub det_one_minus_tau: f64,
    pub class: EndoClass,
}

/// Largest singular value.
pub fn operator_norm(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().max()
}

fn singular_threshold(m: &DMatrix<f64>, tol: f64) -> f64 {
    tol * (1.0 + operator_norm(m).powi(m.nrows() as i32))
}

/// Classify `tau` against `U0` (invertible) and `U1 = 1 + U0`.
///
/// A determinant counts as zero when `|det M| < tol (1 + ||M||^n)`, with `M`
/// the matrix whose determinant is taken.
pub fn classify_endo(tau: &DMatrix<f64>, tol: f64) -> Result<Endo> {
    if tau.nrows() != tau.ncols() {
        return Err(Error::Shape(format!(
            "endomorphism must be square, got {}x{}",
            tau.nrows(),
            tau.ncols()
        )));
    }
    if tau.nrows() == 0 {
        return Err(Error::Shape("endomorphism must be non-empty".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("singularity tolerance must be positive".into()));
    }
    ensure_finite(tau.as_slice(), "tau")?;
    let n = tau.nrows();
    let one_minus = DMatrix::<f64>::identity(n, n) - tau;
    let det_tau = tau.determinant();
    let det_one_minus_tau = one_minus.determinant();
    let inv0 = det_tau.abs() >= singular_threshold(tau, tol);
    let inv1 = det_one_minus_tau.abs() >= singular_threshold(&one_minus, tol);
    let class = match (inv0, inv1) {
        (true, true) => EndoClass::Both,
        (true, false) => EndoClass::U0Only,
        (false, true) => EndoClass::U1Only,
        (false, false) => EndoClass::OutsideU,
    };
    Ok(Endo {
        matrix: tau.clone(),
        det_tau,
        det_one_minus_tau,
        class,
    })
}

impl Endo {
    pub fn new(tau: DMatrix<f64>) -> Result<Self> {
        classify_endo(&tau, DEFAULT_SINGULAR_TOL)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("endomorphism rows must form a square matrix".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// `s * 1_X`.
    pub fn scalar(dim: usize, s: f64) -> Result<Self> {
        Self::new(DMatrix::identity(dim, dim) * s)
    }

    pub fn zero(dim: usize) -> Self {
        Self::scalar(dim, 0.0).expect("zero endomorphism is valid")
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, 1.0).expect("identity is valid")
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.matrix[(i, j)] * x[j]).sum())
            .collect()
    }

    /// `1 - tau`, reclassified.
    pub fn complement(&self) -> Self {
        let n = self.dim();
        Self::new(DMatrix::identity(n, n) - &self.matrix).expect("complement of a valid endomorphism")
    }

    /// `tau + s * 1_X`, reclassified.
    pub fn shifted(&self, s: f64) -> Self {
        let n = self.dim();
        Self::new(&self.matrix + DMatrix::identity(n, n) * s).expect("shift of a valid endomorphism")
    }

    /// Operator-norm distance to another endomorphism.
    pub fn distance(&self, other: &Endo) -> f64 {
        operator_norm(&(&self.matrix - &other.matrix))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        matrix_rows::to_rows(&self.matrix)
    }

    /// Short label: the scalar when `tau` is a multiple of the identity.
    pub fn label(&self) -> String {
        let n = self.dim();
        let s = self.matrix[(0, 0)];
        let scalar = (0..n).all(|i| {
            (0..n).all(|j| {
                let expect = if i == j { s } else { 0.0 };
                self.matrix[(i, j)] == expect
            })
        });
        if scalar {
            format!("{s}")
        } else {
            format!("{:?}", self.rows())
        }
    }
}

/// `C_tau(x, y) = ((1 - tau) x + tau y, x - y)`.
pub fn c_tau(tau: &Endo, x: &[f64], y: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_dim(tau.dim(), x.len())?;
    ensure_dim(tau.dim(), y.len())?;
    let u: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let tu = tau.apply(&u);
    let v = x.iter().zip(&tu).map(|(a, b)| a - b).collect();
    Ok((v, u))
}

/// `C_tau^{-1}(v, u) = (v + tau u, v - (1 - tau) u)`.
pub fn c_tau_inv(tau: &Endo, v: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    ensure_dim(tau.dim(), v.len())?;
    ensure_dim(tau.dim(), u.len())?;
    let tu = tau.apply(u);
    let x: Vec<f64> = v.iter().zip(&tu).map(|(a, b)| a + b).collect();
    let y = x.iter().zip(u).map(|(a, b)| a - b).collect();
    Ok((x, y))
}

/// The `2n x 2n` matrix `[[1 - tau, tau], [1, -1]]` of `C_tau`.
pub fn c_tau_block(tau: &Endo) -> DMatrix<f64> {
    let n = tau.dim();
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(&id - &tau.matrix));
    m.view_mut((0, n), (n, n)).copy_from(&tau.matrix);
    m.view_mut((n, 0), (n, n)).copy_from(&id);
    m.view_mut((n, n), (n, n)).copy_from(&(-id));
    m
}

/// Whether `<v> <= 2 <v + lambda h A v>`; requires `|h| ||A|| <= 1/2`, `0 <= lambda <= 1`.
pub fn bracket_comparison(a: &DMatrix<f64>, h: f64, v: &[f64], lambda: f64) -> Result<bool> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape("A must be square".into()));
    }
    ensure_dim(a.nrows(), v.len())?;
    ensure_finite(v, "v")?;
    let norm = operator_norm(a);
    if !(h.abs() * norm <= 0.5 * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "|h| ||A|| = {} exceeds 1/2",
            h.abs() * norm
        )));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Precondition(format!("lambda = {lambda} outside [0, 1]")));
    }
    let av: Vec<f64> = (0..v.len())
        .map(|i| (0..v.len()).map(|j| a[(i, j)] * v[j]).sum())
        .collect();
    let moved: Vec<f64> = v.iter().zip(&av).map(|(x, y)| x + lambda * h * y).collect();
    Ok(bracket_unchecked(v) <= 2.0 * bracket_unchecked(&moved))
}

pub(crate) mod matrix_rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
    }
}
