//! Symbol classes `S^m(X)`: degree-tagged smooth functions with derivative
//! access, their seminorms `|a|_{m,alpha}`, the scaling family `a_eps` and the
//! compactly supported approximations `chi(eps .) b`.

pub mod jet;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::euclid::{bracket_unchecked, Grid};
use crate::fourierlab::{spectral_derivative, GridFunction, Side};
use crate::C64;
pub use jet::{multi_indices, Jet, JET_ORDER_CAP};

/// Derivative order the shipped verifiers need: `2([n/2] + 1) + 2`.
pub fn verification_order(n: usize) -> usize {
    2 * (n / 2 + 1) + 2
}

/// Something that can produce a Taylor jet at a point.
pub trait SymbolFn: Send + Sync {
    /// Jet of order `order` at `x`. Callers never ask beyond `max_order`.
    fn jet(&self, x: &[f64], order: usize) -> Jet;

    fn max_order(&self) -> usize {
        JET_ORDER_CAP
    }

    /// Whether grid sampling plus spectral differentiation is a sound fallback.
    fn spectral_fallback(&self) -> bool {
        false
    }
}

/// A symbol of (certified or declared) degree `m`.
#[derive(Clone)]
pub struct Symbol {
    f: Arc<dyn SymbolFn>,
    degree: f64,
    name: String,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("degree", &self.degree)
            .field("max_order", &self.max_order())
            .finish()
    }
}

impl Symbol {
    pub fn new(name: impl Into<String>, degree: f64, f: impl SymbolFn + 'static) -> Self {
        Self {
            f: Arc::new(f),
            degree,
            name: name.into(),
        }
    }

    pub fn degree(&self) -> f64 {
        self.degree
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn max_order(&self) -> usize {
        self.f.max_order()
    }

    pub fn has_spectral_fallback(&self) -> bool {
        self.f.spectral_fallback()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Override the degree tag (used when a sharper class is known).
    pub fn with_degree(mut self, degree: f64) -> Self {
        self.degree = degree;
        self
    }

    pub fn eval(&self, x: &[f64]) -> C64 {
        self.f.jet(x, 0).value()
    }

    pub fn jet(&self, x: &[f64], order: usize) -> Result<Jet> {
        if order > self.max_order() {
            return Err(Error::Capability(format!(
                "`{}` offers analytic derivatives up to order {}, asked for {order}",
                self.name,
                self.max_order()
            )));
        }
        Ok(self.f.jet(x, order))
    }

    /// `d^alpha a(x)`.
    pub fn deriv(&self, alpha: &[usize], x: &[f64]) -> Result<C64> {
        ensure_dim(x.len(), alpha.len())?;
        let order = alpha.iter().sum();
        Ok(self.jet(x, order)?.derivative_value(alpha))
    }

    /// Samples on the spatial points of `g`.
    pub fn sample(&self, g: &Grid) -> Vec<C64> {
        (0..g.len()).into_par_iter().map(|i| self.eval(&g.point(i))).collect()
    }

    /// Samples on the frequency points of `g`.
    pub fn sample_freq(&self, g: &Grid) -> Vec<C64> {
        (0..g.len()).into_par_iter().map(|i| self.eval(&g.freq(i))).collect()
    }
}

// ---------------------------------------------------------------------------
// closed-form families

struct Constant(C64);

impl SymbolFn for Constant {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        Jet::constant(x.len(), order, self.0)
    }
}

struct BracketPower(f64);

impl SymbolFn for BracketPower {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        Jet::norm_squared(x, order)
            .add_constant(C64::new(1.0, 0.0))
            .powf(self.0 / 2.0)
    }
}

struct Gaussian {
    width: f64,
}

impl SymbolFn for Gaussian {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        let s = -0.5 / (self.width * self.width);
        Jet::norm_squared(x, order).scale(C64::new(s, 0.0)).exp()
    }

    fn spectral_fallback(&self) -> bool {
        true
    }
}

/// `exp(1 - 1/(1 - |x|^2))` on the unit ball, zero outside.
pub fn mollifier_value(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

struct Mollifier;

impl SymbolFn for Mollifier {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        let r2 = Jet::norm_squared(x, order);
        if r2.value().re >= 1.0 {
            return Jet::zero(x.len(), order);
        }
        // 1 - 1/(1 - r2)
        let inner = r2
            .scale(C64::new(-1.0, 0.0))
            .add_constant(C64::new(1.0, 0.0))
            .recip()
            .scale(C64::new(-1.0, 0.0))
            .add_constant(C64::new(1.0, 0.0));
        inner.exp()
    }

    fn spectral_fallback(&self) -> bool {
        true
    }
}

/// Plane wave `exp(i lambda sum_d x_d)`.
struct PlaneWave(f64);

impl SymbolFn for PlaneWave {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        let mut acc = Jet::zero(x.len(), order);
        for d in 0..x.len() {
            acc = acc.add(&Jet::variable(x, d, order));
        }
        acc.scale(C64::new(0.0, self.0)).exp()
    }
}

struct Product(Symbol, Symbol);

impl SymbolFn for Product {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        self.0.f.jet(x, order).mul(&self.1.f.jet(x, order))
    }

    fn max_order(&self) -> usize {
        self.0.max_order().min(self.1.max_order())
    }

    fn spectral_fallback(&self) -> bool {
        self.0.has_spectral_fallback() || self.1.has_spectral_fallback()
    }
}

struct LinearCombination(C64, Symbol, C64, Symbol);

impl SymbolFn for LinearCombination {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        self.1
            .f
            .jet(x, order)
            .scale(self.0)
            .add(&self.3.f.jet(x, order).scale(self.2))
    }

    fn max_order(&self) -> usize {
        self.1.max_order().min(self.3.max_order())
    }

    fn spectral_fallback(&self) -> bool {
        self.1.has_spectral_fallback() && self.3.has_spectral_fallback()
    }
}

/// `x -> a(s x)`.
struct Dilation(Symbol, f64);

impl SymbolFn for Dilation {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        let sx: Vec<f64> = x.iter().map(|v| v * self.1).collect();
        self.0.f.jet(&sx, order).rescale_vars(self.1)
    }

    fn max_order(&self) -> usize {
        self.0.max_order()
    }

    fn spectral_fallback(&self) -> bool {
        self.0.has_spectral_fallback()
    }
}

struct Derivative(Symbol, Vec<usize>);

impl SymbolFn for Derivative {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        let drop: usize = self.1.iter().sum();
        self.0.f.jet(x, order + drop).differentiate(&self.1)
    }

    fn max_order(&self) -> usize {
        self.0.max_order() - self.1.iter().sum::<usize>()
    }

    fn spectral_fallback(&self) -> bool {
        self.0.has_spectral_fallback()
    }
}

type PointFn = dyn Fn(&[f64]) -> C64 + Send + Sync;

struct Closure {
    f: Box<PointFn>,
    fallback: bool,
}

impl SymbolFn for Closure {
    fn jet(&self, x: &[f64], order: usize) -> Jet {
        debug_assert_eq!(order, 0);
        Jet::constant(x.len(), 0, (self.f)(x))
    }

    fn max_order(&self) -> usize {
        0
    }

    fn spectral_fallback(&self) -> bool {
        self.fallback
    }
}

/// Constant symbol `c` (degree 0).
pub fn constant(c: C64) -> Symbol {
    Symbol::new(format!("const({c})"), 0.0, Constant(c))
}

pub fn zero() -> Symbol {
    constant(C64::new(0.0, 0.0))
        .with_name("zero")
        .with_degree(f64::NEG_INFINITY)
}

/// `<x>^m`, degree `m`.
pub fn bracket_power_symbol(m: f64) -> Symbol {
    Symbol::new(format!("bracket(m={m})"), m, BracketPower(m))
}

/// `exp(-|x|^2 / (2 sigma^2))`, a Schwartz function.
pub fn gaussian(sigma: f64) -> Result<Symbol> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Domain(format!("gaussian width must be positive, got {sigma}")));
    }
    Ok(Symbol::new(
        format!("gauss(sigma={sigma})"),
        f64::NEG_INFINITY,
        Gaussian { width: sigma },
    ))
}

/// The fixed bump `chi(x) = exp(1 - 1/(1 - |x|^2))`, `chi(0) = 1`.
pub fn mollifier() -> Symbol {
    Symbol::new("mollifier", f64::NEG_INFINITY, Mollifier)
}

/// `exp(i lambda sum_d x_d)`, degree 0.
pub fn plane_wave(lambda: f64) -> Symbol {
    Symbol::new(format!("wave(lambda={lambda})"), 0.0, PlaneWave(lambda))
}

/// Constant `c` cut off smoothly outside the ball of radius `radius`.
pub fn windowed_constant(c: C64, radius: f64) -> Result<Symbol> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Domain(format!("window radius must be positive, got {radius}")));
    }
    let w = scale_unchecked(&mollifier(), 1.0 / radius);
    Ok(product(&constant(c), &w).with_name(format!("window(c={c},R={radius})")))
}

/// `a b`, degree `m1 + m2`.
pub fn product(a: &Symbol, b: &Symbol) -> Symbol {
    Symbol::new(
        format!("({})*({})", a.name, b.name),
        a.degree + b.degree,
        Product(a.clone(), b.clone()),
    )
}

/// `ca a + cb b`, degree `max(m1, m2)`.
pub fn linear_combination(ca: C64, a: &Symbol, cb: C64, b: &Symbol) -> Symbol {
    Symbol::new(
        format!("{ca}*({})+{cb}*({})", a.name, b.name),
        a.degree.max(b.degree),
        LinearCombination(ca, a.clone(), cb, b.clone()),
    )
}

pub fn sum(a: &Symbol, b: &Symbol) -> Symbol {
    let one = C64::new(1.0, 0.0);
    linear_combination(one, a, one, b)
}

pub fn difference(a: &Symbol, b: &Symbol) -> Symbol {
    linear_combination(C64::new(1.0, 0.0), a, C64::new(-1.0, 0.0), b)
}

pub fn scalar_multiple(c: C64, a: &Symbol) -> Symbol {
    product(&constant(c), a).with_degree(a.degree)
}

/// `d^alpha a`, degree `m - |alpha|`.
pub fn derivative(a: &Symbol, alpha: &[usize]) -> Result<Symbol> {
    let k: usize = alpha.iter().sum();
    if k > a.max_order() {
        return Err(Error::Capability(format!(
            "`{}` has analytic derivatives up to order {}, cannot take |alpha| = {k}",
            a.name,
            a.max_order()
        )));
    }
    Ok(Symbol::new(
        format!("d{alpha:?}({})", a.name),
        a.degree - k as f64,
        Derivative(a.clone(), alpha.to_vec()),
    ))
}

fn scale_unchecked(a: &Symbol, s: f64) -> Symbol {
    Symbol::new(format!("({})({s}x)", a.name), a.degree, Dilation(a.clone(), s))
}

/// `a_eps(x) = a(eps x)` for `a` in `S^0` and `eps` in `[0, 1]`.
pub fn scale_symbol(a: &Symbol, eps: f64) -> Result<Symbol> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 1]")));
    }
    if a.degree > 0.0 {
        return Err(Error::Degree(format!(
            "scaling needs a symbol of degree <= 0, `{}` has degree {}",
            a.name, a.degree
        )));
    }
    if eps == 0.0 {
        return Ok(Symbol::new(format!("({})(0)", a.name), 0.0, Dilation(a.clone(), 0.0)));
    }
    Ok(scale_unchecked(a, eps))
}

/// `b^eps = chi(eps .) b`, compactly supported, approximating `b` in `S^r` for `r > rho`.
pub fn cutoff_approximate(b: &Symbol, r: f64, eps: f64) -> Result<Symbol> {
    if r <= b.degree {
        return Err(Error::Degree(format!(
            "target degree r = {r} must exceed the degree {} of `{}`",
            b.degree, b.name
        )));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1]")));
    }
    let chi = scale_unchecked(&mollifier(), eps);
    Ok(product(&chi, b)
        .with_degree(f64::NEG_INFINITY)
        .with_name(format!("cutoff(eps={eps})({})", b.name)))
}

/// Pointwise closure without analytic derivatives.
pub fn from_fn(name: impl Into<String>, degree: f64, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Symbol {
    Symbol::new(
        name,
        degree,
        Closure {
            f: Box::new(f),
            fallback: false,
        },
    )
}

/// Pointwise closure of a rapidly decaying function; derivatives come from
/// spectral differentiation of grid samples.
pub fn from_fn_decaying(name: impl Into<String>, f: impl Fn(&[f64]) -> C64 + Send + Sync + 'static) -> Symbol {
    Symbol::new(
        name,
        f64::NEG_INFINITY,
        Closure {
            f: Box::new(f),
            fallback: true,
        },
    )
}

// ---------------------------------------------------------------------------
// seminorms

/// A grid approximation of `|a|_{m,alpha}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeminormRecord {
    pub m: f64,
    pub alpha: Vec<usize>,
    pub value: f64,
    pub grid_used: Grid,
}

/// Values of `d^alpha a` on the spatial points of `g`.
pub fn derivative_samples(a: &Symbol, alpha: &[usize], g: &Grid) -> Result<Vec<C64>> {
    ensure_dim(g.dim, alpha.len())?;
    let k: usize = alpha.iter().sum();
    if k <= a.max_order() {
        return Ok((0..g.len())
            .into_par_iter()
            .map(|i| a.f.jet(&g.point(i), k).derivative_value(alpha))
            .collect());
    }
    if !a.has_spectral_fallback() {
        return Err(Error::Capability(format!(
            "`{}` offers analytic derivatives up to order {} and no spectral fallback, asked for {k}",
            a.name,
            a.max_order()
        )));
    }
    let f = GridFunction::new(*g, a.sample(g), Side::Space)?;
    Ok(spectral_derivative(&f, alpha)?.values)
}

/// `max_x <x>^{-m+|alpha|} |d^alpha a(x)|` over the grid.
pub fn seminorm(a: &Symbol, m: f64, alpha: &[usize], g: &Grid) -> Result<SeminormRecord> {
    let k = alpha.iter().sum::<usize>() as f64;
    let values = derivative_samples(a, alpha, g)?;
    let value = values
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let w = bracket_unchecked(&g.point(i)).powf(-m + k);
            let t = w * v.norm();
            if v.norm() == 0.0 {
                0.0
            } else {
                t
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(SeminormRecord {
        m,
        alpha: alpha.to_vec(),
        value,
        grid_used: *g,
    })
}

/// `max_{|alpha| <= order} |a|_{m,alpha}`.
pub fn seminorm_up_to(a: &Symbol, m: f64, order: usize, g: &Grid) -> Result<f64> {
    let mut best = 0.0f64;
    for alpha in multi_indices(g.dim, order) {
        best = best.max(seminorm(a, m, &alpha, g)?.value);
    }
    Ok(best)
}

/// Sup over the grid and `|alpha| <= 2` of the `S^m` weight applied to `a_eps - a(0)`.
pub fn scaling_lemma_check(a: &Symbol, m: f64, eps_list: &[f64], g: &Grid) -> Result<Vec<(f64, f64)>> {
    if !(m > 0.0 && m <= 1.0) {
        return Err(Error::Domain(format!("m = {m} outside (0, 1]")));
    }
    let origin = vec![0.0; g.dim];
    let a0 = constant(a.eval(&origin));
    eps_list
        .iter()
        .map(|&eps| {
            let gap = difference(&scale_symbol(a, eps)?, &a0);
            Ok((eps, seminorm_up_to(&gap, m, 2, g)?))
        })
        .collect()
}

/// Sup over `|alpha| <= order` of `|a - b|_{r,alpha}` on the grid.
pub fn approximation_gap(a: &Symbol, b: &Symbol, r: f64, order: usize, g: &Grid) -> Result<f64> {
    seminorm_up_to(&difference(a, b), r, order, g)
}

/// Least-squares slope of `log y` against `log x`, skipping non-positive pairs.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(n: usize, l: f64) -> Grid {
        Grid::new(1, n, l).unwrap()
    }

    fn re(v: f64) -> C64 {
        C64::new(v, 0.0)
    }

    #[test]
    fn seminorm_examples() {
        let g = g1(400, 20.0);
        let one = constant(re(1.0));
        assert!((seminorm(&one, 0.0, &[0], &g).unwrap().value - 1.0).abs() < 1e-15);
        for m in [-3.0, 0.5, 2.0] {
            let v = seminorm(&bracket_power_symbol(m), m, &[0], &g).unwrap().value;
            assert!((v - 1.0).abs() < 1e-12);
        }
        // d<x>^2 = 2x, weight <x>^{-1}: sup -> 2 from below
        let v = seminorm(&bracket_power_symbol(2.0), 2.0, &[1], &g).unwrap().value;
        assert!(v < 2.0 && v > 2.0 * 20.0 / 401f64.sqrt() - 1e-9);
    }

    #[test]
    fn deriv_zero_is_eval() {
        let a = product(&bracket_power_symbol(-1.5), &plane_wave(0.7));
        for x in [-2.0, 0.0, 0.3, 5.0] {
            assert_eq!(a.deriv(&[0], &[x]).unwrap(), a.eval(&[x]));
        }
    }

    #[test]
    fn bracket_family() {
        let b0 = bracket_power_symbol(0.0);
        assert!((b0.eval(&[3.0]) - re(1.0)).norm() < 1e-15);
        let b2 = bracket_power_symbol(2.0);
        assert!((b2.eval(&[0.0]) - re(1.0)).norm() < 1e-15);
        assert!(b2.deriv(&[1], &[0.0]).unwrap().norm() < 1e-15);
        assert!(b2.max_order() >= 4);
        let g = g1(800, 20.0);
        let b = bracket_power_symbol(-3.0);
        for k in 0..=2 {
            let v = seminorm(&b, -3.0, &[k], &g).unwrap().value;
            assert!(v.is_finite() && v > 0.0 && v <= 12.0);
        }
    }

    #[test]
    fn scale_examples() {
        let a = gaussian(std::f64::consts::FRAC_1_SQRT_2).unwrap(); // e^{-|x|^2}
        let same = scale_symbol(&a, 1.0).unwrap();
        assert!((same.eval(&[0.8]) - a.eval(&[0.8])).norm() < 1e-15);
        let zero = scale_symbol(&a, 0.0).unwrap();
        assert!((zero.eval(&[5.0]) - re(1.0)).norm() < 1e-15);
        assert!(zero.deriv(&[1], &[5.0]).unwrap().norm() < 1e-15);
        let half = scale_symbol(&a, 0.5).unwrap();
        assert!((half.eval(&[2.0]).re - (-1f64).exp()).abs() < 1e-15);
        // chain rule
        let d = half.deriv(&[2], &[1.3]).unwrap();
        let expect = a.deriv(&[2], &[0.65]).unwrap() * 0.25;
        assert!((d - expect).norm() < 1e-15);
        assert!(matches!(scale_symbol(&a, 1.5), Err(Error::Domain(_))));
        assert!(matches!(
            scale_symbol(&bracket_power_symbol(1.0), 0.5),
            Err(Error::Degree(_))
        ));
    }

    #[test]
    fn scaling_lemma_slopes() {
        let a = gaussian(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let g = g1(2048, 2000.0);
        let eps: Vec<f64> = (1..=8).map(|k| 0.5f64.powi(k)).collect();
        let table = scaling_lemma_check(&a, 1.0, &eps, &g).unwrap();
        let slope = loglog_slope(&table).unwrap();
        assert!(slope >= 0.9, "slope {slope}");
        let z = scaling_lemma_check(&a, 0.5, &[0.0], &g).unwrap();
        assert_eq!(z[0].1, 0.0);
        let c = constant(re(2.0));
        for (_, gap) in scaling_lemma_check(&c, 1.0, &eps, &g).unwrap() {
            assert_eq!(gap, 0.0);
        }
        assert!(matches!(scaling_lemma_check(&a, 1.5, &eps, &g), Err(Error::Domain(_))));
    }

    #[test]
    fn product_and_derivative() {
        let a = bracket_power_symbol(1.3);
        let b = bracket_power_symbol(-0.4);
        let ab = product(&a, &b);
        assert!((ab.degree() - 0.9).abs() < 1e-15);
        let c = bracket_power_symbol(0.9);
        for x in [-7.0, -1.0, 0.0, 0.5, 12.0] {
            assert!((ab.eval(&[x]) - c.eval(&[x])).norm() < 1e-12);
        }
        let d = derivative(&bracket_power_symbol(2.0), &[1]).unwrap();
        assert!((d.eval(&[3.0]) - re(6.0)).norm() < 1e-13);
        assert_eq!(d.degree(), 1.0);
        let one = product(&a, &constant(re(1.0)));
        assert!((one.eval(&[2.2]) - a.eval(&[2.2])).norm() < 1e-15);
        let closure = from_fn("plain", 0.0, |x| re(x[0].cos()));
        assert!(matches!(derivative(&closure, &[1]), Err(Error::Capability(_))));
        let g = g1(64, 10.0);
        assert!(matches!(seminorm(&closure, 0.0, &[1], &g), Err(Error::Capability(_))));
    }

    #[test]
    fn cutoff_examples() {
        let b = bracket_power_symbol(-2.0);
        assert!(matches!(cutoff_approximate(&b, -2.0, 0.5), Err(Error::Degree(_))));
        let g = g1(1 << 16, 4096.0);
        let mut prev = f64::INFINITY;
        let mut table = Vec::new();
        for k in 1..=6 {
            let eps = 0.5f64.powi(k);
            let be = cutoff_approximate(&b, -1.0, eps).unwrap();
            let gap = approximation_gap(&be, &b, -1.0, 2, &g).unwrap();
            assert!(gap < prev, "k = {k}: {gap} >= {prev}");
            prev = gap;
            table.push((eps, gap));
        }
        // gap ~ eps^{r - rho}
        assert!(loglog_slope(&table).unwrap() > 0.9);
        // chi(eps x) = 1 only at 0 for this bump, b^eps(0) = b(0)
        let be = cutoff_approximate(&b, -1.0, 0.25).unwrap();
        assert!((be.eval(&[0.0]) - b.eval(&[0.0])).norm() < 1e-15);
        let z = cutoff_approximate(&zero(), 0.0, 0.5).unwrap();
        assert_eq!(z.eval(&[0.3]), re(0.0));
    }

    #[test]
    fn homogeneity_and_inclusion() {
        let g = g1(512, 20.0);
        let a = bracket_power_symbol(-1.0);
        let c = C64::new(-2.0, 1.5);
        let ca = scalar_multiple(c, &a);
        for k in 0..=2 {
            let v1 = seminorm(&ca, -1.0, &[k], &g).unwrap().value;
            let v0 = seminorm(&a, -1.0, &[k], &g).unwrap().value;
            assert!((v1 - c.norm() * v0).abs() < 1e-12 * v1);
            let wider = seminorm(&a, 0.5, &[k], &g).unwrap().value;
            assert!(wider <= v0 + 1e-15);
        }
    }

    #[test]
    fn spectral_fallback_matches_analytic() {
        let g = g1(128, 10.0);
        let a = gaussian(1.0).unwrap();
        let s = from_fn_decaying("gauss-samples", |x| re((-0.5 * x[0] * x[0]).exp()));
        for k in 0..=2 {
            let exact = derivative_samples(&a, &[k], &g).unwrap();
            let spec = derivative_samples(&s, &[k], &g).unwrap();
            let scale = exact.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let err = exact.iter().zip(&spec).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-6 * scale, "order {k}: {err}");
        }
    }

    #[test]
    fn mollifier_shape() {
        let chi = mollifier();
        assert_eq!(chi.eval(&[0.0, 0.0]), re(1.0));
        assert_eq!(chi.eval(&[1.0, 0.0]), re(0.0));
        assert!(chi.deriv(&[1, 0], &[0.0, 0.0]).unwrap().norm() < 1e-15);
        let h = 1e-6;
        let fd = (chi.eval(&[0.5 + h]) - chi.eval(&[0.5 - h])) / (2.0 * h);
        assert!((fd - chi.deriv(&[1], &[0.5]).unwrap()).norm() < 1e-8);
    }
}
