//! Truncated multivariate Taylor polynomials ("jets") with complex coefficients.
//!
//! A jet of order `K` in `n` variables at a point `x0` stores the coefficients
//! `c_alpha = d^alpha f(x0) / alpha!` for every multi-index with `|alpha| <= K`.
//! Arithmetic on jets is exact up to rounding, so closed-form symbols built from
//! sums, products and compositions with elementary functions get all their
//! derivatives for free.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::C64;

type SpaceCache = HashMap<(usize, usize), Arc<JetSpace>>;

/// Highest order a jet may carry.
pub const JET_ORDER_CAP: usize = 12;

/// Monomial bookkeeping shared by every jet with the same `(nvars, order)`.
#[derive(Debug)]
pub struct JetSpace {
    nvars: usize,
    order: usize,
    monos: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    /// `(i, j, k)` with `mono[i] + mono[j] = mono[k]` and total degree `<= order`.
    products: Vec<(usize, usize, usize)>,
}

/// All multi-indices of length `nvars` with `|alpha| <= order`, graded then lexicographic.
pub fn multi_indices(nvars: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for total in 0..=order {
        let mut cur = vec![0; nvars];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, remaining: usize) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    for k in (0..=remaining).rev() {
        cur[pos] = k;
        fill(out, cur, pos + 1, remaining - k);
    }
    cur[pos] = 0;
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

pub(crate) fn multi_factorial(alpha: &[usize]) -> f64 {
    alpha.iter().map(|&k| factorial(k)).product()
}

impl JetSpace {
    fn build(nvars: usize, order: usize) -> Self {
        let monos = multi_indices(nvars, order);
        let index: HashMap<Vec<usize>, usize> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in monos.iter().enumerate() {
            let da: usize = a.iter().sum();
            for (j, b) in monos.iter().enumerate() {
                let db: usize = b.iter().sum();
                if da + db > order {
                    continue;
                }
                let sum: Vec<usize> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i, j, index[&sum]));
            }
        }
        Self {
            nvars,
            order,
            monos,
            index,
            products,
        }
    }

    /// Shared instance for `(nvars, order)`.
    pub fn get(nvars: usize, order: usize) -> Arc<JetSpace> {
        static CACHE: OnceLock<Mutex<SpaceCache>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("jet space cache poisoned");
        guard
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.monos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monos.is_empty()
    }

    pub fn monomials(&self) -> &[Vec<usize>] {
        &self.monos
    }
}

#[derive(Debug, Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    coeffs: Vec<C64>,
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: C64) -> Self {
        let space = JetSpace::get(nvars, order);
        let mut coeffs = vec![C64::new(0.0, 0.0); space.len()];
        coeffs[0] = value;
        Self { space, coeffs }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, C64::new(0.0, 0.0))
    }

    /// The coordinate function `x_i` expanded at `at`.
    pub fn variable(at: &[f64], i: usize, order: usize) -> Self {
        let mut jet = Self::constant(at.len(), order, C64::new(at[i], 0.0));
        if order >= 1 {
            let mut e = vec![0; at.len()];
            e[i] = 1;
            let k = jet.space.index[&e];
            jet.coeffs[k] = C64::new(1.0, 0.0);
        }
        jet
    }

    /// `|x|^2` expanded at `at`.
    pub fn norm_squared(at: &[f64], order: usize) -> Self {
        let mut acc = Self::zero(at.len(), order);
        for i in 0..at.len() {
            let v = Self::variable(at, i, order);
            acc = acc.add(&v.mul(&v));
        }
        acc
    }

    pub fn nvars(&self) -> usize {
        self.space.nvars
    }

    pub fn order(&self) -> usize {
        self.space.order
    }

    pub fn value(&self) -> C64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, alpha: &[usize]) -> C64 {
        self.space
            .index
            .get(alpha)
            .map_or(C64::new(0.0, 0.0), |&k| self.coeffs[k])
    }

    /// `d^alpha f(x0) = alpha! c_alpha`.
    pub fn derivative_value(&self, alpha: &[usize]) -> C64 {
        self.coeff(alpha) * multi_factorial(alpha)
    }

    pub fn add(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|a| a * s).collect(),
        }
    }

    pub fn add_constant(&self, s: C64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn mul(&self, other: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &other.space));
        let mut coeffs = vec![C64::new(0.0, 0.0); self.space.len()];
        for &(i, j, k) in &self.space.products {
            coeffs[k] += self.coeffs[i] * other.coeffs[j];
        }
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// `f(self)` given `derivs[k] = f^{(k)}(self.value())` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[C64]) -> Jet {
        let order = self.order();
        assert!(derivs.len() > order, "need derivatives up to the jet order");
        let mut delta = self.clone();
        delta.coeffs[0] = C64::new(0.0, 0.0);
        let mut out = Jet::constant(self.nvars(), order, derivs[0]);
        let mut power = Jet::constant(self.nvars(), order, C64::new(1.0, 0.0));
        for (k, d) in derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.mul(&delta);
            out = out.add(&power.scale(d / factorial(k)));
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order() + 1])
    }

    /// Real power `u^s`; the base value must be real and positive.
    pub fn powf(&self, s: f64) -> Jet {
        let c0 = self.value();
        debug_assert!(c0.re > 0.0 && c0.im.abs() <= 1e-12 * c0.re.max(1.0));
        let base = c0.re;
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut falling = 1.0;
        for k in 0..=self.order() {
            derivs.push(C64::new(falling * base.powf(s - k as f64), 0.0));
            falling *= s - k as f64;
        }
        self.compose(&derivs)
    }

    pub fn recip(&self) -> Jet {
        let c0 = self.value();
        let mut derivs = Vec::with_capacity(self.order() + 1);
        let mut sign_fact = 1.0;
        for k in 0..=self.order() {
            derivs.push(sign_fact / c0.powi(k as i32 + 1));
            sign_fact *= -(k as f64 + 1.0);
        }
        self.compose(&derivs)
    }

    pub fn sin(&self) -> Jet {
        let c0 = self.value();
        let cycle = [c0.sin(), c0.cos(), -c0.sin(), -c0.cos()];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let c0 = self.value();
        let cycle = [c0.cos(), -c0.sin(), -c0.cos(), c0.sin()];
        self.compose(&(0..=self.order()).map(|k| cycle[k % 4]).collect::<Vec<_>>())
    }

    /// Jet of `x -> f(s x)` from the jet of `f` at `s x0`.
    pub fn rescale_vars(&self, s: f64) -> Jet {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&self.space.monos)
            .map(|(c, m)| c * s.powi(m.iter().sum::<usize>() as i32))
            .collect();
        Jet {
            space: self.space.clone(),
            coeffs,
        }
    }

    /// Jet of `d^alpha f` (order drops by `|alpha|`).
    pub fn differentiate(&self, alpha: &[usize]) -> Jet {
        let drop: usize = alpha.iter().sum();
        assert!(drop <= self.order(), "differentiation exceeds jet order");
        let order = self.order() - drop;
        let space = JetSpace::get(self.nvars(), order);
        let coeffs = space
            .monos
            .iter()
            .map(|m| {
                let beta: Vec<usize> = m.iter().zip(alpha).map(|(a, b)| a + b).collect();
                let ratio: f64 = beta.iter().zip(m).map(|(&b, &g)| factorial(b) / factorial(g)).product();
                self.coeff(&beta) * ratio
            })
            .collect();
        Jet { space, coeffs }
    }

    /// Same coefficients viewed at a lower order.
    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order());
        let space = JetSpace::get(self.nvars(), order);
        let coeffs = space.monos.iter().map(|m| self.coeff(m)).collect();
        Jet { space, coeffs }
    }

    /// Build from explicit coefficients indexed like [`JetSpace::monomials`].
    pub fn from_coeffs(nvars: usize, order: usize, coeffs: Vec<C64>) -> Jet {
        let space = JetSpace::get(nvars, order);
        assert_eq!(coeffs.len(), space.len());
        Jet { space, coeffs }
    }

    pub fn monomials(&self) -> &[Vec<usize>] {
        &self.space.monos
    }
}
