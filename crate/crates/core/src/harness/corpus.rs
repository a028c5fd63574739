//! The shipped symbol corpus. Entries are referenced as `name(key=value, ...)`,
//! e.g. `gauss(sigma=1)`, `bracket(m=-3)`, `modgauss(sigma=1,lambda=4)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::euclid::{norm_sq, Grid};
use crate::quantize::PhaseSymbol;
use crate::symbolcalc::{
    bracket_power_symbol, constant, gaussian, mollifier_value, plane_wave, product, seminorm_up_to, windowed_constant,
    Symbol,
};
use crate::{Error, Result, C64};

/// Bracket exponents the corpus accepts.
pub const BRACKET_RANGE: (f64, f64) = (-5.0, 2.0);

/// Finite degree at which Schwartz members are certified.
pub const SCHWARTZ_CERT_DEGREE: f64 = -8.0;

/// Spaces a corpus entry can be sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Space {
    /// A function on `X`.
    #[serde(rename = "X")]
    X,
    /// A function on the dual `X*`.
    #[serde(rename = "X*")]
    XStar,
    /// A function on phase space `X x X*`.
    #[serde(rename = "phase")]
    Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Gauss {
        sigma: f64,
    },
    Bracket {
        m: f64,
    },
    Window {
        c: f64,
        radius: f64,
    },
    ModGauss {
        sigma: f64,
        lambda: f64,
    },
    Const {
        c: f64,
    },
    /// `F^{-1}<.>^{-t} (x) F<.>^{-s}`.
    Cordes {
        t: f64,
        s: f64,
    },
    /// `F^{-1}g (x) F g` for a Gaussian `g`.
    CordesGauss {
        sigma: f64,
    },
    /// [`Family::Cordes`] with `s = t = n + 0.1`.
    Borderline,
}

/// A resolved corpus reference.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub family: Family,
}

impl fmt::Display for CorpusEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Gauss { sigma } => write!(f, "gauss(sigma={sigma})"),
            Family::Bracket { m } => write!(f, "bracket(m={m})"),
            Family::Window { c, radius } => write!(f, "window(c={c},R={radius})"),
            Family::ModGauss { sigma, lambda } => write!(f, "modgauss(sigma={sigma},lambda={lambda})"),
            Family::Const { c } => write!(f, "const(c={c})"),
            Family::Cordes { t, s } => write!(f, "cordes(t={t},s={s})"),
            Family::CordesGauss { sigma } => write!(f, "cordes-gauss(sigma={sigma})"),
            Family::Borderline => write!(f, "borderline"),
        }
    }
}

/// Result of checking an entry's symbol-class degree on growing boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certification {
    /// Degree the seminorms were evaluated at.
    pub degree: f64,
    /// `max_{|alpha| <= 2} |a|_{m,alpha}` on the box of half width 64.
    pub seminorm: f64,
    /// The same on the box of half width 128.
    pub seminorm_wide: f64,
    /// Both finite and the wide value within 10% of the narrow one.
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub reference: String,
    pub spaces: Vec<Space>,
    /// Degree on `X` (`-inf` for Schwartz members); `None` for phase-only entries.
    pub degree: Option<f64>,
    pub certification: Vec<Certification>,
}

fn params<'a>(reference: &str, body: &'a str) -> Result<Vec<(&'a str, f64)>> {
    if body.trim().is_empty() {
        return Ok(Vec::new());
    }
    body.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Lookup(reference.to_string()))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("`{reference}`: `{}` is not a number", v.trim())))?;
            Ok((k.trim(), v))
        })
        .collect()
}

struct Args<'a> {
    reference: &'a str,
    given: Vec<(&'a str, f64)>,
}

impl Args<'_> {
    fn take(&mut self, key: &str, default: Option<f64>) -> Result<f64> {
        match self.given.iter().position(|(k, _)| *k == key) {
            Some(i) => Ok(self.given.remove(i).1),
            None => default.ok_or_else(|| Error::Domain(format!("`{}` needs the parameter `{key}`", self.reference))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.given.first() {
            None => Ok(()),
            Some(_) => Err(Error::Lookup(self.reference.to_string())),
        }
    }
}

fn positive(reference: &str, key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!("`{reference}`: {key} must be positive, got {v}")))
    }
}

/// Resolves a reference such as `bracket(m=-3)`.
pub fn parse(reference: &str) -> Result<CorpusEntry> {
    let cleaned = reference.trim().replace('\u{2212}', "-");
    let (name, body) = match cleaned.split_once('(') {
        Some((name, rest)) => {
            let body = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Lookup(reference.to_string()))?;
            (name.trim(), body)
        }
        None => (cleaned.as_str(), ""),
    };
    let mut args = Args {
        reference,
        given: params(reference, body)?,
    };
    let family = match name {
        "gauss" => Family::Gauss {
            sigma: positive(reference, "sigma", args.take("sigma", Some(1.0))?)?,
        },
        "bracket" => {
            let m = args.take("m", None)?;
            if !(BRACKET_RANGE.0..=BRACKET_RANGE.1).contains(&m) {
                return Err(Error::Domain(format!(
                    "`{reference}`: m must lie in [{}, {}]",
                    BRACKET_RANGE.0, BRACKET_RANGE.1
                )));
            }
            Family::Bracket { m }
        }
        "window" => Family::Window {
            c: args.take("c", Some(1.0))?,
            radius: positive(reference, "R", args.take("R", Some(2.0))?)?,
        },
        "modgauss" => Family::ModGauss {
            sigma: positive(reference, "sigma", args.take("sigma", Some(1.0))?)?,
            lambda: args.take("lambda", Some(1.0))?,
        },
        "const" => Family::Const {
            c: args.take("c", Some(1.0))?,
        },
        "cordes" => Family::Cordes {
            t: positive(reference, "t", args.take("t", Some(2.0))?)?,
            s: positive(reference, "s", args.take("s", Some(2.0))?)?,
        },
        "cordes-gauss" => Family::CordesGauss {
            sigma: positive(reference, "sigma", args.take("sigma", Some(1.0))?)?,
        },
        "borderline" => Family::Borderline,
        _ => return Err(Error::Lookup(reference.to_string())),
    };
    args.finish()?;
    Ok(CorpusEntry { family })
}

impl CorpusEntry {
    pub fn spaces(&self) -> Vec<Space> {
        match self.family {
            Family::Cordes { .. } | Family::CordesGauss { .. } | Family::Borderline => vec![Space::Phase],
            _ => vec![Space::X, Space::XStar, Space::Phase],
        }
    }

    pub fn has_symbol(&self) -> bool {
        self.spaces().contains(&Space::X)
    }

    /// The function on `X` (equally on `X*`).
    pub fn symbol(&self) -> Result<Symbol> {
        let sym = match self.family {
            Family::Gauss { sigma } => gaussian(sigma)?,
            Family::Bracket { m } => bracket_power_symbol(m),
            Family::Window { c, radius } => windowed_constant(C64::new(c, 0.0), radius)?,
            Family::ModGauss { sigma, lambda } => product(&gaussian(sigma)?, &plane_wave(lambda)),
            Family::Const { c } => constant(C64::new(c, 0.0)),
            _ => return Err(Error::Capability(format!("`{self}` lives on phase space only"))),
        };
        Ok(sym.with_name(self.to_string()))
    }

    /// The `X`-degree, `None` for phase-only entries.
    pub fn degree(&self) -> Option<f64> {
        self.symbol().ok().map(|s| s.degree())
    }

    /// The two factors `(a on X*, b on X)` of a product entry on a grid of dimension `n`.
    pub fn factors(&self, n: usize) -> Option<(Symbol, Symbol)> {
        let (t, s) = match self.family {
            Family::Cordes { t, s } => (t, s),
            Family::Borderline => (n as f64 + 0.1, n as f64 + 0.1),
            Family::CordesGauss { sigma } => {
                let g = gaussian(sigma).ok()?;
                return Some((g.clone(), g));
            }
            _ => return None,
        };
        Some((bracket_power_symbol(-t), bracket_power_symbol(-s)))
    }

    /// The entry on phase space. Joint families are evaluated at `|(x, p)|`;
    /// the modulated Gaussian carries `e^{i lambda sum_d x_d}` in `x` only.
    pub fn phase(&self, grid: Grid) -> Result<PhaseSymbol> {
        let name = self.to_string();
        if let Some((a, b)) = self.factors(grid.dim) {
            let mut sym = PhaseSymbol::cordes_product(&a, &b, grid)?;
            sym.name = name;
            return Ok(sym);
        }
        let joint = |x: &[f64], p: &[f64]| norm_sq(x) + norm_sq(p);
        Ok(match self.family {
            Family::Gauss { sigma } => PhaseSymbol::from_fn(grid, name, move |x, p| {
                C64::new((-joint(x, p) / (2.0 * sigma * sigma)).exp(), 0.0)
            }),
            Family::Bracket { m } => {
                PhaseSymbol::from_fn(grid, name, move |x, p| C64::new((1.0 + joint(x, p)).powf(m / 2.0), 0.0))
            }
            Family::Window { c, radius } => PhaseSymbol::from_fn(grid, name, move |x, p| {
                C64::new(c * mollifier_value(joint(x, p) / (radius * radius)), 0.0)
            }),
            Family::ModGauss { sigma, lambda } => PhaseSymbol::from_fn(grid, name, move |x, p| {
                let phase: f64 = lambda * x.iter().sum::<f64>();
                C64::from_polar((-joint(x, p) / (2.0 * sigma * sigma)).exp(), phase)
            }),
            Family::Const { c } => PhaseSymbol::from_fn(grid, name, move |_, _| C64::new(c, 0.0)),
            _ => unreachable!("product families handled above"),
        })
    }

    /// Seminorm certification of every `X`-symbol involved: the entry itself,
    /// or both factors of a product entry (at `n = 1`).
    pub fn certify(&self) -> Result<Vec<Certification>> {
        let narrow = Grid::new(1, 256, 64.0)?;
        let wide = Grid::new(1, 512, 128.0)?;
        let one = |a: &Symbol| -> Result<Certification> {
            let degree = if a.degree().is_finite() {
                a.degree()
            } else {
                SCHWARTZ_CERT_DEGREE
            };
            let seminorm = seminorm_up_to(a, degree, 2, &narrow)?;
            let seminorm_wide = seminorm_up_to(a, degree, 2, &wide)?;
            Ok(Certification {
                degree,
                seminorm,
                seminorm_wide,
                certified: seminorm.is_finite() && seminorm_wide.is_finite() && seminorm_wide <= 1.1 * seminorm,
            })
        };
        match self.factors(1) {
            Some((a, b)) => Ok(vec![one(&a)?, one(&b)?]),
            None => Ok(vec![one(&self.symbol()?)?]),
        }
    }

    pub fn manifest(&self) -> Result<ManifestEntry> {
        Ok(ManifestEntry {
            reference: self.to_string(),
            spaces: self.spaces(),
            degree: self.degree(),
            certification: self.certify()?,
        })
    }
}

/// The shipped corpus.
pub fn corpus() -> Vec<CorpusEntry> {
    let mut out = vec![Family::Gauss { sigma: 1.0 }, Family::Gauss { sigma: 0.5 }];
    for m in [-5.0, -4.0, -3.0, -2.0, -1.0, -0.5, 0.0, 1.0, 2.0] {
        out.push(Family::Bracket { m });
    }
    out.push(Family::Window { c: 1.0, radius: 2.0 });
    for lambda in [1.0, 2.0, 4.0, 8.0] {
        out.push(Family::ModGauss { sigma: 1.0, lambda });
    }
    out.push(Family::Const { c: 1.0 });
    out.push(Family::Cordes { t: 2.0, s: 2.0 });
    out.push(Family::CordesGauss { sigma: 1.0 });
    out.push(Family::Borderline);
    out.into_iter().map(|family| CorpusEntry { family }).collect()
}

/// Manifest of [`corpus`] with certifications.
pub fn corpus_manifest() -> Result<Vec<ManifestEntry>> {
    corpus().iter().map(CorpusEntry::manifest).collect()
}
