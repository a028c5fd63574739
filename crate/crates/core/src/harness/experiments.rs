use std::f64::consts::PI;
use std::path::PathBuf;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{Experiment, ExperimentConfig, GridSpec};
use super::corpus::{corpus, CorpusEntry, Family};
use super::{CheckRow, Relation, Severity};
use crate::euclid::{Endo, Grid};
use crate::fourierlab::{
    band_term_decay, bessel_delta_residual, bessel_kernel, build_partition, decay_profile, direct_transform,
    dyadic_reconstruct, forward_fft, inverse_of_symbol, l1_check, partition_completeness, sobolev_norm_fourier,
    sobolev_norm_slobodeckij, GridFunction, Side, DEFAULT_PARTITION_CENTER,
};
use crate::kernelfactory::{
    dyadic_path, factorization_check, kernel_ab, kernel_k0, kernel_k1, tau_continuity_scan, Factorization,
    KernelMatrix, SmoothingParams,
};
use crate::quantize::{
    admissible_orders, cordes_check, cv_check, hs_constant, hs_identity_check, interpolation_exponent, quantize,
    schatten, singular_values, sobolev_phase_check, tcp2_check, RatioRow,
};
use crate::symbolcalc::{bracket_power_symbol, loglog_slope, scaling_lemma_check, Symbol};
use crate::{Error, Result, C64};

/// Grid used when a config gives none.
pub fn default_grid(e: Experiment) -> GridSpec {
    let (n, l) = match e {
        Experiment::Decompose => (256, 4.0 * PI),
        Experiment::Decay => (256, 20.0),
        Experiment::Bessel => (512, 20.0),
        Experiment::Quantize | Experiment::Schatten | Experiment::Sobolev => (32, 8.0),
        Experiment::Tcp2 | Experiment::Cv => (64, 12.0),
        Experiment::Scaling => (32768, 2000.0),
        Experiment::DualSobolev => (128, 16.0),
        Experiment::Kernel
        | Experiment::Factorize
        | Experiment::TauScan
        | Experiment::Cordes
        | Experiment::HsIdentity => (64, 10.0),
    };
    GridSpec::new(1, n, l)
}

const MODULATED: [&str; 4] = [
    "modgauss(sigma=1,lambda=1)",
    "modgauss(sigma=1,lambda=2)",
    "modgauss(sigma=1,lambda=4)",
    "modgauss(sigma=1,lambda=8)",
];

pub(crate) struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub rows: Vec<CheckRow>,
    pub artifacts: Vec<PathBuf>,
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Config { .. } | Error::Resource(_) | Error::Lookup(_))
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Self {
        Self {
            cfg,
            rows: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn tol(&self, name: &str) -> f64 {
        self.cfg.tolerance(name)
    }

    fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    /// Usage errors propagate; anything else becomes a failing row named `check`.
    fn attempt<T>(&mut self, check: &str, severity: Severity, r: Result<T>) -> Result<Option<T>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if is_usage(&e) => Err(e),
            Err(e) => {
                self.rows.push(CheckRow::failure(check, severity, &e));
                Ok(None)
            }
        }
    }

    fn grid(&self) -> Result<Grid> {
        self.cfg.grid_or(Some(default_grid(self.cfg.experiment)))
    }

    fn matrix_grid(&self) -> Result<Grid> {
        let g = self.grid()?;
        self.cfg.check_matrix_size(&g)?;
        Ok(g)
    }

    fn dump(&mut self, k: &KernelMatrix, stem: &str) -> Result<()> {
        if let Some(dir) = &self.cfg.output {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(sanitize(stem));
            k.save(&path)?;
            self.artifacts.push(path.with_extension("bin"));
            self.artifacts.push(path.with_extension("json"));
        }
        Ok(())
    }
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "-_.=".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn symbol_of(e: &CorpusEntry, path: &str) -> Result<Symbol> {
    e.symbol().map_err(|err| Error::config(path, err.to_string()))
}

fn rel_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs() / a.abs().max(f64::MIN_POSITIVE)
    }
}

fn refine(g: &Grid, points: usize) -> Result<Grid> {
    Grid::new(g.dim, points, g.half_width)
}

pub(crate) fn dispatch(ctx: &mut Ctx) -> Result<()> {
    match ctx.cfg.experiment {
        Experiment::Decompose => decompose(ctx),
        Experiment::Decay => decay(ctx),
        Experiment::Bessel => bessel(ctx),
        Experiment::Kernel => kernel(ctx),
        Experiment::Factorize => factorize(ctx),
        Experiment::TauScan => tau_scan(ctx),
        Experiment::Quantize => quantize_cross(ctx),
        Experiment::Schatten => schatten_exp(ctx),
        Experiment::Cordes => cordes(ctx),
        Experiment::Tcp2 => tcp2(ctx),
        Experiment::Cv => cv(ctx),
        Experiment::Sobolev => sobolev(ctx),
        Experiment::HsIdentity => hs_identity(ctx),
        Experiment::Scaling => scaling(ctx),
        Experiment::DualSobolev => dual_sobolev(ctx),
    }
}

// ---------------------------------------------------------------------------
// fourierlab

fn decompose(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.grid()?;
    let p = ctx.cfg.params();
    let entry = p.entry("symbol", "bracket(m=-2)")?;
    let a = symbol_of(&entry, "params.symbol")?;
    let m = p.f64("m", if a.degree().is_finite() { a.degree() } else { 0.0 })?;
    let t_max = p.f64("t_max", 64.0)?;
    let nodes = p.usize("nodes", 400)?;
    let samples = p.usize("samples", 4000)?;
    let radius = p.f64("radius", t_max / 2.0)?;
    let center = p.f64("center", DEFAULT_PARTITION_CENTER)?;
    let band_entry = p.entry("band_symbol", "const(c=1)")?;
    let band_sym = symbol_of(&band_entry, "params.band_symbol")?;
    let band_order = if band_sym.degree().is_finite() {
        band_sym.degree()
    } else {
        0.0
    };
    let band_grid = Grid::new(g.dim, p.usize("band_points", 2048)?, p.f64("band_half_width", 20.0)?)
        .map_err(|e| Error::config("params.band_points", e.to_string()))?;
    let band_t = p.f64_list("band_t", &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0])?;
    let band_m = p.usize("band_m", 2)?;
    let band_k = p.usize("band_k", 4)?;
    let pp = match ctx.attempt("decompose/partition", Severity::Assert, build_partition(center))? {
        Some(pp) => pp,
        None => return Ok(()),
    };

    let name = "decompose/partition-completeness";
    if let Some(v) = ctx.attempt(
        name,
        Severity::Assert,
        partition_completeness(&pp, t_max, nodes, samples),
    )? {
        let tol = ctx.tol("partition");
        ctx.push(CheckRow::assert(name, v, Relation::AtMost, 0.0, tol));
    }

    let name = format!("decompose/reconstruction/{entry}");
    if let Some(rec) = ctx.attempt(
        &name,
        Severity::Assert,
        dyadic_reconstruct(&a, m, &pp, t_max, nodes, &g),
    )? {
        let worst = (0..g.len())
            .filter(|&i| crate::euclid::norm(&g.freq(i)) <= radius)
            .map(|i| (rec.function.values[i] - a.eval(&g.freq(i))).norm())
            .fold(0.0, f64::max);
        let tol = ctx.tol("reconstruction");
        ctx.push(CheckRow::assert(name, worst, Relation::AtMost, 0.0, tol));
    }

    let mut consts = Vec::new();
    for t in band_t {
        let name = format!("decompose/band/{band_entry}/t={t}");
        let res = band_term_decay(&band_sym, band_order, &pp, t, band_m, band_k, &band_grid);
        if let Some(b) = ctx.attempt(&name, Severity::Bound, res)? {
            let row = CheckRow::info(&name, b.constant);
            ctx.push(if b.resolved {
                consts.push(b.constant);
                row
            } else {
                row.with_diagnostics("band beyond the Nyquist frequency")
            });
        }
    }
    if consts.len() >= 2 {
        // largest constant over the upper half of the t range against the lower half
        let half = consts.len() / 2;
        let early = consts[..half].iter().copied().fold(0.0, f64::max);
        let late = consts[half..].iter().copied().fold(0.0, f64::max);
        let growth = late / early.max(f64::MIN_POSITIVE);
        let tol = ctx.tol("family_growth");
        ctx.push(CheckRow::bound(
            format!("decompose/band-growth/{band_entry}"),
            growth,
            Relation::AtMost,
            1.0,
            tol,
        ));
    }
    Ok(())
}

fn decay(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.grid()?;
    let p = ctx.cfg.params();
    let entry = p.entry("symbol", "bracket(m=-0.5)")?;
    let a = symbol_of(&entry, "params.symbol")?;
    let m = p.f64("m", a.degree())?;
    let k = p.usize("k", 3)?;
    let levels = p.levels("levels", &[g.points, 2 * g.points])?;
    let l1_levels = p.levels("l1_levels", &[1024, 2048])?;
    let default_l1: Vec<String> = corpus()
        .into_iter()
        .filter(|e| e.degree().is_some_and(|d| d < 0.0))
        .map(|e| e.to_string())
        .collect();
    let default_l1: Vec<&str> = default_l1.iter().map(String::as_str).collect();
    let l1_entries = p.entries("l1_symbols", &default_l1)?;

    let mut profiles = Vec::new();
    for &n in &levels {
        let name = format!("decay/{entry}/sup/N={n}");
        let res = refine(&g, n).and_then(|gn| decay_profile(&a, m, k, &gn));
        if let Some(prof) = ctx.attempt(&name, Severity::Assert, res)? {
            ctx.push(CheckRow::assert(&name, prof.sup, Relation::Finite, f64::NAN, f64::NAN));
            profiles.push((n, prof));
        }
    }
    let tol = ctx.tol("decay_drift");
    for w in profiles.windows(2) {
        let (n0, c) = &w[0];
        let (n1, f) = &w[1];
        let name = format!("decay/{entry}/pointwise-drift/N={n0}->{n1}");
        if let Some(d) = ctx.attempt(&name, Severity::Assert, c.pointwise_drift(f))? {
            ctx.push(CheckRow::assert(&name, d, Relation::Near, 0.0, tol));
        }
        ctx.push(CheckRow::info(
            format!("decay/{entry}/sup-drift/N={n0}->{n1}"),
            rel_change(c.sup, f.sup),
        ));
    }

    let tol = ctx.tol("l1_cauchy");
    for e in &l1_entries {
        let sym = symbol_of(e, "params.l1_symbols")?;
        let order = if sym.degree().is_finite() { sym.degree() } else { -1.0 };
        let mut values = Vec::new();
        for &n in &l1_levels {
            let name = format!("decay/l1/{e}/N={n}");
            let res = refine(&g, n).and_then(|gn| l1_check(&sym, order, &gn));
            if let Some(v) = ctx.attempt(&name, Severity::Assert, res)? {
                ctx.push(CheckRow::info(&name, v));
                values.push((n, v));
            }
        }
        for w in values.windows(2) {
            ctx.push(CheckRow::assert(
                format!("decay/l1-cauchy/{e}/N={}->{}", w[0].0, w[1].0),
                rel_change(w[0].1, w[1].1),
                Relation::Near,
                0.0,
                tol,
            ));
        }
    }
    Ok(())
}

fn bessel(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.grid()?;
    let p = ctx.cfg.params();
    let r = p.f64("r", 2.0)?;
    let exclude = p.f64("exclude_origin", 0.5)?;
    if g.dim == 1 && r == 2.0 {
        let name = "bessel/kernel-vs-closed-form/r=2";
        if let Some(k) = ctx.attempt(name, Severity::Assert, bessel_kernel(r, &g))? {
            let err = |i: usize| (k.values[i] - C64::new((-g.point(i)[0].abs()).exp() / 2.0, 0.0)).norm();
            let worst = (0..g.len()).map(err).fold(0.0, f64::max);
            let away = (0..g.len())
                .filter(|&i| g.point(i)[0].abs() >= exclude)
                .map(err)
                .fold(0.0, f64::max);
            let tol = ctx.tol("bessel_kernel");
            ctx.push(CheckRow::assert(name, worst, Relation::AtMost, 0.0, tol));
            ctx.push(CheckRow::info(
                format!("bessel/kernel-vs-closed-form/r=2/|x|>={exclude}"),
                away,
            ));
        }
    }
    let name = format!("bessel/delta-round-trip/r={r}");
    if let Some(v) = ctx.attempt(&name, Severity::Assert, bessel_delta_residual(r, &g))? {
        let tol = ctx.tol("bessel_delta");
        ctx.push(CheckRow::assert(name, v, Relation::AtMost, 0.0, tol));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// kernelfactory

fn kernel(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let ea = p.entry("a", "gauss(sigma=1)")?;
    let eb = p.entry("b", "gauss(sigma=1)")?;
    let a = symbol_of(&ea, "params.a")?;
    let b = symbol_of(&eb, "params.b")?;
    let std = SmoothingParams::standard(g.dim);
    let m = p.f64("m", std.m)?;
    let dump = p.bool("dump", false)?;
    let levels = p.levels("levels", &[])?;
    let taus = ctx.cfg.taus(g.dim, true)?;
    let c = bracket_power_symbol(std.s / 2.0);
    let tol = ctx.tol("hs_rel");

    let expected = |g: &Grid| -> Result<f64> {
        Ok(GridFunction::sample_space(&b, *g).l2_norm() * inverse_of_symbol(&a, g)?.l2_norm())
    };
    let base = format!("kernel/a={ea}/b={eb}");
    for (label, tau) in &taus {
        let name = format!("{base}/hs/tau={label}");
        let res = kernel_ab(&a, &b, tau, &g).and_then(|k| Ok((expected(&g)?, k)));
        if let Some((e, k)) = ctx.attempt(&name, Severity::Assert, res)? {
            ctx.push(CheckRow::assert(&name, k.hs_norm() / e, Relation::Near, 1.0, tol));
            if dump {
                ctx.dump(&k, &format!("kernel-tau={label}"))?;
            }
        }
        for (side, build) in [
            (
                Factorization::U1,
                kernel_k1 as fn(&Symbol, &Symbol, &Symbol, &Endo, f64, &Grid) -> Result<KernelMatrix>,
            ),
            (Factorization::U0, kernel_k0),
        ] {
            if !side.admits(tau.class) {
                continue;
            }
            let name = format!("{base}/{side:?}/hs-finite/tau={label}");
            if let Some(k) = ctx.attempt(&name, Severity::Assert, build(&a, &b, &c, tau, m, &g))? {
                ctx.push(CheckRow::assert(
                    &name,
                    k.hs_norm(),
                    Relation::Finite,
                    f64::NAN,
                    f64::NAN,
                ));
            }
        }
        let mut ratios = Vec::new();
        for &n in &levels {
            let name = format!("{base}/hs/tau={label}/N={n}");
            let res = refine(&g, n).and_then(|gn| {
                ctx.cfg.check_matrix_size(&gn)?;
                Ok(kernel_ab(&a, &b, tau, &gn)?.hs_norm() / expected(&gn)?)
            });
            if let Some(r) = ctx.attempt(&name, Severity::Bound, res)? {
                ctx.push(CheckRow::info(&name, r));
                ratios.push((n, r));
            }
        }
        let drift = ctx.tol("convergence_drift");
        for w in ratios.windows(2) {
            ctx.push(CheckRow::bound(
                format!("{base}/hs-drift/tau={label}/N={}->{}", w[0].0, w[1].0),
                rel_change(w[0].1, w[1].1),
                Relation::AtMost,
                0.0,
                drift,
            ));
        }
    }
    Ok(())
}

fn factorize(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let std = SmoothingParams::standard(g.dim);
    let params = SmoothingParams {
        s: p.f64("s", std.s)?,
        t: std.t,
        m: p.f64("m", std.m)?,
    };
    let pairs = p.string("pairs", "all")?;
    let default: Vec<String> = corpus()
        .into_iter()
        .filter(|e| e.has_symbol())
        .map(|e| e.to_string())
        .collect();
    let default: Vec<&str> = default.iter().map(String::as_str).collect();
    let entries = ctx.cfg.entries(&default)?;
    let symbols: Vec<(String, Symbol)> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| Ok((e.to_string(), symbol_of(e, &format!("symbols[{i}]"))?)))
        .collect::<Result<_>>()?;
    let combos: Vec<(usize, usize)> = match pairs.as_str() {
        "all" => (0..symbols.len())
            .flat_map(|i| (0..symbols.len()).map(move |j| (i, j)))
            .collect(),
        "diagonal" => (0..symbols.len()).map(|i| (i, i)).collect(),
        other => {
            return Err(Error::config(
                "params.pairs",
                format!("expected `all` or `diagonal`, got `{other}`"),
            ))
        }
    };
    let taus = ctx.cfg.taus(g.dim, true)?;
    let mut jobs = Vec::new();
    for &(i, j) in &combos {
        for (label, tau) in &taus {
            for side in [Factorization::U1, Factorization::U0] {
                if side.admits(tau.class) {
                    jobs.push((i, j, label.clone(), tau.clone(), side));
                }
            }
        }
    }
    let results: Vec<(String, Result<f64>)> = jobs
        .par_iter()
        .map(|(i, j, label, tau, side)| {
            let (na, a) = &symbols[*i];
            let (nb, b) = &symbols[*j];
            let name = format!("factorize/{side:?}/a={na}/b={nb}/tau={label}");
            (
                name,
                factorization_check(a, b, tau, *side, params, &g).map(|r| r.residual),
            )
        })
        .collect();
    let tol = ctx.tol("factorization");
    for (name, res) in results {
        if let Some(v) = ctx.attempt(&name, Severity::Assert, res)? {
            ctx.push(CheckRow::assert(name, v, Relation::AtMost, 0.0, tol));
        }
    }
    Ok(())
}

fn tau_scan(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let ea = p.entry("a", "gauss(sigma=1)")?;
    let eb = p.entry("b", "gauss(sigma=1)")?;
    let a = symbol_of(&ea, "params.a")?;
    let b = symbol_of(&eb, "params.b")?;
    let std = SmoothingParams::standard(g.dim);
    let s = p.f64("s", std.s)?;
    let m = p.f64("m", std.m)?;
    let k_min = p.usize("k_min", 3)? as i32;
    let k_max = p.usize("k_max", 10)? as i32;
    let c = bracket_power_symbol(s / 2.0);
    let taus = ctx.cfg.taus(g.dim, true)?;
    let tol = ctx.tol("continuity_slope");
    for (label, tau0) in &taus {
        let side = if tau0.class.in_u1() {
            Factorization::U1
        } else {
            Factorization::U0
        };
        let path = dyadic_path(tau0, k_min..=k_max);
        let name = format!("tau-scan/{side:?}/a={ea}/b={eb}/tau0={label}");
        let res = tau_continuity_scan(&a, &b, &c, tau0, &path, m, side, &g);
        if let Some(scan) = ctx.attempt(&name, Severity::Assert, res)? {
            for (k, r) in (k_min..=k_max).zip(&scan.rows) {
                ctx.push(CheckRow::info(format!("{name}/distance/k={k}"), r.hs_distance));
            }
            ctx.push(CheckRow::assert(
                format!("{name}/slope"),
                scan.slope.unwrap_or(f64::NAN),
                Relation::AtLeast,
                1.0,
                tol,
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// quantize

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn quantize_cross(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let dump = p.bool("dump", false)?;
    let pairs: Vec<(CorpusEntry, CorpusEntry)> = match ctx.cfg.params.get("pairs") {
        None => vec![
            ("gauss(sigma=1)", "gauss(sigma=1)"),
            ("gauss(sigma=1)", "bracket(m=-3)"),
            ("bracket(m=-2)", "bracket(m=-2)"),
        ]
        .into_iter()
        .map(|(a, b)| Ok((super::corpus::parse(a)?, super::corpus::parse(b)?)))
        .collect::<Result<_>>()?,
        Some(v) => {
            let bad = || Error::config("params.pairs", "expected a list of [a, b] corpus reference pairs");
            let items = v.as_array().ok_or_else(bad)?;
            items
                .iter()
                .enumerate()
                .map(|(i, pair)| {
                    let refs = pair.as_array().filter(|r| r.len() == 2).ok_or_else(bad)?;
                    let parse = |k: usize| {
                        let r = refs[k].as_str().ok_or_else(bad)?;
                        super::corpus::parse(r)
                            .map_err(|e| Error::config(format!("params.pairs[{i}][{k}]"), e.to_string()))
                    };
                    Ok((parse(0)?, parse(1)?))
                })
                .collect::<Result<_>>()?
        }
    };
    let taus = ctx.cfg.taus(g.dim, true)?;
    let tol = ctx.tol("cross_check");
    for (ea, eb) in &pairs {
        let a = symbol_of(ea, "params.pairs")?;
        let b = symbol_of(eb, "params.pairs")?;
        let base = format!("quantize/a={ea}/b={eb}");
        let sym = match ctx.attempt(
            &base,
            Severity::Assert,
            crate::quantize::PhaseSymbol::cordes_product(&a, &b, g),
        )? {
            Some(s) => s,
            None => continue,
        };
        for (label, tau) in &taus {
            let name = format!("{base}/vs-kernel/tau={label}");
            let res = quantize(&sym, tau).and_then(|q| Ok((kernel_ab(&a, &b, tau, &g)?, q)));
            if let Some((k, q)) = ctx.attempt(&name, Severity::Assert, res)? {
                let d = max_abs(&(&q.values - &k.values)) / max_abs(&k.values).max(f64::MIN_POSITIVE);
                ctx.push(CheckRow::assert(&name, d, Relation::AtMost, 0.0, tol));
                if dump {
                    ctx.dump(&q, &format!("quantize-{ea}-{eb}-tau={label}"))?;
                }
            }
        }
    }
    Ok(())
}

fn random_values(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn schatten_exp(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let trials = p.usize("rank_one_trials", 3)?;
    let sizes = p.usize_list("dft_sizes", &[16, 32, 64])?;
    let entries = ctx.cfg.entries(&[
        "gauss(sigma=1)",
        "cordes(t=2,s=2)",
        "window(c=1,R=2)",
        "modgauss(sigma=1,lambda=2)",
    ])?;
    let taus = ctx.cfg.taus(g.dim, true)?;
    let mut p_list = ctx.cfg.p_values();
    p_list.sort_by(|a, b| a.partial_cmp(b).expect("validated"));
    p_list.dedup();
    let order_tol = ctx.tol("schatten_order");
    let cross_tol = ctx.tol("cross_check");
    for e in &entries {
        let sym = match ctx.attempt(&format!("schatten/{e}"), Severity::Assert, e.phase(g))? {
            Some(s) => s,
            None => continue,
        };
        for (label, tau) in &taus {
            let base = format!("schatten/{e}/tau={label}");
            let res = quantize(&sym, tau).and_then(|k| Ok((schatten(&k, &p_list)?, k)));
            let (rep, k) = match ctx.attempt(&base, Severity::Assert, res)? {
                Some(v) => v,
                None => continue,
            };
            for &(pv, v) in &rep.p_norms {
                ctx.push(CheckRow::info(format!("{base}/p={pv}"), v));
            }
            ctx.push(CheckRow::assert(
                format!("{base}/monotonicity"),
                rep.monotonicity_defect(),
                Relation::AtMost,
                0.0,
                order_tol,
            ));
            ctx.push(CheckRow::assert(
                format!("{base}/log-convexity"),
                rep.log_convexity_defect(),
                Relation::AtMost,
                0.0,
                order_tol,
            ));
            let hs = k.hs_norm();
            ctx.push(CheckRow::assert(
                format!("{base}/p=2-vs-frobenius"),
                rel_change(hs, rep.norm(2.0)),
                Relation::AtMost,
                0.0,
                cross_tol,
            ));
            if let Some(dir) = &ctx.cfg.output {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{}.json", sanitize(&base.replace('/', "-"))));
                std::fs::write(&path, serde_json::to_string_pretty(&rep.to_json())?)?;
                ctx.artifacts.push(path);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let tol = ctx.tol("rank_one");
    for trial in 0..trials {
        let name = format!("schatten/rank-one/trial={trial}");
        let u = random_values(&mut rng, g.len());
        let v = random_values(&mut rng, g.len());
        let norm = |w: &[C64]| w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let oracle = g.cell_volume() * norm(&u) * norm(&v);
        let m = DMatrix::from_fn(g.len(), g.len(), |i, j| u[i] * v[j]);
        let res = KernelMatrix::new(g, m, "rank-one").and_then(|k| singular_values(&k));
        if let Some(sv) = ctx.attempt(&name, Severity::Assert, res)? {
            let err = rel_change(oracle, sv[0]).max(sv.get(1).copied().unwrap_or(0.0) / oracle);
            ctx.push(CheckRow::assert(name, err, Relation::AtMost, 0.0, tol));
        }
    }

    let per_point = ctx.tol("dft_per_point");
    for &n in &sizes {
        for dim in [1usize, 2] {
            if n.checked_pow(dim as u32)
                .is_none_or(|len| len > crate::fourierlab::DIRECT_POINT_CAP)
            {
                continue;
            }
            let name = format!("schatten/fft-vs-direct/n={dim}/N={n}");
            let res = Grid::new(dim, n, g.half_width).and_then(|gd| {
                let f = GridFunction::new(gd, random_values(&mut rng, gd.len()), Side::Space)?;
                let fast = forward_fft(&f)?;
                let slow = direct_transform(&f)?;
                Ok((
                    gd.len(),
                    fast.values
                        .iter()
                        .zip(&slow.values)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max),
                ))
            });
            if let Some((len, err)) = ctx.attempt(&name, Severity::Assert, res)? {
                ctx.push(CheckRow::assert(
                    name,
                    err,
                    Relation::AtMost,
                    0.0,
                    per_point * len as f64,
                ));
            }
        }
    }
    Ok(())
}

fn cordes(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let n = g.dim as f64;
    let p = ctx.cfg.params();
    let mut levels = p.levels("levels", &[g.points, 2 * g.points])?;
    if levels.is_empty() {
        levels.push(g.points);
    }
    let k_min = p.usize("k_min", 3)? as i32;
    let k_max = p.usize("k_max", 10)? as i32;
    let s_default = p.f64("s", n + 1.0)?;
    let t_default = p.f64("t", n + 1.0)?;
    let entries = ctx.cfg.entries(&["cordes(t=2,s=2)"])?;
    let taus = ctx.cfg.taus(g.dim, true)?;
    let (label, tau0) = taus
        .first()
        .cloned()
        .ok_or_else(|| Error::config("tau", "cordes needs a base tau"))?;
    let path = dyadic_path(&tau0, k_min..=k_max);
    let drift_tol = ctx.tol("trace_drift");
    let slope_tol = ctx.tol("continuity_slope");
    for (i, e) in entries.iter().enumerate() {
        let (a, b) = e
            .factors(g.dim)
            .ok_or_else(|| Error::config(format!("symbols[{i}]"), format!("`{e}` is not a product symbol")))?;
        let (t, s) = match e.family {
            Family::Cordes { t, s } => (t, s),
            Family::Borderline => (n + 0.1, n + 0.1),
            _ => (t_default, s_default),
        };
        let severity = if matches!(e.family, Family::Borderline) {
            Severity::Bound
        } else {
            Severity::Assert
        };
        let base = format!("cordes/{e}/tau0={label}");
        let mut traces = Vec::new();
        for (li, &np) in levels.iter().enumerate() {
            let name = format!("{base}/trace-norm/N={np}");
            let res = refine(&g, np).and_then(|gn| {
                ctx.cfg.check_matrix_size(&gn)?;
                let steps: &[Endo] = if li == 0 { &path } else { &[] };
                cordes_check(&a, &b, &tau0, steps, s, t, &gn)
            });
            let rep = match ctx.attempt(&name, severity, res)? {
                Some(r) => r,
                None => continue,
            };
            ctx.push(CheckRow::new(
                &name,
                rep.base_trace_norm,
                Relation::Finite,
                f64::NAN,
                f64::NAN,
                severity,
            ));
            traces.push((np, rep.base_trace_norm));
            if li == 0 {
                for (k, row) in (k_min..=k_max).zip(&rep.rows) {
                    ctx.push(CheckRow::info(format!("{base}/distance/k={k}"), row.distance));
                }
                ctx.push(CheckRow::new(
                    format!("{base}/slope"),
                    rep.slope.unwrap_or(f64::NAN),
                    Relation::AtLeast,
                    1.0,
                    slope_tol,
                    severity,
                ));
            }
        }
        for w in traces.windows(2) {
            ctx.push(CheckRow::new(
                format!("{base}/trace-drift/N={}->{}", w[0].0, w[1].0),
                rel_change(w[0].1, w[1].1),
                Relation::Near,
                0.0,
                drift_tol,
                severity,
            ));
        }
    }
    Ok(())
}

/// Ratio rows per symbol, then one growth row per `tau` against the first symbol.
fn family_rows(ctx: &mut Ctx, base: &str, labels: &[String], per_symbol: Vec<(String, Vec<RatioRow>)>) {
    for (sym, rows) in &per_symbol {
        for (label, r) in labels.iter().zip(rows) {
            ctx.push(CheckRow::info(
                format!("{base}/{sym}/tau={label}"),
                r.ratio.unwrap_or(f64::NAN),
            ));
        }
    }
    let tol = ctx.tol("family_growth");
    let Some((_, first)) = per_symbol.first() else { return };
    for (ti, label) in labels.iter().enumerate() {
        let Some(baseline) = first.get(ti).and_then(|r| r.ratio) else {
            continue;
        };
        let worst = per_symbol
            .iter()
            .filter_map(|(_, rows)| rows.get(ti).and_then(|r| r.ratio))
            .fold(0.0, f64::max);
        ctx.push(CheckRow::bound(
            format!("{base}/growth/tau={label}"),
            worst / baseline,
            Relation::AtMost,
            1.0,
            tol,
        ));
    }
}

fn tcp2(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let default = admissible_orders(&[g.dim]);
    let t = p.f64_list("t", &default)?;
    let s = p.f64_list("s", &default)?;
    let entries = ctx.cfg.entries(&MODULATED)?;
    let taus = ctx.cfg.taus(g.dim, true)?;
    let labels: Vec<String> = taus.iter().map(|(l, _)| l.clone()).collect();
    let endos: Vec<Endo> = taus.into_iter().map(|(_, t)| t).collect();
    for pv in ctx.cfg.p_values() {
        let base = format!("tcp2/p={pv}");
        let mut per_symbol = Vec::new();
        for e in &entries {
            let res = e.phase(g).and_then(|a| tcp2_check(&a, &t, &s, pv, &endos));
            if let Some(rows) = ctx.attempt(&format!("{base}/{e}"), Severity::Bound, res)? {
                per_symbol.push((e.to_string(), rows));
            }
        }
        family_rows(ctx, &base, &labels, per_symbol);
    }
    Ok(())
}

fn cv(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let p = ctx.cfg.params();
    let baseline = p.usize("baseline", 0)?;
    let mut entries = ctx.cfg.entries(&MODULATED)?;
    if baseline >= entries.len() {
        return Err(Error::config(
            "params.baseline",
            format!("index beyond the {} symbols", entries.len()),
        ));
    }
    let b = entries.remove(baseline);
    entries.insert(0, b);
    let taus = ctx.cfg.taus(g.dim, true)?;
    let labels: Vec<String> = taus.iter().map(|(l, _)| l.clone()).collect();
    let endos: Vec<Endo> = taus.into_iter().map(|(_, t)| t).collect();
    let mut per_symbol = Vec::new();
    for e in &entries {
        let res = e.phase(g).and_then(|a| cv_check(&a, &endos));
        if let Some(rows) = ctx.attempt(&format!("cv/{e}"), Severity::Bound, res)? {
            per_symbol.push((e.to_string(), rows));
        }
    }
    family_rows(ctx, "cv", &labels, per_symbol);
    Ok(())
}

fn sobolev(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.matrix_grid()?;
    let n = g.dim;
    let p = ctx.cfg.params();
    let s = p.f64("s", 2.0 * n as f64 + 1.0)?;
    let mu = p.f64("mu", 1.5)?;
    let mut p_list = ctx.cfg.p_values();
    if p_list.is_empty() {
        p_list = vec![1.0, 2.0];
    }
    let entries = ctx
        .cfg
        .entries(&["gauss(sigma=1)", "modgauss(sigma=1,lambda=2)", "window(c=1,R=2)"])?;
    let taus = ctx.cfg.taus(g.dim, true)?;
    let labels: Vec<String> = taus.iter().map(|(l, _)| l.clone()).collect();
    let endos: Vec<Endo> = taus.into_iter().map(|(_, t)| t).collect();
    let c = hs_constant(n);
    let tol = ctx.tol("cross_check");
    for &pv in &p_list {
        if pv.is_infinite() {
            continue;
        }
        ctx.push(CheckRow::info(
            format!("sobolev/interpolation-exponent/mu={mu}/p={pv}"),
            interpolation_exponent(mu, n, pv),
        ));
        for e in &entries {
            let base = format!("sobolev/s={s}/p={pv}/{e}");
            let res = e.phase(g).and_then(|a| sobolev_phase_check(&a, s, pv, &endos));
            let Some(rep) = ctx.attempt(&base, Severity::Bound, res)? else {
                continue;
            };
            for (label, r) in labels.iter().zip(&rep.rows) {
                let ratio = r.ratio.unwrap_or(0.0);
                let name = format!("{base}/tau={label}");
                ctx.push(if pv == 2.0 {
                    // ||a^tau||_2 = c ||a||_2 <= c ||a||_{H^s_2}
                    CheckRow::assert(name, ratio, Relation::AtMost, c, tol * c)
                } else {
                    CheckRow::bound(name, ratio, Relation::Finite, f64::NAN, f64::NAN)
                });
            }
        }
    }
    Ok(())
}

fn hs_identity(ctx: &mut Ctx) -> Result<()> {
    let grids = ctx.cfg.grids(Some(default_grid(Experiment::HsIdentity)))?;
    for g in &grids {
        ctx.cfg.check_matrix_size(g)?;
    }
    let p = ctx.cfg.params();
    let levels = p.levels("levels", &[])?;
    let entries = ctx.cfg.entries(&[
        "gauss(sigma=1)",
        "gauss(sigma=0.5)",
        "window(c=1,R=2)",
        "modgauss(sigma=1,lambda=1)",
        "cordes-gauss(sigma=1)",
    ])?;
    let tol = ctx.tol("hs_rel");
    let floor = ctx.tol("refinement_floor");
    for g in &grids {
        let taus = ctx.cfg.taus(g.dim, true)?;
        if taus.is_empty() {
            continue;
        }
        let labels: Vec<String> = taus.iter().map(|(l, _)| l.clone()).collect();
        let endos: Vec<Endo> = taus.into_iter().map(|(_, t)| t).collect();
        let target = hs_constant(g.dim);
        for e in &entries {
            let base = format!("hs-identity/n={}/{e}", g.dim);
            let res = e.phase(*g).and_then(|a| hs_identity_check(&a, &endos));
            let Some(rows) = ctx.attempt(&base, Severity::Assert, res)? else {
                continue;
            };
            for (label, r) in labels.iter().zip(&rows) {
                let name = format!("{base}/tau={label}");
                ctx.push(match r.ratio {
                    Some(ratio) => CheckRow::assert(name, ratio, Relation::Near, target, tol * target),
                    None => CheckRow::assert(name, r.hs_norm, Relation::AtMost, 0.0, floor),
                });
            }
        }
    }

    let Some(g) = grids.first().copied() else { return Ok(()) };
    if levels.len() < 2 {
        return Ok(());
    }
    let taus = ctx.cfg.taus(g.dim, true)?;
    let labels: Vec<String> = taus.iter().map(|(l, _)| l.clone()).collect();
    let endos: Vec<Endo> = taus.into_iter().map(|(_, t)| t).collect();
    for e in &entries {
        let base = format!("hs-refinement/n={}/{e}", g.dim);
        let mut errors: Vec<Vec<f64>> = Vec::new();
        for &np in &levels {
            let res = refine(&g, np).and_then(|gn| {
                ctx.cfg.check_matrix_size(&gn)?;
                hs_identity_check(&e.phase(gn)?, &endos)
            });
            let Some(rows) = ctx.attempt(&format!("{base}/N={np}"), Severity::Assert, res)? else {
                continue;
            };
            for (label, r) in labels.iter().zip(&rows) {
                ctx.push(CheckRow::info(format!("{base}/tau={label}/N={np}"), r.rel_error));
            }
            errors.push(rows.iter().map(|r| r.rel_error).collect());
        }
        if errors.len() < 2 {
            continue;
        }
        // largest e_{k+1} / e_k over steps not already at the floor
        let worst_ratio = |series: &[f64]| {
            series
                .windows(2)
                .filter(|w| w[1] > floor)
                .map(|w| w[1] / w[0].max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max)
        };
        // the identity's error for a symbol is its worst error over the taus
        let worst: Vec<f64> = errors.iter().map(|e| e.iter().copied().fold(0.0, f64::max)).collect();
        ctx.push(CheckRow::assert(
            format!("{base}/decrease"),
            worst_ratio(&worst),
            Relation::AtMost,
            1.0,
            0.0,
        ));
        for (ti, label) in labels.iter().enumerate() {
            let series: Vec<f64> = errors.iter().map(|e| e[ti]).collect();
            ctx.push(CheckRow::bound(
                format!("{base}/tau={label}/decrease"),
                worst_ratio(&series),
                Relation::AtMost,
                1.0,
                0.0,
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// symbolcalc and Sobolev norms on X

fn scaling(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.grid()?;
    let p = ctx.cfg.params();
    let m_list = p.f64_list("m_list", &[0.5, 1.0])?;
    let k_max = p.usize("k_max", 8)? as i32;
    let eps: Vec<f64> = (1..=k_max).map(|k| 0.5f64.powi(k)).collect();
    let entries = ctx.cfg.entries(&["gauss(sigma=0.7071067811865476)"])?;
    let tol = ctx.tol("scaling_slack");
    for (i, e) in entries.iter().enumerate() {
        let a = symbol_of(e, &format!("symbols[{i}]"))?;
        for &m in &m_list {
            let name = format!("scaling/{e}/m={m}/slope");
            let Some(gaps) = ctx.attempt(&name, Severity::Assert, scaling_lemma_check(&a, m, &eps, &g))? else {
                continue;
            };
            for (eps, gap) in &gaps {
                ctx.push(CheckRow::info(format!("scaling/{e}/m={m}/eps={eps}"), *gap));
            }
            if gaps.iter().all(|&(_, gap)| gap == 0.0) {
                // a constant symbol: the gap vanishes faster than any power
                ctx.push(
                    CheckRow::assert(name, f64::INFINITY, Relation::AtLeast, m, tol)
                        .with_diagnostics("gap vanishes identically"),
                );
                continue;
            }
            let slope = loglog_slope(&gaps).unwrap_or(f64::NAN);
            ctx.push(CheckRow::assert(name, slope, Relation::AtLeast, m, tol));
        }
    }
    Ok(())
}

fn dual_sobolev(ctx: &mut Ctx) -> Result<()> {
    let g = ctx.grid()?;
    let p = ctx.cfg.params();
    let m_list = p.f64_list("m_list", &[1.5, 2.5])?;
    let r = p.f64("r", 1.0)?;
    let levels = p.levels("levels", &[g.points, 2 * g.points, 4 * g.points])?;
    let entries = ctx.cfg.entries(&[
        "gauss(sigma=1)",
        "gauss(sigma=0.5)",
        "modgauss(sigma=1,lambda=1)",
        "window(c=1,R=2)",
    ])?;
    let factor = ctx.tol("sobolev_factor");
    let drift = ctx.tol("sobolev_drift");
    for (i, e) in entries.iter().enumerate() {
        let a = symbol_of(e, &format!("symbols[{i}]"))?;
        for &m in &m_list {
            let base = format!("dual-sobolev/{e}/m={m}");
            let mut ratios = Vec::new();
            for &n in &levels {
                let name = format!("{base}/ratio/N={n}");
                let res = refine(&g, n).and_then(|gn| {
                    let f = GridFunction::sample_space(&a, gn);
                    Ok(sobolev_norm_slobodeckij(&f, m, r)? / sobolev_norm_fourier(&f, m)?)
                });
                if let Some(v) = ctx.attempt(&name, Severity::Assert, res)? {
                    ctx.push(CheckRow::assert(&name, v, Relation::Factor, 1.0, factor));
                    ratios.push((n, v));
                }
            }
            for w in ratios.windows(2) {
                ctx.push(CheckRow::assert(
                    format!("{base}/drift/N={}->{}", w[0].0, w[1].0),
                    rel_change(w[0].1, w[1].1),
                    Relation::Near,
                    0.0,
                    drift,
                ));
            }
        }
    }
    Ok(())
}
