//! The verification suites behind each subcommand.

use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use sobolev_core::ckn::{self, CknParams};
use sobolev_core::flow::{self, FlowConfig};
use sobolev_core::functionals::{improved_chain_with_tol, square_expansion, DEFICIT_TOL, IDENTITY_TOL};
use sobolev_core::onofri::{self, OnofriProfile};
use sobolev_core::radial::{aubin_talenti_on, moment};
use sobolev_core::specfun::{self, sd_radial_constant_gn_route, sobolev_constant_radial_route, sobolev_constant_sphere_route};
use sobolev_core::spectral;
use sobolev_core::testkit::{bump_sum, modulate, Bump, BumpSampler, ProfileSampler};
use sobolev_core::{Dimension, LogGrid, RadialProfile};

use crate::report::{Claim, SuiteReport, Table};

pub const SQUARE_PROFILES: usize = 100;
pub const ONOFRI_PROFILES: usize = 50;
pub const MU_ALPHA_PROFILES: usize = 20;
pub const CKN_PROFILES: usize = 30;
pub const PHI_PROFILES: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum FlowInit {
    Separation,
    Profile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dimension: f64,
    pub grid_size: usize,
    /// Replaces the default chain tolerance of every suite when set.
    pub tolerance: Option<f64>,
    pub seed: u64,
    pub init: FlowInit,
    pub tau_max: f64,
    pub sphere_nodes: usize,
}

impl Settings {
    fn grid(&self) -> Result<LogGrid> {
        Ok(LogGrid::symmetric(14.0, self.grid_size)?)
    }

    /// The CKN grid reaches out to t = -60 with four times the nodes, capped at 8192.
    fn wide_grid(&self) -> Result<LogGrid> {
        Ok(LogGrid::new(ckn::WIDE_T_MIN, ckn::WIDE_T_MAX, (4 * self.grid_size).min(8192))?)
    }

    fn tol(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    fn dim(&self) -> Result<Dimension> {
        Ok(Dimension::new(self.dimension)?)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

pub fn constants(s: &Settings) -> Result<SuiteReport> {
    let d = s.dimension;
    let c = s.dim()?.constants();
    let sphere = sobolev_constant_sphere_route(d)?;
    let radial = sobolev_constant_radial_route(d)?;
    let gn = sd_radial_constant_gn_route(d)?;
    // S_d = 1 / (d(d-2) (|S^{d-1}| ∫u*^{2*} r^{d-1})^{2/d})
    let u = aubin_talenti_on(s.wide_grid()?, d, 1.0)?;
    let full = specfun::sphere_volume(d)? * moment(&u, 2.0 * d / (d - 2.0), d - 1.0)?;
    let quadrature = 1.0 / (d * (d - 2.0) * full.powf(2.0 / d));
    let mut rep = SuiteReport::new("constants", d);
    let mut t = Table::new(
        "values",
        &["dimension", "sobolev", "sobolev_sphere", "sobolev_radial", "sobolev_quadrature", "radial", "radial_gn", "c_lower", "sphere_volume"],
    );
    t.push(vec![
        d.into(),
        c.sobolev.into(),
        sphere.into(),
        radial.into(),
        quadrature.into(),
        c.radial.into(),
        gn.into(),
        c.c_lower.into(),
        c.sphere_volume.into(),
    ]);
    rep.tables.push(t);
    rep.claims.push(Claim::within("sphere_route", rel(sphere, c.sobolev), 1e-10));
    rep.claims.push(Claim::within("radial_route", rel(radial, c.sobolev), 1e-10));
    rep.claims.push(Claim::within("radial_gn_route", rel(gn, c.radial), 1e-10));
    rep.claims.push(Claim::within("quadrature_route", rel(quadrature, c.sobolev), 1e-6));
    rep.claims.push(Claim::within("c_lower", rel(c.c_lower, d / (d + 4.0) * c.sobolev), 1e-15));
    Ok(rep)
}

pub fn square(s: &Settings) -> Result<SuiteReport> {
    let d = s.dimension;
    let tol = s.tol(DEFICIT_TOL);
    let mut sampler = ProfileSampler::new(d, s.grid()?, s.seed);
    let mut t = Table::new("chain", &["index", "hls_deficit", "sobolev_side", "residual", "identity_gap", "pass"]);
    let (mut worst_lhs, mut worst_chain, mut worst_res, mut worst_gap) = (f64::INFINITY, f64::INFINITY, f64::INFINITY, 0.0f64);
    for i in 0..SQUARE_PROFILES {
        let u = sampler.next_profile()?;
        let r = improved_chain_with_tol(&u, 1.0, tol)?;
        let sq = square_expansion(&u)?;
        let gap = sq.identity_gap() / sq.residual.abs().max(1.0);
        worst_lhs = worst_lhs.min(r.lhs);
        worst_chain = worst_chain.min(r.rhs - r.lhs);
        worst_res = worst_res.min(r.residual);
        worst_gap = worst_gap.max(gap);
        t.push(vec![i.into(), r.lhs.into(), r.rhs.into(), r.residual.into(), gap.into(), r.pass.into()]);
    }
    let mut rep = SuiteReport::new("square", d);
    rep.tables.push(t);
    rep.claims.push(Claim::at_least("hls_deficit_nonnegative", worst_lhs, tol));
    rep.claims.push(Claim::at_least("chain_ordering", worst_chain, tol));
    rep.claims.push(Claim::at_least("residual_nonnegative", worst_res, tol));
    rep.claims.push(Claim::within("square_identity", worst_gap, IDENTITY_TOL));
    if d >= 3.0 {
        phi(s, &mut rep)?;
    }
    Ok(rep)
}

/// The improved inequality with 𝒞 = d/(d+4) for both φ variants.
fn phi(s: &Settings, rep: &mut SuiteReport) -> Result<()> {
    let d = s.dimension;
    let c = d / (d + 4.0);
    let mut sampler = ProfileSampler::new(d, s.grid()?, s.seed.wrapping_add(1));
    let mut t = Table::new("phi", &["index", "x", "phi_basic", "phi_refined", "slack", "slack_basic", "scale", "pass"]);
    let (mut worst, mut worst_basic) = (f64::INFINITY, f64::INFINITY);
    for i in 0..PHI_PROFILES {
        let r = flow::phi_improved_check(&sampler.next_profile()?, c)?;
        worst = worst.min(r.slack / r.scale.max(1.0));
        worst_basic = worst_basic.min(r.slack_basic / r.scale.max(1.0));
        t.push(vec![
            i.into(),
            r.x.into(),
            r.phi_basic.into(),
            r.phi_refined.into(),
            r.slack.into(),
            r.slack_basic.into(),
            r.scale.into(),
            r.pass.into(),
        ]);
    }
    rep.tables.push(t);
    let tol = s.tol(DEFICIT_TOL);
    rep.claims.push(Claim::at_least("phi_refined", worst, tol));
    rep.claims.push(Claim::at_least("phi_basic", worst_basic, tol));
    rep.claims.push(Claim::holds("phi_grid", flow::phi_grid_check(c)?.pass));
    Ok(())
}

pub fn spectral(s: &Settings) -> Result<SuiteReport> {
    let dim = s.dim()?;
    let d = dim.value();
    let grid = s.grid()?;
    let check = spectral::ratio_bound_check_on(dim, grid.clone())?;
    let mut t = Table::new("modes", &["k", "lambda_k", "mu_k", "form_f", "form_g", "ratio", "predicted"]);
    for m in &check.modes {
        t.push(vec![m.k.into(), m.lambda_k.into(), m.mu_k.into(), m.form_f.into(), m.form_g.into(), m.ratio.into(), m.predicted.into()]);
    }
    let mut rep = SuiteReport::new("spectral", d);
    rep.tables.push(t);
    let m2 = &check.modes[0];
    let target = d * (d + 2.0).powi(2) * (d + 4.0);
    rep.claims.push(Claim::within("ratio_k2", rel(m2.ratio, target), 1e-5));
    rep.claims.push(Claim::holds("ratio_increasing", check.modes.windows(2).all(|w| w[1].ratio > w[0].ratio)));
    // modes have unit weighted norm, so F[f_k] is the Poincaré quotient
    let poincare = check.modes.iter().map(|m| m.form_f).fold(f64::INFINITY, f64::min);
    rep.claims.push(Claim::within("poincare_minimum", rel(poincare, 4.0 * (d + 2.0)), 1e-5));
    rep.claims.push(Claim::holds("poincare_at_k2", poincare == m2.form_f));
    let kernel = spectral::mode_ratio(&spectral::mode_profile_on(1, dim, grid)?.clone())?;
    rep.claims.push(Claim::within("kernel_form_f", kernel.form_f, 1e-7));
    rep.claims.push(Claim::within("kernel_form_g", kernel.form_g, 1e-7));
    Ok(rep)
}

pub fn flow(s: &Settings) -> Result<SuiteReport> {
    let dim = s.dim()?;
    let d = dim.value();
    let v0 = match &s.init {
        FlowInit::Separation => flow::separation_datum(dim, s.grid()?, 1.0)?,
        FlowInit::Profile(path) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            RadialProfile::read_csv(d, f)?
        }
    };
    let mut config = FlowConfig { nodes: s.sphere_nodes, ..FlowConfig::default() };
    if let Some(t) = s.tolerance {
        config.tolerance = t;
    }
    let run = flow::run_flow_with(&v0, s.tau_max, config)?;
    let tol = config.tolerance;
    let ctol = config.concavity_tolerance;
    let mut t = Table::new(
        "history",
        &[
            "tau", "t", "J", "H", "Hprime", "Q", "j_decreasing", "sobolev_decay", "decay_slope", "extinction", "h_sign",
            "h_monotone", "q_monotone", "concavity", "kappa_rate",
        ],
    );
    for r in run.history() {
        let x = &r.slacks;
        t.push(vec![
            r.tau.into(),
            r.t.into(),
            r.j.into(),
            r.h.into(),
            r.hprime.into(),
            r.q.into(),
            (x.j_decreasing >= -tol).into(),
            (x.sobolev_decay >= -tol).into(),
            (x.decay_slope >= -tol).into(),
            (x.extinction >= -tol).into(),
            (x.h_sign >= -tol).into(),
            (x.h_monotone >= -tol).into(),
            (x.q_monotone >= -tol).into(),
            (x.concavity >= -ctol).into(),
            (x.kappa_rate >= -ctol).into(),
        ]);
    }
    let mut rep = SuiteReport::new("flow", d);
    rep.tables.push(t);
    for (name, c) in run.report.checks() {
        rep.claims.push(Claim::at_least(name, c.worst, c.tolerance));
    }
    if s.init == FlowInit::Separation {
        let cs = flow::stationary_value(dim);
        let drift = run.state.w.iter().map(|x| (x - cs).abs()).fold(0.0, f64::max);
        rep.claims.push(Claim::within("stationarity", drift / s.tau_max, 1e-8));
        let r = &run.report;
        // equality case: these slacks vanish along the separation solution
        for (name, c) in [
            ("sobolev_decay", r.sobolev_decay),
            ("decay_slope", r.decay_slope),
            ("extinction", r.extinction),
            ("h_sign", r.h_sign),
            ("h_monotone", r.h_monotone),
            ("q_monotone", r.q_monotone),
        ] {
            rep.claims.push(Claim::within(format!("{name}_equality"), c.worst, tol));
        }
    }
    Ok(rep)
}

fn onofri_tests() -> [(&'static str, Vec<Bump>); 3] {
    [
        ("gaussian", vec![Bump { amplitude: 1.0, centre: 0.0, width: 1.0 }]),
        ("shifted", vec![Bump { amplitude: 0.7, centre: 0.8, width: 0.6 }]),
        ("dipole", vec![Bump { amplitude: 0.8, centre: -0.5, width: 0.8 }, Bump { amplitude: -0.6, centre: 1.0, width: 0.7 }]),
    ]
}

pub fn onofri(s: &Settings) -> Result<SuiteReport> {
    let grid = s.grid()?;
    let tol = s.tol(onofri::CHAIN_TOL);
    let mut rep = SuiteReport::new("onofri", 2.0);
    let mut t = Table::new("chain", &["alpha", "index", "lhs", "rhs", "pass"]);
    for (k, (alpha, count)) in [(0.0, ONOFRI_PROFILES), (-0.25, MU_ALPHA_PROFILES), (-0.5, MU_ALPHA_PROFILES)].into_iter().enumerate() {
        let mut sampler = BumpSampler::new(s.seed.wrapping_add(k as u64), 1.0);
        let (mut lo, mut gap) = (f64::INFINITY, f64::INFINITY);
        for i in 0..count {
            let p = OnofriProfile::new(sampler.next_function(2.0, grid.clone())?, alpha)?;
            let r = if alpha == 0.0 { onofri::onofri_chain(&p)? } else { onofri::mu_alpha_deficit(&p)? };
            lo = lo.min(r.lhs);
            gap = gap.min(r.rhs - r.lhs);
            t.push(vec![alpha.into(), i.into(), r.lhs.into(), r.rhs.into(), (r.lhs >= -tol && r.rhs - r.lhs >= -tol).into()]);
        }
        rep.claims.push(Claim::at_least(format!("lower_alpha_{alpha}"), lo, tol));
        rep.claims.push(Claim::at_least(format!("chain_alpha_{alpha}"), gap, tol));
    }
    rep.tables.push(t);

    let constant = OnofriProfile::standard(RadialProfile::from_t_fn(2.0, grid.clone(), |_| 0.7)?)?;
    rep.claims.push(Claim::within("constant_onofri", onofri::onofri_deficit(&constant)?, 1e-10));
    rep.claims.push(Claim::within("constant_loghls", onofri::loghls_deficit(&constant)?, 1e-10));

    let mut lim = Table::new("dim_limit", &["function", "eps", "sobolev_error", "hls_error"]);
    for (name, bumps) in onofri_tests() {
        let f = bump_sum(2.0, grid.clone(), &bumps)?;
        let table = onofri::dim_limit_check(&f, &onofri::DEFAULT_EPS)?;
        for r in &table.rows {
            lim.push(vec![name.into(), r.eps.into(), r.sobolev_error.into(), r.hls_error.into()]);
        }
        let factors = table.sobolev_factors.iter().chain(&table.hls_factors);
        let worst = factors.map(|f| (f - 1.5).min(2.7 - f)).fold(f64::INFINITY, f64::min);
        rep.claims.push(Claim::at_least(format!("dim_limit_{name}"), worst, 0.0));
    }
    rep.tables.push(lim);
    Ok(rep)
}

/// The symmetric-region parameter points exercised at dimension d.
pub fn ckn_points(d: f64) -> Vec<(f64, f64)> {
    if d == 2.0 {
        vec![(-0.05, 0.05), (-0.05, 0.05 / 3.0)]
    } else if d == 3.0 {
        vec![(0.0, 0.0), (0.1, 0.3)]
    } else if d.fract() == 0.0 {
        vec![(0.0, 0.0), (-0.1, 0.2)]
    } else {
        vec![(0.0, 0.0)]
    }
}

pub fn ckn_suite(s: &Settings) -> Result<SuiteReport> {
    let d = s.dimension;
    let grid = s.wide_grid()?;
    let mut rep = SuiteReport::new("ckn", d);
    let mut opt = Table::new("optimizer", &["a", "b", "p", "delta", "deficit", "rayleigh", "sharp_constant"]);
    let mut chain = Table::new("chain", &["a", "b", "index", "primal", "dual", "residual", "pass"]);
    for (k, &(a, b)) in ckn_points(d).iter().enumerate() {
        let prm = CknParams::new(a, b, d)?;
        let tag = format!("a={a},b={b}");
        let u = ckn::ckn_optimal_profile_on(&prm, grid.clone())?;
        let deficit = ckn::ckn_deficit(&u, &prm)?;
        let rq = ckn::rayleigh_quotient(&u, &prm)?;
        let c = prm.sharp_constant()?;
        opt.push(vec![a.into(), b.into(), prm.p.into(), prm.delta.into(), deficit.into(), rq.into(), c.into()]);
        rep.claims.push(Claim::within(format!("optimizer_deficit[{tag}]"), deficit, 1e-6));
        rep.claims.push(Claim::within(format!("rayleigh[{tag}]"), rel(rq, c), 1e-6));
        let mut sampler = BumpSampler::new(s.seed.wrapping_add(k as u64), 0.3);
        let (mut lo, mut gap, mut res) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut tol_used = 0.0f64;
        for i in 0..CKN_PROFILES {
            let v = modulate(&u, &sampler.next_bumps())?;
            let sq = ckn::ckn_square(&v, &prm)?;
            let tol = s.tol(ckn::CHAIN_TOL) * sq.kappa.powi(2).max(1.0);
            tol_used = tol_used.max(tol);
            lo = lo.min(sq.dual);
            gap = gap.min(sq.primal - sq.dual);
            res = res.min(sq.interpolation_slack());
            let pass = sq.dual >= -tol && sq.primal - sq.dual >= -tol;
            chain.push(vec![a.into(), b.into(), i.into(), sq.primal.into(), sq.dual.into(), sq.residual.into(), pass.into()]);
        }
        rep.claims.push(Claim::at_least(format!("dual_nonnegative[{tag}]"), lo, tol_used));
        rep.claims.push(Claim::at_least(format!("chain_ordering[{tag}]"), gap, tol_used));
        rep.claims.push(Claim::at_least(format!("interpolation[{tag}]"), res, tol_used));
    }
    rep.tables.push(opt);
    rep.tables.push(chain);
    if d.fract() == 0.0 && d >= 2.0 {
        let di = d as u32;
        let top = if di == 2 { 20.0 } else { 2.0 * d / (d - 2.0) };
        let mut sym = Table::new("symmetry", &["p", "lower", "upper", "beta"]);
        let ps: Vec<f64> = (1..100).map(|k| 2.0 + (top - 2.0) * k as f64 / 100.0).collect();
        let mut consistent = true;
        for pt in ckn::beta_curve(di, &ps)? {
            consistent &= pt.upper.is_none_or(|u| pt.lower <= u);
            sym.push(vec![pt.p.into(), pt.lower.into(), pt.upper.into(), pt.beta.into()]);
        }
        rep.tables.push(sym);
        rep.claims.push(Claim::holds("symmetry_bracket", consistent));
    }
    Ok(rep)
}
