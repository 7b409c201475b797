//! Weighted Caffarelli-Kohn-Nirenberg inequalities for radial functions.
//!
//! (∫|u|^p r^{d-1-bp} dr)^{2/p} ≤ c_{a,b} ∫|u'|² r^{d-1-2a} dr with
//! b = a - a_c + d/p, a_c = (d-2)/2. The operator L_a u = -Δu + 2a x·∇u/|x|²
//! is self-adjoint for ⟨f, g⟩ = ∫f g r^{d-1-2a} dr and is radially the
//! Laplacian in effective dimension d - 2a.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::DeficitReport;
use crate::radial::{inverse_laplacian_potential, moment, scaled_laplacian, weighted_energy, LogGrid, RadialProfile};
use crate::specfun::{ckn_radial_constant, ckn_sharp_constant};

/// Margin above the lower symmetry bound required by the symmetric-region gate.
pub const GATE_MARGIN: f64 = 1e-3;
/// Absolute tolerance on the chain, scaled by max(1, κ²).
pub const CHAIN_TOL: f64 = 1e-7;
/// Lower end of the default CKN grid; optimizers approach their power tails slowly.
pub const WIDE_T_MIN: f64 = -60.0;
pub const WIDE_T_MAX: f64 = 14.0;
pub const WIDE_NODES: usize = 8192;

/// [WIDE_T_MIN, WIDE_T_MAX] with WIDE_NODES nodes.
pub fn wide_grid() -> LogGrid {
    LogGrid::new(WIDE_T_MIN, WIDE_T_MAX, WIDE_NODES).expect("valid wide grid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CknParams {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub p: f64,
    pub q: f64,
    pub a_c: f64,
    pub delta: f64,
}

impl CknParams {
    /// Validates the admissible region in which some positive constant exists.
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && d.is_finite()) {
            return Err(Error::domain("CKN parameters must be finite"));
        }
        if !(d >= 1.0) {
            return Err(Error::domain(format!("CKN needs d >= 1, got {d}")));
        }
        let a_c = 0.5 * (d - 2.0);
        if !(a < a_c) {
            return Err(Error::domain(format!("CKN requires a < a_c = {a_c}, got a = {a}")));
        }
        let gap = b - a;
        let ok = if d > 2.0 {
            (0.0..=1.0).contains(&gap)
        } else if d == 2.0 {
            gap > 0.0 && gap <= 1.0
        } else if d == 1.0 {
            gap > 0.5 && gap <= 1.0
        } else {
            return Err(Error::domain(format!("CKN dimension in (1, 2) is not supported, got {d}")));
        };
        if !ok {
            return Err(Error::domain(format!("(a, b) = ({a}, {b}) outside the admissible region for d = {d}")));
        }
        let p = d / (gap + a_c);
        let q = p / (p - 1.0);
        let delta = (a_c + gap) / (1.0 - gap);
        Ok(CknParams { a, b, d, p, q, a_c, delta })
    }

    /// Effective dimension d - 2a of the radial operator.
    pub fn effective_dimension(&self) -> f64 {
        self.d - 2.0 * self.a
    }

    pub fn is_critical(&self) -> bool {
        self.d > 2.0 && (self.b - self.a).abs() < 1e-14
    }

    /// Errors with `ConstantUnavailable` outside the gated symmetric region.
    pub fn check_symmetric(&self) -> Result<()> {
        let unavailable = |why: String| Err(Error::ConstantUnavailable(why));
        if self.is_critical() {
            if self.a >= 0.0 {
                return Ok(());
            }
            return unavailable(format!("critical exponent with a = {} < 0", self.a));
        }
        if self.d.fract() != 0.0 || self.d < 2.0 {
            return unavailable(format!("symmetry bounds need an integer d >= 2, got {}", self.d));
        }
        if !(self.p > 2.0) {
            return unavailable("p = 2 has no extremal".into());
        }
        let bracket = symmetry_region(self.p, self.d as u32).map_err(|e| Error::ConstantUnavailable(e.to_string()))?;
        if self.a < bracket.lower + GATE_MARGIN {
            return unavailable(format!(
                "a = {} below the symmetric-region bound {} + {GATE_MARGIN}",
                self.a, bracket.lower
            ));
        }
        Ok(())
    }

    /// Best constant for (∫u^p r^{d-1-bp})^{2/p} ≤ c ∫u'² r^{d-1-2a}.
    pub fn radial_constant(&self) -> Result<f64> {
        self.check_symmetric()?;
        ckn_radial_constant(self.a, self.b, self.d)
    }

    /// Sharp constant in the full-space normalization.
    pub fn sharp_constant(&self) -> Result<f64> {
        self.check_symmetric()?;
        ckn_sharp_constant(self.a, self.b, self.d)
    }
}

/// The two sides of the inequality for one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CknTerms {
    /// ∫u'² r^{d-1-2a}.
    pub energy: f64,
    /// ∫|u|^p r^{d-1-bp}.
    pub moment: f64,
    pub constant: f64,
    pub deficit: f64,
}

fn check_dimension(u: &RadialProfile, prm: &CknParams) -> Result<()> {
    if u.dimension() != prm.d {
        return Err(Error::domain(format!(
            "profile has dimension {}, parameters have {}",
            u.dimension(),
            prm.d
        )));
    }
    Ok(())
}

pub fn ckn_terms(u: &RadialProfile, prm: &CknParams) -> Result<CknTerms> {
    check_dimension(u, prm)?;
    let constant = prm.radial_constant()?;
    let energy = weighted_energy(u, prm.d - 1.0 - 2.0 * prm.a)?;
    let moment = moment(u, prm.p, prm.d - 1.0 - prm.b * prm.p)?;
    let deficit = constant * energy - moment.powf(2.0 / prm.p);
    Ok(CknTerms { energy, moment, constant, deficit })
}

/// c_{a,b} ∫u'² r^{d-1-2a} - (∫|u|^p r^{d-1-bp})^{2/p}.
pub fn ckn_deficit(u: &RadialProfile, prm: &CknParams) -> Result<f64> {
    Ok(ckn_terms(u, prm)?.deficit)
}

/// (∫|u|^p r^{d-1-bp})^{2/p} / ∫u'² r^{d-1-2a}, rescaled to the full-space normalization.
pub fn rayleigh_quotient(u: &RadialProfile, prm: &CknParams) -> Result<f64> {
    check_dimension(u, prm)?;
    let energy = weighted_energy(u, prm.d - 1.0 - 2.0 * prm.a)?;
    let m = moment(u, prm.p, prm.d - 1.0 - prm.b * prm.p)?;
    let sphere = crate::specfun::sphere_volume(prm.d)?;
    Ok(m.powf(2.0 / prm.p) / energy * sphere.powf(2.0 / prm.p - 1.0))
}

fn require_effective(prm: &CknParams) -> Result<f64> {
    let de = prm.effective_dimension();
    if !(de > 2.0) {
        return Err(Error::domain(format!("L_a^{{-1}} needs d - 2a > 2, got {de}")));
    }
    Ok(de)
}

/// L_a^{-1} v, the radial Newton potential in dimension d - 2a.
pub fn la_inverse(v: &RadialProfile, prm: &CknParams) -> Result<RadialProfile> {
    let de = require_effective(prm)?;
    Ok(inverse_laplacian_potential(v, de)?.w)
}

/// r² L_a u = -(u_tt - (d - 2a - 2) u_t).
pub fn la_apply_scaled(u: &RadialProfile, prm: &CknParams) -> Vec<f64> {
    scaled_laplacian(u, prm.effective_dimension()).into_iter().map(|x| -x).collect()
}

/// v = κ^{2-p} r^{2a-bp} u^{p-1} with κ = (∫u^p r^{d-1-bp})^{1/p}.
pub fn dual_profile(u: &RadialProfile, prm: &CknParams) -> Result<(RadialProfile, f64)> {
    check_dimension(u, prm)?;
    if u.min_value() < 0.0 {
        return Err(Error::domain("CKN duality needs a nonnegative profile"));
    }
    let kappa = moment(u, prm.p, prm.d - 1.0 - prm.b * prm.p)?.powf(1.0 / prm.p);
    let scale = kappa.powf(2.0 - prm.p);
    let expo = 2.0 * prm.a - prm.b * prm.p;
    let v = u.map(|x| x.powf(prm.p - 1.0))?.times_r_fn(|r| scale * r.powf(expo))?;
    Ok((v, kappa))
}

/// All quantities of the completion of the square ∫|c u' - w'|² r^{d-1-2a}, w = L_a^{-1} v.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CknSquare {
    pub params: CknParams,
    pub constant: f64,
    pub kappa: f64,
    pub energy: f64,
    /// ⟨v, L_a^{-1} v⟩.
    pub coulomb: f64,
    /// (∫|v|^q r^{d-1-(2a-b)q})^{2/q}; equals κ².
    pub dual_norm_sq: f64,
    pub primal: f64,
    pub dual: f64,
    /// ∫|c u' - w'|² r^{d-1-2a} / c, equal to primal - dual.
    pub residual: f64,
    /// 2 × dual_norm_sq.
    pub interpolation_lhs: f64,
    /// c·energy + coulomb / c.
    pub interpolation_rhs: f64,
}

impl CknSquare {
    pub fn identity_gap(&self) -> f64 {
        (self.residual - (self.primal - self.dual)).abs()
    }

    pub fn interpolation_slack(&self) -> f64 {
        self.interpolation_rhs - self.interpolation_lhs
    }
}

pub fn ckn_square(u: &RadialProfile, prm: &CknParams) -> Result<CknSquare> {
    let terms = ckn_terms(u, prm)?;
    let de = require_effective(prm)?;
    let c = terms.constant;
    let (v, kappa) = dual_profile(u, prm)?;
    let pot = inverse_laplacian_potential(&v, de)?;
    let grid = u.grid();
    let gamma = prm.d - 1.0 - 2.0 * prm.a;
    let prod: Vec<f64> = v.values().iter().zip(pot.w.values()).map(|(x, y)| x * y).collect();
    let coulomb = grid.integrate_weighted(&prod, gamma)?;
    let dual_norm_sq = moment(&v, prm.q, prm.d - 1.0 - (2.0 * prm.a - prm.b) * prm.q)?.powf(2.0 / prm.q);
    let ur = u.derivative_r();
    let diff: Vec<f64> = ur.iter().zip(&pot.w_r).map(|(x, y)| (c * x - y).powi(2)).collect();
    let reference = c * c * terms.energy + coulomb;
    let residual = grid.integrate_weighted_ref(&diff, gamma, reference)? / c;
    Ok(CknSquare {
        params: *prm,
        constant: c,
        kappa,
        energy: terms.energy,
        coulomb,
        dual_norm_sq,
        primal: terms.deficit,
        dual: dual_norm_sq - coulomb / c,
        residual,
        interpolation_lhs: 2.0 * dual_norm_sq,
        interpolation_rhs: c * terms.energy + coulomb / c,
    })
}

/// 0 ≤ dual deficit ≤ primal deficit, with the square residual as witness.
pub fn ckn_square_chain(u: &RadialProfile, prm: &CknParams) -> Result<DeficitReport> {
    let sq = ckn_square(u, prm)?;
    let tol = CHAIN_TOL * sq.kappa.powi(2).max(1.0);
    Ok(DeficitReport::evaluate(sq.dual, sq.primal, sq.residual, prm.d, 1.0, None, tol))
}

/// Bracket for the symmetry-breaking curve α(p).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryBracket {
    pub p: f64,
    pub d: u32,
    /// α(p) ≥ a_c - 2√((d-1)/(p²-4)).
    pub lower: f64,
    /// α(p) ≤ a_c - ½√((d-1)(6-p)/(p-2)), when p < 2(d²-d+1)/(d²-3d+3).
    pub upper: Option<f64>,
}

impl SymmetryBracket {
    pub fn midpoint(&self) -> Option<f64> {
        self.upper.map(|u| 0.5 * (self.lower + u))
    }
}

/// Largest p for which the upper bound on α(p) is available.
pub fn upper_bound_limit(d: u32) -> f64 {
    let d = d as f64;
    2.0 * (d * d - d + 1.0) / (d * d - 3.0 * d + 3.0)
}

pub fn symmetry_region(p: f64, d: u32) -> Result<SymmetryBracket> {
    if d < 2 {
        return Err(Error::domain(format!("symmetry bounds need d >= 2, got {d}")));
    }
    let df = d as f64;
    let p_star = if d > 2 { 2.0 * df / (df - 2.0) } else { f64::INFINITY };
    if !(p > 2.0 && p < p_star) {
        return Err(Error::domain(format!("p = {p} outside (2, {p_star})")));
    }
    let a_c = 0.5 * (df - 2.0);
    let lower = a_c - 2.0 * ((df - 1.0) / (p * p - 4.0)).sqrt();
    let upper = (p < upper_bound_limit(d)).then(|| a_c - 0.5 * ((df - 1.0) * (6.0 - p) / (p - 2.0)).sqrt());
    Ok(SymmetryBracket { p, d, lower, upper })
}

/// One point of the heuristic β curve, β = α_mid - a_c + d/p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaPoint {
    pub p: f64,
    pub lower: f64,
    pub upper: Option<f64>,
    pub alpha_mid: Option<f64>,
    pub beta: Option<f64>,
    /// β/α at the midpoint.
    pub ratio: Option<f64>,
}

/// β(p) from the bracket midpoint; a reporting curve only.
pub fn beta_curve(d: u32, ps: &[f64]) -> Result<Vec<BetaPoint>> {
    ps.iter()
        .map(|&p| {
            let br = symmetry_region(p, d)?;
            let a_c = 0.5 * (d as f64 - 2.0);
            let alpha_mid = br.midpoint();
            let beta = alpha_mid.map(|a| a - a_c + d as f64 / p);
            let ratio = alpha_mid.zip(beta).map(|(a, b)| b / a);
            Ok(BetaPoint { p, lower: br.lower, upper: br.upper, alpha_mid, beta, ratio })
        })
        .collect()
}

/// (1 + r^{(2/δ)(a_c-a)})^{-δ} on the wide grid.
pub fn ckn_optimal_profile(prm: &CknParams) -> Result<RadialProfile> {
    ckn_optimal_profile_on(prm, wide_grid())
}

pub fn ckn_optimal_profile_on(prm: &CknParams, grid: LogGrid) -> Result<RadialProfile> {
    let delta = prm.delta;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("optimizer needs 0 < δ < ∞, got {delta}")));
    }
    let k = 2.0 / delta * (prm.a_c - prm.a);
    // in t = -log r the profile is (1 + e^{-kt})^{-δ}; evaluate through log1p for large |t|
    let u = RadialProfile::from_t_fn(prm.d, grid, |t| (-delta * (-k * t).exp().ln_1p()).exp())?;
    Ok(u.with_tag(format!("ckn_optimizer(a={}, b={}, d={})", prm.a, prm.b, prm.d)))
}
