//! Sobolev and HLS deficits in the radial normalization, the square
//! residual linking them, and the flow functionals J and H.
//!
//! With E = ∫u'² r^{d-1}, P = ∫u^{2*} r^{d-1} and v = u^q, q = (d+2)/(d-2):
//!
//! F[u] = s_d E - P^{(d-2)/d}
//! G[v] = s_d (∫v^{2d/(d+2)} r^{d-1})^{1+2/d} - ∫v (-Δ)^{-1}v r^{d-1}
//! ∫|a u' - ((-Δ)^{-1}v)'|² r^{d-1} = s_d P^{4/d} F[u] - G[v],  a = s_d P^{2/d}.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial::{dirichlet_energy, inverse_laplacian_potential, moment, RadialProfile};
use crate::specfun::{ConstantBundle, Dimension};

/// Absolute tolerance on deficits.
pub const DEFICIT_TOL: f64 = 1e-8;
/// Relative tolerance on algebraic identities between deficits.
pub const IDENTITY_TOL: f64 = 1e-7;

/// One evaluation of an inequality chain 0 ≤ lhs ≤ rhs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub pass: bool,
    pub dimension: f64,
    pub c_ratio: f64,
    #[serde(skip)]
    pub constants: Option<ConstantBundle>,
    #[serde(skip)]
    pub tolerance: f64,
}

impl DeficitReport {
    /// Report for 0 ≤ lhs ≤ rhs with an independently computed residual ≥ 0.
    pub fn evaluate(
        lhs: f64,
        rhs: f64,
        residual: f64,
        dimension: f64,
        c_ratio: f64,
        constants: Option<ConstantBundle>,
        tolerance: f64,
    ) -> Self {
        let pass = lhs >= -tolerance && rhs - lhs >= -tolerance && residual >= -tolerance;
        DeficitReport { lhs, rhs, residual, pass, dimension, c_ratio, constants, tolerance }
    }
}

fn dimension_of(u: &RadialProfile) -> Result<Dimension> {
    Dimension::new(u.dimension())
}

fn require_nonnegative(v: &RadialProfile, what: &str) -> Result<()> {
    let min = v.min_value();
    if min < 0.0 {
        return Err(Error::domain(format!("{what} needs a nonnegative profile, minimum is {min:e}")));
    }
    Ok(())
}

/// The terms of the Sobolev side: E, P and F.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevTerms {
    pub energy: f64,
    pub critical_moment: f64,
    pub deficit: f64,
}

pub fn sobolev_terms(u: &RadialProfile) -> Result<SobolevTerms> {
    let dim = dimension_of(u)?;
    let d = dim.value();
    let energy = dirichlet_energy(u)?;
    let critical_moment = moment(u, dim.critical_exponent(), d - 1.0)?;
    let deficit = dim.constants().radial * energy - critical_moment.powf((d - 2.0) / d);
    Ok(SobolevTerms { energy, critical_moment, deficit })
}

/// F[u] = s_d ∫u'² r^{d-1} - (∫u^{2*} r^{d-1})^{(d-2)/d}.
pub fn sobolev_deficit(u: &RadialProfile) -> Result<f64> {
    Ok(sobolev_terms(u)?.deficit)
}

/// The terms of the HLS side: J = ∫v^{2d/(d+2)} r^{d-1} and the Coulomb term ∫v (-Δ)^{-1}v r^{d-1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HlsTerms {
    pub j: f64,
    pub coulomb: f64,
    pub deficit: f64,
}

pub fn hls_terms(v: &RadialProfile) -> Result<HlsTerms> {
    let dim = dimension_of(v)?;
    require_nonnegative(v, "HLS deficit")?;
    let d = dim.value();
    let j = moment(v, 2.0 * d / (d + 2.0), d - 1.0)?;
    let pot = inverse_laplacian_potential(v, d)?;
    let prod: Vec<f64> = v.values().iter().zip(pot.w.values()).map(|(a, b)| a * b).collect();
    let coulomb = v.grid().integrate_weighted(&prod, d - 1.0)?;
    let deficit = dim.constants().radial * j.powf(1.0 + 2.0 / d) - coulomb;
    Ok(HlsTerms { j, coulomb, deficit })
}

/// G[v] = s_d (∫v^{2d/(d+2)} r^{d-1})^{1+2/d} - ∫v (-Δ)^{-1}v r^{d-1}.
pub fn hls_deficit(v: &RadialProfile) -> Result<f64> {
    Ok(hls_terms(v)?.deficit)
}

/// (J, H) with H = ∫v(-Δ)^{-1}v r^{d-1} - s_d J^{1+2/d} = -G[v].
pub fn flow_functionals(v: &RadialProfile) -> Result<(f64, f64)> {
    let t = hls_terms(v)?;
    Ok((t.j, -t.deficit))
}

/// The two sides of the completion of the square for one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareExpansion {
    /// ∫|a u' - w'|² r^{d-1} from the pointwise difference.
    pub residual: f64,
    /// s_d P^{4/d} F[u].
    pub sobolev_side: f64,
    /// G[u^q].
    pub hls_side: f64,
    pub sobolev: SobolevTerms,
}

impl SquareExpansion {
    /// |residual - (sobolev_side - hls_side)|.
    pub fn identity_gap(&self) -> f64 {
        (self.residual - (self.sobolev_side - self.hls_side)).abs()
    }
}

pub fn square_expansion(u: &RadialProfile) -> Result<SquareExpansion> {
    let dim = dimension_of(u)?;
    require_nonnegative(u, "square residual")?;
    let d = dim.value();
    let sd = dim.constants().radial;
    let sobolev = sobolev_terms(u)?;
    let p = sobolev.critical_moment;
    let a = sd * p.powf(2.0 / d);
    let v = u.map(|x| x.powf(dim.hls_power()))?;
    let hls = hls_terms(&v)?;
    let pot = inverse_laplacian_potential(&v, d)?;
    let ur = u.derivative_r();
    let diff: Vec<f64> = ur.iter().zip(&pot.w_r).map(|(x, y)| (a * x - y).powi(2)).collect();
    let reference = a * a * sobolev.energy + hls.coulomb;
    let residual = u.grid().integrate_weighted_ref(&diff, d - 1.0, reference)?;
    Ok(SquareExpansion {
        residual,
        sobolev_side: sd * p.powf(4.0 / d) * sobolev.deficit,
        hls_side: hls.deficit,
        sobolev,
    })
}

/// ∫|a u' - ((-Δ)^{-1}u^q)'|² r^{d-1} with a = s_d (∫u^{2*} r^{d-1})^{2/d}.
pub fn square_residual(u: &RadialProfile) -> Result<f64> {
    Ok(square_expansion(u)?.residual)
}

/// Checks G[u^q] ≤ c_ratio · s_d P^{4/d} F[u] at the default tolerance.
pub fn improved_chain(u: &RadialProfile, c_ratio: f64) -> Result<DeficitReport> {
    improved_chain_with_tol(u, c_ratio, DEFICIT_TOL)
}

pub fn improved_chain_with_tol(u: &RadialProfile, c_ratio: f64, tol: f64) -> Result<DeficitReport> {
    if !(c_ratio > 0.0 && c_ratio <= 1.0) {
        return Err(Error::domain(format!("c_ratio must lie in (0, 1], got {c_ratio}")));
    }
    let dim = dimension_of(u)?;
    let sq = square_expansion(u)?;
    Ok(DeficitReport::evaluate(
        sq.hls_side,
        c_ratio * sq.sobolev_side,
        sq.residual,
        dim.value(),
        c_ratio,
        Some(dim.constants()),
        tol,
    ))
}

/// G[u^q] / (s_d P^{4/d} F[u]); any admissible proportionality ratio must be at least this.
pub fn chain_ratio(u: &RadialProfile) -> Result<f64> {
    let sq = square_expansion(u)?;
    if sq.sobolev_side <= 0.0 {
        return Err(Error::Precondition("Sobolev deficit vanishes; ratio undefined".into()));
    }
    Ok(sq.hls_side / sq.sobolev_side)
}
