//! The two-dimensional endpoint: Onofri and logarithmic HLS deficits for
//! radial functions, their chain, the limit d → 2⁺ of the Sobolev/HLS
//! quantities, and the μ_α family.
//!
//! Full-space normalization is used throughout: ∫_{ℝ²} g dx = 2π ∫₀^∞ g r dr,
//! μ_α = (1+α)/π · r^{2α} (1 + r^{2(1+α)})^{-2}, and (-Δ)^{-1} is the
//! logarithmic Newton potential -(1/2π) log|x| * g.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{sobolev_deficit, DeficitReport};
use crate::radial::{
    aubin_talenti_on, inverse_laplacian_potential, weighted_energy, LogGrid, RadialProfile,
};
use crate::specfun::{ln_gamma, sd_radial_constant};

const TWO_PI: f64 = 2.0 * PI;

/// Tolerance on the Onofri and log-HLS chains.
pub const CHAIN_TOL: f64 = 1e-7;

/// log μ_α at radius r = e^{-t}.
pub fn log_mu_alpha(alpha: f64, t: f64) -> f64 {
    // log(1 + r^{2(1+α)}) with r^{2(1+α)} = e^{-2(1+α)t}
    let x = -2.0 * (1.0 + alpha) * t;
    let log1p = if x > 30.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    ((1.0 + alpha) / PI).ln() - 2.0 * alpha * t - 2.0 * log1p
}

pub fn mu_alpha(alpha: f64, r: f64) -> f64 {
    log_mu_alpha(alpha, -r.ln()).exp()
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > -1.0 && alpha <= 0.0) {
        return Err(Error::domain(format!("alpha must lie in (-1, 0], got {alpha}")));
    }
    Ok(())
}

/// A radial function f on ℝ² together with the weight μ_α and Z = ∫e^f dμ_α.
#[derive(Debug, Clone, PartialEq)]
pub struct OnofriProfile {
    f: RadialProfile,
    alpha: f64,
    mass: f64,
}

impl OnofriProfile {
    pub fn new(f: RadialProfile, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let f = if f.dimension() == 2.0 { f } else { f.with_dimension(2.0)? };
        let g = f.grid();
        let dens: Vec<f64> = (0..g.len())
            .map(|i| (f.values()[i] + log_mu_alpha(alpha, g.t(i))).exp())
            .collect();
        let mass = TWO_PI
            * g.integrate_weighted(&dens, 1.0).map_err(|e| Error::domain(format!("divergent mass: {e}")))?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("mass must be positive and finite, got {mass}")));
        }
        Ok(OnofriProfile { f, alpha, mass })
    }

    /// Standard case α = 0.
    pub fn standard(f: RadialProfile) -> Result<Self> {
        Self::new(f, 0.0)
    }

    pub fn f(&self) -> &RadialProfile {
        &self.f
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// ∫ e^f dμ_α; for α = 0 this is M = ∫₀^∞ e^f (1+r²)^{-2} 2r dr.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    fn grid(&self) -> &LogGrid {
        self.f.grid()
    }

    /// e^f μ_α at every node.
    fn density(&self) -> Vec<f64> {
        let g = self.grid();
        (0..g.len()).map(|i| (self.f.values()[i] + log_mu_alpha(self.alpha, g.t(i))).exp()).collect()
    }

    fn mu(&self) -> Vec<f64> {
        let g = self.grid();
        (0..g.len()).map(|i| log_mu_alpha(self.alpha, g.t(i)).exp()).collect()
    }
}

/// 2π ∫ a K[b] r dr with K the logarithmic potential.
fn coulomb(a: &[f64], b: &RadialProfile) -> Result<f64> {
    let pot = inverse_laplacian_potential(b, 2.0)?;
    let prod: Vec<f64> = a.iter().zip(pot.w.values()).map(|(x, y)| x * y).collect();
    Ok(TWO_PI * b.grid().integrate_weighted(&prod, 1.0)?)
}

/// 1/(8(1+α)) ∫f'² r dr - log Z + ∫ f dμ_α.
///
/// For α = 0 this is (1/8)∫f'² r dr + ∫ f 2r(1+r²)^{-2} dr - log M.
pub fn onofri_deficit(p: &OnofriProfile) -> Result<f64> {
    let energy = weighted_energy(&p.f, 1.0)?;
    let mu = p.mu();
    let fm: Vec<f64> = p.f.values().iter().zip(&mu).map(|(f, m)| f * m).collect();
    let mean = TWO_PI * p.grid().integrate_weighted(&fm, 1.0)?;
    Ok(energy / (8.0 * (1.0 + p.alpha)) + mean - p.mass.ln())
}

/// ∫g log(g/M) - (4π/M)∫g(-Δ)^{-1}g + M(1 + log π) for g = e^f μ.
pub fn loghls_deficit(p: &OnofriProfile) -> Result<f64> {
    if p.alpha != 0.0 {
        return Err(Error::domain("the logarithmic HLS deficit is defined for alpha = 0"));
    }
    let g = p.density();
    let grid = p.grid();
    let m = p.mass;
    // log g = f + log μ, evaluated without forming g first
    let ent: Vec<f64> = (0..grid.len())
        .map(|i| g[i] * (p.f.values()[i] + log_mu_alpha(0.0, grid.t(i)) - m.ln()))
        .collect();
    let entropy = TWO_PI * grid.integrate_weighted(&ent, 1.0)?;
    let gp = RadialProfile::new(2.0, grid.clone(), g.clone())?;
    let c = coulomb(&g, &gp)?;
    Ok(entropy - 4.0 * PI / m * c + m * (1.0 + PI.ln()))
}

/// 0 ≤ log-HLS deficit ≤ M · Onofri deficit.
pub fn onofri_chain(p: &OnofriProfile) -> Result<DeficitReport> {
    let lhs = loghls_deficit(p)?;
    let rhs = p.mass * onofri_deficit(p)?;
    Ok(DeficitReport::evaluate(lhs, rhs, rhs - lhs, 2.0, 1.0, None, CHAIN_TOL))
}

/// The μ_α chain with v = e^u μ_α / ∫e^u dμ_α:
///
/// 0 ≤ ∫v log(v/μ_α) - 4π(1+α)∫(v-μ_α)(-Δ)^{-1}(v-μ_α) ≤ Onofri-type deficit of u.
pub fn mu_alpha_deficit(p: &OnofriProfile) -> Result<DeficitReport> {
    let grid = p.grid();
    let z = p.mass;
    let v: Vec<f64> = p.density().iter().map(|x| x / z).collect();
    let mu = p.mu();
    let ent: Vec<f64> = (0..grid.len()).map(|i| v[i] * (p.f.values()[i] - z.ln())).collect();
    let entropy = TWO_PI * grid.integrate_weighted(&ent, 1.0)?;
    let h: Vec<f64> = v.iter().zip(&mu).map(|(a, b)| a - b).collect();
    // potentials of the two probability densities separately: h alone may be pure rounding
    let wv = inverse_laplacian_potential(&RadialProfile::new(2.0, grid.clone(), v.clone())?, 2.0)?;
    let wm = inverse_laplacian_potential(&RadialProfile::new(2.0, grid.clone(), mu.clone())?, 2.0)?;
    let prod: Vec<f64> = (0..grid.len()).map(|i| h[i] * (wv.w.values()[i] - wm.w.values()[i])).collect();
    let c = TWO_PI * grid.integrate_weighted_ref(&prod, 1.0, 1.0)?;
    let lhs = entropy - 4.0 * PI * (1.0 + p.alpha) * c;
    let rhs = onofri_deficit(p)?;
    Ok(DeficitReport::evaluate(lhs, rhs, rhs - lhs, 2.0, 1.0, None, CHAIN_TOL))
}

/// One row of the d → 2⁺ convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimLimitRow {
    pub eps: f64,
    /// F[u*(1 + ε f/(2d))]/ε in dimension d = 2 + ε.
    pub sobolev_scaled: f64,
    /// ½ × Onofri deficit of f.
    pub sobolev_limit: f64,
    pub sobolev_error: f64,
    /// h(2+ε)/ε for v = e^f (1+r²)^{-2}.
    pub hls_scaled: f64,
    pub hls_limit: f64,
    pub hls_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimLimitTable {
    pub rows: Vec<DimLimitRow>,
    /// Error reduction per halving of ε between consecutive rows, Sobolev side.
    pub sobolev_factors: Vec<f64>,
    pub hls_factors: Vec<f64>,
}

pub const DEFAULT_EPS: [f64; 3] = [0.1, 0.05, 0.01];

/// (e_i/e_{i+1})^{log 2 / log(ε_i/ε_{i+1})}: 2 for exactly linear convergence.
pub fn halving_factors(eps: &[f64], errors: &[f64]) -> Vec<f64> {
    eps.windows(2)
        .zip(errors.windows(2))
        .map(|(e, r)| (r[0] / r[1]).powf(LN_2 / (e[0] / e[1]).ln()))
        .collect()
}

/// (∫v^{2d/(d+2)} r^{d-1})^{1+2/d} - (1/s_d)∫v k_d[v] r^{d-1}.
fn h_of_d(v: &RadialProfile, d: f64) -> Result<f64> {
    let vd = v.with_dimension(d)?;
    let j = crate::radial::moment(&vd, 2.0 * d / (d + 2.0), d - 1.0)?;
    let pot = inverse_laplacian_potential(&vd, d)?;
    let prod: Vec<f64> = vd.values().iter().zip(pot.w.values()).map(|(a, b)| a * b).collect();
    let cross = vd.grid().integrate_weighted(&prod, d - 1.0)?;
    Ok(j.powf(1.0 + 2.0 / d) - cross / sd_radial_constant(d)?)
}

/// ½A ∫v log(v/A) r dr - ∫v k₂[v] r dr - ½(log 2 - 1)A², A = ∫v r dr.
fn h_limit(v: &RadialProfile) -> Result<f64> {
    let g = v.grid();
    let a = g.integrate_weighted(v.values(), 1.0)?;
    let ent: Vec<f64> = v.values().iter().map(|x| if *x > 0.0 { x * (x / a).ln() } else { 0.0 }).collect();
    let entropy = g.integrate_weighted(&ent, 1.0)?;
    let v2 = v.with_dimension(2.0)?;
    let pot = inverse_laplacian_potential(&v2, 2.0)?;
    let prod: Vec<f64> = v.values().iter().zip(pot.w.values()).map(|(x, y)| x * y).collect();
    let cross = g.integrate_weighted(&prod, 1.0)?;
    Ok(0.5 * a * entropy - cross - 0.5 * (LN_2 - 1.0) * a * a)
}

/// Evaluates the Sobolev and HLS quantities at d = 2 + ε against their limits.
pub fn dim_limit_check(f: &RadialProfile, eps_list: &[f64]) -> Result<DimLimitTable> {
    if eps_list.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
        return Err(Error::domain("every ε must lie in (0, 1)"));
    }
    let grid = f.grid().clone();
    let onofri = onofri_deficit(&OnofriProfile::standard(f.clone())?)?;
    let v = RadialProfile::new(
        2.0,
        grid.clone(),
        (0..grid.len())
            .map(|i| (f.values()[i] - 2.0 * (grid.r(i) * grid.r(i)).ln_1p()).exp())
            .collect(),
    )?;
    let hls_limit = h_limit(&v)?;
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let d = 2.0 + eps;
        let ustar = aubin_talenti_on(grid.clone(), d, 1.0)?;
        let c = eps / (2.0 * d);
        let u = ustar.zip_with(&f.with_dimension(d)?, |a, b| a * (1.0 + c * b))?;
        let sobolev_scaled = sobolev_deficit(&u)? / eps;
        let hls_scaled = h_of_d(&v, d)? / eps;
        rows.push(DimLimitRow {
            eps,
            sobolev_scaled,
            sobolev_limit: 0.5 * onofri,
            sobolev_error: (sobolev_scaled - 0.5 * onofri).abs(),
            hls_scaled,
            hls_limit,
            hls_error: (hls_scaled - hls_limit).abs(),
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.sobolev_error).collect();
    let he: Vec<f64> = rows.iter().map(|r| r.hls_error).collect();
    Ok(DimLimitTable { sobolev_factors: halving_factors(&eps, &se), hls_factors: halving_factors(&eps, &he), rows })
}

/// Parameters of the CKN family approaching the μ_α Onofri inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsilonFamily {
    pub alpha: f64,
    pub eps: f64,
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

impl EpsilonFamily {
    pub fn new(alpha: f64, eps: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::domain(format!("ε must lie in (0, 1), got {eps}")));
        }
        let a = -eps * (alpha + 1.0) / (1.0 - eps);
        Ok(EpsilonFamily { alpha, eps, a, b: a + eps, p: 2.0 / eps })
    }

    fn gamma_ratio(&self) -> Result<f64> {
        let s = 1.0 / (1.0 - self.eps);
        Ok((2.0 * ln_gamma(s)? - ln_gamma(2.0 * s)?).exp())
    }

    /// κ_ε = π/(α+1) · Γ(1/(1-ε))² / Γ(2/(1-ε)).
    pub fn kappa_closed(&self) -> Result<f64> {
        Ok(PI / (self.alpha + 1.0) * self.gamma_ratio()?)
    }

    /// λ_ε = 4π|a_ε|/(1-ε) · Γ(1/(1-ε))² / Γ(2/(1-ε)).
    pub fn lambda_closed(&self) -> Result<f64> {
        Ok(4.0 * PI * self.a.abs() / (1.0 - self.eps) * self.gamma_ratio()?)
    }

    /// u_ε(r) = (1 + r^{2(α+1)})^{-ε/(1-ε)}.
    pub fn profile(&self, grid: LogGrid) -> Result<RadialProfile> {
        let k = 2.0 * (self.alpha + 1.0);
        let e = self.eps / (1.0 - self.eps);
        RadialProfile::from_t_fn(2.0, grid, |t| {
            let x = -k * t;
            let l = if x > 30.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
            (-e * l).exp()
        })
    }

    /// κ_ε = ∫_{ℝ²} (u_ε |x|^{-b_ε})^{p_ε} dx by quadrature.
    pub fn kappa_quadrature(&self, grid: LogGrid) -> Result<f64> {
        let u = self.profile(grid)?;
        Ok(TWO_PI * crate::radial::moment(&u, self.p, 1.0 - self.b * self.p)?)
    }

    /// λ_ε = ∫_{ℝ²} |∇u_ε|² |x|^{-2a_ε} dx by quadrature.
    pub fn lambda_quadrature(&self, grid: LogGrid) -> Result<f64> {
        let u = self.profile(grid)?;
        Ok(TWO_PI * weighted_energy(&u, 1.0 - 2.0 * self.a)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mu_alpha_is_a_probability_density() {
        let grid = LogGrid::new(-30.0, 40.0, 4096).unwrap();
        for alpha in [0.0, -0.25, -0.5] {
            let dens: Vec<f64> = (0..grid.len()).map(|i| log_mu_alpha(alpha, grid.t(i)).exp()).collect();
            let total = TWO_PI * grid.integrate_weighted(&dens, 1.0).unwrap();
            assert!((total - 1.0).abs() < 1e-10, "alpha = {alpha}: {total}");
        }
        assert!((mu_alpha(0.0, 1.0) - 1.0 / (4.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn alpha_out_of_range() {
        let f = RadialProfile::from_fn(2.0, LogGrid::default(), |_| 0.0).unwrap();
        assert!(matches!(OnofriProfile::new(f.clone(), 0.5), Err(Error::Domain(_))));
        assert!(matches!(OnofriProfile::new(f, -1.0), Err(Error::Domain(_))));
    }
}
