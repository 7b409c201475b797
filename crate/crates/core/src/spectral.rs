//! Linearization around the Aubin-Talenti function.
//!
//! Axisymmetric eigenmodes f_k = u* C_k^{((d-1)/2)}(z), z = (r²-1)/(r²+1), solve
//! -Δf_k = μ_k f_k (1+r²)^{-2} with μ_k = 4k(k+d-1) + d(d-2). All inner products
//! carry the weight (1+r²)^{-2} r^{d-1}.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial::{aubin_talenti_on, dirichlet_energy, inverse_laplacian_radial, scaled_laplacian, LogGrid, RadialProfile};
use crate::specfun::Dimension;

/// (λ_k, μ_k) = (k(k+d-1), 4λ_k + d(d-2)).
pub fn eigenvalues(k: u32, dim: Dimension) -> (f64, f64) {
    let d = dim.value();
    let k = k as f64;
    let lambda = k * (k + d - 1.0);
    (lambda, 4.0 * lambda + d * (d - 2.0))
}

/// Gegenbauer polynomial C_n^{(α)}(z) by the three-term recurrence.
pub fn gegenbauer(n: u32, alpha: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * alpha * z;
    for m in 2..=n {
        let m = m as f64;
        let next = (2.0 * z * (m + alpha - 1.0) * cur - (m + 2.0 * alpha - 2.0) * prev) / m;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMode {
    pub k: u32,
    pub dimension: f64,
    pub lambda_k: f64,
    pub mu_k: f64,
    /// Unit norm in the weighted L² space.
    pub profile: RadialProfile,
}

fn weight(r: f64) -> f64 {
    (1.0 + r * r).powi(-2)
}

/// ∫ f g (1+r²)^{-2} r^{d-1} dr.
pub fn weighted_inner(f: &RadialProfile, g: &RadialProfile) -> Result<f64> {
    f.check_same_grid(g)?;
    let grid = f.grid();
    let prod: Vec<f64> = (0..grid.len()).map(|i| f.values()[i] * g.values()[i] * weight(grid.r(i))).collect();
    grid.integrate_weighted(&prod, f.dimension() - 1.0)
}

pub fn weighted_norm_sq(f: &RadialProfile) -> Result<f64> {
    weighted_inner(f, f)
}

pub fn mode_profile(k: u32, dim: Dimension) -> Result<SpectralMode> {
    mode_profile_on(k, dim, LogGrid::default())
}

pub fn mode_profile_on(k: u32, dim: Dimension, grid: LogGrid) -> Result<SpectralMode> {
    let d = dim.value();
    let alpha = 0.5 * (d - 1.0);
    let ustar = aubin_talenti_on(grid, d, 1.0)?;
    let g = ustar.grid().clone();
    let raw: Vec<f64> = ustar
        .values()
        .iter()
        .enumerate()
        .map(|(i, u)| u * gegenbauer(k, alpha, -(g.t(i)).tanh()))
        .collect();
    let raw = RadialProfile::new(d, g, raw)?;
    let norm = weighted_norm_sq(&raw)?.sqrt();
    let profile = raw.map(|x| x / norm)?.with_tag(format!("mode({k})"));
    let (lambda_k, mu_k) = eigenvalues(k, dim);
    Ok(SpectralMode { k, dimension: d, lambda_k, mu_k, profile })
}

/// sup |r²(−Δf_k − μ_k f_k (1+r²)^{-2})| relative to sup |μ_k r² f_k (1+r²)^{-2}|.
pub fn eigen_residual(mode: &SpectralMode) -> f64 {
    let f = &mode.profile;
    let grid = f.grid();
    let lap = scaled_laplacian(f, mode.dimension);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..grid.len() {
        let r = grid.r(i);
        let rhs = mode.mu_k * f.values()[i] * r * r * weight(r);
        worst = worst.max((-lap[i] - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

fn dim_of(f: &RadialProfile) -> Result<Dimension> {
    Dimension::new(f.dimension())
}

/// F[f] = ∫|f'|² r^{d-1} - d(d+2) ∫f²(1+r²)^{-2} r^{d-1}.
pub fn form_f(f: &RadialProfile) -> Result<f64> {
    let d = dim_of(f)?.value();
    Ok(dirichlet_energy(f)? - d * (d + 2.0) * weighted_norm_sq(f)?)
}

/// ∫ h (-Δ)^{-1} h r^{d-1} with h = g (1+r²)^{-2}.
pub fn weighted_coulomb(g: &RadialProfile) -> Result<f64> {
    let d = g.dimension();
    let h = g.times_r_fn(weight)?;
    let w = inverse_laplacian_radial(&h, d)?;
    let prod: Vec<f64> = h.values().iter().zip(w.values()).map(|(a, b)| a * b).collect();
    g.grid().integrate_weighted(&prod, d - 1.0)
}

/// G[f] = ∫f²(1+r²)^{-2} r^{d-1} / (d(d+2)) - ∫ h (-Δ)^{-1} h r^{d-1}, h = f(1+r²)^{-2}.
pub fn form_g(f: &RadialProfile) -> Result<f64> {
    let d = dim_of(f)?.value();
    Ok(weighted_norm_sq(f)? / (d * (d + 2.0)) - weighted_coulomb(f)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRatio {
    pub k: u32,
    pub lambda_k: f64,
    pub mu_k: f64,
    pub form_f: f64,
    pub form_g: f64,
    pub ratio: f64,
    /// μ₁ μ_k.
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCheck {
    pub dimension: f64,
    pub modes: Vec<ModeRatio>,
    /// Smallest F/G over the modes, attained at k = 2.
    pub minimum: f64,
}

pub fn mode_ratio(mode: &SpectralMode) -> Result<ModeRatio> {
    let dim = dim_of(&mode.profile)?;
    let ff = form_f(&mode.profile)?;
    let fg = form_g(&mode.profile)?;
    let (_, mu1) = eigenvalues(1, dim);
    Ok(ModeRatio {
        k: mode.k,
        lambda_k: mode.lambda_k,
        mu_k: mode.mu_k,
        form_f: ff,
        form_g: fg,
        ratio: ff / fg,
        predicted: mu1 * mode.mu_k,
    })
}

/// F[f_k]/G[f_k] for k = 2..=6.
pub fn ratio_bound_check(dim: Dimension) -> Result<RatioCheck> {
    ratio_bound_check_on(dim, LogGrid::default())
}

pub fn ratio_bound_check_on(dim: Dimension, grid: LogGrid) -> Result<RatioCheck> {
    let modes = (2..=6)
        .map(|k| mode_ratio(&mode_profile_on(k, dim, grid.clone())?))
        .collect::<Result<Vec<_>>>()?;
    let minimum = modes.iter().map(|m| m.ratio).fold(f64::INFINITY, f64::min);
    Ok(RatioCheck { dimension: dim.value(), modes, minimum })
}

/// Orthogonality tolerance for the Poincaré gate, relative to the weighted norm.
pub const ORTHOGONALITY_TOL: f64 = 1e-8;

/// ∫|f'|² r^{d-1} ≥ (d+2)(d+4) ∫f²(1+r²)^{-2} r^{d-1} for f orthogonal to the k = 0, 1 modes.
pub fn poincare_check(f: &RadialProfile) -> Result<bool> {
    let dim = dim_of(f)?;
    let d = dim.value();
    let norm = weighted_norm_sq(f)?.sqrt();
    for k in 0..=1 {
        let mode = mode_profile_on(k, dim, f.grid().clone())?;
        let proj = weighted_inner(f, &mode.profile)?;
        if proj.abs() > ORTHOGONALITY_TOL * norm.max(1.0) {
            return Err(Error::Precondition(format!(
                "profile has weighted projection {proj:e} on the k = {k} mode"
            )));
        }
    }
    let lhs = dirichlet_energy(f)?;
    let rhs = (d + 2.0) * (d + 4.0) * norm * norm;
    Ok(lhs - rhs >= -1e-8)
}

/// d/(d+4) · S_d.
pub fn cd_lower_bound(dim: Dimension) -> f64 {
    dim.constants().c_lower
}

/// (F[f₂]/G[f₂]) / (d²(d+2)²); equals (d+4)/d.
pub fn linearized_ratio(dim: Dimension) -> Result<f64> {
    let d = dim.value();
    let m = mode_ratio(&mode_profile(2, dim)?)?;
    Ok(m.ratio / (d * d * (d + 2.0) * (d + 2.0)))
}

/// W/((d+2)(d+4)) - ∫h(-Δ)^{-1}h, nonnegative on the span of modes k ≥ 2.
pub fn duality_gap(g: &RadialProfile) -> Result<f64> {
    let d = dim_of(g)?.value();
    Ok(weighted_norm_sq(g)? / ((d + 2.0) * (d + 4.0)) - weighted_coulomb(g)?)
}
