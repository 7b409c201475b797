//! Gamma-type special functions and the closed-form sharp constants.
//!
//! Every constant is available for a real dimension `d`; the integer-only
//! identities (sphere-volume routes) are exposed separately so they can be
//! cross-checked against the real-parameter formulas.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Lanczos series part: returns (A(x), w) for Γ(x+1) = √(2π) w^{x+½} e^{-w} A(x).
fn lanczos_series(x: f64) -> (f64, f64) {
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    (acc, x + LANCZOS_G + 0.5)
}

/// Γ(x) for any real x that is not a non-positive integer.
fn gamma_any(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        PI / ((PI * x).sin() * gamma_any(1.0 - x))
    } else if x > 20.0 {
        // upward recurrence keeps the error growth additive instead of through a large power
        let k = (x - 10.0).floor();
        let base = x - k;
        let mut acc = gamma_any(base);
        for j in 0..k as usize {
            acc *= base + j as f64;
        }
        acc
    } else {
        let (acc, w) = lanczos_series(x - 1.0);
        // split the power to postpone overflow
        let half = w.powf(0.5 * (x - 0.5));
        (2.0 * PI).sqrt() * half * (half * (-w).exp()) * acc
    }
}

/// Euler Gamma function for x > 0.
///
/// Overflows to `inf` above x ≈ 171.6, the f64 limit.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("gamma requires x > 0, got {x}")));
    }
    Ok(gamma_any(x))
}

/// log Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        (PI / (PI * x).sin()).ln() - ln_gamma_pos(1.0 - x)
    } else {
        let (acc, w) = lanczos_series(x - 1.0);
        0.5 * (2.0 * PI).ln() + (x - 0.5) * w.ln() - w + acc.ln()
    }
}

/// 1/Γ(x) for every real x (zero at the poles).
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x > 170.0 {
        return (-ln_gamma_pos(x)).exp();
    }
    1.0 / gamma_any(x)
}

/// f(q) = ∫_ℝ dt / cosh(t)^q = √π Γ(q/2) / Γ((q+1)/2).
pub fn f_integral(q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::domain(format!("f_integral requires q > 0, got {q}")));
    }
    Ok(PI.sqrt() * (ln_gamma_pos(0.5 * q) - ln_gamma_pos(0.5 * (q + 1.0))).exp())
}

/// |S^{d-1}| = 2 π^{d/2} / Γ(d/2), analytically continued to real d > 0.
pub fn sphere_volume(d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("sphere_volume requires d > 0, got {d}")));
    }
    Ok(2.0 * (0.5 * d * PI.ln() - ln_gamma_pos(0.5 * d)).exp())
}

/// Real dimension parameter `d > 2` with its derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Dimension(f64);

impl Dimension {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 2.0) || !d.is_finite() {
            return Err(Error::domain(format!("dimension must satisfy d > 2, got {d}")));
        }
        Ok(Dimension(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// 2* = 2d/(d-2).
    pub fn critical_exponent(self) -> f64 {
        2.0 * self.0 / (self.0 - 2.0)
    }

    /// q = (d+2)/(d-2), the power linking u to its HLS dual v = u^q.
    pub fn hls_power(self) -> f64 {
        (self.0 + 2.0) / (self.0 - 2.0)
    }

    /// m = (d-2)/(d+2), the fast-diffusion exponent.
    pub fn diffusion_exponent(self) -> f64 {
        (self.0 - 2.0) / (self.0 + 2.0)
    }

    /// a_c = (d-2)/2.
    pub fn critical_weight(self) -> f64 {
        0.5 * (self.0 - 2.0)
    }

    pub fn constants(self) -> ConstantBundle {
        ConstantBundle::new(self)
    }
}

/// The sharp constants attached to one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantBundle {
    pub dimension: f64,
    /// Aubin-Talenti constant S_d.
    pub sobolev: f64,
    /// Radial constant s_d = S_d |S^{d-1}|^{2/d}.
    pub radial: f64,
    /// |S^{d-1}|.
    pub sphere_volume: f64,
    /// d/(d+4) S_d, the certified lower bound for the optimal proportionality constant.
    pub c_lower: f64,
}

impl ConstantBundle {
    pub fn new(dim: Dimension) -> Self {
        let d = dim.value();
        let sobolev = sobolev_formula(d);
        ConstantBundle {
            dimension: d,
            sobolev,
            radial: sd_formula(d),
            sphere_volume: 2.0 * (0.5 * d * PI.ln() - ln_gamma_pos(0.5 * d)).exp(),
            c_lower: d / (d + 4.0) * sobolev,
        }
    }
}

fn sobolev_formula(d: f64) -> f64 {
    let log_ratio = ln_gamma_pos(d) - ln_gamma_pos(0.5 * d);
    (2.0 / d * log_ratio).exp() / (PI * d * (d - 2.0))
}

fn sd_formula(d: f64) -> f64 {
    let log_ratio = ln_gamma_pos(0.5 * (d + 1.0)) - 0.5 * PI.ln() - ln_gamma_pos(0.5 * d);
    4.0 / (d * (d - 2.0)) * (2.0 / d * log_ratio).exp()
}

fn require_above_two(d: f64, what: &str) -> Result<()> {
    if !(d > 2.0) || !d.is_finite() {
        return Err(Error::domain(format!("{what} requires d > 2, got {d}")));
    }
    Ok(())
}

/// S_d = (π d (d-2))^{-1} (Γ(d)/Γ(d/2))^{2/d}.
pub fn sobolev_constant(d: f64) -> Result<f64> {
    require_above_two(d, "sobolev_constant")?;
    Ok(sobolev_formula(d))
}

/// S_d = 4/(d(d-2)) |S^d|^{-2/d}, the route through the stereographic projection.
pub fn sobolev_constant_sphere_route(d: f64) -> Result<f64> {
    require_above_two(d, "sobolev_constant_sphere_route")?;
    let vol = sphere_volume(d + 1.0)?;
    Ok(4.0 / (d * (d - 2.0)) * vol.powf(-2.0 / d))
}

/// S_d = s_d |S^{d-1}|^{-2/d}; equal to the Γ-formula through the duplication formula.
pub fn sobolev_constant_radial_route(d: f64) -> Result<f64> {
    require_above_two(d, "sobolev_constant_radial_route")?;
    Ok(sd_formula(d) * sphere_volume(d)?.powf(-2.0 / d))
}

/// s_d = 4/(d(d-2)) (Γ((d+1)/2) / (√π Γ(d/2)))^{2/d}.
pub fn sd_radial_constant(d: f64) -> Result<f64> {
    require_above_two(d, "sd_radial_constant")?;
    Ok(sd_formula(d))
}

/// s_d = I_p^{1-2/d} / (J_2 + ¼(d-2)² I_2), the one-dimensional Gagliardo-Nirenberg route.
pub fn sd_radial_constant_gn_route(d: f64) -> Result<f64> {
    require_above_two(d, "sd_radial_constant_gn_route")?;
    let p = 2.0 * d / (d - 2.0);
    let i2 = f_integral(4.0 / (p - 2.0))?;
    let ip = 4.0 * i2 / (p + 2.0);
    let j2 = 4.0 * i2 / ((p + 2.0) * (p - 2.0));
    Ok(ip.powf(1.0 - 2.0 / d) / (j2 + 0.25 * (d - 2.0).powi(2) * i2))
}

/// Exponent p of the CKN inequality, from b = a - a_c + d/p.
pub fn ckn_exponent(a: f64, b: f64, d: f64) -> Result<f64> {
    let ac = 0.5 * (d - 2.0);
    if !(a < ac) {
        return Err(Error::domain(format!("CKN requires a < a_c = {ac}, got a = {a}")));
    }
    let denom = b - a + ac;
    if !(denom > 0.0) {
        return Err(Error::domain(format!("CKN exponent undefined for b - a + a_c = {denom}")));
    }
    let p = d / denom;
    let p_max = if d > 2.0 { 2.0 * d / (d - 2.0) } else { f64::INFINITY };
    if !(p > 2.0) || p > p_max * (1.0 + 1e-12) {
        return Err(Error::domain(format!("CKN exponent p = {p} outside (2, 2*]")));
    }
    Ok(p)
}

/// Radial CKN constant: the sharp constant with the angular factor |S^{d-1}| removed,
/// i.e. the best c in (∫u^p r^{d-1-bp} dr)^{2/p} ≤ c ∫|u'|² r^{d-1-2a} dr.
pub fn ckn_radial_constant(a: f64, b: f64, d: f64) -> Result<f64> {
    let p = ckn_exponent(a, b, d)?;
    let ac = 0.5 * (d - 2.0);
    let lam = (a - ac).powi(2);
    if lam < 1e-300 {
        return Err(Error::domain("CKN constant degenerates as a -> a_c"));
    }
    let s = 2.0 / (p - 2.0);
    let gamma_bracket = (ln_gamma_pos(s + 0.5) - 0.5 * PI.ln() - ln_gamma_pos(s)).exp();
    Ok((lam * (p - 2.0).powi(2) / (p + 2.0)).powf((p - 2.0) / (2.0 * p))
        * ((p + 2.0) / (2.0 * p * lam))
        * (4.0 / (p + 2.0)).powf((6.0 - p) / (2.0 * p))
        * gamma_bracket.powf((p - 2.0) / p))
}

/// Sharp CKN constant C_{a,b} in the symmetric region (full-space normalization).
///
/// The angular factor enters as |S^{d-1}|^{-(p-2)/p}; with a = b = 0 this is S_d.
pub fn ckn_sharp_constant(a: f64, b: f64, d: f64) -> Result<f64> {
    let p = ckn_exponent(a, b, d)?;
    Ok(ckn_radial_constant(a, b, d)? * sphere_volume(d)?.powf(-(p - 2.0) / p))
}
