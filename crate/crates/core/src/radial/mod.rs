//! Radial functions on a uniform log-radius grid and their calculus.
//!
//! A radial function u(r) is sampled at t_i = -log r_i on a uniform grid, so
//! index 0 is the largest radius. Integrals ∫₀^∞ g(r) dr become ∫_ℝ g(e^{-t}) e^{-t} dt
//! and derivatives follow from u_r = -u_t / r.

mod quadrature;
pub(crate) mod stencil;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use quadrature::{cumulative_from_inner, cumulative_from_outer, integrate_line, integrate_line_ref};

/// Uniform grid in t = -log r.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogGrid {
    t_min: f64,
    h: f64,
    n: usize,
}

impl LogGrid {
    pub const DEFAULT_HALF_WIDTH: f64 = 14.0;
    pub const DEFAULT_SIZE: usize = 2048;
    pub const MIN_SIZE: usize = 64;

    pub fn new(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t_min.is_finite() && t_max.is_finite() && t_max > t_min) {
            return Err(Error::domain(format!("invalid grid window [{t_min}, {t_max}]")));
        }
        if n < Self::MIN_SIZE {
            return Err(Error::domain(format!("grid needs at least {} nodes, got {n}", Self::MIN_SIZE)));
        }
        Ok(LogGrid { t_min, h: (t_max - t_min) / (n - 1) as f64, n })
    }

    /// Grid on [-half_width, half_width].
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_min + self.h * (self.n - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        self.t_min + self.h * i as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        (-self.t(i)).exp()
    }

    pub fn t_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.t(i)).collect()
    }

    pub fn r_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.r(i)).collect()
    }

    /// Same window with twice the resolution (2n - 1 nodes, old nodes kept).
    pub fn refined(&self) -> LogGrid {
        LogGrid { t_min: self.t_min, h: 0.5 * self.h, n: 2 * self.n - 1 }
    }

    /// ∫₀^∞ g(r) r^γ dr for samples g(r_i).
    pub fn integrate_weighted(&self, g: &[f64], gamma: f64) -> Result<f64> {
        let f: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, v)| v * (-(gamma + 1.0) * self.t(i)).exp())
            .collect();
        integrate_line(&f, self.h)
    }

    /// As `integrate_weighted`, judging tails against `reference` as well.
    pub fn integrate_weighted_ref(&self, g: &[f64], gamma: f64, reference: f64) -> Result<f64> {
        let f: Vec<f64> = g
            .iter()
            .enumerate()
            .map(|(i, v)| v * (-(gamma + 1.0) * self.t(i)).exp())
            .collect();
        integrate_line_ref(&f, self.h, reference)
    }

    /// ∫_ℝ f(t) dt for samples f(t_i).
    pub fn integrate_t(&self, f: &[f64]) -> Result<f64> {
        integrate_line(f, self.h)
    }

    /// Value at an arbitrary t by 8-point local Lagrange interpolation;
    /// outside the window the end value is returned.
    pub fn interpolate(&self, values: &[f64], t: f64) -> f64 {
        let n = self.n;
        let x = (t - self.t_min) / self.h;
        if x <= 0.0 {
            return values[0];
        }
        if x >= (n - 1) as f64 {
            return values[n - 1];
        }
        let width = stencil::INT_WIDTH;
        let start = (x.floor() as usize).saturating_sub(width / 2 - 1).min(n - width);
        let xs: Vec<f64> = (0..width).map(|k| (start + k) as f64).collect();
        let c = stencil::fornberg(x, &xs, 0);
        (0..width).map(|k| c[0][k] * values[start + k]).sum()
    }

    /// First or second t-derivative of sampled data.
    pub fn diff_t(&self, values: &[f64], order: usize) -> Vec<f64> {
        stencil::derivative(values, self.h, order)
    }
}

impl Default for LogGrid {
    fn default() -> Self {
        LogGrid::symmetric(Self::DEFAULT_HALF_WIDTH, Self::DEFAULT_SIZE).expect("default grid is valid")
    }
}

/// A radial function u(|x|) in dimension d, sampled on a log grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    d: f64,
    grid: LogGrid,
    values: Vec<f64>,
    tag: Option<String>,
}

impl RadialProfile {
    pub fn new(d: f64, grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::domain(format!("profile dimension must be positive, got {d}")));
        }
        if values.len() != grid.len() {
            return Err(Error::domain(format!(
                "profile has {} values for {} grid nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("profile value at node {i} is not finite")));
        }
        Ok(RadialProfile { d, grid, values, tag: None })
    }

    /// Samples u(r) at every node.
    pub fn from_fn(d: f64, grid: LogGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.r(i))).collect();
        Self::new(d, grid, values)
    }

    /// Samples a function of t = -log r at every node.
    pub fn from_t_fn(d: f64, grid: LogGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.t(i))).collect();
        Self::new(d, grid, values)
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn tag(&self) -> Option<&str> {
        self.tag.as_deref()
    }

    pub fn dimension(&self) -> f64 {
        self.d
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise image under f; the analytic tag is dropped.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<RadialProfile> {
        Self::new(self.d, self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination with another profile on the same grid.
    pub fn zip_with(&self, other: &RadialProfile, f: impl Fn(f64, f64) -> f64) -> Result<RadialProfile> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.d, self.grid.clone(), values)
    }

    /// Pointwise product with a function of r.
    pub fn times_r_fn(&self, f: impl Fn(f64) -> f64) -> Result<RadialProfile> {
        let values = self.values.iter().enumerate().map(|(i, v)| v * f(self.grid.r(i))).collect();
        Self::new(self.d, self.grid.clone(), values)
    }

    /// Same samples reinterpreted in another dimension.
    pub fn with_dimension(&self, d: f64) -> Result<RadialProfile> {
        Self::new(d, self.grid.clone(), self.values.clone())
    }

    pub(crate) fn check_same_grid(&self, other: &RadialProfile) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::domain("profiles live on different grids"));
        }
        Ok(())
    }

    /// u_t at every node.
    pub fn derivative_t(&self) -> Vec<f64> {
        self.grid.diff_t(&self.values, 1)
    }

    /// u_r = -u_t / r at every node.
    pub fn derivative_r(&self) -> Vec<f64> {
        self.derivative_t()
            .iter()
            .enumerate()
            .map(|(i, ut)| -ut * self.grid.t(i).exp())
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Checks that energy and critical moment are finite under the tail estimate.
    pub fn check_finite_energy(&self) -> Result<()> {
        dirichlet_energy(self)?;
        if self.d > 2.0 {
            moment(self, 2.0 * self.d / (self.d - 2.0), self.d - 1.0)?;
        }
        Ok(())
    }

    /// Writes the profile as CSV with columns t, r, value.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        w.write_record(["t", "r", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([
                format!("{:.16e}", self.grid.t(i)),
                format!("{:.16e}", self.grid.r(i)),
                format!("{:.16e}", v),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a profile written by `write_csv`; the t column must be uniform.
    pub fn read_csv<R: Read>(d: f64, reader: R) -> Result<RadialProfile> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut ts = Vec::new();
        let mut values = Vec::new();
        for row in rdr.deserialize() {
            let row: CsvRow = row?;
            ts.push(row.t);
            values.push(row.value);
        }
        if ts.len() < LogGrid::MIN_SIZE {
            return Err(Error::Io(format!("profile CSV has only {} rows", ts.len())));
        }
        let n = ts.len();
        let grid = LogGrid::new(ts[0], ts[n - 1], n)?;
        let tol = 1e-9 * grid.step().max(1e-300);
        if let Some(i) = ts.iter().enumerate().position(|(i, t)| (t - grid.t(i)).abs() > tol.max(1e-12 * t.abs())) {
            return Err(Error::Io(format!("profile CSV t column is not uniform at row {i}")));
        }
        RadialProfile::new(d, grid, values)
    }
}

#[derive(Deserialize)]
struct CsvRow {
    t: f64,
    #[allow(dead_code)]
    r: f64,
    value: f64,
}

/// The Emden-Fowler transform w(t) = (2r)^{(d-2)/2} u(r), r = e^{-t}.
#[derive(Debug, Clone, PartialEq)]
pub struct EmdenFowlerProfile {
    d: f64,
    grid: LogGrid,
    values: Vec<f64>,
}

impl EmdenFowlerProfile {
    pub fn new(d: f64, grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("Emden-Fowler values must be finite, one per node"));
        }
        Ok(EmdenFowlerProfile { d, grid, values })
    }

    pub fn dimension(&self) -> f64 {
        self.d
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn ef_factor(d: f64, t: f64) -> f64 {
    // (2r)^{(d-2)/2} with r = e^{-t}
    (0.5 * (d - 2.0) * (std::f64::consts::LN_2 - t)).exp()
}

pub fn emden_fowler(u: &RadialProfile) -> EmdenFowlerProfile {
    let g = &u.grid;
    let values = u.values.iter().enumerate().map(|(i, v)| v * ef_factor(u.d, g.t(i))).collect();
    EmdenFowlerProfile { d: u.d, grid: g.clone(), values }
}

pub fn inverse_emden_fowler(w: &EmdenFowlerProfile) -> RadialProfile {
    let g = &w.grid;
    let values = w.values.iter().enumerate().map(|(i, v)| v / ef_factor(w.d, g.t(i))).collect();
    RadialProfile { d: w.d, grid: g.clone(), values, tag: None }
}

/// ∫₀^∞ |u|^p r^γ dr.
pub fn moment(u: &RadialProfile, p: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::domain(format!("moment exponent must be positive, got {p}")));
    }
    let g: Vec<f64> = u.values.iter().map(|v| v.abs().powf(p)).collect();
    u.grid.integrate_weighted(&g, gamma)
}

/// ∫₀^∞ |u'|² r^γ dr, computed as ∫ u_t² r^{γ-1} dt.
pub fn weighted_energy(u: &RadialProfile, gamma: f64) -> Result<f64> {
    let ut = u.derivative_t();
    let f: Vec<f64> = ut
        .iter()
        .enumerate()
        .map(|(i, d)| d * d * (-(gamma - 1.0) * u.grid.t(i)).exp())
        .collect();
    integrate_line(&f, u.grid.h)
}

/// ∫₀^∞ |u'|² r^{d-1} dr.
pub fn dirichlet_energy(u: &RadialProfile) -> Result<f64> {
    weighted_energy(u, u.d - 1.0)
}

/// r² Δu = u_tt - (d_eff - 2) u_t, the Laplacian in log-radius form.
///
/// Residual checks should use this form: multiplying by r^{-2} amplifies
/// rounding noise by e^{2t} near the origin.
pub fn scaled_laplacian(u: &RadialProfile, d_eff: f64) -> Vec<f64> {
    let ut = u.grid.diff_t(&u.values, 1);
    let utt = u.grid.diff_t(&u.values, 2);
    (0..u.values.len()).map(|i| utt[i] - (d_eff - 2.0) * ut[i]).collect()
}

/// Radial Laplacian u'' + (d_eff - 1) u'/r = (u_tt - (d_eff - 2) u_t) / r².
pub fn laplacian(u: &RadialProfile, d_eff: f64) -> Vec<f64> {
    let ut = u.grid.diff_t(&u.values, 1);
    let utt = u.grid.diff_t(&u.values, 2);
    (0..u.values.len())
        .map(|i| (utt[i] - (d_eff - 2.0) * ut[i]) * (2.0 * u.grid.t(i)).exp())
        .collect()
}

/// Potential w = (-Δ)^{-1} v in effective dimension d_eff together with w'(r).
///
/// For d_eff > 2 the potential vanishes at infinity. For d_eff = 2 it is the
/// logarithmic Newton potential -(1/2π) log|x| * v written radially, i.e.
/// w(r) = -log r ∫₀^r v s ds - ∫_r^∞ v s log s ds.
#[derive(Debug, Clone)]
pub struct Potential {
    pub w: RadialProfile,
    /// w'(r) at every node, obtained from the flux -r^{1-d_eff} ∫₀^r v s^{d_eff-1} ds.
    pub w_r: Vec<f64>,
}

pub fn inverse_laplacian_potential(v: &RadialProfile, d_eff: f64) -> Result<Potential> {
    if !(d_eff >= 2.0) || !d_eff.is_finite() {
        return Err(Error::domain(format!("inverse Laplacian needs d_eff >= 2, got {d_eff}")));
    }
    let g = &v.grid;
    let h = g.h;
    let n = g.len();
    let not_integrable = |e: Error| match e {
        Error::TruncationUnreliable { side, tail } => {
            Error::domain(format!("source not integrable at {side} (tail estimate {tail:e})"))
        }
        other => other,
    };
    // m(t) = ∫_t^∞ v e^{-d t'} dt' = ∫₀^r v s^{d-1} ds
    let inner: Vec<f64> = (0..n).map(|i| v.values[i] * (-d_eff * g.t(i)).exp()).collect();
    let m = cumulative_from_inner(&inner, h).map_err(not_integrable)?;
    let w_r: Vec<f64> = (0..n).map(|i| -m[i] * ((d_eff - 1.0) * g.t(i)).exp()).collect();
    let values = if d_eff > 2.0 {
        let outer: Vec<f64> = (0..n).map(|i| m[i] * ((d_eff - 2.0) * g.t(i)).exp()).collect();
        cumulative_from_outer(&outer, h).map_err(not_integrable)?
    } else {
        // w = t M - ∫_{-∞}^t n, n(t) = ∫_{-∞}^t v e^{-2t'} dt', M = total mass
        let outer: Vec<f64> = (0..n).map(|i| v.values[i] * (-2.0 * g.t(i)).exp()).collect();
        let ncum = cumulative_from_outer(&outer, h).map_err(not_integrable)?;
        let total = m[0] + ncum[0];
        let acc = cumulative_from_outer(&ncum, h).map_err(not_integrable)?;
        (0..n).map(|i| g.t(i) * total - acc[i]).collect()
    };
    let w = RadialProfile::new(v.d, g.clone(), values)?;
    Ok(Potential { w, w_r })
}

/// (-Δ)^{-1} v for radial v in effective dimension d_eff ≥ 2.
pub fn inverse_laplacian_radial(v: &RadialProfile, d_eff: f64) -> Result<RadialProfile> {
    Ok(inverse_laplacian_potential(v, d_eff)?.w)
}

/// Aubin-Talenti profile (1 + λ²r²)^{-(d-2)/2} on the default grid.
pub fn aubin_talenti(d: f64, lambda: f64) -> Result<RadialProfile> {
    aubin_talenti_on(LogGrid::default(), d, lambda)
}

pub fn aubin_talenti_on(grid: LogGrid, d: f64, lambda: f64) -> Result<RadialProfile> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain(format!("dilation must be positive, got {lambda}")));
    }
    if !(d > 2.0) {
        return Err(Error::domain(format!("Aubin-Talenti profile needs d > 2, got {d}")));
    }
    let a = 0.5 * (d - 2.0);
    // (1 + λ²r²)^{-a} = e^{-a log1p(λ² e^{-2t})}, stable at both ends
    let profile = RadialProfile::from_t_fn(d, grid, |t| {
        let x = 2.0 * (lambda.ln() - t);
        if x > 30.0 {
            (-a * (x + (-x).exp().ln_1p())).exp()
        } else {
            (-a * x.exp().ln_1p()).exp()
        }
    })?;
    Ok(profile.with_tag(format!("aubin-talenti({lambda})")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn moment_of_optimizer_d3() {
        let u = aubin_talenti(3.0, 1.0).unwrap();
        let val = moment(&u, 6.0, 2.0).unwrap();
        assert!((val - PI / 16.0).abs() < 1e-12);
    }

    #[test]
    fn slowly_decaying_tail_is_extrapolated() {
        // ∫₀^∞ r^{0.1} (1+r²)^{-1.05} ... exact: ½ B(0.55, 0.5)
        let grid = LogGrid::default();
        let g: Vec<f64> = grid.r_nodes().iter().map(|r| (1.0 + r * r).powf(-1.05)).collect();
        let val = grid.integrate_weighted(&g, 0.1).unwrap();
        let exact = 0.5
            * crate::specfun::gamma(0.55).unwrap()
            * crate::specfun::gamma(0.5).unwrap()
            / crate::specfun::gamma(1.05).unwrap();
        assert!((val - exact).abs() < 1e-10 * exact, "{val} vs {exact}");
    }

    #[test]
    fn non_decaying_tail_is_rejected() {
        let grid = LogGrid::default();
        let g = vec![1.0; grid.len()];
        // ∫ r^{-1} dr diverges at both ends
        assert!(matches!(
            grid.integrate_weighted(&g, -1.0),
            Err(Error::TruncationUnreliable { .. })
        ));
    }

    #[test]
    fn inverse_laplacian_recovers_optimizer() {
        for &d in &[3.0, 4.0, 2.5] {
            let u = aubin_talenti(d, 1.0).unwrap();
            let q = (d + 2.0) / (d - 2.0);
            let v = u.map(|x| d * (d - 2.0) * x.powf(q)).unwrap();
            let w = inverse_laplacian_radial(&v, d).unwrap();
            let err = w.values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "d = {d}: {err}");
        }
    }

    #[test]
    fn log_potential_of_planar_bubble() {
        // v = 8/(1+r²)² has potential w = -2 log(1+r²)
        let grid = LogGrid::default();
        let v = RadialProfile::from_fn(2.0, grid, |r| 8.0 / (1.0 + r * r).powi(2)).unwrap();
        let pot = inverse_laplacian_potential(&v, 2.0).unwrap();
        let lap = scaled_laplacian(&pot.w, 2.0);
        for i in (200..1800).step_by(100) {
            let r2v = pot.w.grid().r(i).powi(2) * v.values()[i];
            assert!((lap[i] + r2v).abs() < 1e-9);
        }
        for (i, w) in pot.w.values().iter().enumerate() {
            let r = pot.w.grid().r(i);
            assert!((w + 2.0 * (r * r).ln_1p()).abs() < 1e-9, "r = {r}");
        }
    }
}
