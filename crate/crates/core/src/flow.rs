//! Fast diffusion v_t = Δv^m, m = (d-2)/(d+2), in sphere coordinates.
//!
//! With τ = -log(T - t), z = (r²-1)/(r²+1) and
//!
//! v(t, r) = e^{-(d+2)τ/4} (1 - z)^{(d+2)/2} w(τ, z),
//!
//! w solves w_τ = 𝓛w^m - ¼d(d-2) w^m + ¼(d+2) w on S^d, where for axisymmetric
//! data 𝓛W = (1-z²)W_zz - d z W_z. The separation solution is the constant
//! c* = (d(d-2)/(d+2))^{(d+2)/4}. Sphere integrals are taken against
//! (1-z²)^{(d-2)/2} dz, the radial normalization of dσ.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{flow_functionals, hls_deficit, sobolev_terms, DEFICIT_TOL};
use crate::radial::{moment, LogGrid, RadialProfile};
use crate::specfun::{ln_gamma, Dimension};

pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_DTAU: f64 = 1e-3;
/// Per-step tolerance on the certified inequalities.
pub const STEP_TOL: f64 = 1e-6;
/// Tolerance on the discrete concavity checks (log H')' ≤ (log J)' and ≤ -κ.
pub const CONCAVITY_TOL: f64 = 1e-5;
pub const MAX_HALVINGS: u32 = 20;
/// Below this value of H'/(2J) the state counts as an equality case and the
/// checks on log H' are vacuous.
pub const HPRIME_FLOOR: f64 = 1e-9;

/// c* = (d(d-2)/(d+2))^{(d+2)/4}, the stationary constant state.
pub fn stationary_value(dim: Dimension) -> f64 {
    let d = dim.value();
    (d * (d - 2.0) / (d + 2.0)).powf(0.25 * (d + 2.0))
}

/// Chebyshev-Gauss-Lobatto collocation on z ∈ [-1, 1].
#[derive(Debug, Clone)]
pub struct SphereGrid {
    d: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    diff: DMatrix<f64>,
    lb: DMatrix<f64>,
    bary: Vec<f64>,
}

impl SphereGrid {
    /// Nodes z_j = cos(πj/N), j = 0..=N (z = 1 is r = ∞).
    pub fn new(n: usize, dim: Dimension) -> Result<Self> {
        if n < 8 {
            return Err(Error::domain(format!("sphere grid needs at least 8 intervals, got {n}")));
        }
        let d = dim.value();
        let nf = n as f64;
        let pi = std::f64::consts::PI;
        let nodes: Vec<f64> = (0..=n).map(|j| (pi * (nf - 2.0 * j as f64) / (2.0 * nf)).sin()).collect();
        let sin2: Vec<f64> = (0..=n).map(|j| (pi * j as f64 / nf).sin().powi(2)).collect();

        let c = |j: usize| if j == 0 || j == n { 2.0 } else { 1.0 };
        let mut diff = DMatrix::zeros(n + 1, n + 1);
        for i in 0..=n {
            let mut row = 0.0;
            for j in 0..=n {
                if i == j {
                    continue;
                }
                let gap = 2.0 * (pi * (i + j) as f64 / (2.0 * nf)).sin() * (pi * (j as f64 - i as f64) / (2.0 * nf)).sin();
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                let v = c(i) / c(j) * sign / gap;
                diff[(i, j)] = v;
                row += v;
            }
            diff[(i, i)] = -row;
        }
        let second = &diff * &diff;
        let mut lb = DMatrix::zeros(n + 1, n + 1);
        for i in 0..=n {
            for j in 0..=n {
                lb[(i, j)] = sin2[i] * second[(i, j)] - d * nodes[i] * diff[(i, j)];
            }
        }

        // moments M_k = ∫ T_k (1-z²)^{(d-2)/2} dz = ∫_0^π cos kθ sin^{d-1}θ dθ
        let nu = d - 1.0;
        let mut moments = vec![0.0; n + 1];
        moments[0] = std::f64::consts::PI.sqrt() * (ln_gamma(0.5 * d)? - ln_gamma(0.5 * (d + 1.0))?).exp();
        for k in (0..n.saturating_sub(1)).step_by(2) {
            let kf = k as f64;
            moments[k + 2] = moments[k] * (kf - nu) / (kf + nu + 2.0);
        }
        let weights = (0..=n)
            .map(|j| {
                let s: f64 = (0..=n)
                    .map(|k| {
                        let half = if k == 0 || k == n { 0.5 } else { 1.0 };
                        half * moments[k] * (pi * (j * k % (2 * n)) as f64 / nf).cos()
                    })
                    .sum();
                2.0 / nf * s / c(j)
            })
            .collect();
        let bary = (0..=n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s / c(j)
            })
            .collect();
        Ok(SphereGrid { d, nodes, weights, diff, lb, bary })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// ∫_{-1}^1 (1-z²)^{(d-2)/2} dz, i.e. |S^d| / |S^{d-1}|.
    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, g: &[f64]) -> f64 {
        self.weights.iter().zip(g).map(|(w, x)| w * x).sum()
    }

    /// Derivative in z, exact zero on constants.
    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        apply_centred(&self.diff, f)
    }

    /// 𝓛f = (1-z²) f_zz - d z f_z, exact zero on constants.
    pub fn laplace_beltrami(&self, f: &[f64]) -> Vec<f64> {
        apply_centred(&self.lb, f)
    }

    /// Value of the polynomial interpolant at z.
    pub fn interpolate(&self, f: &[f64], z: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (j, &zj) in self.nodes.iter().enumerate() {
            let dz = z - zj;
            if dz == 0.0 {
                return f[j];
            }
            let c = self.bary[j] / dz;
            num += c * f[j];
            den += c;
        }
        num / den
    }

    pub fn dimension(&self) -> f64 {
        self.d
    }
}

fn apply_centred(m: &DMatrix<f64>, f: &[f64]) -> Vec<f64> {
    let base = f[0];
    let shifted = DVector::from_iterator(f.len(), f.iter().map(|x| x - base));
    (m * shifted).iter().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowConfig {
    pub nodes: usize,
    pub dtau: f64,
    pub tolerance: f64,
    pub concavity_tolerance: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig { nodes: DEFAULT_NODES, dtau: DEFAULT_DTAU, tolerance: STEP_TOL, concavity_tolerance: CONCAVITY_TOL }
    }
}

/// Slacks of the certified inequalities at one accepted step; each is
/// nonnegative when the inequality holds. Checks that compare with the previous
/// step are +∞ on the first record and when H' vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepSlacks {
    /// J decreasing, relative decrease.
    pub j_decreasing: f64,
    /// J' ≤ -(2d/(d+2)) J^{1-2/d}/s_d, as s_d Q - 1.
    pub sobolev_decay: f64,
    /// Secant slope of J^{2/d} in t against -4/((d+2)s_d), relative.
    pub decay_slope: f64,
    /// J^{2/d}(t) ≤ J₀^{2/d} - 4t/((d+2)s_d), relative to J₀^{2/d}.
    pub extinction: f64,
    /// -H / (s_d J^{1+2/d}).
    pub h_sign: f64,
    pub h_monotone: f64,
    pub q_monotone: f64,
    /// Δlog J - Δlog H' per unit τ.
    pub concavity: f64,
    /// -κΔt - Δlog H' per unit τ.
    pub kappa_rate: f64,
}

impl StepSlacks {
    fn initial(sobolev_decay: f64, h_sign: f64) -> Self {
        StepSlacks {
            j_decreasing: f64::INFINITY,
            sobolev_decay,
            decay_slope: f64::INFINITY,
            extinction: 0.0,
            h_sign,
            h_monotone: f64::INFINITY,
            q_monotone: f64::INFINITY,
            concavity: f64::INFINITY,
            kappa_rate: f64::INFINITY,
        }
    }
}

/// Diagnostics of one state; J, H, H' are the t-frame quantities in the
/// radial normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowRecord {
    pub tau: f64,
    pub t: f64,
    pub j: f64,
    pub h: f64,
    /// 2J(s_d Q - 1), from the sphere representation.
    pub hprime: f64,
    /// 2 J^{2/d} F[v^m], from the radial representation.
    pub hprime_radial: f64,
    /// (∫w^{2d/(d+2)})^{2/d-1} (∫|∇w^m|² + ¼d(d-2)∫w^{2m}) on the sphere.
    pub q: f64,
    /// dJ/dt.
    pub jprime: f64,
    /// (max w - min w) / mean w.
    pub spread: f64,
    pub slacks: StepSlacks,
}

#[derive(Debug, Clone)]
pub struct FlowState {
    dim: Dimension,
    pub tau: f64,
    pub w: Vec<f64>,
    t_guess: f64,
    j0: f64,
    sphere: Arc<SphereGrid>,
    grid: LogGrid,
    config: FlowConfig,
    pub history: Vec<FlowRecord>,
    pub halvings: u32,
}

/// T ≤ (d+2)/4 · s_d · J₀^{2/d}.
pub fn extinction_bound(v: &RadialProfile) -> Result<f64> {
    let dim = Dimension::new(v.dimension())?;
    let d = dim.value();
    let j = moment(v, 2.0 * d / (d + 2.0), d - 1.0)?;
    Ok(0.25 * (d + 2.0) * dim.constants().radial * j.powf(2.0 / d))
}

/// v(0, r) = T^{(d+2)/4} c* (2/(1+r²))^{(d+2)/2}, extinguishing exactly at T.
pub fn separation_datum(dim: Dimension, grid: LogGrid, extinction_time: f64) -> Result<RadialProfile> {
    let d = dim.value();
    let amp = extinction_time.powf(0.25 * (d + 2.0)) * stationary_value(dim);
    RadialProfile::from_t_fn(d, grid, |t| amp * (0.5 * (d + 2.0) * (2f64.ln() - (-2.0 * t).exp().ln_1p())).exp())
        .map(|p| p.with_tag("separation"))
}

/// (1 - z) at the grid point t, z = -tanh t.
fn one_minus_z(t: f64) -> f64 {
    2.0 / (1.0 + (-2.0 * t).exp())
}

pub fn to_sphere(v: &RadialProfile, t_guess: f64) -> Result<FlowState> {
    to_sphere_with(v, t_guess, FlowConfig::default())
}

pub fn to_sphere_with(v: &RadialProfile, t_guess: f64, config: FlowConfig) -> Result<FlowState> {
    let dim = Dimension::new(v.dimension())?;
    let d = dim.value();
    if v.min_value() <= 0.0 {
        return Err(Error::domain("flow needs a strictly positive initial datum"));
    }
    if !(t_guess > 0.0) {
        return Err(Error::domain(format!("extinction time guess must be positive, got {t_guess}")));
    }
    if !(config.dtau > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {}", config.dtau)));
    }
    let grid = v.grid().clone();
    let sphere = Arc::new(SphereGrid::new(config.nodes, dim)?);
    let e = 0.5 * (d + 2.0);
    // w = T^{-(d+2)/4} (1-z)^{-(d+2)/2} v, with the ratio tabulated in t
    let ratio: Vec<f64> = (0..grid.len()).map(|i| v.values()[i] * (-e * one_minus_z(grid.t(i)).ln()).exp()).collect();
    let amp = t_guess.powf(-0.25 * (d + 2.0));
    let w: Vec<f64> = sphere
        .nodes()
        .iter()
        .map(|&z| {
            let t = if z >= 1.0 {
                f64::NEG_INFINITY
            } else if z <= -1.0 {
                f64::INFINITY
            } else {
                -z.atanh()
            };
            amp * grid.interpolate(&ratio, t)
        })
        .collect();
    if w.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::domain("sphere representation lost positivity"));
    }
    let j0 = moment(v, 2.0 * d / (d + 2.0), d - 1.0)?;
    let mut state = FlowState {
        dim,
        tau: -t_guess.ln(),
        w,
        t_guess,
        j0,
        sphere,
        grid,
        config,
        history: Vec::new(),
        halvings: 0,
    };
    let rec = state.record(None)?;
    state.history.push(rec);
    Ok(state)
}

struct SphereTerms {
    j_sphere: f64,
    gradient: f64,
    potential: f64,
}

impl FlowState {
    pub fn dimension(&self) -> Dimension {
        self.dim
    }

    pub fn sphere(&self) -> &SphereGrid {
        &self.sphere
    }

    pub fn config(&self) -> &FlowConfig {
        &self.config
    }

    pub fn extinction_guess(&self) -> f64 {
        self.t_guess
    }

    /// t = T_guess - e^{-τ}.
    pub fn time(&self) -> f64 {
        self.t_guess - (-self.tau).exp()
    }

    /// The current v(t, ·) on the radial grid of the initial datum.
    pub fn to_radial(&self) -> Result<RadialProfile> {
        let d = self.dim.value();
        let amp = (-0.25 * (d + 2.0) * self.tau).exp();
        let e = 0.5 * (d + 2.0);
        let grid = self.grid.clone();
        let values = (0..grid.len())
            .map(|i| {
                let t = grid.t(i);
                amp * one_minus_z(t).powf(e) * self.sphere.interpolate(&self.w, -t.tanh())
            })
            .collect();
        RadialProfile::new(d, grid, values)
    }

    fn sphere_terms(&self) -> SphereTerms {
        let d = self.dim.value();
        let m = self.dim.diffusion_exponent();
        let big_w: Vec<f64> = self.w.iter().map(|x| x.powf(m)).collect();
        let wz = self.sphere.derivative(&big_w);
        let z = self.sphere.nodes();
        let grad: Vec<f64> = (0..z.len()).map(|i| (1.0 - z[i] * z[i]) * wz[i] * wz[i]).collect();
        let sq: Vec<f64> = big_w.iter().map(|x| x * x).collect();
        let js: Vec<f64> = self.w.iter().map(|x| x.powf(2.0 * d / (d + 2.0))).collect();
        SphereTerms {
            j_sphere: self.sphere.integrate(&js),
            gradient: self.sphere.integrate(&grad),
            potential: 0.25 * d * (d - 2.0) * self.sphere.integrate(&sq),
        }
    }

    fn record(&self, prev: Option<&FlowRecord>) -> Result<FlowRecord> {
        let d = self.dim.value();
        let sd = self.dim.constants().radial;
        let st = self.sphere_terms();
        let tau = self.tau;
        let j = (-0.5 * d * tau).exp() * st.j_sphere;
        let q = st.j_sphere.powf(2.0 / d - 1.0) * (st.gradient + st.potential);
        let excess = sd * q - 1.0;
        let hprime = 2.0 * j * excess;
        let jprime = -2.0 * d / (d + 2.0) * (-0.5 * (d - 2.0) * tau).exp() * (st.gradient + st.potential);
        let v = self.to_radial()?;
        let (_, h) = flow_functionals(&v)?;
        let u = v.map(|x| x.powf(self.dim.diffusion_exponent()))?;
        let hprime_radial = 2.0 * j.powf(2.0 / d) * sobolev_terms(&u)?.deficit;
        let t = self.time();
        let scale = sd * j.powf(1.0 + 2.0 / d);
        let (lo, hi, sum) = self
            .w
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY, 0.0), |(a, b, s), &x| (a.min(x), b.max(x), s + x));
        let spread = (hi - lo) / (sum / self.w.len() as f64);
        let rate = 4.0 / ((d + 2.0) * sd);
        let j0p = self.j0.powf(2.0 / d);
        let mut slacks = StepSlacks::initial(excess, -h / scale);
        slacks.extinction = (j0p - rate * t - j.powf(2.0 / d)) / j0p;
        if let Some(p) = prev {
            let dtau = tau - p.tau;
            // t_{k+1} - t_k = e^{-τ_k}(1 - e^{-Δτ})
            let dt = -(-p.tau).exp() * (-dtau).exp_m1();
            slacks.j_decreasing = (p.j - j) / p.j;
            let slope = (j.powf(2.0 / d) - p.j.powf(2.0 / d)) / dt;
            slacks.decay_slope = -1.0 - slope / rate;
            slacks.h_monotone = (h - p.h) / scale;
            slacks.q_monotone = (p.q - q) / p.q;
            let kappa = 2.0 * d / (d + 2.0) / (j0p * sd);
            if p.hprime > 2.0 * HPRIME_FLOOR * p.j && hprime > 2.0 * HPRIME_FLOOR * j {
                let dlog_h = (hprime / p.hprime).ln();
                slacks.concavity = ((j / p.j).ln() - dlog_h) / dtau;
                slacks.kappa_rate = (-kappa * dt - dlog_h) / dtau;
            }
        }
        Ok(FlowRecord { tau, t, j, h, hprime, hprime_radial, q, jprime, spread, slacks })
    }

    fn rhs(&self, w: &[f64]) -> Vec<f64> {
        let d = self.dim.value();
        let m = self.dim.diffusion_exponent();
        let big_w: Vec<f64> = w.iter().map(|x| x.powf(m)).collect();
        let lap = self.sphere.laplace_beltrami(&big_w);
        (0..w.len()).map(|i| lap[i] - 0.25 * d * (d - 2.0) * big_w[i] + 0.25 * (d + 2.0) * w[i]).collect()
    }

    /// One linearly implicit Euler step: 𝓛w^m linearized about w, reactions explicit.
    fn euler(&self, w: &[f64], dtau: f64) -> Option<Vec<f64>> {
        let n = w.len();
        let m = self.dim.diffusion_exponent();
        let f = self.rhs(w);
        let mut a = self.sphere.lb.clone();
        for j in 0..n {
            let g = m * w[j].powf(m - 1.0);
            a.column_mut(j).scale_mut(-dtau * g);
        }
        for i in 0..n {
            a[(i, i)] += 1.0;
        }
        let b = DVector::from_iterator(n, f.iter().map(|x| dtau * x));
        let delta = a.lu().solve(&b)?;
        let next: Vec<f64> = (0..n).map(|i| w[i] + delta[i]).collect();
        next.iter().all(|x| x.is_finite() && *x > 0.0).then_some(next)
    }

    /// Richardson extrapolation of one full and two half Euler steps.
    fn extrapolated(&self, w: &[f64], dtau: f64) -> Option<Vec<f64>> {
        let coarse = self.euler(w, dtau)?;
        let mid = self.euler(w, 0.5 * dtau)?;
        let fine = self.euler(&mid, 0.5 * dtau)?;
        let next: Vec<f64> = (0..w.len()).map(|i| 2.0 * fine[i] - coarse[i]).collect();
        next.iter().all(|x| *x > 0.0).then_some(next)
    }

    fn advance(&mut self, w: Vec<f64>, dtau: f64, depth: u32) -> Result<Vec<f64>> {
        if let Some(next) = self.extrapolated(&w, dtau) {
            return Ok(next);
        }
        if depth >= MAX_HALVINGS {
            return Err(Error::Flow(format!("positivity lost after {MAX_HALVINGS} halvings of the time step")));
        }
        self.halvings += 1;
        let half = self.advance(w, 0.5 * dtau, depth + 1)?;
        self.advance(half, 0.5 * dtau, depth + 1)
    }

    pub fn last(&self) -> &FlowRecord {
        self.history.last().expect("history starts with the initial record")
    }

    /// κ₀ = H'₀ / J₀.
    pub fn kappa0(&self) -> f64 {
        let r = &self.history[0];
        r.hprime / r.j
    }
}

/// Advances by dτ, appending the diagnostics of the new state.
pub fn step(mut state: FlowState, dtau: f64) -> Result<FlowState> {
    if !(dtau > 0.0) {
        return Err(Error::domain(format!("time step must be positive, got {dtau}")));
    }
    let w = std::mem::take(&mut state.w);
    state.w = state.advance(w, dtau, 0)?;
    state.tau += dtau;
    let rec = state.record(state.history.last())?;
    state.history.push(rec);
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub j: f64,
    pub h: f64,
    pub hprime: f64,
    pub q: f64,
    pub kappa0: f64,
}

pub fn diagnostics(state: &FlowState) -> Diagnostics {
    let r = state.last();
    Diagnostics { j: r.j, h: r.h, hprime: r.hprime, q: r.q, kappa0: state.kappa0() }
}

/// Worst slack of one certified inequality over a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Violated by more than ten times the tolerance.
    pub flagged: bool,
}

impl CheckOutcome {
    fn over(history: &[FlowRecord], tolerance: f64, f: impl Fn(&StepSlacks) -> f64) -> Self {
        let worst = history.iter().map(|r| f(&r.slacks)).fold(f64::INFINITY, f64::min);
        CheckOutcome { worst, tolerance, pass: worst >= -tolerance, flagged: worst < -10.0 * tolerance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowReport {
    pub dimension: f64,
    pub extinction_guess: f64,
    pub extinction_bound: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub steps: usize,
    pub halvings: u32,
    pub j_decreasing: CheckOutcome,
    pub sobolev_decay: CheckOutcome,
    pub decay_slope: CheckOutcome,
    pub extinction: CheckOutcome,
    pub h_sign: CheckOutcome,
    pub h_monotone: CheckOutcome,
    pub q_monotone: CheckOutcome,
    pub concavity: CheckOutcome,
    pub kappa_rate: CheckOutcome,
    pub pass: bool,
}

impl FlowReport {
    pub fn checks(&self) -> [(&'static str, CheckOutcome); 9] {
        [
            ("j_decreasing", self.j_decreasing),
            ("sobolev_decay", self.sobolev_decay),
            ("decay_slope", self.decay_slope),
            ("extinction", self.extinction),
            ("h_sign", self.h_sign),
            ("h_monotone", self.h_monotone),
            ("q_monotone", self.q_monotone),
            ("concavity", self.concavity),
            ("kappa_rate", self.kappa_rate),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub state: FlowState,
    pub report: FlowReport,
}

impl FlowRun {
    pub fn history(&self) -> &[FlowRecord] {
        &self.state.history
    }

    /// tau,t,J,H,Hprime,Q followed by one pass flag per certified inequality.
    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let tol = self.report.sobolev_decay.tolerance;
        let ctol = self.report.concavity.tolerance;
        writeln!(
            out,
            "tau,t,J,H,Hprime,Q,j_decreasing,sobolev_decay,decay_slope,extinction,h_sign,h_monotone,q_monotone,concavity,kappa_rate"
        )?;
        for r in self.history() {
            let s = &r.slacks;
            let flags = [
                s.j_decreasing >= -tol,
                s.sobolev_decay >= -tol,
                s.decay_slope >= -tol,
                s.extinction >= -tol,
                s.h_sign >= -tol,
                s.h_monotone >= -tol,
                s.q_monotone >= -tol,
                s.concavity >= -ctol,
                s.kappa_rate >= -ctol,
            ];
            write!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", r.tau, r.t, r.j, r.h, r.hprime, r.q)?;
            for f in flags {
                write!(out, ",{f}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

pub fn run_flow(v0: &RadialProfile, tau_max: f64) -> Result<FlowRun> {
    run_flow_with(v0, tau_max, FlowConfig::default())
}

/// Integrates over τ ∈ [τ₀, τ₀ + τ_max] with T_guess the extinction bound.
/// For data off the separation manifold T_guess exceeds T and w vanishes at
/// τ₀ + log(T_guess/(T_guess - T)), so τ_max should stay below that.
pub fn run_flow_with(v0: &RadialProfile, tau_max: f64, config: FlowConfig) -> Result<FlowRun> {
    if !(tau_max > 0.0) {
        return Err(Error::domain(format!("tau_max must be positive, got {tau_max}")));
    }
    let bound = extinction_bound(v0)?;
    let mut state = to_sphere_with(v0, bound, config)?;
    let steps = (tau_max / config.dtau).round().max(1.0) as usize;
    for _ in 0..steps {
        state = step(state, config.dtau)?;
    }
    let d = state.dim.value();
    let sd = state.dim.constants().radial;
    let h = &state.history;
    let tol = config.tolerance;
    let ctol = config.concavity_tolerance;
    let mut report = FlowReport {
        dimension: d,
        extinction_guess: bound,
        extinction_bound: bound,
        kappa: 2.0 * d / (d + 2.0) / (state.j0.powf(2.0 / d) * sd),
        kappa0: state.kappa0(),
        steps,
        halvings: state.halvings,
        j_decreasing: CheckOutcome::over(h, tol, |s| s.j_decreasing),
        sobolev_decay: CheckOutcome::over(h, tol, |s| s.sobolev_decay),
        decay_slope: CheckOutcome::over(h, tol, |s| s.decay_slope),
        extinction: CheckOutcome::over(h, tol, |s| s.extinction),
        h_sign: CheckOutcome::over(h, tol, |s| s.h_sign),
        h_monotone: CheckOutcome::over(h, tol, |s| s.h_monotone),
        q_monotone: CheckOutcome::over(h, tol, |s| s.q_monotone),
        concavity: CheckOutcome::over(h, ctol, |s| s.concavity),
        kappa_rate: CheckOutcome::over(h, ctol, |s| s.kappa_rate),
        pass: false,
    };
    report.pass = report.checks().iter().all(|(_, c)| c.pass);
    Ok(FlowRun { state, report })
}

/// φ(x) = √(𝒞² + 2𝒞x) - 𝒞, written without cancellation.
pub fn phi_basic(x: f64, c: f64) -> f64 {
    2.0 * c * x / ((c * c + 2.0 * c * x).sqrt() + c)
}

/// φ(x) = √(𝒞² + 𝒞x + ½𝒞²(√(1 + 4x/𝒞) - 1)) - 𝒞.
pub fn phi_refined(x: f64, c: f64) -> f64 {
    let excess = c * x + 2.0 * c * x / ((1.0 + 4.0 * x / c).sqrt() + 1.0);
    excess / ((c * c + excess).sqrt() + c)
}

/// x at which φ(x) = 𝒞x: 2(1-𝒞)/𝒞.
pub fn phi_crossover(c: f64) -> f64 {
    2.0 * (1.0 - c) / c
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiReport {
    /// J^{2/d-1} F[u] with J = ∫v^{2d/(d+2)} r^{d-1}.
    pub x: f64,
    pub c_ratio: f64,
    pub phi_basic: f64,
    pub phi_refined: f64,
    /// H + s_d J^{1+2/d} φ_refined(x); the refined φ is the smaller one.
    pub slack: f64,
    pub slack_basic: f64,
    /// s_d J^{1+2/d}, the scale of the slacks.
    pub scale: f64,
    pub pass: bool,
}

/// 0 ≤ H[v] + s_d J[v]^{1+2/d} φ(J^{2/d-1} F[u]), v = u^{(d+2)/(d-2)}, for both φ.
pub fn phi_improved_check(u: &RadialProfile, c_ratio: f64) -> Result<PhiReport> {
    if !(c_ratio > 0.0 && c_ratio <= 1.0) {
        return Err(Error::domain(format!("c_ratio must lie in (0, 1], got {c_ratio}")));
    }
    let dim = Dimension::new(u.dimension())?;
    let d = dim.value();
    if u.min_value() < 0.0 {
        return Err(Error::domain("improved inequality needs a nonnegative profile"));
    }
    let sd = dim.constants().radial;
    let sob = sobolev_terms(u)?;
    let j = sob.critical_moment;
    let x = (j.powf(2.0 / d - 1.0) * sob.deficit).max(0.0);
    let v = u.map(|s| s.powf(dim.hls_power()))?;
    let h = -hls_deficit(&v)?;
    let scale = sd * j.powf(1.0 + 2.0 / d);
    let pb = phi_basic(x, c_ratio);
    let pr = phi_refined(x, c_ratio);
    let slack = h + scale * pr;
    let slack_basic = h + scale * pb;
    let tol = DEFICIT_TOL * scale.max(1.0);
    Ok(PhiReport {
        x,
        c_ratio,
        phi_basic: pb,
        phi_refined: pr,
        slack,
        slack_basic,
        scale,
        pass: slack >= -tol && slack_basic >= -tol,
    })
}

/// Dense-grid check of the elementary properties of both φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiGridCheck {
    pub c_ratio: f64,
    pub points: usize,
    pub zero_at_origin: bool,
    pub below_identity: bool,
    pub gap_positive: bool,
    pub gap_convex: bool,
    pub crossover: bool,
    pub refined_below_basic: bool,
    pub slope_at_origin: bool,
    pub pass: bool,
}

pub fn phi_grid_check(c: f64) -> Result<PhiGridCheck> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::domain(format!("φ checks need 0 < 𝒞 < 1, got {c}")));
    }
    let xc = phi_crossover(c);
    let n = 4001;
    let top = 4.0 * xc.max(1.0);
    let h = top / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|k| k as f64 * h).collect();
    let zero_at_origin = phi_basic(0.0, c) == 0.0 && phi_refined(0.0, c) == 0.0;
    let mut below_identity = true;
    let mut gap_positive = true;
    let mut crossover = true;
    let mut refined_below_basic = true;
    for &x in xs.iter().skip(1) {
        for phi in [phi_basic(x, c), phi_refined(x, c)] {
            below_identity &= (0.0..=x).contains(&phi);
            gap_positive &= x - phi > 0.0;
        }
        refined_below_basic &= phi_refined(x, c) <= phi_basic(x, c);
        if (x - xc).abs() > 1e-9 * xc {
            crossover &= (phi_basic(x, c) <= c * x) == (x >= xc);
        }
    }
    crossover &= (phi_basic(xc, c) - c * xc).abs() <= 4.0 * f64::EPSILON * c * xc;
    let mut gap_convex = true;
    for f in [phi_basic as fn(f64, f64) -> f64, phi_refined] {
        for k in 1..n - 1 {
            let g = |x: f64| x - f(x, c);
            let second = g(xs[k - 1]) - 2.0 * g(xs[k]) + g(xs[k + 1]);
            gap_convex &= second >= -16.0 * f64::EPSILON * xs[k + 1];
        }
    }
    let tiny = 1e-10;
    let slope_at_origin =
        ((phi_basic(tiny, c) / tiny) - 1.0).abs() < 1e-8 && ((phi_refined(tiny, c) / tiny) - 1.0).abs() < 1e-8;
    let pass = zero_at_origin && below_identity && gap_positive && gap_convex && crossover && refined_below_basic && slope_at_origin;
    Ok(PhiGridCheck {
        c_ratio: c,
        points: n,
        zero_at_origin,
        below_identity,
        gap_positive,
        gap_convex,
        crossover,
        refined_below_basic,
        slope_at_origin,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_weights_integrate_polynomials() {
        for &d in &[3.0, 4.0, 5.5] {
            let dim = Dimension::new(d).unwrap();
            let s = SphereGrid::new(32, dim).unwrap();
            // ∫ z² (1-z²)^β dz = I_0 / (d+1)
            let z2: Vec<f64> = s.nodes().iter().map(|z| z * z).collect();
            assert!((s.integrate(&z2) - s.volume() / (d + 1.0)).abs() < 1e-14);
            let vol = crate::specfun::sphere_volume(d + 1.0).unwrap() / crate::specfun::sphere_volume(d).unwrap();
            assert!((s.volume() - vol).abs() < 1e-13 * vol);
        }
    }

    #[test]
    fn laplace_beltrami_on_legendre_type_modes() {
        let dim = Dimension::new(3.0).unwrap();
        let s = SphereGrid::new(24, dim).unwrap();
        // C_2^{(1)}(z) = 4z² - 1 has eigenvalue -2(2+2) = -8 for d = 3
        let f: Vec<f64> = s.nodes().iter().map(|z| 4.0 * z * z - 1.0).collect();
        let lf = s.laplace_beltrami(&f);
        for (a, b) in lf.iter().zip(&f) {
            assert!((a + 8.0 * b).abs() < 1e-10);
        }
        assert!((s.interpolate(&f, 0.3) - (4.0 * 0.09 - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn crossover_is_exact() {
        let c = 3.0 / 7.0;
        let x = phi_crossover(c);
        assert!((phi_basic(x, c) - c * x).abs() < 1e-15);
    }
}
