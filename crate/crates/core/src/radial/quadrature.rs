//! Quadrature on a uniform t-grid with geometric tail extrapolation.
//!
//! The grid covers a finite window of the real line; contributions beyond
//! either end are estimated by fitting a geometric decay to the last nodes.
//! A tail that does not decay, or whose decay rate is inconsistent between
//! two fitting spans, is reported as `TruncationUnreliable` unless it is
//! negligible against the bulk of the integral.

use crate::error::{Error, Result};

use super::stencil::interval_integrals;

/// Side labels for truncation errors: index 0 is the large-r end.
pub(crate) const OUTER: &str = "r -> infinity";
pub(crate) const INNER: &str = "r -> 0";

const NEGLIGIBLE: f64 = 1e-13;
const CONSISTENCY: f64 = 1e-3;

fn span(n: usize) -> usize {
    // even, at most 32, at most a quarter of the grid
    (n / 4).min(32) & !1
}

#[derive(Clone, Copy)]
enum TailKind {
    /// Σ_{j≥1} h f_{end±j}, the missing part of the infinite trapezoid sum.
    Sum,
    /// ∫ beyond the end node of the fitted exponential.
    Integral,
}

fn tail_value(kind: TailKind, fe: f64, rho: f64, h: f64) -> f64 {
    match kind {
        TailKind::Sum => h * fe * rho / (1.0 - rho),
        TailKind::Integral => h * fe / -rho.ln(),
    }
}

/// Contribution beyond the boundary, given samples end, end-m/2, end-m
/// ordered from the boundary inwards.
fn tail(
    kind: TailKind,
    f: [f64; 3],
    m: usize,
    h: f64,
    scale: f64,
    side: &'static str,
) -> Result<f64> {
    let [fe, fm, ff] = f;
    if fe == 0.0 {
        return Ok(0.0);
    }
    let half = (m / 2) as f64;
    let same_sign =
        fe.signum() == fm.signum() && fm.signum() == ff.signum() && fm != 0.0 && ff != 0.0;
    if same_sign {
        let rho1 = (fe / fm).powf(1.0 / half);
        let rho2 = (fm / ff).powf(1.0 / half);
        if rho1 < 1.0 {
            let t1 = tail_value(kind, fe, rho1, h);
            if t1.abs() <= NEGLIGIBLE * scale {
                return Ok(t1);
            }
            if rho2 < 1.0 {
                let t2 = tail_value(kind, fe, rho2, h);
                if (t1 - t2).abs() <= CONSISTENCY * t1.abs() + NEGLIGIBLE * scale {
                    return Ok(t1);
                }
            }
            return Err(Error::TruncationUnreliable { side, tail: t1 });
        }
    }
    let bound = fe.abs().max(fm.abs()).max(ff.abs()) * h * m as f64;
    if bound <= NEGLIGIBLE * scale {
        Ok(0.0)
    } else {
        Err(Error::TruncationUnreliable { side, tail: fe.abs() * h * m as f64 })
    }
}

fn scale_of(f: &[f64], h: f64) -> f64 {
    h * f.iter().map(|x| x.abs()).sum::<f64>()
}

fn outer_tail(kind: TailKind, f: &[f64], h: f64, scale: f64) -> Result<f64> {
    let m = span(f.len());
    tail(kind, [f[0], f[m / 2], f[m]], m, h, scale, OUTER)
}

fn inner_tail(kind: TailKind, f: &[f64], h: f64, scale: f64) -> Result<f64> {
    let n = f.len();
    let m = span(n);
    tail(kind, [f[n - 1], f[n - 1 - m / 2], f[n - 1 - m]], m, h, scale, INNER)
}

/// ∫_ℝ f dt from uniform samples: trapezoid sum plus both tails.
pub(crate) fn integrate_line(f: &[f64], h: f64) -> Result<f64> {
    integrate_line_ref(f, h, 0.0)
}

/// As `integrate_line`, with tails judged negligible against `reference` as
/// well as against ∫|f|. Used for integrands that are cancellation residues
/// of larger quantities.
pub(crate) fn integrate_line_ref(f: &[f64], h: f64, reference: f64) -> Result<f64> {
    if let Some(bad) = f.iter().find(|x| !x.is_finite()) {
        return Err(Error::domain(format!("non-finite integrand value {bad}")));
    }
    let scale = scale_of(f, h).max(reference.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    let body: f64 = h * f.iter().sum::<f64>();
    Ok(body + outer_tail(TailKind::Sum, f, h, scale)? + inner_tail(TailKind::Sum, f, h, scale)?)
}

/// C_i = ∫_{-∞}^{t_i} f dt.
pub(crate) fn cumulative_from_outer(f: &[f64], h: f64) -> Result<Vec<f64>> {
    let scale = scale_of(f, h);
    let mut out = Vec::with_capacity(f.len());
    if scale == 0.0 {
        out.resize(f.len(), 0.0);
        return Ok(out);
    }
    let mut acc = outer_tail(TailKind::Integral, f, h, scale)?;
    out.push(acc);
    for piece in interval_integrals(f, h) {
        acc += piece;
        out.push(acc);
    }
    Ok(out)
}

/// C_i = ∫_{t_i}^{∞} f dt.
pub(crate) fn cumulative_from_inner(f: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = f.len();
    let scale = scale_of(f, h);
    let mut out = vec![0.0; n];
    if scale == 0.0 {
        return Ok(out);
    }
    let mut acc = inner_tail(TailKind::Integral, f, h, scale)?;
    out[n - 1] = acc;
    let pieces = interval_integrals(f, h);
    for j in (0..n - 1).rev() {
        acc += pieces[j];
        out[j] = acc;
    }
    Ok(out)
}
