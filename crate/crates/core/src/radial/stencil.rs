//! Finite-difference and local-interpolation weights on a uniform grid.

use std::sync::OnceLock;

/// Number of nodes in a derivative stencil (8th order).
pub(crate) const DIFF_WIDTH: usize = 9;
/// Number of nodes in an interval-integration stencil (8th order).
pub(crate) const INT_WIDTH: usize = 8;

/// Fornberg weights for derivatives 0..=m at x0 on the nodes xs.
/// Entry [k][j] is the weight of node j for the k-th derivative.
pub(crate) fn fornberg(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

struct DiffTables {
    // indexed by position of the evaluation node inside the stencil
    first: [[f64; DIFF_WIDTH]; DIFF_WIDTH],
    second: [[f64; DIFF_WIDTH]; DIFF_WIDTH],
}

fn diff_tables() -> &'static DiffTables {
    static TABLES: OnceLock<DiffTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let xs: Vec<f64> = (0..DIFF_WIDTH).map(|i| i as f64).collect();
        let mut first = [[0.0; DIFF_WIDTH]; DIFF_WIDTH];
        let mut second = [[0.0; DIFF_WIDTH]; DIFF_WIDTH];
        for p in 0..DIFF_WIDTH {
            let c = fornberg(p as f64, &xs, 2);
            for j in 0..DIFF_WIDTH {
                first[p][j] = c[1][j];
                second[p][j] = c[2][j];
            }
        }
        DiffTables { first, second }
    })
}

/// Derivative of order 1 or 2 of uniformly sampled data with spacing h.
///
/// Centered 9-point stencils in the interior, one-sided near the ends.
/// Differences are taken relative to the evaluation node so that constant
/// data differentiates to exactly zero.
pub(crate) fn derivative(values: &[f64], h: f64, order: usize) -> Vec<f64> {
    let n = values.len();
    assert!(n >= DIFF_WIDTH, "derivative needs at least {DIFF_WIDTH} nodes");
    let tables = diff_tables();
    let table = match order {
        1 => &tables.first,
        2 => &tables.second,
        _ => panic!("derivative order {order} not supported"),
    };
    let scale = h.powi(order as i32);
    let half = DIFF_WIDTH / 2;
    (0..n)
        .map(|i| {
            let p = if i < half {
                i
            } else if i + half >= n {
                i + DIFF_WIDTH - n
            } else {
                half
            };
            let start = i - p;
            let centre = values[i];
            let acc: f64 = table[p]
                .iter()
                .zip(&values[start..start + DIFF_WIDTH])
                .map(|(w, v)| w * (v - centre))
                .sum();
            acc / scale
        })
        .collect()
}

// 4-point Gauss-Legendre rule on [-1, 1]; exact for degree 7.
const GL_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GL_W: [f64; 4] = [
    0.347_854_845_137_453_8,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_8,
];

fn lagrange_basis(xs: &[f64], k: usize, x: f64) -> f64 {
    xs.iter()
        .enumerate()
        .filter(|&(j, _)| j != k)
        .map(|(_, &xj)| (x - xj) / (xs[k] - xj))
        .product()
}

/// Weights (in units of h) integrating the local interpolant over the
/// interval [o, o+1] of an 8-node stencil, for each offset o in 0..7.
fn interval_tables() -> &'static [[f64; INT_WIDTH]; INT_WIDTH - 1] {
    static TABLES: OnceLock<[[f64; INT_WIDTH]; INT_WIDTH - 1]> = OnceLock::new();
    TABLES.get_or_init(|| {
        let xs: Vec<f64> = (0..INT_WIDTH).map(|i| i as f64).collect();
        let mut out = [[0.0; INT_WIDTH]; INT_WIDTH - 1];
        for (o, row) in out.iter_mut().enumerate() {
            for (k, w) in row.iter_mut().enumerate() {
                *w = GL_X
                    .iter()
                    .zip(GL_W)
                    .map(|(&x, gw)| 0.5 * gw * lagrange_basis(&xs, k, o as f64 + 0.5 * (x + 1.0)))
                    .sum();
            }
        }
        out
    })
}

/// Integrals of the data over each interval [t_j, t_{j+1}], j = 0..n-1.
pub(crate) fn interval_integrals(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    assert!(n >= INT_WIDTH, "interval integration needs at least {INT_WIDTH} nodes");
    let tables = interval_tables();
    (0..n - 1)
        .map(|j| {
            let start = j.saturating_sub(3).min(n - INT_WIDTH);
            let o = j - start;
            let acc: f64 = tables[o]
                .iter()
                .zip(&values[start..start + INT_WIDTH])
                .map(|(w, v)| w * v)
                .sum();
            acc * h
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_first_derivative_weights() {
        let xs: Vec<f64> = (-4..=4).map(|i| i as f64).collect();
        let c = fornberg(0.0, &xs, 1);
        let expect = [
            1.0 / 280.0,
            -4.0 / 105.0,
            1.0 / 5.0,
            -4.0 / 5.0,
            0.0,
            4.0 / 5.0,
            -1.0 / 5.0,
            4.0 / 105.0,
            -1.0 / 280.0,
        ];
        for (a, b) in c[1].iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivatives_exact_on_polynomials() {
        let h = 0.1;
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * h).collect();
        let v: Vec<f64> = xs.iter().map(|x| x.powi(7) - 3.0 * x.powi(3)).collect();
        let d1 = derivative(&v, h, 1);
        let d2 = derivative(&v, h, 2);
        for (i, x) in xs.iter().enumerate() {
            assert!((d1[i] - (7.0 * x.powi(6) - 9.0 * x * x)).abs() < 1e-9);
            assert!((d2[i] - (42.0 * x.powi(5) - 18.0 * x)).abs() < 1e-7);
        }
    }

    #[test]
    fn constant_differentiates_to_zero() {
        let v = vec![3.7; 30];
        assert!(derivative(&v, 0.01, 1).iter().all(|&x| x == 0.0));
        assert!(derivative(&v, 0.01, 2).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn interval_integrals_exact_on_degree_seven() {
        let h = 0.25;
        let xs: Vec<f64> = (0..12).map(|i| i as f64 * h).collect();
        let v: Vec<f64> = xs.iter().map(|x| x.powi(7)).collect();
        let parts = interval_integrals(&v, h);
        for j in 0..11 {
            let exact = (xs[j + 1].powi(8) - xs[j].powi(8)) / 8.0;
            assert!((parts[j] - exact).abs() < 1e-10 * exact.abs().max(1.0));
        }
    }
}
