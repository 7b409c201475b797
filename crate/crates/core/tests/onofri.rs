use sobolev_core::onofri::{
    dim_limit_check, halving_factors, loghls_deficit, mu_alpha_deficit, onofri_chain, onofri_deficit,
    EpsilonFamily, OnofriProfile, DEFAULT_EPS,
};
use sobolev_core::radial::{weighted_energy, LogGrid, RadialProfile};
use sobolev_core::testkit::{bump_sum, Bump, BumpSampler};
use sobolev_core::Error;

fn profile(f: impl Fn(f64) -> f64) -> RadialProfile {
    RadialProfile::from_t_fn(2.0, LogGrid::default(), f).unwrap()
}

#[test]
fn trivial_profiles_have_zero_deficits() {
    for c in [0.0, 1.3, -4.0] {
        let p = OnofriProfile::standard(profile(|_| c)).unwrap();
        assert!(onofri_deficit(&p).unwrap().abs() < 1e-10, "c = {c}");
        assert!(loghls_deficit(&p).unwrap().abs() < 1e-9, "c = {c}");
        let report = onofri_chain(&p).unwrap();
        assert!(report.pass);
    }
}

#[test]
fn shift_invariance() {
    let f = profile(|t| 0.8 * (-(t - 0.3).powi(2)).exp() - 0.5 * (-(t + 1.0).powi(2) / 0.5).exp());
    let base = onofri_deficit(&OnofriProfile::standard(f.clone()).unwrap()).unwrap();
    for c in [-5.0, -1.0, 2.5, 5.0] {
        let shifted = f.map(|x| x + c).unwrap();
        let val = onofri_deficit(&OnofriProfile::standard(shifted).unwrap()).unwrap();
        assert!((val - base).abs() < 1e-10);
    }
}

#[test]
fn unit_bump_gives_strict_chain() {
    let f = profile(|t| (-t * t).exp());
    let report = onofri_chain(&OnofriProfile::standard(f).unwrap()).unwrap();
    assert!(report.pass);
    assert!(report.lhs > 1e-6 && report.rhs - report.lhs > 1e-6, "{report:?}");
}

#[test]
fn chain_holds_on_random_profiles() {
    for (k, alpha) in [0.0, -0.25, -0.5].into_iter().enumerate() {
        let mut sampler = BumpSampler::new(40 + k as u64, 1.0);
        for _ in 0..50 {
            let f = sampler.next_function(2.0, LogGrid::default()).unwrap();
            let p = OnofriProfile::new(f, alpha).unwrap();
            let report = if alpha == 0.0 { onofri_chain(&p).unwrap() } else { mu_alpha_deficit(&p).unwrap() };
            assert!(report.pass, "alpha = {alpha}: {report:?}");
        }
    }
}

#[test]
fn second_order_expansion() {
    // Q2[f] = (1/8)∫f'² r dr - ½ Var_μ f; zero along the conformal k = 1 direction
    let grid = LogGrid::default();
    let weight = |r: f64| 2.0 * r / (1.0 + r * r).powi(2);
    for shape in [|z: f64| z, |z: f64| 1.5 * z * z - 0.5] {
        let base = RadialProfile::from_fn(2.0, grid.clone(), |r| shape((1.0 - r * r) / (1.0 + r * r))).unwrap();
        let energy = weighted_energy(&base, 1.0).unwrap();
        let w: Vec<f64> = grid.r_nodes().iter().map(|&r| weight(r) / r).collect();
        let m1: Vec<f64> = base.values().iter().zip(&w).map(|(f, w)| f * w).collect();
        let m2: Vec<f64> = base.values().iter().zip(&w).map(|(f, w)| f * f * w).collect();
        let mean = grid.integrate_weighted(&m1, 1.0).unwrap();
        let var = grid.integrate_weighted(&m2, 1.0).unwrap() - mean * mean;
        let q2 = energy / 8.0 - 0.5 * var;
        for delta in [0.05, 0.025] {
            let f = base.map(|x| delta * x).unwrap();
            let val = onofri_deficit(&OnofriProfile::standard(f).unwrap()).unwrap();
            assert!(val >= -1e-12);
            assert!((val - delta * delta * q2).abs() < 5.0 * delta.powi(3), "{val} vs {}", delta * delta * q2);
        }
    }
}

#[test]
fn small_tilt_is_quadratic() {
    // smooth stand-in for the α log r tilt (the literal tilt has infinite energy)
    let tilt = |a: f64| profile(move |t| -2.0 * a * t * (-t * t / 8.0).exp());
    let eval = |a: f64| {
        let r = onofri_chain(&OnofriProfile::standard(tilt(a)).unwrap()).unwrap();
        assert!(r.pass);
        (r.lhs, r.rhs)
    };
    let (l1, r1) = eval(0.02);
    let (l2, r2) = eval(0.01);
    assert!((l1 / l2 - 4.0).abs() < 0.2, "{}", l1 / l2);
    assert!((r1 / r2 - 4.0).abs() < 0.2, "{}", r1 / r2);
}

#[test]
fn mu_alpha_zero_matches_standard_chain() {
    let mut sampler = BumpSampler::new(77, 1.0);
    for _ in 0..5 {
        let f = sampler.next_function(2.0, LogGrid::default()).unwrap();
        let p = OnofriProfile::standard(f).unwrap();
        let chain = onofri_chain(&p).unwrap();
        let mu = mu_alpha_deficit(&p).unwrap();
        let m = p.mass();
        assert!((mu.lhs - chain.lhs / m).abs() < 1e-9);
        assert!((mu.rhs - chain.rhs / m).abs() < 1e-9);
    }
}

#[test]
fn mu_alpha_zero_function_and_strict_bump() {
    for alpha in [0.0, -0.25, -0.5] {
        let p = OnofriProfile::new(profile(|_| 0.0), alpha).unwrap();
        let r = mu_alpha_deficit(&p).unwrap();
        assert!(r.lhs.abs() < 1e-7 && r.rhs.abs() < 1e-10, "alpha = {alpha}: {r:?}");
    }
    let p = OnofriProfile::new(profile(|t| (-(t - 0.5).powi(2)).exp()), -0.5).unwrap();
    let r = mu_alpha_deficit(&p).unwrap();
    assert!(r.pass && r.lhs > 1e-6 && r.rhs - r.lhs > 1e-6, "{r:?}");
}

#[test]
fn loghls_requires_standard_weight() {
    let p = OnofriProfile::new(profile(|_| 0.0), -0.5).unwrap();
    assert!(matches!(loghls_deficit(&p), Err(Error::Domain(_))));
}

#[test]
fn dimensional_limit_converges_linearly() {
    let bumps = [
        Bump { amplitude: 0.8, centre: 0.2, width: 0.7 },
        Bump { amplitude: -0.5, centre: -1.0, width: 1.1 },
    ];
    let f = bump_sum(2.0, LogGrid::default(), &bumps).unwrap();
    let table = dim_limit_check(&f, &DEFAULT_EPS).unwrap();
    for w in table.rows.windows(2) {
        assert!(w[1].sobolev_error < w[0].sobolev_error);
        assert!(w[1].hls_error < w[0].hls_error);
    }
    for x in table.sobolev_factors.iter().chain(&table.hls_factors) {
        assert!((1.5..=2.7).contains(x), "{table:?}");
    }
    let zero = f.map(|_| 0.0).unwrap();
    let z = dim_limit_check(&zero, &DEFAULT_EPS).unwrap();
    for row in z.rows {
        assert!(row.sobolev_scaled.abs() < 1e-5 && row.sobolev_limit.abs() < 1e-12, "{row:?}");
    }
    assert_eq!(halving_factors(&[0.2, 0.1], &[4.0, 2.0]), vec![2.0]);
}

#[test]
fn epsilon_bookkeeping_matches_closed_forms() {
    let grid = LogGrid::new(-60.0, 30.0, 8192).unwrap();
    for alpha in [0.0, -0.5] {
        for eps in [0.2, 0.35, 0.5] {
            let fam = EpsilonFamily::new(alpha, eps).unwrap();
            assert!((fam.b - fam.a - eps).abs() < 1e-15 && (fam.p - 2.0 / eps).abs() < 1e-15);
            let k = fam.kappa_quadrature(grid.clone()).unwrap();
            let l = fam.lambda_quadrature(grid.clone()).unwrap();
            assert!((k - fam.kappa_closed().unwrap()).abs() < 1e-8 * k, "kappa {alpha} {eps}");
            assert!((l - fam.lambda_closed().unwrap()).abs() < 1e-8 * l, "lambda {alpha} {eps}");
        }
    }
}
