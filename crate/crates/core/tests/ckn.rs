use sobolev_core::ckn::*;
use sobolev_core::functionals::{improved_chain, sobolev_deficit};
use sobolev_core::radial::{aubin_talenti_on, inverse_laplacian_radial};
use sobolev_core::specfun::ckn_sharp_constant;
use sobolev_core::testkit::{modulate, modulated_optimizer, Bump, BumpSampler, ProfileSampler};
use sobolev_core::{Dimension, Error, LogGrid, RadialProfile};

const POINTS: [(f64, f64, f64); 5] =
    [(2.0, -0.05, 0.05), (2.0, -0.05, 0.05 / 3.0), (3.0, 0.0, 0.0), (3.0, 0.1, 0.3), (4.0, -0.1, 0.2)];

fn params(&(d, a, b): &(f64, f64, f64)) -> CknParams {
    CknParams::new(a, b, d).unwrap()
}

fn perturbed(prm: &CknParams) -> RadialProfile {
    let u = ckn_optimal_profile(prm).unwrap();
    modulate(&u, &[Bump { amplitude: 0.2, centre: 0.5, width: 1.0 }, Bump { amplitude: -0.15, centre: -1.0, width: 0.6 }])
        .unwrap()
}

#[test]
fn exponents_and_delta() {
    for pt in &POINTS {
        let prm = params(pt);
        assert!((1.0 / prm.p + 1.0 / prm.q - 1.0).abs() < 1e-15);
        assert!((prm.b - (prm.a - prm.a_c + prm.d / prm.p)).abs() < 1e-14);
    }
    // δ = 2/(p - 2)
    for pt in &POINTS[2..] {
        let prm = params(pt);
        assert!((prm.delta - 2.0 / (prm.p - 2.0)).abs() < 1e-13);
    }
    assert!((params(&(3.0, 0.0, 0.0)).delta - 0.5).abs() < 1e-15);
}

#[test]
fn admissibility_and_gate() {
    assert!(matches!(CknParams::new(0.5, 0.6, 3.0), Err(Error::Domain(_))));
    assert!(matches!(CknParams::new(0.0, 1.2, 3.0), Err(Error::Domain(_))));
    assert!(matches!(CknParams::new(-0.1, -0.1, 2.0), Err(Error::Domain(_))));
    assert!(matches!(CknParams::new(-1.0, -0.6, 1.0), Err(Error::Domain(_))));
    assert!(CknParams::new(-1.0, -0.2, 1.0).is_ok());
    let u = aubin_talenti_on(wide_grid(), 2.5, 1.0).unwrap().with_dimension(2.0).unwrap();
    // far below the symmetric region for p = 20
    let broken = CknParams::new(-0.2, -0.1, 2.0).unwrap();
    assert!(matches!(ckn_deficit(&u, &broken), Err(Error::ConstantUnavailable(_))));
    let critical_negative = CknParams::new(-0.2, -0.2, 3.0).unwrap();
    assert!(matches!(critical_negative.sharp_constant(), Err(Error::ConstantUnavailable(_))));
    let p_two = CknParams::new(0.0, 1.0, 3.0).unwrap();
    assert!((p_two.p - 2.0).abs() < 1e-15);
    assert!(matches!(p_two.radial_constant(), Err(Error::ConstantUnavailable(_))));
}

#[test]
fn optimizer_saturates_the_inequality() {
    for pt in &POINTS {
        let prm = params(pt);
        let u = ckn_optimal_profile(&prm).unwrap();
        assert!(u.tag().unwrap().starts_with("ckn_optimizer"));
        assert!(ckn_deficit(&u, &prm).unwrap().abs() <= 1e-6, "{pt:?}");
        let c = prm.sharp_constant().unwrap();
        assert!((rayleigh_quotient(&u, &prm).unwrap() - c).abs() <= 1e-6 * c, "{pt:?}");
        let rep = ckn_square_chain(&u, &prm).unwrap();
        assert!(rep.pass && rep.lhs.abs() <= 1e-6 && rep.rhs.abs() <= 1e-6, "{rep:?}");
    }
}

#[test]
fn unweighted_optimizer_is_aubin_talenti() {
    let prm = CknParams::new(0.0, 0.0, 3.0).unwrap();
    let u = ckn_optimal_profile(&prm).unwrap();
    let at = aubin_talenti_on(wide_grid(), 3.0, 1.0).unwrap();
    for (x, y) in u.values().iter().zip(at.values()) {
        assert!((x - y).abs() <= 1e-13 * y);
    }
}

#[test]
fn reduction_to_sobolev_and_improved_chain() {
    let prm = CknParams::new(0.0, 0.0, 3.0).unwrap();
    let dim = Dimension::new(3.0).unwrap();
    let sd = dim.constants().radial;
    assert!((ckn_sharp_constant(0.0, 0.0, 3.0).unwrap() - dim.constants().sobolev).abs() < 1e-12);
    let mut s = ProfileSampler::new(3.0, LogGrid::default(), 11);
    for _ in 0..10 {
        let u = s.next_profile().unwrap();
        let f = sobolev_deficit(&u).unwrap();
        assert!((ckn_deficit(&u, &prm).unwrap() - f).abs() <= 1e-9 * f.abs().max(1.0));
        let sq = ckn_square(&u, &prm).unwrap();
        let rep = improved_chain(&u, 1.0).unwrap();
        // v = κ^{2-p} u^{p-1}, so the unweighted chain is this one times s_d κ^{2(p-2)}
        let k = sd * sq.kappa.powf(2.0 * (prm.p - 2.0));
        for (x, y) in [(k * sq.dual, rep.lhs), (k * sq.primal, rep.rhs), (k * sq.residual, rep.residual)] {
            assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn la_inverse_reduces_and_inverts() {
    let grid = LogGrid::default();
    let u = modulated_optimizer(3.0, grid.clone(), &[Bump { amplitude: 0.2, centre: 0.3, width: 0.8 }]).unwrap();
    let v = u.map(|x| x.powi(5)).unwrap();
    let zero = CknParams::new(0.0, 0.2, 3.0).unwrap();
    assert_eq!(la_inverse(&v, &zero).unwrap(), inverse_laplacian_radial(&v, 3.0).unwrap());

    let prm = params(&POINTS[3]);
    let w = la_inverse(&v, &prm).unwrap();
    let back = la_apply_scaled(&w, &prm);
    let scale = (0..grid.len()).map(|i| (v.values()[i] * grid.r(i).powi(2)).abs()).fold(0.0, f64::max);
    for (i, b) in back.iter().enumerate() {
        let target = v.values()[i] * grid.r(i).powi(2);
        assert!((b - target).abs() <= 1e-6 * scale, "i = {i}");
    }

    // round trip through the optimizer: v = L_a u*
    let ustar = ckn_optimal_profile_on(&prm, grid.clone()).unwrap();
    let lu = la_apply_scaled(&ustar, &prm);
    let src = RadialProfile::new(3.0, grid.clone(), (0..grid.len()).map(|i| lu[i] / grid.r(i).powi(2)).collect()).unwrap();
    let rec = la_inverse(&src, &prm).unwrap();
    let (lo, hi) = (grid.len() / 8, 7 * grid.len() / 8);
    for i in lo..hi {
        assert!((rec.values()[i] - ustar.values()[i]).abs() <= 1e-6, "i = {i}");
    }

    let v2 = u.map(|x| x.powi(4)).unwrap();
    let sum = v.zip_with(&v2, |x, y| 2.0 * x - 0.5 * y).unwrap();
    let lhs = la_inverse(&sum, &prm).unwrap();
    let (a, b) = (la_inverse(&v, &prm).unwrap(), la_inverse(&v2, &prm).unwrap());
    for i in 0..grid.len() {
        let rhs = 2.0 * a.values()[i] - 0.5 * b.values()[i];
        assert!((lhs.values()[i] - rhs).abs() <= 1e-12 * rhs.abs().max(1e-12));
    }

    let mut bad = prm;
    bad.a = 0.6;
    assert!(matches!(la_inverse(&v, &bad), Err(Error::Domain(_))));
}

#[test]
fn perturbed_optimizer_gives_a_strict_chain() {
    // d = 2, a = -0.05, b = aα/(1+α) with α = -1/2
    let (a, alpha) = (-0.05, -0.5);
    let prm = CknParams::new(a, a * alpha / (1.0 + alpha), 2.0).unwrap();
    let u = perturbed(&prm);
    let sq = ckn_square(&u, &prm).unwrap();
    assert!(sq.dual > 1e-3 && sq.primal - sq.dual > 1e-3, "{sq:?}");
    assert!(sq.identity_gap() <= 1e-9 * sq.primal);
    assert!(ckn_square_chain(&u, &prm).unwrap().pass);
}

#[test]
fn chain_on_random_profiles() {
    for (k, pt) in POINTS.iter().enumerate() {
        let prm = params(pt);
        let base = ckn_optimal_profile(&prm).unwrap();
        let mut s = BumpSampler::new(500 + k as u64, 0.3);
        for _ in 0..30 {
            let u = modulate(&base, &s.next_bumps()).unwrap();
            let rep = ckn_square_chain(&u, &prm).unwrap();
            assert!(rep.pass, "{pt:?}: {rep:?}");
            assert!(rep.rhs >= -1e-8);
            let sq = ckn_square(&u, &prm).unwrap();
            assert!(sq.interpolation_slack() >= -1e-7 * sq.interpolation_rhs);
            assert!(sq.identity_gap() <= 1e-7 * sq.primal.abs().max(sq.kappa.powi(2)));
            assert!((sq.dual_norm_sq - sq.kappa.powi(2)).abs() <= 1e-10 * sq.dual_norm_sq);
        }
    }
}

#[test]
fn symmetry_bracket_examples() {
    let br = symmetry_region(4.0, 3).unwrap();
    assert!((br.lower - (0.5 - (2.0f64 / 3.0).sqrt())).abs() < 1e-15);
    assert!(br.upper.is_some() && symmetry_region(5.0, 3).unwrap().upper.is_none());
    let br = symmetry_region(2.5, 3).unwrap();
    let up = br.upper.unwrap();
    assert!(br.lower <= up);
    assert!((upper_bound_limit(3) - 14.0 / 3.0).abs() < 1e-15);
    assert!(symmetry_region(2.0 + 1e-12, 3).unwrap().lower < -1e5);
    for (p, d) in [(2.0, 3), (6.0, 3), (7.0, 3), (3.0, 1)] {
        assert!(matches!(symmetry_region(p, d), Err(Error::Domain(_))));
    }
    for d in 2..=6u32 {
        let top = if d == 2 { 40.0 } else { 2.0 * d as f64 / (d as f64 - 2.0) };
        for k in 1..200 {
            let p = 2.0 + (top - 2.0) * k as f64 / 200.0;
            let br = symmetry_region(p, d).unwrap();
            if let Some(u) = br.upper {
                assert!(br.lower <= u, "d = {d}, p = {p}");
            }
        }
    }
}

#[test]
fn beta_curve_in_two_dimensions() {
    let ps: Vec<f64> = (1..10).map(|k| 2.0 + 0.4 * k as f64).collect();
    let curve = beta_curve(2, &ps).unwrap();
    for pt in &curve {
        let mid = pt.alpha_mid.unwrap();
        assert!((pt.beta.unwrap() - (mid + 2.0 / pt.p)).abs() < 1e-15);
    }
    assert!(beta_curve(2, &[7.0]).unwrap()[0].beta.is_none());
}
