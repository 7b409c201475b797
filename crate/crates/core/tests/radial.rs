use std::f64::consts::PI;

use sobolev_core::radial::{
    aubin_talenti, aubin_talenti_on, dirichlet_energy, emden_fowler, inverse_emden_fowler,
    inverse_laplacian_radial, moment, scaled_laplacian, LogGrid, RadialProfile,
};
use sobolev_core::specfun::sd_radial_constant;
use sobolev_core::testkit::ProfileSampler;
use sobolev_core::Error;

#[test]
fn critical_moment_of_optimizer() {
    let u = aubin_talenti(3.0, 1.0).unwrap();
    assert!((moment(&u, 6.0, 2.0).unwrap() - PI / 16.0).abs() < 1e-12);
    let zero = u.map(|_| 0.0).unwrap();
    assert_eq!(moment(&zero, 6.0, 2.0).unwrap(), 0.0);
}

#[test]
fn emden_fowler_preserves_critical_moment() {
    for &d in &[3.0, 4.0, 2.5] {
        let p = 2.0 * d / (d - 2.0);
        let mut sampler = ProfileSampler::new(d, LogGrid::default(), 3);
        let u = sampler.next_profile().unwrap();
        let w = emden_fowler(&u);
        let lhs = moment(&u, p, d - 1.0).unwrap();
        let wp: Vec<f64> = w.values().iter().map(|x| x.powf(p)).collect();
        let rhs = 2f64.powf(-d) * u.grid().integrate_t(&wp).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * lhs);
    }
}

#[test]
fn emden_fowler_round_trip_and_optimizer() {
    let d = 3.0;
    let mut sampler = ProfileSampler::new(d, LogGrid::default(), 11);
    let u = sampler.next_profile().unwrap();
    let back = inverse_emden_fowler(&emden_fowler(&u));
    for (a, b) in u.values().iter().zip(back.values()) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
    }
    for &d in &[3.0, 5.0] {
        let w = emden_fowler(&aubin_talenti(d, 1.0).unwrap());
        for (i, x) in w.values().iter().enumerate() {
            let t = w.grid().t(i);
            let exact = t.cosh().powf(-0.5 * (d - 2.0));
            assert!((x - exact).abs() < 1e-13 * exact.max(1e-300) + 1e-300);
        }
        // -(p-2)² w'' + 4w - 2p w^{p-1} = 0
        let p = 2.0 * d / (d - 2.0);
        let wtt = w.grid().diff_t(w.values(), 2);
        for i in (100..1948).step_by(50) {
            let x = w.values()[i];
            let res = -(p - 2.0).powi(2) * wtt[i] + 4.0 * x - 2.0 * p * x.powf(p - 1.0);
            assert!(res.abs() < 1e-8 * x.max(1e-12), "d = {d}, i = {i}: {res}");
        }
    }
}

#[test]
fn optimizer_saturates_radial_sobolev() {
    let u = aubin_talenti(3.0, 1.0).unwrap();
    let e = dirichlet_energy(&u).unwrap();
    let p = moment(&u, 6.0, 2.0).unwrap();
    assert!((sd_radial_constant(3.0).unwrap() * e - p.powf(1.0 / 3.0)).abs() < 1e-10);
    // ∫ u*'² r² dr = 3π/16 in closed form
    assert!((e - 3.0 * PI / 16.0).abs() < 1e-12);
}

#[test]
fn constant_has_zero_energy() {
    let c = RadialProfile::from_fn(3.0, LogGrid::default(), |_| 2.5).unwrap();
    assert_eq!(dirichlet_energy(&c).unwrap(), 0.0);
}

#[test]
fn energy_and_moment_converge_under_refinement() {
    let mut sampler = ProfileSampler::new(3.0, LogGrid::default(), 21);
    let bumps = sampler.next_bumps();
    let coarse = LogGrid::symmetric(14.0, 512).unwrap();
    let mid = coarse.refined();
    let fine = mid.refined();
    let eval = |g: &LogGrid| {
        let u = sobolev_core::testkit::modulated_optimizer(3.0, g.clone(), &bumps).unwrap();
        (dirichlet_energy(&u).unwrap(), moment(&u, 6.0, 2.0).unwrap())
    };
    let (e0, m0) = eval(&coarse);
    let (e1, m1) = eval(&mid);
    let (e2, m2) = eval(&fine);
    assert!((e1 - e2).abs() < 1e-7 * e2);
    assert!((m1 - m2).abs() < 1e-9 * m2);
    // error at least halves under refinement, and the default grid is converged
    assert!((e1 - e2).abs() <= 0.5 * (e0 - e2).abs() + 1e-14);
    let default = eval(&LogGrid::default());
    assert!((default.0 - e2).abs() < 1e-8 * e2);
    let _ = m0;
}

#[test]
fn inverse_laplacian_is_linear_and_inverts() {
    let grid = LogGrid::default();
    let d = 3.0;
    let bump = |c: f64| move |t: f64| (-(t - c).powi(2) * 4.0).exp();
    let v1 = RadialProfile::from_t_fn(d, grid.clone(), bump(0.5)).unwrap();
    let v2 = RadialProfile::from_t_fn(d, grid.clone(), bump(-1.0)).unwrap();
    let (a, b) = (1.7, -0.4);
    let combo = v1.zip_with(&v2, |x, y| a * x + b * y).unwrap();
    let w1 = inverse_laplacian_radial(&v1, d).unwrap();
    let w2 = inverse_laplacian_radial(&v2, d).unwrap();
    let wc = inverse_laplacian_radial(&combo, d).unwrap();
    let scale = wc.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for i in 0..grid.len() {
        let lin = a * w1.values()[i] + b * w2.values()[i];
        assert!((wc.values()[i] - lin).abs() < 1e-10 * scale);
    }
    // -r²Δw recovers r² v on the interior
    let lap = scaled_laplacian(&w1, d);
    let vmax = v1.values().iter().zip(grid.r_nodes()).fold(0.0f64, |m, (v, r)| m.max(v * r * r));
    for (i, l) in lap.iter().enumerate().take(grid.len() - 50).skip(50) {
        let r2v = grid.r(i).powi(2) * v1.values()[i];
        assert!((l + r2v).abs() < 1e-6 * vmax, "i = {i}");
    }
    // vanishes at infinity
    assert!(w1.values()[0].abs() < 1e-6 * scale);
    let zero = v1.map(|_| 0.0).unwrap();
    assert!(inverse_laplacian_radial(&zero, d).unwrap().values().iter().all(|&x| x == 0.0));
}

#[test]
fn inverse_laplacian_rejects_bad_input() {
    let grid = LogGrid::default();
    // v = r^{-3.5} is not integrable against r² near 0
    let v = RadialProfile::from_fn(3.0, grid.clone(), |r| r.powf(-3.5) / (1.0 + r * r).powi(4)).unwrap();
    assert!(matches!(inverse_laplacian_radial(&v, 3.0), Err(Error::Domain(_))));
    let ok = RadialProfile::from_fn(3.0, grid, |r| (1.0 + r * r).powi(-4)).unwrap();
    assert!(matches!(inverse_laplacian_radial(&ok, 1.5), Err(Error::Domain(_))));
}

#[test]
fn aubin_talenti_point_values() {
    let grid = LogGrid::symmetric(2.0, 65).unwrap();
    let u = aubin_talenti_on(grid.clone(), 4.0, 1.0).unwrap();
    assert!((u.values()[32] - 0.5).abs() < 1e-15);
    assert_eq!(u.tag(), Some("aubin-talenti(1)"));
    let u3 = aubin_talenti(3.0, 1.0).unwrap();
    assert!((u3.values()[u3.grid().len() - 1] - 1.0).abs() < 1e-12);
    assert!(aubin_talenti(3.0, 0.0).is_err());
}

#[test]
fn csv_round_trip() {
    let u = aubin_talenti_on(LogGrid::symmetric(10.0, 128).unwrap(), 3.0, 1.0).unwrap();
    let mut buf = Vec::new();
    u.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,r,value\n"));
    assert!(!text.contains('\r'));
    let back = RadialProfile::read_csv(3.0, buf.as_slice()).unwrap();
    assert_eq!(back.values(), u.values());
    assert_eq!(back.grid().len(), 128);
}
