use sobolev_core::functionals::{
    chain_ratio, flow_functionals, hls_deficit, improved_chain, sobolev_deficit, square_expansion,
    square_residual, DEFICIT_TOL, IDENTITY_TOL,
};
use sobolev_core::radial::{aubin_talenti, LogGrid, RadialProfile};
use sobolev_core::spectral::mode_profile;
use sobolev_core::testkit::ProfileSampler;
use sobolev_core::Dimension;

#[test]
fn square_identity_on_random_profiles() {
    for (k, &d) in [3.0, 4.0, 5.0, 2.5, 3.5].iter().enumerate() {
        let mut sampler = ProfileSampler::new(d, LogGrid::default(), 100 + k as u64);
        for _ in 0..100 {
            let u = sampler.next_profile().unwrap();
            let sq = square_expansion(&u).unwrap();
            assert!(sq.sobolev.deficit >= -DEFICIT_TOL);
            assert!(sq.hls_side >= -DEFICIT_TOL);
            assert!(sq.residual >= -DEFICIT_TOL);
            assert!(
                sq.identity_gap() <= IDENTITY_TOL * sq.residual.abs().max(1.0),
                "d = {d}: gap {}",
                sq.identity_gap()
            );
        }
    }
}

#[test]
fn chain_with_unit_ratio_always_passes() {
    let mut sampler = ProfileSampler::new(3.0, LogGrid::default(), 5);
    for _ in 0..100 {
        let u = sampler.next_profile().unwrap();
        let report = improved_chain(&u, 1.0).unwrap();
        assert!(report.pass, "{report:?}");
    }
}

#[test]
fn multiples_and_dilations_of_optimizer_are_equality_cases() {
    let u = aubin_talenti(3.0, 1.0).unwrap();
    for c in [0.3, 1.0, 4.0] {
        let cu = u.map(|x| c * x).unwrap();
        assert!(sobolev_deficit(&cu).unwrap().abs() < 1e-10);
    }
    for lambda in [0.5, 2.0] {
        let ul = aubin_talenti(3.0, lambda).unwrap();
        assert!(square_residual(&ul).unwrap().abs() < 1e-10);
        let report = improved_chain(&ul, 3.0 / 7.0).unwrap();
        assert!(report.pass && report.lhs.abs() < 1e-10 && report.rhs.abs() < 1e-10);
    }
}

#[test]
fn hls_equality_and_flow_functionals() {
    for &d in &[3.0, 4.0] {
        let q = (d + 2.0) / (d - 2.0);
        let v = aubin_talenti(d, 1.0).unwrap().map(|x| x.powf(q)).unwrap();
        assert!(hls_deficit(&v).unwrap().abs() < 1e-10);
        let (j, h) = flow_functionals(&v).unwrap();
        assert!(j > 0.0 && h.abs() < 1e-10);
    }
    let mut sampler = ProfileSampler::new(4.0, LogGrid::default(), 9);
    for _ in 0..10 {
        let v = sampler.next_profile().unwrap().map(|x| x.powi(3)).unwrap();
        let (_, h) = flow_functionals(&v).unwrap();
        assert_eq!(h, -hls_deficit(&v).unwrap());
        assert!(h <= DEFICIT_TOL);
    }
}

#[test]
fn sobolev_deficit_scales_under_dilation() {
    // u(λ r): F scales by λ^{2-d}
    let d = 3.0;
    let grid = LogGrid::default();
    let bump = |r: f64| (1.0 + r * r).powf(-0.5) * (1.0 + 0.3 * (-(r.ln() - 0.5).powi(2)).exp());
    let u = RadialProfile::from_fn(d, grid.clone(), bump).unwrap();
    for lambda in [0.5f64, 2.0] {
        let ul = RadialProfile::from_fn(d, grid.clone(), |r| bump(lambda * r)).unwrap();
        let f = sobolev_deficit(&u).unwrap();
        let fl = sobolev_deficit(&ul).unwrap();
        assert!((fl - lambda.powf(2.0 - d) * f).abs() < 1e-9 * f.abs().max(1e-3));
        // both sides of the chain scale alike, so the ratio is dilation invariant
        let r0 = chain_ratio(&u).unwrap();
        let r1 = chain_ratio(&ul).unwrap();
        assert!((r0 - r1).abs() < 1e-7);
    }
}

#[test]
fn perturbation_along_second_mode() {
    for &d in &[3.0, 4.0] {
        let dim = Dimension::new(d).unwrap();
        let f2 = mode_profile(2, dim).unwrap();
        let ustar = aubin_talenti(d, 1.0).unwrap();
        let u = ustar.zip_with(&f2.profile, |a, b| a + 0.1 * b).unwrap();
        assert!(sobolev_deficit(&u).unwrap() > 0.0);

        let eps = 1e-3;
        let u = ustar.zip_with(&f2.profile, |a, b| a + eps * b).unwrap();
        let ratio = chain_ratio(&u).unwrap();
        let target = d / (d + 4.0);
        assert!((ratio - target).abs() < 20.0 * eps, "d = {d}: ratio {ratio} vs {target}");
        let report = improved_chain(&u, target).unwrap();
        assert!(report.residual >= 0.0);
    }
}
