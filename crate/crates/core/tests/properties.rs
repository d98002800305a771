use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use holowave::certificate::{
    commutator_identity_defect, cosh_energy, multiplier_gap, nonexistence_certificate, sech_energy,
    sech_energy_physical, CutoffFamily, Verdict,
};
use holowave::holomorphic::{
    holomorphy_defect, make_holomorphic, product_holomorphy_defect, project_ph, ComplexField,
};
use holowave::spectral::{
    derivative, inner, integrate, norm_l2, spectral_inner, tilbert, tilbert_inverse, PeriodicGrid,
    RealField, SpectralField,
};
use holowave::steady::{
    residual_full, residual_sinh, sinh_jacobian_apply, SteadyProfile, WaveParameters,
};

const N: usize = 64;

fn grid() -> PeriodicGrid {
    PeriodicGrid::new(N, 2.0 * PI).unwrap()
}

/// Real field with the given `(re, im)` coefficients on modes `1..`.
fn field(g: PeriodicGrid, modes: &[(f64, f64)], mean: f64) -> RealField {
    let n = g.n_points();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[0] = Complex64::new(mean, 0.0);
    for (i, &(a, b)) in modes.iter().enumerate() {
        c[i + 1] = Complex64::new(a, b);
        c[n - i - 1] = Complex64::new(a, -b);
    }
    SpectralField::new(g, c).unwrap().to_real()
}

fn modes(max: usize, size: f64) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-size..size, -size..size), 1..=max)
}

fn depth() -> impl Strategy<Value = f64> {
    0.2f64..3.0
}

fn bump(g: PeriodicGrid, amp: f64, x0: f64, w: f64) -> RealField {
    RealField::from_centered_fn(g, |a| amp * (-((a - x0) / w).powi(2)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tilbert_is_skew_adjoint(a in modes(31, 1.0), b in modes(31, 1.0), h in depth()) {
        let g = grid();
        let (u, v) = (field(g, &a, 0.3), field(g, &b, -0.1));
        let d = inner(&tilbert(&u, h).unwrap(), &v) + inner(&u, &tilbert(&v, h).unwrap());
        prop_assert!(d.abs() <= 1e-12 * norm_l2(&u) * norm_l2(&v));
    }

    #[test]
    fn tilbert_inverse_recovers_zero_mean_part(a in modes(31, 1.0), mean in -2.0f64..2.0, h in depth()) {
        let g = grid();
        let u = field(g, &a, mean);
        let back = tilbert_inverse(&tilbert(&u, h).unwrap(), h).unwrap();
        let expect = u.map(|x| x - mean);
        prop_assert!(norm_l2(&(&back - &expect)) <= 1e-10 * norm_l2(&expect).max(1e-300));
    }

    #[test]
    fn low_frequency_gap_is_cubic(m in 1usize..31, h in depth()) {
        let g = grid();
        let xi = m as f64;
        let u = RealField::from_fn(g, |a| (xi * a).cos());
        let t = tilbert(&u, h).unwrap();
        let gap = (&t + &derivative(&u).scale(h)).sup_norm();
        prop_assert!(gap / xi.powi(3) <= h.powi(3) / 3.0 * (1.0 + 1e-6) + 1e-13);
    }

    #[test]
    fn parseval(a in modes(20, 1.0), b in modes(20, 1.0)) {
        let g = grid();
        let (u, v) = (field(g, &a, 0.5), field(g, &b, 0.2));
        let phys = integrate(&u.pointwise_mul(&v));
        let spec = spectral_inner(&u.spectrum(), &v.spectrum());
        prop_assert!((phys - spec).abs() <= 1e-12 * (norm_l2(&u) * norm_l2(&v)));
    }

    #[test]
    fn projection_is_idempotent(a in modes(31, 1.0), b in modes(31, 1.0), mean in -1.0f64..1.0, h in depth()) {
        let g = grid();
        let u = ComplexField::new(field(g, &a, mean), field(g, &b, 0.0)).unwrap();
        let p = project_ph(&u, h).unwrap();
        let pp = project_ph(&p.to_complex(), h).unwrap();
        prop_assert!(pp.to_complex().sub(&p.to_complex()).norm_l2() <= 1e-10 * u.norm_l2());
        prop_assert!(holomorphy_defect(&p.to_complex(), h).unwrap() <= 1e-10 * u.norm_l2());
    }

    #[test]
    fn holomorphic_class_is_a_real_algebra(
        a in modes(15, 1.0), b in modes(15, 1.0), s in -3.0f64..3.0, t in -3.0f64..3.0, h in depth()
    ) {
        let g = grid();
        let u = make_holomorphic(&field(g, &a, 0.1), h).unwrap();
        let v = make_holomorphic(&field(g, &b, -0.4), h).unwrap();
        let combo = u.combine(s, &v, t);
        prop_assert!(holomorphy_defect(&combo.to_complex(), h).unwrap() <= 1e-10);
        let scale = u.to_complex().norm_l2() * v.to_complex().norm_l2();
        prop_assert!(product_holomorphy_defect(&u, &v).unwrap() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn residual_full_is_translation_equivariant(a in modes(8, 0.04), shift in 0usize..N, c in 0.2f64..2.0) {
        let g = grid();
        let params = WaveParameters::new(1.0, 1.0, 1.0, c).unwrap();
        let re = field(g, &a, 0.0);
        let p = SteadyProfile::new(make_holomorphic(&re, 1.0).unwrap(), 0.1).unwrap();
        let q = SteadyProfile::new(make_holomorphic(&re.roll(shift), 1.0).unwrap(), 0.1).unwrap();
        let r = residual_full(&p, &params).unwrap();
        let rq = residual_full(&q, &params).unwrap();
        prop_assert!((&rq - &r.roll(shift)).sup_norm() <= 1e-12 * (1.0 + r.sup_norm()));
    }

    #[test]
    fn residual_full_preserves_evenness(coeffs in prop::collection::vec(-0.04f64..0.04, 1..8), c in 0.2f64..2.0) {
        let g = grid();
        let params = WaveParameters::new(1.0, 1.0, 1.0, c).unwrap();
        let even: Vec<(f64, f64)> = coeffs.iter().map(|&x| (x, 0.0)).collect();
        let p = SteadyProfile::new(make_holomorphic(&field(g, &even, 0.0), 1.0).unwrap(), 0.1).unwrap();
        let r = residual_full(&p, &params).unwrap();
        prop_assert!((&r - &r.reflect()).sup_norm() <= 1e-12 * (1.0 + r.sup_norm()));
    }

    #[test]
    fn flat_state_solves_everything(g0 in 0.0f64..5.0, sigma in 0.01f64..5.0, h in depth(), c in -3.0f64..3.0) {
        let g = grid();
        let params = WaveParameters::new(g0, sigma, h, c).unwrap();
        let flat = SteadyProfile::flat(g, h);
        prop_assert_eq!(residual_full(&flat, &params).unwrap().sup_norm(), 0.0);
        prop_assert_eq!(residual_sinh(&RealField::zeros(g), &params).sup_norm(), 0.0);
    }

    #[test]
    fn sinh_jacobian_second_order(a in modes(6, 0.2), b in modes(6, 0.2), c in 0.2f64..1.5) {
        let g = grid();
        let params = WaveParameters::new(0.0, 1.0, 1.0, c).unwrap();
        let (u, du) = (field(g, &a, 0.05), field(g, &b, 0.1));
        let jv = sinh_jacobian_apply(&u, &du, &params);
        let err = |eps: f64| {
            let plus = residual_sinh(&(&u + &du.scale(eps)), &params);
            let minus = residual_sinh(&(&u - &du.scale(eps)), &params);
            norm_l2(&(&(&plus - &minus).scale(0.5 / eps) - &jv))
        };
        let (e3, e4) = (err(1e-3), err(1e-4));
        // Second order until rounding (~1e-16 / eps) takes over.
        prop_assert!(e4 <= 0.02 * e3 + 1e-9, "{e3} {e4}");
    }

    #[test]
    fn energies_are_nonnegative(a in modes(20, 0.5), mean in -1.0f64..1.0, c in 0.0f64..2.0, h in depth()) {
        let g = grid();
        let u = field(g, &a, mean);
        let cosh = cosh_energy(&u, c).unwrap();
        let sech = sech_energy(&u, h);
        prop_assert!(cosh >= 0.0 && sech >= 0.0);
        if c > 0.0 {
            prop_assert!(cosh > 0.0);
        }
        let phys = sech_energy_physical(&u, h);
        prop_assert!((sech - phys).abs() <= 1e-12 * sech.max(f64::MIN_POSITIVE) + 1e-300);
    }

    #[test]
    fn commutator_identity_holds(amp in -0.8f64..0.8, x0 in -8.0f64..8.0, w in 1.0f64..4.0, r in 4.0f64..32.0, h in depth()) {
        let g = PeriodicGrid::new(1024, 256.0).unwrap();
        let u = bump(g, amp, x0, w);
        let check = commutator_identity_defect(&u, &CutoffFamily::new(r).unwrap(), h).unwrap();
        prop_assert!(check.defect <= 1e-8 * norm_l2(&derivative(&u)).powi(2));
        prop_assert!(!check.seam_violation);
    }

    #[test]
    fn multiplier_gap_bound(m in 1i64..512, h in depth()) {
        let g = PeriodicGrid::new(1024, 256.0).unwrap();
        let xi = 2.0 * PI * m as f64 / g.length();
        let (gap, bound) = multiplier_gap(xi, h);
        prop_assert!(gap <= bound * (1.0 + 1e-6));
    }

    #[test]
    fn config_rejects_inadmissible_depth(h in -5.0f64..=0.0) {
        let o = vec![format!("params.h={h:?}")];
        prop_assert!(holowave::config::RunConfig::from_toml("", &o).is_err());
    }
}

#[test]
fn trivial_profile_has_zero_energy() {
    let g = grid();
    let params = WaveParameters::new(0.0, 1.0, 1.0, 0.7).unwrap();
    let report = nonexistence_certificate(&RealField::zeros(g), &params).unwrap();
    assert_eq!(report.cosh_energy + report.sech_energy, 0.0);
    assert_eq!(report.residual_norm, 0.0);
    assert_eq!(report.verdict, Verdict::Trivial);
}

#[test]
fn multiplication_by_i_leaves_the_class() {
    let g = grid();
    let u = make_holomorphic(&RealField::from_fn(g, |a| a.cos()), 1.0).unwrap();
    assert!(holomorphy_defect(&u.to_complex().times_i(), 1.0).unwrap() > 0.1);
}
