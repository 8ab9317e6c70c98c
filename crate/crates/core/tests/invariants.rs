//! Property tests for the geometric invariants across modules.

use holocurve::classify::{b1_unitary_equivalence, weighted_shift_similarity, Verdict};
use holocurve::curves::{holomorphy_check, idempotency_residual, thm1_report, unitary_invariance_residual, ExtendedCurve};
use holocurve::flags::{fb2_projection, fb2_theta_relation};
use holocurve::geometry::{conjugation_trace_check, gram, DerivPlan, Step};
use holocurve::model::{
    derivative_frame, random_unitary, section_from_kernel, DiagonalKernelSpec, Fb2Model, Frame, Polynomial, SignConvention,
};
use holocurve::scalar::{cplx, C};
use holocurve::MultiIndex;
use proptest::prelude::*;

fn c(a: f64, b: f64) -> C<f64> {
    cplx(a, b)
}

fn point_in_disk(r: f64) -> impl Strategy<Value = Vec<C<f64>>> {
    (0.0..r, 0.0..std::f64::consts::TAU).prop_map(|(rho, a)| vec![c(rho * a.cos(), rho * a.sin())])
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![Just(Step::Hol(1)), Just(Step::AntiHol(1))]
}

fn plan(max: usize) -> impl Strategy<Value = DerivPlan> {
    prop::collection::vec(step(), 0..=max).prop_map(DerivPlan::new)
}

fn hardy_frame(rank: usize) -> Frame<f64> {
    derivative_frame(&section_from_kernel(&DiagonalKernelSpec::hardy(1, 30)), rank).unwrap()
}

fn bergman_frame(rank: usize) -> Frame<f64> {
    derivative_frame(&section_from_kernel(&DiagonalKernelSpec::bergman(30)), rank).unwrap()
}

// ----------------------------------------------------------------------------
// Classical geometry

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frame_change_conjugates_covariant_derivatives(
        at in point_in_disk(0.5),
        coeffs in prop::collection::vec(-0.4f64..0.4, 4),
        p in plan(3),
    ) {
        // φ = [[1 + aλ, b], [cλ², 1 + dλ]] stays invertible on the disk
        let poly = |cs: &[(u32, f64)]| {
            let mut q = Polynomial::zero(1);
            for &(e, v) in cs {
                q.add_term(MultiIndex::new(vec![e]), c(v, 0.0));
            }
            q
        };
        let phi = vec![
            vec![poly(&[(0, 1.0), (1, coeffs[0])]), poly(&[(0, coeffs[1])])],
            vec![poly(&[(2, coeffs[2])]), poly(&[(0, 1.0), (1, coeffs[3])])],
        ];
        let f = bergman_frame(2);
        let g = f.times(&phi);
        let caps = p.demand();
        let caps = (caps.0.max(1), caps.1.max(1));
        let (hf, hg) = (gram(&f, &f, &at, caps).unwrap(), gram(&g, &g, &at, caps).unwrap());
        let r = conjugation_trace_check(&hf, &hg, &phi, &p).unwrap();
        prop_assert!(r.conjugation < 1e-8, "{r:?}");
        prop_assert!(r.trace < 1e-8, "{r:?}");
    }
}

// ----------------------------------------------------------------------------
// Extended curves

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn extended_curves_are_idempotent_and_holomorphic(at in point_in_disk(0.6), rank in 1usize..3) {
        let curve = ExtendedCurve::new(hardy_frame(rank), bergman_frame(rank)).unwrap();
        prop_assert!(idempotency_residual(&curve, &at).unwrap() < 1e-10);
        let r = holomorphy_check(&curve, &[at]).unwrap();
        prop_assert!(r.max < 1e-9, "{r:?}");
    }

    #[test]
    fn intertwining_and_trace(at in point_in_disk(0.5), p in plan(4), rank in 1usize..3) {
        let curve = ExtendedCurve::projection(bergman_frame(rank));
        let r = thm1_report(&curve, &p, &at).unwrap();
        prop_assert!(r.intertwining < 1e-8 && r.trace < 1e-8, "{r:?}");
    }

    #[test]
    fn unitary_conjugation_is_equivariant(at in point_in_disk(0.5), p in plan(3), seed in 0u64..1000) {
        let curve = ExtendedCurve::new(hardy_frame(2), bergman_frame(2)).unwrap();
        let u = random_unitary(curve.dim(), seed);
        prop_assert!(unitary_invariance_residual(&curve, &u, &p, &at).unwrap() < 1e-8);
    }
}

// ----------------------------------------------------------------------------
// Classification

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn line_verdict_ignores_holomorphic_rescaling(a in -0.5f64..0.5, b in -0.5f64..0.5) {
        let f = hardy_frame(1);
        let phi = Polynomial::univariate(&[c(1.0, 0.0), c(a, b)]);
        let samples = holocurve::model::disk_samples(0.6, 9);
        let v = b1_unitary_equivalence(&f, &f.mul_poly(&phi), &samples, 1e-8).unwrap();
        prop_assert_eq!(v.verdict, Verdict::Equivalent);
        let v = b1_unitary_equivalence(&f.mul_poly(&phi), &bergman_frame(1), &samples, 1e-8).unwrap();
        prop_assert_eq!(v.verdict, Verdict::NotEquivalent);
    }

    #[test]
    fn shift_similarity_is_symmetric(w in prop::collection::vec(0.5f64..2.0, 21)) {
        let a = DiagonalKernelSpec::<f64>::hardy(1, 20);
        let b = DiagonalKernelSpec::<f64>::explicit(1, 20, &w).unwrap();
        let ab = weighted_shift_similarity(&a, &b).unwrap();
        let ba = weighted_shift_similarity(&b, &a).unwrap();
        prop_assert_eq!(ab.verdict, ba.verdict);
        let (x, y) = (ab.trend.unwrap(), ba.trend.unwrap());
        for ((lo, hi), (lo2, hi2)) in x.bounds.iter().zip(&y.bounds) {
            prop_assert!((lo * hi2 - 1.0).abs() < 1e-12 && (hi * lo2 - 1.0).abs() < 1e-12);
        }
    }
}

// ----------------------------------------------------------------------------
// FB₂

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn fb2_reassembly_and_theta(at in point_in_disk(0.6), s in (0.2f64..2.0, -1.0f64..1.0), seed in 0u64..100) {
        let model = Fb2Model::new(DiagonalKernelSpec::bergman(30), DiagonalKernelSpec::hardy(1, 30), c(s.0, s.1))
            .unwrap()
            .rotated(random_unitary(31, seed), random_unitary(31, seed + 1));
        let d = fb2_projection(&model, &at, SignConvention::Plus).unwrap();
        prop_assert!(d.reassembly_residual() < 1e-9);
        prop_assert!(d.idempotency() < 1e-10 && d.self_adjointness() < 1e-10);
        prop_assert!(fb2_theta_relation(&model, &at).unwrap().minus.abs() < 1e-9);
    }
}
