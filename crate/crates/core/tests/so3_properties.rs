use hybrid_attitude::so3::{exp, log, psi, skew, vex, weighted_vector_identity, AngleAxis, Mat3, Vec3};
use proptest::prelude::*;

fn vec3(bound: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-bound..bound).prop_map(Vec3::from)
}

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-5.0..5.0f64).prop_map(|a| Mat3::from_row_slice(&a))
}

proptest! {
    #[test]
    fn vex_inverts_skew(x in vec3(10.0)) {
        let s = skew(&x);
        prop_assert_eq!(s.transpose(), -s);
        prop_assert_eq!(vex(&s).unwrap(), x);
    }

    #[test]
    fn trace_pairing_with_psi(m in mat3(), x in vec3(5.0)) {
        let lhs = (m.transpose() * skew(&x)).trace();
        prop_assert!((lhs - 2.0 * x.dot(&psi(&m))).abs() < 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn weighted_identity_holds(
        rhos in prop::collection::vec(0.0..3.0f64, 1..5),
        seed in vec3(3.0),
        rot in vec3(3.0),
    ) {
        let rs: Vec<Vec3> = (0..rhos.len()).map(|i| seed.map(|c| (c * (i + 1) as f64).sin())).collect();
        let (lhs, rhs) = weighted_vector_identity(&rhos, &rs, &exp(&rot));
        prop_assert!((lhs - rhs).amax() < 1e-12);
    }

    #[test]
    fn distance_follows_angle(theta in 0.0..std::f64::consts::PI, axis in vec3(1.0)) {
        prop_assume!(axis.norm() > 1e-3);
        let r = AngleAxis::from_unnormalized(theta, axis).unwrap().to_rotation();
        prop_assert!(r.orthonormality_error() < 1e-12);
        let d = r.distance_to_identity();
        prop_assert!((d * d - (1.0 - theta.cos()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn log_inverts_exp(w in vec3(3.0)) {
        prop_assume!(w.norm() < 3.1);
        prop_assert!((log(&exp(&w)) - w).amax() < 1e-9);
        let back = exp(&w) * exp(&-w);
        prop_assert!(back.distance_to_identity() < 1e-7);
    }
}
