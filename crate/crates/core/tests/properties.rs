use fwmr_core::analysis::{power_subadditivity_holds, rayleigh_ritz_holds};
use fwmr_core::controller::{
    control_torque, fractional_feedback, virtual_control, virtual_control_derivative,
    ControllerGains, ReferenceSample, TrackingState,
};
use fwmr_core::model::{
    body_torque_from_wheel, mass_matrix, rotation_matrix, wheel_jacobian, wheel_pseudo_inverse,
    wheel_torque_from_body, BodyWrench, RobotParams,
};
use fwmr_core::sim::ReferenceKind;
use fwmr_core::Pose;
use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use proptest::prelude::*;

fn positive() -> impl Strategy<Value = f64> {
    // Log-uniform over [1e-3, 1e3].
    (-3.0f64..3.0).prop_map(|e| 10f64.powf(e))
}

prop_compose! {
    fn robot()(
        mass in positive(),
        yaw_inertia in positive(),
        wheel_inertia in positive(),
        wheel_radius in positive(),
        l1 in positive(),
        l2 in positive(),
        damping in prop::array::uniform4(positive()),
    ) -> RobotParams {
        RobotParams { mass, yaw_inertia, wheel_inertia, wheel_radius, l1, l2, damping }
    }
}

fn vec3(range: f64) -> impl Strategy<Value = Vector3<f64>> {
    prop::array::uniform3(-range..range).prop_map(Vector3::from)
}

/// Symmetric positive definite with eigenvalues in `[0.2, 5]`.
fn spd() -> impl Strategy<Value = Matrix3<f64>> {
    (prop::array::uniform3(0.2f64..5.0), vec3(1.0), -3.0f64..3.0).prop_map(|(eig, axis, angle)| {
        let axis = if axis.norm() < 1e-3 {
            Vector3::z()
        } else {
            axis
        };
        let r = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle);
        let m = r.matrix() * Matrix3::from_diagonal(&Vector3::from(eig)) * r.matrix().transpose();
        (m + m.transpose()) * 0.5
    })
}

fn gains() -> impl Strategy<Value = ControllerGains> {
    (spd(), spd(), 0.55f64..1.0).prop_map(|(k_eta, k_z, alpha)| ControllerGains {
        k_eta,
        k_z,
        alpha,
    })
}

fn reference() -> impl Strategy<Value = ReferenceKind> {
    (
        vec3(2.0),
        vec3(1.0),
        vec3(1.0),
        prop::array::uniform3(0.0f64..2.0),
        vec3(3.0),
    )
        .prop_map(|(o, v, a, w, p)| ReferenceKind::Custom {
            origin: o.into(),
            velocity: v.into(),
            amplitude: a.into(),
            frequency: w,
            phase: p.into(),
        })
}

proptest! {
    #[test]
    fn rotation_is_orthonormal(theta in -100.0f64..100.0) {
        let q = rotation_matrix(theta).unwrap();
        prop_assert!((q * q.transpose() - Matrix3::identity()).amax() < 1e-12);
        prop_assert!((q.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_is_right_inverse(p in robot()) {
        let id = wheel_jacobian(&p) * wheel_pseudo_inverse(&p);
        prop_assert!((id - Matrix3::identity()).amax() < 1e-12, "{id}");
    }

    #[test]
    fn mass_matrix_is_spd(p in robot()) {
        let m = mass_matrix(&p);
        prop_assert!((m - m.transpose()).amax() == 0.0);
        let eig = m.symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() > 0.0, "{eig}");
    }

    #[test]
    fn wheel_torque_round_trip(p in robot(), w in vec3(10.0)) {
        let back = body_torque_from_wheel(
            wheel_torque_from_body(BodyWrench::from_vector(&w), &p),
            &p,
        )
        .unwrap()
        .to_vector();
        let eig = mass_matrix(&p).symmetric_eigen().eigenvalues;
        let sv = wheel_jacobian(&p).singular_values();
        let cond = eig.max() / eig.min() * sv.max() / sv.min();
        prop_assert!((back - w).norm() <= 1e-13 * cond * (1.0 + w.norm()), "{back} vs {w}");
    }

    #[test]
    fn rayleigh_ritz(n in 1usize..6, seed in prop::collection::vec(-3.0f64..3.0, 36), x in prop::collection::vec(-10.0f64..10.0, 6)) {
        let a = DMatrix::from_iterator(n, n, seed.into_iter().take(n * n));
        let p = &a * a.transpose() + DMatrix::identity(n, n) * 1e-3;
        let x = DVector::from_iterator(n, x.into_iter().take(n));
        prop_assert!(rayleigh_ritz_holds(&p, &x));
    }

    #[test]
    fn subadditivity(a1 in 1e-6f64..1e3, a2 in 1e-6f64..1e3, c in 0.01f64..0.99) {
        prop_assert!(power_subadditivity_holds(a1, a2, c));
    }

    #[test]
    fn fractional_feedback_has_norm_to_the_alpha(e in vec3(5.0), alpha in 0.51f64..1.0) {
        prop_assume!(e.norm() > 1e-6);
        let f = fractional_feedback(&e, alpha);
        prop_assert!((f.norm() - e.norm().powf(alpha)).abs() < 1e-12 * (1.0 + f.norm()));
        prop_assert!((f.normalize() - e.normalize()).norm() < 1e-12);
    }

    #[test]
    fn psi_dot_matches_finite_difference(
        g in gains(),
        kind in reference(),
        t0 in 0.0f64..10.0,
        pose in vec3(3.0),
        nu in vec3(2.0),
    ) {
        let r0 = kind.sample(t0);
        let e0 = pose - r0.pose.to_vector();
        prop_assume!(e0.norm() > 1e-3);
        let q = rotation_matrix(pose[2]).unwrap();
        let eta_dot = q.transpose() * nu;
        let psi_at = |s: f64| {
            let r = kind.sample(t0 + s);
            let eta = pose + eta_dot * s;
            virtual_control(&(eta - r.pose.to_vector()), eta[2], &r, &g).unwrap()
        };
        let ds = 1e-6 * e0.norm().min(1.0);
        let fd = (psi_at(ds) - psi_at(-ds)) / (2.0 * ds);
        let analytic = virtual_control_derivative(
            &e0,
            &(eta_dot - r0.velocity),
            pose[2],
            nu[2],
            &r0,
            &g,
        )
        .unwrap();
        prop_assert!(
            (fd - analytic).norm() <= 1e-4 * analytic.norm().max(1.0),
            "fd {fd} analytic {analytic}"
        );
    }

    #[test]
    fn torque_is_continuous_at_alpha_one(
        g in gains(),
        pose_error in vec3(3.0),
        velocity_error in vec3(3.0),
        theta in -3.0f64..3.0,
    ) {
        let r = ReferenceSample::stationary(0.0, Pose::default());
        let state = TrackingState { pose_error, velocity_error };
        let drag = Matrix3::from_diagonal(&Vector3::new(-0.1, -0.1, -0.2));
        let tau = |alpha: f64| {
            control_torque(&state, theta, &r, &g.with_alpha(alpha), &drag)
                .unwrap()
                .torque
                .to_vector()
        };
        let limit = tau(1.0);
        let gaps: Vec<f64> = (2..=6)
            .map(|k| (tau(1.0 - 10f64.powi(-k)) - limit).norm())
            .collect();
        for w in gaps.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{gaps:?}");
        }
        prop_assert!(gaps[4] < 1e-3 * (1.0 + limit.norm()));
    }
}
