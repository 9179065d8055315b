//! Kinematic and dynamic model of a four-wheeled mecanum robot.
//!
//! Frames: the inertial frame carries the pose `η = (x, y, θ)`; the body
//! frame carries the velocity `ν = (u, v, ω)`. [`rotation_matrix`] maps
//! inertial velocities into the body frame, so `η̇ = Q(θ)ᵀ ν`.
//!
//! Wheels are numbered 1..4 in the order used by the wheel Jacobian rows.

use nalgebra::{Cholesky, Matrix3, Matrix4, SMatrix, Vector3, Vector4, U4};
use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// 3×4 wheel-to-body velocity Jacobian.
pub type WheelJacobian = SMatrix<f64, 3, 4>;
/// 4×3 body-to-wheel right inverse of [`WheelJacobian`].
pub type WheelPseudoInverse = SMatrix<f64, 4, 3>;

/// Physical constants of the platform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotParams {
    /// Total mass (kg).
    pub mass: f64,
    /// Body yaw inertia about the center of mass (kg·m²).
    pub yaw_inertia: f64,
    /// Inertia of a single wheel about its axle (kg·m²).
    pub wheel_inertia: f64,
    /// Wheel radius (m).
    pub wheel_radius: f64,
    /// Longitudinal distance from the center of mass to the wheel centers (m).
    pub l1: f64,
    /// Lateral distance from the center of mass to the wheel centers (m).
    pub l2: f64,
    /// Viscous friction coefficients of the four wheels (N·m·s/rad).
    pub damping: [f64; 4],
}

impl RobotParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let scalars = [
            ("mass", self.mass),
            ("yaw_inertia", self.yaw_inertia),
            ("wheel_inertia", self.wheel_inertia),
            ("wheel_radius", self.wheel_radius),
            ("l1", self.l1),
            ("l2", self.l2),
        ];
        for (name, value) in scalars {
            if !(value.is_finite() && value > 0.0) {
                return Err(ModelError::InvalidParameter { name, value });
            }
        }
        for (i, &d) in self.damping.iter().enumerate() {
            if !(d.is_finite() && d > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name: DAMPING_NAMES[i],
                    value: d,
                });
            }
        }
        Ok(())
    }

    /// `l1 + l2`, the lever arm that appears in every yaw term.
    pub fn half_track(&self) -> f64 {
        self.l1 + self.l2
    }
}

/// A 10 kg platform with 0.1 m wheels on a 0.5 m × 0.5 m footprint.
impl Default for RobotParams {
    fn default() -> Self {
        Self {
            mass: 10.0,
            yaw_inertia: 0.5,
            wheel_inertia: 0.01,
            wheel_radius: 0.1,
            l1: 0.25,
            l2: 0.25,
            damping: [0.01; 4],
        }
    }
}

const DAMPING_NAMES: [&str; 4] = ["damping[0]", "damping[1]", "damping[2]", "damping[3]"];

/// Pose in the inertial frame. `theta` is kept unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.theta)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Heading wrapped into `[0, 2π)`, for display only.
    pub fn wrapped_heading(&self) -> f64 {
        self.theta.rem_euclid(std::f64::consts::TAU)
    }
}

/// Body-frame velocity `(u, v, ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BodyVelocity {
    pub u: f64,
    pub v: f64,
    pub omega: f64,
}

/// Body-frame force/torque triple `(F_x, F_y, M_z)`; same layout as [`BodyVelocity`].
pub type BodyWrench = BodyVelocity;

impl BodyVelocity {
    pub fn new(u: f64, v: f64, omega: f64) -> Self {
        Self { u, v, omega }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.u, self.v, self.omega)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite() && self.omega.is_finite()
    }
}

/// Wheel angles and rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelState {
    pub angles: [f64; 4],
    pub rates: [f64; 4],
}

impl WheelState {
    /// Body velocity produced by the current wheel rates.
    pub fn body_velocity(&self, params: &RobotParams) -> BodyVelocity {
        let rates = Vector4::from(self.rates);
        BodyVelocity::from_vector(&(wheel_jacobian(params) * rates))
    }
}

/// Torques applied at the four wheel axles (N·m).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WheelTorques(pub [f64; 4]);

impl WheelTorques {
    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::from(self.0)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self([v[0], v[1], v[2], v[3]])
    }
}

/// Which drag map the plant and controller use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DragVariant {
    /// `F = −J M⁻¹ D J†`, constant.
    #[default]
    Derived,
    /// `F(θ) = −J M⁻¹ D J† Q(θ)`, the pose-dependent form.
    Rotated,
}

/// Inertial-to-body velocity rotation.
pub fn rotation_matrix(theta: f64) -> Result<Matrix3<f64>, ModelError> {
    if !theta.is_finite() {
        return Err(ModelError::NonFiniteAngle(theta));
    }
    Ok(rotation(theta))
}

/// Unchecked [`rotation_matrix`] for hot loops where `theta` is known finite.
#[inline]
pub(crate) fn rotation(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// `dQ/dθ`.
#[inline]
pub fn rotation_matrix_derivative(theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    Matrix3::new(-s, c, 0.0, -c, -s, 0.0, 0.0, 0.0, 0.0)
}

pub fn wheel_jacobian(params: &RobotParams) -> WheelJacobian {
    let k = 1.0 / params.half_track();
    WheelJacobian::from_row_slice(&[
        -1.0, 1.0, -1.0, 1.0, //
        1.0, 1.0, 1.0, 1.0, //
        k, -k, -k, k,
    ]) * (params.wheel_radius / 4.0)
}

/// Right inverse of [`wheel_jacobian`]: `J · J† = I₃`.
pub fn wheel_pseudo_inverse(params: &RobotParams) -> WheelPseudoInverse {
    let l = params.half_track();
    WheelPseudoInverse::from_row_slice(&[
        -1.0, 1.0, l, //
        1.0, 1.0, -l, //
        -1.0, 1.0, -l, //
        1.0, 1.0, l,
    ]) / params.wheel_radius
}

/// Wheel-space inertia matrix of the Lagrangian model.
pub fn mass_matrix(params: &RobotParams) -> Matrix4<f64> {
    let (m1, m2, gamma) = mass_coefficients(params);
    let off = m2 - m1;
    Matrix4::new(
        gamma, -m1, m1, off, //
        -m1, gamma, off, m1, //
        m1, off, gamma, -m1, //
        off, m1, -m1, gamma,
    )
}

/// `(m1, m2, Γ)` entries of the inertia matrix.
pub fn mass_coefficients(params: &RobotParams) -> (f64, f64, f64) {
    let r2 = params.wheel_radius * params.wheel_radius;
    let l = params.half_track();
    let m1 = params.yaw_inertia * r2 / (16.0 * l * l);
    let m2 = params.mass * r2 / 8.0;
    (m1, m2, m1 + m2 + params.wheel_inertia)
}

fn damping_matrix(params: &RobotParams) -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::from(params.damping))
}

/// Constant body-frame drag map `F = −J M⁻¹ D J†`.
pub fn drag_map(params: &RobotParams) -> Result<Matrix3<f64>, ModelError> {
    let rhs = damping_matrix(params) * wheel_pseudo_inverse(params);
    Ok(-(wheel_jacobian(params) * mass_solve(params)?.solve(&rhs)))
}

fn mass_solve(params: &RobotParams) -> Result<Cholesky<f64, U4>, ModelError> {
    mass_matrix(params)
        .cholesky()
        .ok_or(ModelError::SingularMassMatrix)
}

/// Wheel torques realising a body wrench: `τ = M J† τ̄`.
pub fn wheel_torque_from_body(wrench: BodyWrench, params: &RobotParams) -> WheelTorques {
    let tau = mass_matrix(params) * wheel_pseudo_inverse(params) * wrench.to_vector();
    WheelTorques::from_vector(&tau)
}

/// Body wrench induced by wheel torques: `τ̄ = J M⁻¹ τ`.
pub fn body_torque_from_wheel(
    torques: WheelTorques,
    params: &RobotParams,
) -> Result<BodyWrench, ModelError> {
    let accel = mass_solve(params)?.solve(&torques.to_vector());
    Ok(BodyWrench::from_vector(&(wheel_jacobian(params) * accel)))
}

/// Validated robot with its constant matrices precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    params: RobotParams,
    drag: Matrix3<f64>,
    variant: DragVariant,
}

impl RobotModel {
    pub fn new(params: RobotParams, variant: DragVariant) -> Result<Self, ModelError> {
        params.validate()?;
        let drag = drag_map(&params)?;
        Ok(Self {
            params,
            drag,
            variant,
        })
    }

    pub fn params(&self) -> &RobotParams {
        &self.params
    }

    pub fn variant(&self) -> DragVariant {
        self.variant
    }

    /// Drag map at heading `theta`; constant unless the rotated variant is selected.
    #[inline]
    pub fn drag_at(&self, theta: f64) -> Matrix3<f64> {
        match self.variant {
            DragVariant::Derived => self.drag,
            DragVariant::Rotated => self.drag * rotation(theta),
        }
    }
}
