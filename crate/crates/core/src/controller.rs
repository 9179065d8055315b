//! Finite-time backstepping tracking law.
//!
//! The outer loop commands a body velocity `Ψ` that drives the pose error
//! `η̃ = η − η_d` to zero in finite time; the inner loop shapes the wrench
//! `τ̄` so that the velocity error `z₂ = ν − Ψ` follows. Both loops use the
//! fractional feedback `K e / ‖e‖^(1−α)`; `α = 1` gives the classical
//! asymptotic backstepping controller.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ControlError, GainError};
use crate::model::{rotation, rotation_matrix_derivative, BodyVelocity, BodyWrench, Pose};

/// Norms below this are treated as exactly zero in the fractional terms.
pub const SINGULARITY_EPS: f64 = 1e-12;

/// Relative tolerance used when checking gain symmetry.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerGains {
    /// Pose-loop gain `K_η`.
    pub k_eta: Matrix3<f64>,
    /// Velocity-loop gain `K_z`.
    pub k_z: Matrix3<f64>,
    /// Fractional exponent, `½ < α ≤ 1`.
    pub alpha: f64,
}

impl ControllerGains {
    pub fn diagonal(k_eta: [f64; 3], k_z: [f64; 3], alpha: f64) -> Self {
        Self {
            k_eta: Matrix3::from_diagonal(&Vector3::from(k_eta)),
            k_z: Matrix3::from_diagonal(&Vector3::from(k_z)),
            alpha,
        }
    }

    /// `K_η = diag(λ₁, λ₁, λ₁/2)`, `K_z = diag(λ₂, λ₂, λ₂/2)`.
    pub fn from_tuning(lambda1: f64, lambda2: f64, alpha: f64) -> Self {
        Self::diagonal(
            [lambda1, lambda1, 0.5 * lambda1],
            [lambda2, lambda2, 0.5 * lambda2],
            alpha,
        )
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Smallest eigenvalue of `K_η`.
    pub fn lambda_min_eta(&self) -> f64 {
        min_eigenvalue(&self.k_eta)
    }

    /// Smallest eigenvalue of `K_z`.
    pub fn lambda_min_z(&self) -> f64 {
        min_eigenvalue(&self.k_z)
    }

    pub fn validate(&self) -> Result<(), GainError> {
        validate_gains(self)
    }
}

/// `K_η = I`, `K_z = diag(4, 4, 2)`, `α = 0.75`.
impl Default for ControllerGains {
    fn default() -> Self {
        Self::diagonal([1.0; 3], [4.0, 4.0, 2.0], 0.75)
    }
}

pub(crate) fn min_eigenvalue(m: &Matrix3<f64>) -> f64 {
    m.symmetric_eigen().eigenvalues.min()
}

/// Accepts iff both gain matrices are symmetric positive definite and `½ < α ≤ 1`.
pub fn validate_gains(gains: &ControllerGains) -> Result<(), GainError> {
    for (which, k) in [("K_eta", &gains.k_eta), ("K_z", &gains.k_z)] {
        if k.iter().any(|v| !v.is_finite()) {
            return Err(GainError::NonFinite { which });
        }
        let scale = k.amax().max(1.0);
        if (k - k.transpose()).amax() > SYMMETRY_TOL * scale {
            return Err(GainError::NotSymmetric { which });
        }
        let min_eigenvalue = min_eigenvalue(k);
        if min_eigenvalue <= 0.0 {
            return Err(GainError::NotPositiveDefinite {
                which,
                min_eigenvalue,
            });
        }
    }
    check_alpha(gains.alpha)
}

#[inline]
fn check_alpha(alpha: f64) -> Result<(), GainError> {
    if alpha > 0.5 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(GainError::AlphaOutOfRange(alpha))
    }
}

/// `e / ‖e‖^(1−α)`, zero below [`SINGULARITY_EPS`].
#[inline]
pub fn fractional_feedback(e: &Vector3<f64>, alpha: f64) -> Vector3<f64> {
    let n = e.norm();
    if n < SINGULARITY_EPS {
        Vector3::zeros()
    } else {
        e * n.powf(alpha - 1.0)
    }
}

/// Desired pose and its first two time derivatives, all inertial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub time: f64,
    pub pose: Pose,
    pub velocity: Vector3<f64>,
    pub acceleration: Vector3<f64>,
}

impl ReferenceSample {
    /// Stationary reference at `pose`.
    pub fn stationary(time: f64, pose: Pose) -> Self {
        Self {
            time,
            pose,
            velocity: Vector3::zeros(),
            acceleration: Vector3::zeros(),
        }
    }
}

/// Error coordinates driven to zero by the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackingState {
    /// `η̃ = η − η_d`, inertial.
    pub pose_error: Vector3<f64>,
    /// `z₂ = ν − Ψ(η̃)`, body frame.
    pub velocity_error: Vector3<f64>,
}

impl TrackingState {
    /// Builds the error pair from the measured pose and body velocity.
    pub fn measure(
        pose: Pose,
        velocity: BodyVelocity,
        reference: &ReferenceSample,
        gains: &ControllerGains,
    ) -> Result<Self, ControlError> {
        let pose_error = pose.to_vector() - reference.pose.to_vector();
        let psi = virtual_control(&pose_error, pose.theta, reference, gains)?;
        Ok(Self {
            pose_error,
            velocity_error: velocity.to_vector() - psi,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.pose_error
            .iter()
            .chain(self.velocity_error.iter())
            .all(|v| v.is_finite())
    }
}

/// Virtual body-velocity command `Ψ = Q(θ)(η̇_d − K_η η̃/‖η̃‖^(1−α))`.
pub fn virtual_control(
    pose_error: &Vector3<f64>,
    theta: f64,
    reference: &ReferenceSample,
    gains: &ControllerGains,
) -> Result<Vector3<f64>, GainError> {
    check_alpha(gains.alpha)?;
    Ok(rotation(theta) * inertial_command(pose_error, reference, gains))
}

#[inline]
fn inertial_command(
    pose_error: &Vector3<f64>,
    reference: &ReferenceSample,
    gains: &ControllerGains,
) -> Vector3<f64> {
    reference.velocity - gains.k_eta * fractional_feedback(pose_error, gains.alpha)
}

/// Analytic time derivative of [`virtual_control`].
///
/// `pose_error_rate` is `η̇̃ = Q(θ)ᵀν − η̇_d`, and `theta_rate` is `θ̇ = ω`.
pub fn virtual_control_derivative(
    pose_error: &Vector3<f64>,
    pose_error_rate: &Vector3<f64>,
    theta: f64,
    theta_rate: f64,
    reference: &ReferenceSample,
    gains: &ControllerGains,
) -> Result<Vector3<f64>, GainError> {
    check_alpha(gains.alpha)?;
    let alpha = gains.alpha;
    let q = rotation(theta);
    let q_dot = rotation_matrix_derivative(theta) * theta_rate;

    let frame_term = q_dot * inertial_command(pose_error, reference, gains);
    let n = pose_error.norm();
    if n < SINGULARITY_EPS {
        return Ok(frame_term + q * reference.acceleration);
    }
    let scale = n.powf(alpha - 1.0);
    let rate_term = q * (reference.acceleration - gains.k_eta * pose_error_rate * scale);
    let radial = pose_error.dot(pose_error_rate) * (alpha - 1.0) * n.powf(alpha - 3.0);
    let radial_term = q * (gains.k_eta * pose_error * radial);
    Ok(frame_term + rate_term - radial_term)
}

/// Everything the controller computes in one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub state: TrackingState,
    pub psi: Vector3<f64>,
    pub psi_dot: Vector3<f64>,
    pub torque: BodyWrench,
}

/// Feedback wrench
/// `τ̄ = −Q(θ)η̃ − F(z₂+Ψ) + Ψ̇ − K_z z₂/‖z₂‖^(1−α)`.
///
/// The coupling term projects the inertial pose error into the body frame,
/// which cancels the `η̃ᵀQᵀz₂` cross term of `V̇₁` exactly.
pub fn control_torque(
    state: &TrackingState,
    theta: f64,
    reference: &ReferenceSample,
    gains: &ControllerGains,
    drag: &Matrix3<f64>,
) -> Result<ControlOutput, ControlError> {
    if !state.is_finite() {
        return Err(ControlError::NonFiniteState("tracking error"));
    }
    if !theta.is_finite() {
        return Err(ControlError::NonFiniteState("heading"));
    }
    let psi = virtual_control(&state.pose_error, theta, reference, gains)?;
    let nu = state.velocity_error + psi;
    let q = rotation(theta);
    let pose_error_rate = q.transpose() * nu - reference.velocity;
    let psi_dot = virtual_control_derivative(
        &state.pose_error,
        &pose_error_rate,
        theta,
        nu[2],
        reference,
        gains,
    )?;
    let tau = -(q * state.pose_error) - drag * nu + psi_dot
        - gains.k_z * fractional_feedback(&state.velocity_error, gains.alpha);
    if tau.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::NonFiniteState("torque"));
    }
    Ok(ControlOutput {
        state: *state,
        psi,
        psi_dot,
        torque: BodyWrench::from_vector(&tau),
    })
}

/// Measures the error state from `(η, ν)` and evaluates [`control_torque`].
pub fn evaluate(
    pose: Pose,
    velocity: BodyVelocity,
    reference: &ReferenceSample,
    gains: &ControllerGains,
    drag: &Matrix3<f64>,
) -> Result<ControlOutput, ControlError> {
    if !velocity.is_finite() {
        return Err(ControlError::NonFiniteState("velocity"));
    }
    let state = TrackingState::measure(pose, velocity, reference, gains)?;
    control_torque(&state, pose.theta, reference, gains, drag)
}

/// Component-wise symmetric clamp to `[-limit, limit]`.
pub fn saturate(wrench: BodyWrench, limit: f64) -> BodyWrench {
    BodyWrench::new(
        wrench.u.clamp(-limit, limit),
        wrench.v.clamp(-limit, limit),
        wrench.omega.clamp(-limit, limit),
    )
}
