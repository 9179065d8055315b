use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::model::rotation;

/// Plant state: inertial pose `η` and body velocity `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub pose: Vector3<f64>,
    pub velocity: Vector3<f64>,
}

impl PlantState {
    pub fn is_finite(&self) -> bool {
        self.pose
            .iter()
            .chain(self.velocity.iter())
            .all(|v| v.is_finite())
    }

    fn axpy(&self, h: f64, d: &PlantState) -> PlantState {
        PlantState {
            pose: self.pose + d.pose * h,
            velocity: self.velocity + d.velocity * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Velocity first, then pose with the updated velocity; wrench held over the step.
    SemiImplicitEuler,
    /// Pose and velocity from the start-of-step state; wrench held over the step.
    ExplicitEuler,
    /// Classical fourth-order Runge–Kutta with the controller re-evaluated at every stage.
    #[default]
    Rk4,
}

/// Time derivative of the plant: `η̇ = Q(θ)ᵀν`, `ν̇ = Fν + τ̄ + τ̄_d`.
#[inline]
pub fn plant_rate(
    state: &PlantState,
    drag: &Matrix3<f64>,
    torque: &Vector3<f64>,
    disturbance: &Vector3<f64>,
) -> PlantState {
    PlantState {
        pose: rotation(state.pose[2]).transpose() * state.velocity,
        velocity: drag * state.velocity + torque + disturbance,
    }
}

/// One semi-implicit Euler step with the wrench held constant:
/// `ν′ = ν + h(Fν + τ̄ + τ̄_d)`, then `η′ = η + h Q(θ)ᵀ ν′`.
pub fn step(
    state: &PlantState,
    torque: &Vector3<f64>,
    disturbance: &Vector3<f64>,
    drag: &Matrix3<f64>,
    h: f64,
) -> PlantState {
    let velocity = state.velocity + (drag * state.velocity + torque + disturbance) * h;
    let pose = state.pose + rotation(state.pose[2]).transpose() * velocity * h;
    PlantState { pose, velocity }
}

/// One explicit Euler step with the wrench held constant.
pub fn explicit_step(
    state: &PlantState,
    torque: &Vector3<f64>,
    disturbance: &Vector3<f64>,
    drag: &Matrix3<f64>,
    h: f64,
) -> PlantState {
    state.axpy(h, &plant_rate(state, drag, torque, disturbance))
}

/// One RK4 step of `ẋ = f(t, x)`; errors from `f` abort the step.
pub fn rk4_step<E>(
    t: f64,
    state: &PlantState,
    h: f64,
    mut f: impl FnMut(f64, &PlantState) -> Result<PlantState, E>,
) -> Result<PlantState, E> {
    let k1 = f(t, state)?;
    let k2 = f(t + 0.5 * h, &state.axpy(0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &state.axpy(0.5 * h, &k2))?;
    let k4 = f(t + h, &state.axpy(h, &k3))?;
    Ok(PlantState {
        pose: state.pose + (k1.pose + (k2.pose + k3.pose) * 2.0 + k4.pose) * (h / 6.0),
        velocity: state.velocity
            + (k1.velocity + (k2.velocity + k3.velocity) * 2.0 + k4.velocity) * (h / 6.0),
    })
}
