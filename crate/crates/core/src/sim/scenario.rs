use std::f64::consts::{FRAC_PI_4, PI};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::controller::ReferenceSample;
use crate::error::SimError;
use crate::model::Pose;

/// Desired-trajectory family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReferenceKind {
    /// Hold a fixed goal pose.
    PointStabilization {
        #[serde(default)]
        goal: Pose,
    },
    /// `η_d(t) = (v t, A sin(ω t), ψ)`.
    SShape {
        speed: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        heading: f64,
    },
    /// `η_d(t) = (v t, 0, ψ)`.
    Straight {
        speed: f64,
        #[serde(default)]
        heading: f64,
    },
    /// Per-axis `o + v t + A sin(ω t + φ)`.
    Custom {
        origin: [f64; 3],
        velocity: [f64; 3],
        amplitude: [f64; 3],
        frequency: [f64; 3],
        phase: [f64; 3],
    },
}

impl ReferenceKind {
    pub fn sample(&self, t: f64) -> ReferenceSample {
        match *self {
            ReferenceKind::PointStabilization { goal } => ReferenceSample::stationary(t, goal),
            ReferenceKind::SShape {
                speed,
                amplitude,
                frequency,
                heading,
            } => {
                let (s, c) = (frequency * t).sin_cos();
                ReferenceSample {
                    time: t,
                    pose: Pose::new(speed * t, amplitude * s, heading),
                    velocity: Vector3::new(speed, amplitude * frequency * c, 0.0),
                    acceleration: Vector3::new(0.0, -amplitude * frequency * frequency * s, 0.0),
                }
            }
            ReferenceKind::Straight { speed, heading } => ReferenceSample {
                time: t,
                pose: Pose::new(speed * t, 0.0, heading),
                velocity: Vector3::new(speed, 0.0, 0.0),
                acceleration: Vector3::zeros(),
            },
            ReferenceKind::Custom {
                origin,
                velocity,
                amplitude,
                frequency,
                phase,
            } => {
                let mut p = Vector3::zeros();
                let mut v = Vector3::zeros();
                let mut a = Vector3::zeros();
                for i in 0..3 {
                    let (s, c) = (frequency[i] * t + phase[i]).sin_cos();
                    p[i] = origin[i] + velocity[i] * t + amplitude[i] * s;
                    v[i] = velocity[i] + amplitude[i] * frequency[i] * c;
                    a[i] = -amplitude[i] * frequency[i] * frequency[i] * s;
                }
                ReferenceSample {
                    time: t,
                    pose: Pose::from_vector(&p),
                    velocity: v,
                    acceleration: a,
                }
            }
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        let values: Vec<f64> = match *self {
            ReferenceKind::PointStabilization { goal } => vec![goal.x, goal.y, goal.theta],
            ReferenceKind::SShape {
                speed,
                amplitude,
                frequency,
                heading,
            } => vec![speed, amplitude, frequency, heading],
            ReferenceKind::Straight { speed, heading } => vec![speed, heading],
            ReferenceKind::Custom {
                origin,
                velocity,
                amplitude,
                frequency,
                phase,
            } => [origin, velocity, amplitude, frequency, phase].concat(),
        };
        if values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(SimError::Scenario(
                "reference parameters must be finite".into(),
            ))
        }
    }
}

/// Resistive body-x wrench felt while crossing an obstacle:
/// `τ̄_d(x) = −A sin²(π (x − x_s)/(x_e − x_s)) e_x` inside `[x_s, x_e]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumpDisturbance {
    pub start: f64,
    pub end: f64,
    pub peak: f64,
}

impl HumpDisturbance {
    pub fn wrench_at(&self, x: f64) -> Vector3<f64> {
        if x < self.start || x > self.end {
            return Vector3::zeros();
        }
        let s = (PI * (x - self.start) / (self.end - self.start)).sin();
        Vector3::new(-self.peak * s * s, 0.0, 0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.start..=self.end).contains(&x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DisturbanceSpec {
    #[default]
    None,
    /// Constant body-frame wrench.
    Constant {
        wrench: [f64; 3],
    },
    Hump(HumpDisturbance),
}

impl DisturbanceSpec {
    /// Body-frame disturbance wrench at the current pose.
    #[inline]
    pub fn wrench_at(&self, pose: &Vector3<f64>) -> Vector3<f64> {
        match self {
            DisturbanceSpec::None => Vector3::zeros(),
            DisturbanceSpec::Constant { wrench } => Vector3::from(*wrench),
            DisturbanceSpec::Hump(h) => h.wrench_at(pose[0]),
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        match self {
            DisturbanceSpec::None => Ok(()),
            DisturbanceSpec::Constant { wrench } if wrench.iter().all(|v| v.is_finite()) => Ok(()),
            DisturbanceSpec::Constant { .. } => Err(SimError::Scenario(
                "disturbance wrench must be finite".into(),
            )),
            DisturbanceSpec::Hump(h) => {
                if !(h.start.is_finite() && h.end.is_finite() && h.start < h.end) {
                    Err(SimError::Scenario("hump window needs start < end".into()))
                } else if !(h.peak.is_finite() && h.peak >= 0.0) {
                    Err(SimError::Scenario("hump peak must be non-negative".into()))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Everything needed to reproduce one closed-loop run, apart from the
/// robot and the gains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub reference: ReferenceKind,
    /// `η̃(0)`
    pub initial_pose_error: [f64; 3],
    /// `z₂(0)`; the initial body velocity is `Ψ(η̃(0)) + z₂(0)`.
    pub initial_velocity_error: [f64; 3],
    /// Horizon (s).
    pub duration: f64,
    /// Sampling interval of the log and of the metrics (s).
    pub step: f64,
    #[serde(default)]
    pub disturbance: DisturbanceSpec,
}

/// Default sampling interval (s).
pub const DEFAULT_STEP: f64 = 0.01;

impl ScenarioSpec {
    /// Point stabilization to the origin from `(5, −4, π/4, 1, 0.5, −0.5)`.
    pub fn case1() -> Self {
        Self {
            reference: ReferenceKind::PointStabilization {
                goal: Pose::default(),
            },
            initial_pose_error: [5.0, -4.0, FRAC_PI_4],
            initial_velocity_error: [1.0, 0.5, -0.5],
            duration: 30.0,
            step: DEFAULT_STEP,
            disturbance: DisturbanceSpec::None,
        }
    }

    /// S-shaped tracking from `(−1, −2, π/4, −1, 2, 1)`.
    pub fn case2() -> Self {
        Self {
            reference: ReferenceKind::SShape {
                speed: 0.2,
                amplitude: 1.0,
                frequency: 0.5,
                heading: 0.0,
            },
            initial_pose_error: [-1.0, -2.0, FRAC_PI_4],
            initial_velocity_error: [-1.0, 2.0, 1.0],
            duration: 30.0,
            step: DEFAULT_STEP,
            disturbance: DisturbanceSpec::None,
        }
    }

    /// Straight line along x crossing a hump between x = 2 m and x = 3 m.
    pub fn case3() -> Self {
        Self {
            reference: ReferenceKind::Straight {
                speed: 0.2,
                heading: 0.0,
            },
            initial_pose_error: [0.0; 3],
            initial_velocity_error: [0.0; 3],
            duration: 30.0,
            step: DEFAULT_STEP,
            disturbance: DisturbanceSpec::Hump(HumpDisturbance {
                start: 2.0,
                end: 3.0,
                peak: 0.4,
            }),
        }
    }

    pub fn named(name: &str) -> Option<Self> {
        match name {
            "case1" => Some(Self::case1()),
            "case2" => Some(Self::case2()),
            "case3" => Some(Self::case3()),
            _ => None,
        }
    }

    /// Number of sampling intervals in the horizon.
    pub fn intervals(&self) -> usize {
        (self.duration / self.step).round() as usize
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(SimError::Scenario(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if !(self.duration.is_finite() && self.duration >= self.step) {
            return Err(SimError::Scenario(format!(
                "duration {} shorter than one step",
                self.duration
            )));
        }
        let ics = self
            .initial_pose_error
            .iter()
            .chain(&self.initial_velocity_error);
        if ics.clone().any(|v| !v.is_finite()) {
            return Err(SimError::Scenario("initial errors must be finite".into()));
        }
        self.reference.validate()?;
        self.disturbance.validate()
    }

    /// Reference at `t`, which must lie in `[0, duration]`.
    pub fn reference_at(&self, t: f64) -> Result<ReferenceSample, SimError> {
        let slack = 1e-9 * self.duration.max(1.0);
        if !(t >= -slack && t <= self.duration + slack) {
            return Err(SimError::Scenario(format!(
                "t = {t} outside horizon [0, {}]",
                self.duration
            )));
        }
        Ok(self.reference.sample(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_stabilization_is_stationary() {
        let spec = ScenarioSpec::case1();
        for t in [0.0, 1.3, 30.0] {
            let r = spec.reference_at(t).unwrap();
            assert_eq!(r.pose, Pose::default());
            assert_eq!(r.velocity, Vector3::zeros());
            assert_eq!(r.acceleration, Vector3::zeros());
        }
    }

    #[test]
    fn s_shape_closed_form() {
        let spec = ScenarioSpec::case2();
        let r = spec.reference_at(0.0).unwrap();
        assert_eq!(r.pose, Pose::default());
        assert_relative_eq!(r.velocity, Vector3::new(0.2, 0.5, 0.0));
        assert_relative_eq!(r.acceleration, Vector3::zeros());

        let r = spec.reference_at(PI / 0.5).unwrap();
        assert!(r.pose.y.abs() < 1e-12);
        assert_relative_eq!(r.velocity[1], -0.5, epsilon = 1e-12);
    }

    #[test]
    fn s_shape_derivatives_match_finite_differences() {
        let kind = ScenarioSpec::case2().reference;
        let h = 1e-5;
        for &t in &[0.3, 2.0, 7.7] {
            let (a, b, c) = (kind.sample(t - h), kind.sample(t), kind.sample(t + h));
            let vel = (c.pose.to_vector() - a.pose.to_vector()) / (2.0 * h);
            let acc = (c.velocity - a.velocity) / (2.0 * h);
            assert_relative_eq!(vel, b.velocity, epsilon = 1e-8);
            assert_relative_eq!(acc, b.acceleration, epsilon = 1e-8);
        }
    }

    #[test]
    fn custom_reference_reduces_to_straight() {
        let custom = ReferenceKind::Custom {
            origin: [0.0; 3],
            velocity: [0.2, 0.0, 0.0],
            amplitude: [0.0; 3],
            frequency: [0.0; 3],
            phase: [0.0; 3],
        };
        let straight = ReferenceKind::Straight {
            speed: 0.2,
            heading: 0.0,
        };
        assert_eq!(custom.sample(3.0), straight.sample(3.0));
    }

    #[test]
    fn reference_outside_horizon_is_an_error() {
        let spec = ScenarioSpec::case1();
        assert!(spec.reference_at(-1.0).is_err());
        assert!(spec.reference_at(31.0).is_err());
    }

    #[test]
    fn hump_profile() {
        let h = HumpDisturbance {
            start: 2.0,
            end: 3.0,
            peak: 0.4,
        };
        assert_eq!(h.wrench_at(1.9), Vector3::zeros());
        assert_eq!(h.wrench_at(3.1), Vector3::zeros());
        assert_relative_eq!(h.wrench_at(2.5)[0], -0.4, epsilon = 1e-15);
        for k in 0..=100 {
            let x = 1.5 + 0.02 * k as f64;
            assert!(h.wrench_at(x).norm() <= 0.4 + 1e-15);
        }
    }

    #[test]
    fn scenario_validation() {
        let mut s = ScenarioSpec::case1();
        s.step = 0.0;
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::case1();
        s.duration = 0.001;
        assert!(s.validate().is_err());
        let mut s = ScenarioSpec::case3();
        s.disturbance = DisturbanceSpec::Hump(HumpDisturbance {
            start: 3.0,
            end: 2.0,
            peak: 1.0,
        });
        assert!(s.validate().is_err());
        assert!(ScenarioSpec::case2().validate().is_ok());
        assert_eq!(ScenarioSpec::case1().intervals(), 3000);
    }
}
