//! Fixed-step closed-loop simulation, reference scenarios and parameter sweeps.

mod integrate;
mod scenario;
mod sweep;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use integrate::{explicit_step, plant_rate, rk4_step, step, PlantState, Scheme};
pub use scenario::{DisturbanceSpec, HumpDisturbance, ReferenceKind, ScenarioSpec, DEFAULT_STEP};
pub use sweep::{
    sweep_alpha, sweep_gains, trend_violations, AlphaRow, GainRow, Trend, DEFAULT_RADII,
};

use crate::analysis::{
    finite_time_certificate, max_lyapunov_increase, settling_time, total_variation,
    FiniteTimeCertificate, LyapunovSample, Settling, SettlingReport, SETTLING_THRESHOLD,
};
use crate::controller::{evaluate, saturate, virtual_control, ControllerGains, ReferenceSample};
use crate::error::{ControlError, SimError};
use crate::model::{BodyVelocity, DragVariant, Pose, RobotModel, RobotParams};

/// Integration sub-steps per sampling interval used by default.
pub const DEFAULT_SUBSTEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimOptions {
    pub scheme: Scheme,
    /// Integration steps per logged sample; the controller runs at every one.
    pub substeps: usize,
    pub drag: DragVariant,
    /// Symmetric per-channel clamp on the body wrench.
    pub saturation: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            substeps: DEFAULT_SUBSTEPS,
            drag: DragVariant::Derived,
            saturation: None,
        }
    }
}

impl SimOptions {
    /// One wrench-held Euler step per sample, the classic digital-control setting.
    pub fn sampled_euler() -> Self {
        Self {
            scheme: Scheme::SemiImplicitEuler,
            substeps: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.substeps == 0 {
            return Err(SimError::Scenario("substeps must be at least 1".into()));
        }
        match self.saturation {
            Some(s) if !(s.is_finite() && s > 0.0) => Err(SimError::Scenario(format!(
                "saturation limit must be positive, got {s}"
            ))),
            _ => Ok(()),
        }
    }
}

/// One logged sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimRecord {
    pub time: f64,
    /// `η`
    pub pose: Vector3<f64>,
    /// `ν`
    pub velocity: Vector3<f64>,
    /// `η_d`
    pub reference: Vector3<f64>,
    /// `η̃`
    pub pose_error: Vector3<f64>,
    /// `z₂`
    pub velocity_error: Vector3<f64>,
    /// `Ψ`
    pub psi: Vector3<f64>,
    /// Applied body wrench `τ̄`.
    pub torque: Vector3<f64>,
    /// `τ̄_d`
    pub disturbance: Vector3<f64>,
    pub lyapunov: LyapunovSample,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimLog {
    pub step: f64,
    pub records: Vec<SimRecord>,
}

impl SimLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    pub fn pose_errors(&self) -> Vec<Vector3<f64>> {
        self.records.iter().map(|r| r.pose_error).collect()
    }

    pub fn velocity_errors(&self) -> Vec<Vector3<f64>> {
        self.records.iter().map(|r| r.velocity_error).collect()
    }

    pub fn torques(&self) -> Vec<Vector3<f64>> {
        self.records.iter().map(|r| r.torque).collect()
    }

    pub fn lyapunov(&self) -> Vec<LyapunovSample> {
        self.records.iter().map(|r| r.lyapunov).collect()
    }

    pub fn last(&self) -> Option<&SimRecord> {
        self.records.last()
    }
}

/// Closed-loop run of the scenario as written.
pub fn run(
    spec: &ScenarioSpec,
    params: &RobotParams,
    gains: &ControllerGains,
    opts: &SimOptions,
) -> Result<SimLog, SimError> {
    simulate(spec, params, gains, opts, Vector3::zeros())
}

/// Like [`run`] with an extra constant body wrench added to the scenario's disturbance.
pub fn run_perturbed(
    spec: &ScenarioSpec,
    params: &RobotParams,
    gains: &ControllerGains,
    opts: &SimOptions,
    wrench: Vector3<f64>,
) -> Result<SimLog, SimError> {
    if wrench.iter().any(|v| !v.is_finite()) {
        return Err(SimError::Scenario(
            "disturbance wrench must be finite".into(),
        ));
    }
    simulate(spec, params, gains, opts, wrench)
}

struct Loop<'a> {
    spec: &'a ScenarioSpec,
    model: RobotModel,
    gains: &'a ControllerGains,
    saturation: Option<f64>,
    extra: Vector3<f64>,
}

struct Evaluation {
    reference: ReferenceSample,
    output: crate::controller::ControlOutput,
    torque: Vector3<f64>,
    disturbance: Vector3<f64>,
}

impl Loop<'_> {
    fn evaluate(&self, t: f64, x: &PlantState) -> Result<Evaluation, LoopError> {
        let reference = self.spec.reference_at(t).map_err(LoopError::Sim)?;
        let drag = self.model.drag_at(x.pose[2]);
        let output = evaluate(
            Pose::from_vector(&x.pose),
            BodyVelocity::from_vector(&x.velocity),
            &reference,
            self.gains,
            &drag,
        )
        .map_err(LoopError::Control)?;
        let torque = match self.saturation {
            Some(limit) => saturate(output.torque, limit),
            None => output.torque,
        }
        .to_vector();
        let disturbance = self.spec.disturbance.wrench_at(&x.pose) + self.extra;
        Ok(Evaluation {
            reference,
            output,
            torque,
            disturbance,
        })
    }

    fn rate(&self, t: f64, x: &PlantState) -> Result<PlantState, LoopError> {
        let e = self.evaluate(t, x)?;
        Ok(plant_rate(
            x,
            &self.model.drag_at(x.pose[2]),
            &e.torque,
            &e.disturbance,
        ))
    }
}

enum LoopError {
    Sim(SimError),
    Control(ControlError),
}

impl LoopError {
    fn at(self, step: usize, time: f64) -> SimError {
        match self {
            LoopError::Sim(e) => e,
            LoopError::Control(source) => SimError::Control { step, time, source },
        }
    }
}

fn simulate(
    spec: &ScenarioSpec,
    params: &RobotParams,
    gains: &ControllerGains,
    opts: &SimOptions,
    extra: Vector3<f64>,
) -> Result<SimLog, SimError> {
    spec.validate()?;
    opts.validate()?;
    gains.validate()?;
    let ctx = Loop {
        spec,
        model: RobotModel::new(*params, opts.drag)?,
        gains,
        saturation: opts.saturation,
        extra,
    };

    let r0 = spec.reference_at(0.0)?;
    let e0 = Vector3::from(spec.initial_pose_error);
    let pose0 = r0.pose.to_vector() + e0;
    let psi0 = virtual_control(&e0, pose0[2], &r0, gains)?;
    let mut state = PlantState {
        pose: pose0,
        velocity: psi0 + Vector3::from(spec.initial_velocity_error),
    };

    let n = spec.intervals();
    let h = spec.step;
    let hi = h / opts.substeps as f64;
    let mut records = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * h;
        let e = ctx.evaluate(t, &state).map_err(|e| e.at(k, t))?;
        let err = e.output.state;
        records.push(SimRecord {
            time: t,
            pose: state.pose,
            velocity: state.velocity,
            reference: e.reference.pose.to_vector(),
            pose_error: err.pose_error,
            velocity_error: err.velocity_error,
            psi: e.output.psi,
            torque: e.torque,
            disturbance: e.disturbance,
            lyapunov: LyapunovSample::new(t, &err.pose_error, &err.velocity_error),
        });
        if k == n {
            break;
        }
        for j in 0..opts.substeps {
            let ts = t + j as f64 * hi;
            state = match opts.scheme {
                Scheme::Rk4 => rk4_step(ts, &state, hi, |tt, x| ctx.rate(tt, x)),
                Scheme::SemiImplicitEuler | Scheme::ExplicitEuler => {
                    ctx.evaluate(ts, &state).map(|e| {
                        let drag = ctx.model.drag_at(state.pose[2]);
                        if opts.scheme == Scheme::SemiImplicitEuler {
                            step(&state, &e.torque, &e.disturbance, &drag, hi)
                        } else {
                            explicit_step(&state, &e.torque, &e.disturbance, &drag, hi)
                        }
                    })
                }
            }
            .map_err(|e| e.at(k, ts))?;
            if !state.is_finite() {
                return Err(SimError::NonFinite {
                    step: k + 1,
                    time: (k + 1) as f64 * h,
                });
            }
        }
    }
    Ok(SimLog { step: h, records })
}

/// Metrics extracted from a log, all recomputable from the logged series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub pose_settling: SettlingReport,
    pub velocity_settling: SettlingReport,
    /// Latest settling over all six error channels.
    pub settling: Settling,
    pub torque_variation: [f64; 3],
    pub certificate: FiniteTimeCertificate,
    /// Largest per-sample increase of `V`.
    pub max_lyapunov_increase: f64,
    pub final_lyapunov: f64,
}

impl RunMetrics {
    pub fn from_log(log: &SimLog, gains: &ControllerGains) -> Result<Self, SimError> {
        let first = log
            .records
            .first()
            .ok_or(crate::error::AnalysisError::EmptySeries)?;
        let times = log.times();
        let pose_settling = settling_time(&times, &log.pose_errors(), SETTLING_THRESHOLD)?;
        let velocity_settling = settling_time(&times, &log.velocity_errors(), SETTLING_THRESHOLD)?;
        let settling = if pose_settling.aggregate.as_f64() >= velocity_settling.aggregate.as_f64() {
            pose_settling.aggregate
        } else {
            velocity_settling.aggregate
        };
        let tv = total_variation(&log.torques())?;
        let lyap = log.lyapunov();
        Ok(Self {
            pose_settling,
            velocity_settling,
            settling,
            torque_variation: [tv[0], tv[1], tv[2]],
            certificate: finite_time_certificate(&first.lyapunov, gains)?,
            max_lyapunov_increase: max_lyapunov_increase(&lyap),
            final_lyapunov: lyap.last().map_or(0.0, |s| s.total),
        })
    }

    pub fn total_variation(&self) -> f64 {
        self.torque_variation.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn robot() -> RobotParams {
        RobotParams {
            mass: 10.0,
            yaw_inertia: 0.5,
            wheel_inertia: 0.01,
            wheel_radius: 0.1,
            l1: 0.25,
            l2: 0.25,
            damping: [0.01; 4],
        }
    }

    fn short(mut spec: ScenarioSpec, duration: f64) -> ScenarioSpec {
        spec.duration = duration;
        spec
    }

    #[test]
    fn record_count_and_grid() {
        let spec = short(ScenarioSpec::case1(), 0.5);
        let gains = ControllerGains::diagonal([1.0; 3], [1.0; 3], 0.75);
        let log = run(&spec, &robot(), &gains, &SimOptions::default()).unwrap();
        assert_eq!(log.len(), 51);
        assert_eq!(log.records[50].time, 0.5);
        let r0 = &log.records[0];
        assert_eq!(r0.pose_error, Vector3::from(spec.initial_pose_error));
        assert!((r0.velocity_error - Vector3::from(spec.initial_velocity_error)).norm() < 1e-14);
    }

    #[test]
    fn equilibrium_stays_put() {
        let mut spec = short(ScenarioSpec::case1(), 1.0);
        spec.initial_pose_error = [0.0; 3];
        spec.initial_velocity_error = [0.0; 3];
        let gains = ControllerGains::diagonal([1.0; 3], [1.0; 3], 0.75);
        for opts in [SimOptions::default(), SimOptions::sampled_euler()] {
            let log = run(&spec, &robot(), &gains, &opts).unwrap();
            for r in &log.records {
                assert_eq!(r.torque, Vector3::zeros());
                assert_eq!(r.pose, Vector3::zeros());
            }
        }
    }

    #[test]
    fn invalid_options_rejected() {
        let gains = ControllerGains::diagonal([1.0; 3], [1.0; 3], 0.75);
        let opts = SimOptions {
            substeps: 0,
            ..SimOptions::default()
        };
        assert!(run(&ScenarioSpec::case1(), &robot(), &gains, &opts).is_err());
        let bad = ControllerGains::diagonal([1.0, -1.0, 1.0], [1.0; 3], 0.75);
        assert!(matches!(
            run(
                &ScenarioSpec::case1(),
                &robot(),
                &bad,
                &SimOptions::default()
            ),
            Err(SimError::Gain(_))
        ));
    }

    #[test]
    fn saturation_clamps_logged_torque() {
        let spec = short(ScenarioSpec::case1(), 1.0);
        let gains = ControllerGains::diagonal([1.0; 3], [1.0; 3], 0.75);
        let opts = SimOptions {
            saturation: Some(0.5),
            ..SimOptions::default()
        };
        let log = run(&spec, &robot(), &gains, &opts).unwrap();
        assert!(log.torques().iter().all(|t| t.amax() <= 0.5));
    }
}
