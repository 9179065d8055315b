//! Kinematics, dynamics and finite-time backstepping control of a
//! four-wheeled mecanum robot, with a fixed-step closed-loop simulator and
//! the metrics used to compare controller settings.
//!
//! ```
//! use fwmr_core::{analysis::finite_time_bound, ControllerGains};
//!
//! let gains = ControllerGains::diagonal([1.0; 3], [1.0; 3], 0.75);
//! let cert = finite_time_bound(21.558425138, &gains).unwrap();
//! assert!((cert.bound.finite().unwrap() - 6.403).abs() < 1e-3);
//! ```

pub mod analysis;
pub mod controller;
pub mod error;
pub mod model;
pub mod sim;

pub use analysis::{
    FiniteTimeCertificate, LyapunovSample, RobustnessBound, Settling, SettlingReport, TimeBound,
};
pub use controller::{ControlOutput, ControllerGains, ReferenceSample, TrackingState};
pub use error::{AnalysisError, ControlError, GainError, ModelError, SimError};
pub use model::{
    BodyVelocity, BodyWrench, DragVariant, Pose, RobotModel, RobotParams, WheelState, WheelTorques,
};
pub use sim::{
    DisturbanceSpec, HumpDisturbance, ReferenceKind, RunMetrics, ScenarioSpec, Scheme, SimLog,
    SimOptions, SimRecord,
};
