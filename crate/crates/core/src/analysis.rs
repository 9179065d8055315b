//! Lyapunov bookkeeping, convergence-time and disturbance bounds, and the
//! performance metrics reported for each run.

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::controller::ControllerGains;
use crate::error::AnalysisError;
use crate::sim::SimLog;

/// Convergence threshold on each error channel.
pub const SETTLING_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LyapunovSample {
    pub time: f64,
    /// `½ η̃ᵀη̃`
    pub pose: f64,
    /// `½ z₂ᵀz₂`
    pub velocity: f64,
    /// `pose + velocity`
    pub total: f64,
}

impl LyapunovSample {
    pub fn new(time: f64, pose_error: &Vector3<f64>, velocity_error: &Vector3<f64>) -> Self {
        let pose = 0.5 * pose_error.norm_squared();
        let velocity = 0.5 * velocity_error.norm_squared();
        Self {
            time,
            pose,
            velocity,
            total: pose + velocity,
        }
    }
}

pub fn lyapunov_series(log: &SimLog) -> Vec<LyapunovSample> {
    log.records
        .iter()
        .map(|r| LyapunovSample::new(r.time, &r.pose_error, &r.velocity_error))
        .collect()
}

/// Largest single-step increase of `V` over the series (negative if strictly decreasing).
pub fn max_lyapunov_increase(samples: &[LyapunovSample]) -> f64 {
    samples
        .windows(2)
        .map(|w| w[1].total - w[0].total)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// A convergence-time bound that may not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeBound {
    Finite(f64),
    /// `α = 1`: the law is only asymptotically stable.
    NoFiniteBound,
}

impl TimeBound {
    pub fn finite(self) -> Option<f64> {
        match self {
            TimeBound::Finite(t) => Some(t),
            TimeBound::NoFiniteBound => None,
        }
    }
}

impl Serialize for TimeBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TimeBound::Finite(t) => s.serialize_f64(*t),
            TimeBound::NoFiniteBound => s.serialize_str("no finite bound"),
        }
    }
}

impl<'de> Deserialize<'de> for TimeBound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrTag::deserialize(d)? {
            NumberOrTag::Number(t) => Ok(TimeBound::Finite(t)),
            NumberOrTag::Tag(s) if s == "no finite bound" => Ok(TimeBound::NoFiniteBound),
            NumberOrTag::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"no finite bound\", got {s:?}"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberOrTag {
    Number(f64),
    Tag(String),
}

/// Lyapunov-derived convergence-time certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiniteTimeCertificate {
    pub alpha: f64,
    /// `(1 + α) / 2`
    pub beta: f64,
    /// `λ_min(K_η)·2^β`
    pub c1: f64,
    /// `λ_min(K_z)·2^β`
    pub c2: f64,
    /// `min(c1, c2)`
    pub c: f64,
    pub v0: f64,
    /// `V₀^(1−β) / (c(1−β))`
    pub bound: TimeBound,
    /// `V₁(0)^(1−β) / (c1(1−β))`, present when the pose-subsystem value was supplied.
    pub pose_bound: Option<TimeBound>,
}

/// Certificate for the full closed loop from the initial Lyapunov value.
pub fn finite_time_bound(
    v0: f64,
    gains: &ControllerGains,
) -> Result<FiniteTimeCertificate, AnalysisError> {
    if !(v0.is_finite() && v0 >= 0.0) {
        return Err(AnalysisError::Invalid(format!(
            "initial Lyapunov value must be finite and non-negative, got {v0}"
        )));
    }
    let alpha = gains.alpha;
    if !(alpha > 0.5 && alpha <= 1.0) {
        return Err(AnalysisError::Invalid(format!(
            "alpha = {alpha} outside (1/2, 1]"
        )));
    }
    let beta = 0.5 * (1.0 + alpha);
    let scale = 2f64.powf(beta);
    let c1 = gains.lambda_min_eta() * scale;
    let c2 = gains.lambda_min_z() * scale;
    let c = c1.min(c2);
    Ok(FiniteTimeCertificate {
        alpha,
        beta,
        c1,
        c2,
        c,
        v0,
        bound: settle_bound(v0, c, beta),
        pose_bound: None,
    })
}

/// [`finite_time_bound`] plus the pose-subsystem bound.
pub fn finite_time_certificate(
    initial: &LyapunovSample,
    gains: &ControllerGains,
) -> Result<FiniteTimeCertificate, AnalysisError> {
    let mut cert = finite_time_bound(initial.total, gains)?;
    cert.pose_bound = Some(settle_bound(initial.pose, cert.c1, cert.beta));
    Ok(cert)
}

fn settle_bound(v0: f64, c: f64, beta: f64) -> TimeBound {
    if beta >= 1.0 {
        TimeBound::NoFiniteBound
    } else {
        TimeBound::Finite(v0.powf(1.0 - beta) / (c * (1.0 - beta)))
    }
}

/// Largest constant disturbance norm that still drives the loop into the
/// neighbourhood `{‖η̃‖ ≤ Δ_η̃, ‖z₂‖ ≤ Δ_z₂}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessBound {
    pub delta_pose: f64,
    pub delta_velocity: f64,
    pub alpha: f64,
    pub upsilon: f64,
}

impl RobustnessBound {
    pub fn tolerates(&self, disturbance_norm: f64) -> bool {
        disturbance_norm <= self.upsilon
    }
}

pub fn disturbance_bound(
    delta_pose: f64,
    delta_velocity: f64,
    gains: &ControllerGains,
) -> Result<RobustnessBound, AnalysisError> {
    for (name, value) in [
        ("delta_pose", delta_pose),
        ("delta_velocity", delta_velocity),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(AnalysisError::NonPositive { name, value });
        }
    }
    let p = 1.0 + gains.alpha;
    let upsilon = (gains.lambda_min_eta() * delta_pose.powf(p)
        + gains.lambda_min_z() * delta_velocity.powf(p))
        / delta_velocity;
    Ok(RobustnessBound {
        delta_pose,
        delta_velocity,
        alpha: gains.alpha,
        upsilon,
    })
}

/// Time after which a channel stays within the threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Settling {
    At(f64),
    NotSettled,
}

impl Settling {
    /// `+∞` when not settled.
    pub fn as_f64(self) -> f64 {
        match self {
            Settling::At(t) => t,
            Settling::NotSettled => f64::INFINITY,
        }
    }

    pub fn is_settled(self) -> bool {
        matches!(self, Settling::At(_))
    }
}

impl PartialOrd for Settling {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl fmt::Display for Settling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Settling::At(t) => write!(f, "{t:.2}"),
            Settling::NotSettled => f.write_str("not settled"),
        }
    }
}

impl Serialize for Settling {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Settling::At(t) => s.serialize_f64(*t),
            Settling::NotSettled => s.serialize_str("not settled"),
        }
    }
}

impl<'de> Deserialize<'de> for Settling {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match NumberOrTag::deserialize(d)? {
            NumberOrTag::Number(t) => Ok(Settling::At(t)),
            NumberOrTag::Tag(s) if s == "not settled" => Ok(Settling::NotSettled),
            NumberOrTag::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"not settled\", got {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlingReport {
    pub channels: [Settling; 3],
    /// Latest of the three channels.
    pub aggregate: Settling,
}

/// Last-crossing settling time of each channel of a uniformly sampled series.
pub fn settling_time(
    times: &[f64],
    series: &[Vector3<f64>],
    threshold: f64,
) -> Result<SettlingReport, AnalysisError> {
    if series.is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    if times.len() != series.len() {
        return Err(AnalysisError::Invalid(format!(
            "{} timestamps for {} samples",
            times.len(),
            series.len()
        )));
    }
    check_uniform(times)?;
    let mut channels = [Settling::NotSettled; 3];
    for (i, slot) in channels.iter_mut().enumerate() {
        let last_above = series.iter().rposition(|v| v[i].abs() > threshold);
        *slot = match last_above {
            None => Settling::At(times[0]),
            Some(k) if k + 1 < series.len() => Settling::At(times[k + 1]),
            Some(_) => Settling::NotSettled,
        };
    }
    let aggregate = channels
        .iter()
        .copied()
        .max_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .unwrap_or(Settling::NotSettled);
    Ok(SettlingReport {
        channels,
        aggregate,
    })
}

fn check_uniform(times: &[f64]) -> Result<(), AnalysisError> {
    if times.len() < 3 {
        return Ok(());
    }
    let h = times[1] - times[0];
    if h.is_nan() || h <= 0.0 {
        return Err(AnalysisError::Invalid("time grid must increase".into()));
    }
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h);
    if uniform {
        Ok(())
    } else {
        Err(AnalysisError::Invalid("time grid is not uniform".into()))
    }
}

/// Sum of absolute successive differences, per channel.
pub fn total_variation(series: &[Vector3<f64>]) -> Result<Vector3<f64>, AnalysisError> {
    if series.len() < 2 {
        return Err(AnalysisError::TooFewSamples {
            needed: 2,
            got: series.len(),
        });
    }
    Ok(series
        .windows(2)
        .fold(Vector3::zeros(), |acc, w| acc + (w[1] - w[0]).abs()))
}

/// Outcome of the sampled check `ΔV/h ≤ −c V^β + tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub satisfied: usize,
    pub total: usize,
}

impl DecayCheck {
    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.satisfied as f64 / self.total as f64
        }
    }
}

/// Discrete version of `V̇ ≤ −c V^β` with an `O(h)` slack of
/// `0.05·max(1, ‖τ̄_k‖)` per step.
pub fn lyapunov_decay_check(
    samples: &[LyapunovSample],
    torques: &[Vector3<f64>],
    cert: &FiniteTimeCertificate,
) -> DecayCheck {
    let total = samples.len().saturating_sub(1);
    let satisfied = samples
        .windows(2)
        .zip(torques)
        .filter(|(w, tau)| {
            let h = w[1].time - w[0].time;
            let rate = (w[1].total - w[0].total) / h;
            let slack = 0.05 * tau.norm().max(1.0);
            rate <= -cert.c * w[0].total.powf(cert.beta) + slack
        })
        .count();
    DecayCheck { satisfied, total }
}

/// `(a₁ + a₂)^c ≤ a₁^c + a₂^c` for `a₁, a₂ > 0`, `c ∈ (0, 1)`.
pub fn power_subadditivity_holds(a1: f64, a2: f64, c: f64) -> bool {
    let lhs = (a1 + a2).powf(c);
    let rhs = a1.powf(c) + a2.powf(c);
    lhs <= rhs * (1.0 + 1e-12)
}

/// `λ_min(P)‖x‖² ≤ xᵀPx ≤ λ_max(P)‖x‖²` for symmetric `P`.
pub fn rayleigh_ritz_holds(p: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    let eig = p.clone().symmetric_eigen().eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    let n2 = x.norm_squared();
    let q = (x.transpose() * p * x)[(0, 0)];
    let tol = 1e-10 * hi.abs().max(lo.abs()) * n2;
    lo * n2 <= q + tol && q <= hi * n2 + tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_4;

    fn unit(alpha: f64) -> ControllerGains {
        ControllerGains::diagonal([1.0; 3], [1.0; 3], alpha)
    }

    fn case1_v0() -> f64 {
        LyapunovSample::new(
            0.0,
            &Vector3::new(5.0, -4.0, FRAC_PI_4),
            &Vector3::new(1.0, 0.5, -0.5),
        )
        .total
    }

    #[test]
    fn case1_initial_lyapunov_value() {
        assert_relative_eq!(case1_v0(), 21.558_425_138_3, epsilon = 1e-9);
    }

    #[test]
    fn certificate_case1() {
        let cert = finite_time_bound(case1_v0(), &unit(0.75)).unwrap();
        assert_relative_eq!(cert.beta, 0.875);
        assert_relative_eq!(cert.c, 2f64.powf(0.875), epsilon = 1e-12);
        let t = cert.bound.finite().unwrap();
        assert!((t - 6.4031).abs() < 1e-3, "{t}");
    }

    #[test]
    fn certificate_zero_and_hand_value() {
        let cert = finite_time_bound(0.0, &unit(0.75)).unwrap();
        assert_eq!(cert.bound, TimeBound::Finite(0.0));

        let g = ControllerGains::diagonal([2.0; 3], [2.0; 3], 0.6);
        let cert = finite_time_bound(1.0, &g).unwrap();
        assert_relative_eq!(cert.beta, 0.8);
        assert_relative_eq!(cert.c, 2.0 * 2f64.powf(0.8), epsilon = 1e-12);
        assert_relative_eq!(
            cert.bound.finite().unwrap(),
            1.0 / (cert.c * 0.2),
            epsilon = 1e-12
        );
        assert!((cert.bound.finite().unwrap() - 1.4359).abs() < 1e-4);
    }

    #[test]
    fn certificate_unit_alpha_has_no_bound() {
        let cert = finite_time_bound(3.0, &unit(1.0)).unwrap();
        assert_eq!(cert.bound, TimeBound::NoFiniteBound);
        assert!(finite_time_bound(-1.0, &unit(0.75)).is_err());
    }

    #[test]
    fn pose_subsystem_bound() {
        let init = LyapunovSample::new(0.0, &Vector3::new(1.0, 0.0, 0.0), &Vector3::zeros());
        let cert = finite_time_certificate(&init, &unit(0.75)).unwrap();
        let expected = 0.5f64.powf(0.125) / (cert.c1 * 0.125);
        assert_relative_eq!(
            cert.pose_bound.unwrap().finite().unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn disturbance_bound_values() {
        let b = disturbance_bound(0.1, 0.1, &unit(0.75)).unwrap();
        assert_relative_eq!(b.upsilon, 2.0 * 0.1f64.powf(0.75), epsilon = 1e-12);
        assert!((b.upsilon - 0.35566).abs() < 1e-5);
        let b1 = disturbance_bound(0.1, 0.1, &unit(1.0)).unwrap();
        assert_relative_eq!(b1.upsilon, 0.2, epsilon = 1e-12);
        assert!(b.upsilon > b1.upsilon);

        let k: f64 = 3.0;
        let scaled = disturbance_bound(0.1 * k, 0.1, &unit(0.75)).unwrap();
        let first = 0.1f64.powf(1.75) / 0.1;
        assert_relative_eq!(
            scaled.upsilon - b.upsilon,
            first * (k.powf(1.75) - 1.0),
            epsilon = 1e-12
        );

        assert!(matches!(
            disturbance_bound(0.0, 0.1, &unit(0.75)),
            Err(AnalysisError::NonPositive { .. })
        ));
    }

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 * 0.01).collect()
    }

    #[test]
    fn settling_of_zero_series() {
        let s = vec![Vector3::zeros(); 5];
        let r = settling_time(&grid(5), &s, 1e-6).unwrap();
        assert_eq!(r.aggregate, Settling::At(0.0));
    }

    #[test]
    fn settling_uses_last_crossing() {
        let vals = [1.0, 1e-7, 1e-7, 1.0, 1e-7, 1e-7];
        let s: Vec<_> = vals.iter().map(|&v| Vector3::new(v, 0.0, 0.0)).collect();
        let r = settling_time(&grid(vals.len()), &s, 1e-6).unwrap();
        assert_eq!(r.channels[0], Settling::At(0.04));
        assert_eq!(r.channels[1], Settling::At(0.0));
        assert_eq!(r.aggregate, Settling::At(0.04));
    }

    #[test]
    fn settling_never_reached() {
        let s = vec![Vector3::new(0.0, 1.0, 0.0); 4];
        let r = settling_time(&grid(4), &s, 1e-6).unwrap();
        assert_eq!(r.channels[1], Settling::NotSettled);
        assert_eq!(r.aggregate, Settling::NotSettled);
        assert!(settling_time(&[], &[], 1e-6).is_err());
    }

    #[test]
    fn settling_rejects_non_uniform_grid() {
        let s = vec![Vector3::zeros(); 3];
        assert!(settling_time(&[0.0, 0.01, 0.5], &s, 1e-6).is_err());
    }

    #[test]
    fn total_variation_hand_values() {
        let c = vec![Vector3::new(2.0, 2.0, 2.0); 4];
        assert_eq!(total_variation(&c).unwrap(), Vector3::zeros());
        let s: Vec<_> = [0.0, 1.0, 0.5]
            .iter()
            .map(|&v| Vector3::new(v, -v, 0.0))
            .collect();
        let tv = total_variation(&s).unwrap();
        assert_relative_eq!(tv, Vector3::new(1.5, 1.5, 0.0));
        assert!(matches!(
            total_variation(&s[..1]),
            Err(AnalysisError::TooFewSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn settling_orders_unsettled_last() {
        assert!(Settling::At(100.0) < Settling::NotSettled);
        assert_eq!(Settling::NotSettled.to_string(), "not settled");
    }
}
