use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run, RunMetrics, ScenarioSpec, SimOptions};
use crate::analysis::{disturbance_bound, Settling};
use crate::controller::ControllerGains;
use crate::error::SimError;
use crate::model::RobotParams;

/// Neighbourhood radii `(Δ_η̃, Δ_z₂)` at which sweeps report `Υ`.
pub const DEFAULT_RADII: (f64, f64) = (0.1, 0.1);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRow {
    pub alpha: f64,
    pub settling: Settling,
    pub pose_settling: Settling,
    pub velocity_settling: Settling,
    pub torque_variation: [f64; 3],
    pub total_variation: f64,
    pub upsilon: f64,
    /// `Υ(α) / Υ(1)` with the same gains and radii.
    pub upsilon_normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub settling: Settling,
    pub torque_variation: [f64; 3],
    pub total_variation: f64,
}

/// One run per exponent, with everything else taken from `gains`.
pub fn sweep_alpha(
    spec: &ScenarioSpec,
    params: &RobotParams,
    gains: &ControllerGains,
    opts: &SimOptions,
    alphas: &[f64],
    radii: (f64, f64),
) -> Result<Vec<AlphaRow>, SimError> {
    let reference = disturbance_bound(radii.0, radii.1, &gains.with_alpha(1.0))?.upsilon;
    alphas
        .par_iter()
        .map(|&alpha| {
            let g = gains.with_alpha(alpha);
            let metrics = RunMetrics::from_log(&run(spec, params, &g, opts)?, &g)?;
            let upsilon = disturbance_bound(radii.0, radii.1, &g)?.upsilon;
            Ok(AlphaRow {
                alpha,
                settling: metrics.settling,
                pose_settling: metrics.pose_settling.aggregate,
                velocity_settling: metrics.velocity_settling.aggregate,
                torque_variation: metrics.torque_variation,
                total_variation: metrics.total_variation(),
                upsilon,
                upsilon_normalized: upsilon / reference,
            })
        })
        .collect()
}

/// Runs `K_η = diag(λ₁, λ₁, λ₁/2)`, `K_z = diag(λ₂, λ₂, λ₂/2)` over the
/// grid, `λ₁`-major.
pub fn sweep_gains(
    spec: &ScenarioSpec,
    params: &RobotParams,
    alpha: f64,
    opts: &SimOptions,
    lambda1: &[f64],
    lambda2: &[f64],
) -> Result<Vec<GainRow>, SimError> {
    let grid: Vec<(f64, f64)> = lambda1
        .iter()
        .flat_map(|&a| lambda2.iter().map(move |&b| (a, b)))
        .collect();
    grid.par_iter()
        .map(|&(l1, l2)| {
            let g = ControllerGains::from_tuning(l1, l2, alpha);
            let metrics = RunMetrics::from_log(&run(spec, params, &g, opts)?, &g)?;
            Ok(GainRow {
                lambda1: l1,
                lambda2: l2,
                settling: metrics.settling,
                torque_variation: metrics.torque_variation,
                total_variation: metrics.total_variation(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    NonDecreasing,
    NonIncreasing,
}

/// Number of adjacent pairs that break the trend.
pub fn trend_violations(values: &[f64], trend: Trend) -> usize {
    values
        .windows(2)
        .filter(|w| match trend {
            Trend::NonDecreasing => w[1] < w[0],
            Trend::NonIncreasing => w[1] > w[0],
        })
        .count()
}
