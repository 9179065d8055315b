//! Timeseries files and run summaries.

use std::io::{Read, Write};

use fwmr_core::analysis::{
    disturbance_bound, finite_time_certificate, lyapunov_decay_check, max_lyapunov_increase,
    settling_time, total_variation, FiniteTimeCertificate, LyapunovSample, RobustnessBound,
    Settling, SETTLING_THRESHOLD,
};
use fwmr_core::{ControllerGains, SimLog};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "fwmr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const HEADER: [&str; 25] = [
    "t",
    "x",
    "y",
    "theta",
    "x_d",
    "y_d",
    "theta_d",
    "ex",
    "ey",
    "etheta",
    "u",
    "v",
    "omega",
    "z_u",
    "z_v",
    "z_omega",
    "tau_u",
    "tau_v",
    "tau_omega",
    "dist_u",
    "dist_v",
    "dist_omega",
    "V1",
    "V2",
    "V",
];

/// Column-oriented copy of a run, as written to and read from disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeseries {
    pub time: Vec<f64>,
    pub pose: Vec<Vector3<f64>>,
    pub reference: Vec<Vector3<f64>>,
    pub pose_error: Vec<Vector3<f64>>,
    pub velocity: Vec<Vector3<f64>>,
    pub velocity_error: Vec<Vector3<f64>>,
    pub torque: Vec<Vector3<f64>>,
    pub disturbance: Vec<Vector3<f64>>,
    pub lyapunov: Vec<LyapunovSample>,
}

impl Timeseries {
    pub fn from_log(log: &SimLog) -> Self {
        let mut ts = Self::default();
        for r in &log.records {
            ts.time.push(r.time);
            ts.pose.push(r.pose);
            ts.reference.push(r.reference);
            ts.pose_error.push(r.pose_error);
            ts.velocity.push(r.velocity);
            ts.velocity_error.push(r.velocity_error);
            ts.torque.push(r.torque);
            ts.disturbance.push(r.disturbance);
            ts.lyapunov.push(r.lyapunov);
        }
        ts
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Writes one row per sample. `f64` values use the shortest
    /// representation that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        let mut row: Vec<String> = Vec::with_capacity(HEADER.len());
        for k in 0..self.len() {
            row.clear();
            row.push(self.time[k].to_string());
            for v in [
                &self.pose[k],
                &self.reference[k],
                &self.pose_error[k],
                &self.velocity[k],
                &self.velocity_error[k],
                &self.torque[k],
                &self.disturbance[k],
            ] {
                row.extend(v.iter().map(f64::to_string));
            }
            let l = &self.lyapunov[k];
            row.extend([l.pose, l.velocity, l.total].iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.iter().ne(HEADER.iter().copied()) {
            return Err(CliError::Io(format!(
                "unexpected timeseries header: {header:?}"
            )));
        }
        let mut ts = Self::default();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let values: Vec<f64> = record
                .iter()
                .map(|s| s.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Io(format!("row {}: {e}", line + 1)))?;
            let v3 = |i: usize| Vector3::new(values[i], values[i + 1], values[i + 2]);
            ts.time.push(values[0]);
            ts.pose.push(v3(1));
            ts.reference.push(v3(4));
            ts.pose_error.push(v3(7));
            ts.velocity.push(v3(10));
            ts.velocity_error.push(v3(13));
            ts.torque.push(v3(16));
            ts.disturbance.push(v3(19));
            ts.lyapunov.push(LyapunovSample {
                time: values[0],
                pose: values[22],
                velocity: values[23],
                total: values[24],
            });
        }
        Ok(ts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettlingSummary {
    pub pose: [Settling; 3],
    pub velocity: [Settling; 3],
    pub pose_aggregate: Settling,
    pub velocity_aggregate: Settling,
    pub aggregate: Settling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checks {
    /// `V` never rises by more than `1e−9` between samples.
    pub lyapunov_monotone: bool,
    pub max_lyapunov_increase: f64,
    /// Share of samples satisfying the discrete finite-time decay inequality.
    pub decay_fraction: f64,
    pub decay_ok: bool,
    /// Absent when there is no finite bound.
    pub settled_within_certificate: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub alpha: f64,
    pub samples: usize,
    pub settling: SettlingSummary,
    pub total_variation: [f64; 3],
    pub total_variation_sum: f64,
    pub certificate: FiniteTimeCertificate,
    pub robustness: RobustnessBound,
    pub checks: Checks,
    pub config: RunConfig,
}

pub const MONOTONE_TOLERANCE: f64 = 1e-9;
pub const DECAY_FRACTION: f64 = 0.99;

impl RunSummary {
    /// Computes every metric from the timeseries alone, using the recorded
    /// errors rather than any simulator state.
    pub fn compute(
        ts: &Timeseries,
        gains: &ControllerGains,
        config: &RunConfig,
    ) -> Result<Self, CliError> {
        let first = match (ts.pose_error.first(), ts.velocity_error.first()) {
            (Some(e), Some(z)) => LyapunovSample::new(ts.time[0], e, z),
            _ => return Err(CliError::Io("empty timeseries".into())),
        };
        let analysis = |e: fwmr_core::AnalysisError| CliError::Sim(e.into());
        let pose = settling_time(&ts.time, &ts.pose_error, SETTLING_THRESHOLD).map_err(analysis)?;
        let velocity =
            settling_time(&ts.time, &ts.velocity_error, SETTLING_THRESHOLD).map_err(analysis)?;
        let aggregate = if velocity.aggregate > pose.aggregate {
            velocity.aggregate
        } else {
            pose.aggregate
        };
        let tv = total_variation(&ts.torque).map_err(analysis)?;
        let certificate = finite_time_certificate(&first, gains).map_err(analysis)?;
        let [dp, dv] = config.sweep.radii;
        let robustness = disturbance_bound(dp, dv, gains).map_err(analysis)?;

        let lyapunov: Vec<LyapunovSample> = ts
            .time
            .iter()
            .zip(ts.pose_error.iter().zip(&ts.velocity_error))
            .map(|(&t, (e, z))| LyapunovSample::new(t, e, z))
            .collect();
        let rise = max_lyapunov_increase(&lyapunov).max(0.0);
        let decay = lyapunov_decay_check(&lyapunov, &ts.torque, &certificate);
        let checks = Checks {
            lyapunov_monotone: rise <= MONOTONE_TOLERANCE,
            max_lyapunov_increase: rise,
            decay_fraction: decay.fraction(),
            decay_ok: decay.fraction() >= DECAY_FRACTION,
            settled_within_certificate: certificate.bound.finite().map(|t| {
                let h = ts.time.get(1).map_or(0.0, |t1| t1 - ts.time[0]);
                aggregate.as_f64() <= t + h
            }),
        };
        Ok(Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            scenario: config.scenario.label().into(),
            alpha: gains.alpha,
            samples: ts.len(),
            settling: SettlingSummary {
                pose: pose.channels,
                velocity: velocity.channels,
                pose_aggregate: pose.aggregate,
                velocity_aggregate: velocity.aggregate,
                aggregate,
            },
            total_variation: [tv[0], tv[1], tv[2]],
            total_variation_sum: tv.sum(),
            certificate,
            robustness,
            checks,
            config: config.clone(),
        })
    }
}

/// Exact text for a settling time: the number, or `not settled`.
pub fn settling_field(s: Settling) -> String {
    match s {
        Settling::At(t) => t.to_string(),
        Settling::NotSettled => "not settled".into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_row_width() {
        let mut ts = Timeseries::default();
        ts.time.push(0.0);
        for col in [
            &mut ts.pose,
            &mut ts.reference,
            &mut ts.pose_error,
            &mut ts.velocity,
            &mut ts.velocity_error,
            &mut ts.torque,
            &mut ts.disturbance,
        ] {
            col.push(Vector3::new(0.1, -2.5e-17, 3.0));
        }
        ts.lyapunov
            .push(LyapunovSample::new(0.0, &Vector3::x(), &Vector3::y()));
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let back = Timeseries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, ts);
    }

    #[test]
    fn foreign_header_rejected() {
        assert!(Timeseries::read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn settling_text() {
        assert_eq!(
            settling_field(Settling::At(2.5300000000000002)),
            "2.5300000000000002"
        );
        assert_eq!(settling_field(Settling::NotSettled), "not settled");
    }
}
