//! Voltage-playback simulation of the composite load.
//!
//! A terminal-voltage trajectory drives the load; the three-phase motors are
//! integrated with classical fourth-order Runge-Kutta on a fixed grid while
//! the algebraic components are evaluated once per output sample.

mod composite;
mod waveform;

pub use composite::{simulate, simulate_source, CompositeLoad};
pub use waveform::{make_fault_trace, FaultScenario, ScenarioWaveform, VoltageSource, VoltageTrace, SYSTEM_FREQUENCY_HZ};

use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Output sample step (s).
    pub dt: f64,
    pub t_end: f64,
    /// Runge-Kutta steps per output sample.
    pub substeps: usize,
    pub feeder_r: f64,
    pub feeder_x: f64,
    pub feeder_coupling: bool,
    /// Three-phase motor loading on the motor's own base.
    pub motor_load_factor: f64,
    /// Power factor of the ZIP and single-phase loads, and of the bus as a whole.
    pub power_factor: f64,
    /// Add a constant-impedance shunt so that the initial bus reactive power
    /// matches `power_factor` for every composition.
    pub compensate_bus_q: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1.0 / 240.0,
            t_end: 5.0,
            substeps: 10,
            feeder_r: 0.04,
            feeder_x: 0.04,
            feeder_coupling: false,
            motor_load_factor: 0.75,
            power_factor: 0.97,
            compensate_bus_q: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ClmError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) {
            return Err(ClmError::InvalidConfig(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if self.substeps == 0 {
            return Err(ClmError::InvalidConfig("substeps must be >= 1".into()));
        }
        if !(self.motor_load_factor > 0.0) {
            return Err(ClmError::InvalidConfig("motor_load_factor must be > 0".into()));
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(ClmError::InvalidConfig("power_factor must be in (0, 1]".into()));
        }
        if self.feeder_coupling && !(self.feeder_r >= 0.0 && self.feeder_x >= 0.0) {
            return Err(ClmError::InvalidConfig("feeder impedance must be >= 0".into()));
        }
        Ok(())
    }

    /// Number of output samples on `[0, t_end]`.
    pub fn sample_count(&self) -> usize {
        (self.t_end / self.dt + 1e-9).floor() as usize + 1
    }

    pub fn reactive_ratio(&self) -> f64 {
        self.power_factor.acos().tan()
    }
}

/// Active and reactive power trajectories on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PQTrace {
    pub dt: f64,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl PQTrace {
    pub fn new(dt: f64, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(ClmError::LengthMismatch {
                left: p.len(),
                right: q.len(),
            });
        }
        Ok(PQTrace { dt, p, q })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.p.len()).map(move |k| k as f64 * self.dt)
    }

    /// Resamples onto a new uniform grid by linear interpolation, holding the
    /// last value beyond the end of the trace.
    pub fn resample(&self, dt: f64, n: usize) -> Result<PQTrace> {
        if self.is_empty() || !(dt > 0.0) {
            return Err(ClmError::TooFewSamples { needed: 1, got: self.len() });
        }
        let interp = |xs: &[f64], t: f64| {
            let pos = t / self.dt;
            let i = pos.floor() as usize;
            if i + 1 >= xs.len() {
                return *xs.last().unwrap();
            }
            let w = pos - i as f64;
            xs[i] + (xs[i + 1] - xs[i]) * w
        };
        let p = (0..n).map(|k| interp(&self.p, k as f64 * dt)).collect();
        let q = (0..n).map(|k| interp(&self.q, k as f64 * dt)).collect();
        PQTrace::new(dt, p, q)
    }

    pub fn max_abs_diff(&self, other: &PQTrace) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .chain(self.q.iter().zip(&other.q))
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
