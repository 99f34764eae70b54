//! Terminal-voltage inputs: parametric fault scenarios and sampled traces.

use serde::{Deserialize, Serialize};

use super::SimConfig;
use crate::error::{ClmError, Result};

pub const SYSTEM_FREQUENCY_HZ: f64 = 60.0;

/// A voltage dip: flat pre-fault level, flat during-fault level, then
/// exponential recovery from the fault level after clearing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultScenario {
    pub v_pre: f64,
    pub v_fault: f64,
    pub t_fault: f64,
    pub duration_cycles: f64,
    /// Zero means the voltage steps straight back to `v_pre`.
    pub recovery_tau: f64,
    pub label: String,
}

impl Default for FaultScenario {
    fn default() -> Self {
        FaultScenario {
            v_pre: 1.0,
            v_fault: 0.15,
            t_fault: 0.15,
            duration_cycles: 6.0,
            recovery_tau: 0.05,
            label: "three-phase".into(),
        }
    }
}

impl FaultScenario {
    /// Shallow dip emulating a single-phase-to-ground fault.
    pub fn single_phase_to_ground() -> Self {
        FaultScenario {
            v_fault: 0.7,
            label: "single-phase-to-ground".into(),
            ..Default::default()
        }
    }

    /// Medium dip emulating a double-phase-to-ground fault.
    pub fn double_phase_to_ground() -> Self {
        FaultScenario {
            v_fault: 0.45,
            label: "double-phase-to-ground".into(),
            ..Default::default()
        }
    }

    pub fn three_phase() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_fault >= 0.0 && self.v_fault <= self.v_pre) {
            return Err(ClmError::InvalidConfig(format!(
                "fault voltage {} must lie in [0, v_pre = {}]",
                self.v_fault, self.v_pre
            )));
        }
        if !(self.duration_cycles > 0.0) {
            return Err(ClmError::InvalidConfig(format!("fault duration must be > 0 cycles, got {}", self.duration_cycles)));
        }
        if !(self.t_fault >= 0.0 && self.recovery_tau >= 0.0) {
            return Err(ClmError::InvalidConfig("t_fault and recovery_tau must be >= 0".into()));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.duration_cycles / SYSTEM_FREQUENCY_HZ
    }

    pub fn t_clear(&self) -> f64 {
        self.t_fault + self.duration()
    }

    fn recovery(&self, t: f64) -> f64 {
        if self.recovery_tau == 0.0 {
            return self.v_pre;
        }
        let elapsed = (t - self.t_clear()).max(0.0);
        self.v_pre - (self.v_pre - self.v_fault) * (-elapsed / self.recovery_tau).exp()
    }

    /// Voltage at time `t`; right-continuous at the fault onset.
    pub fn voltage_at(&self, t: f64) -> f64 {
        self.piece_value(self.piece(t), t)
    }

    fn piece(&self, t: f64) -> u8 {
        // tolerate floating noise on grid-aligned switching times
        const EPS: f64 = 1e-12;
        if t < self.t_fault - EPS {
            0
        } else if t < self.t_clear() - EPS {
            1
        } else {
            2
        }
    }

    fn piece_value(&self, piece: u8, t: f64) -> f64 {
        match piece {
            0 => self.v_pre,
            1 => self.v_fault,
            _ => self.recovery(t),
        }
    }
}

/// Uniformly sampled terminal-voltage magnitude.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoltageTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl VoltageTrace {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self> {
        let t = VoltageTrace { dt, samples };
        t.validate()?;
        Ok(t)
    }

    pub fn constant(v: f64, dt: f64, n: usize) -> Self {
        VoltageTrace { dt, samples: vec![v; n] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(ClmError::InvalidConfig(format!("trace dt must be > 0, got {}", self.dt)));
        }
        if self.samples.is_empty() {
            return Err(ClmError::TooFewSamples { needed: 1, got: 0 });
        }
        if self.samples.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(ClmError::InvalidConfig("voltage samples must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |k| k as f64 * self.dt)
    }
}

/// Voltage seen by the integrator. Within sample interval `k` the source is a
/// smooth function of the offset `tau` in `[0, dt]`.
pub trait VoltageSource {
    fn len(&self) -> usize;
    fn dt(&self) -> f64;
    fn sample(&self, k: usize) -> f64;
    fn within(&self, k: usize, tau: f64) -> f64;
}

impl VoltageSource for VoltageTrace {
    fn len(&self) -> usize {
        self.samples.len()
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn sample(&self, k: usize) -> f64 {
        self.samples[k]
    }

    /// Linear interpolation between neighbouring samples.
    fn within(&self, k: usize, tau: f64) -> f64 {
        let a = self.samples[k];
        match self.samples.get(k + 1) {
            Some(b) => a + (b - a) * (tau / self.dt),
            None => a,
        }
    }
}

/// Exact evaluation of a [`FaultScenario`] on a sampling grid. Each interval
/// is evaluated on the waveform piece containing its midpoint, so switching
/// instants that fall on the grid introduce no interpolation error.
#[derive(Clone, Debug)]
pub struct ScenarioWaveform<'a> {
    pub scenario: &'a FaultScenario,
    pub dt: f64,
    pub n: usize,
}

impl<'a> ScenarioWaveform<'a> {
    pub fn new(scenario: &'a FaultScenario, cfg: &SimConfig) -> Result<Self> {
        scenario.validate()?;
        let needed = scenario.t_clear();
        if cfg.t_end < needed - 1e-12 {
            return Err(ClmError::HorizonTooShort { t_end: cfg.t_end, needed });
        }
        Ok(ScenarioWaveform {
            scenario,
            dt: cfg.dt,
            n: cfg.sample_count(),
        })
    }
}

impl VoltageSource for ScenarioWaveform<'_> {
    fn len(&self) -> usize {
        self.n
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn sample(&self, k: usize) -> f64 {
        self.scenario.voltage_at(k as f64 * self.dt)
    }

    fn within(&self, k: usize, tau: f64) -> f64 {
        let t0 = k as f64 * self.dt;
        let piece = self.scenario.piece(t0 + 0.5 * self.dt);
        self.scenario.piece_value(piece, t0 + tau)
    }
}

pub fn make_fault_trace(s: &FaultScenario, cfg: &SimConfig) -> Result<VoltageTrace> {
    cfg.validate()?;
    let w = ScenarioWaveform::new(s, cfg)?;
    let samples = (0..w.n).map(|k| w.sample(k)).collect();
    VoltageTrace::new(cfg.dt, samples)
}
