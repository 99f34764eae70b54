//! Single-phase compressor motor, modeled algebraically with a stall latch.

use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};

/// Time for the restartable fraction to recover once voltage exceeds `v_rst`.
pub const RESTART_RAMP_TIME: f64 = 0.1;

const STATE1_Q_GAIN: f64 = 6.0;
const STATE2_P_GAIN: f64 = 12.0;
const STATE2_P_EXP: f64 = 3.2;
const STATE2_Q_GAIN: f64 = 11.0;
const STATE2_Q_EXP: f64 = 2.5;

/// Component-base parameters. `p0`/`q0` are the constant terms of the
/// running characteristic, not necessarily the power drawn at 1 pu.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglePhaseParams {
    pub v_brk: f64,
    pub v_stall: f64,
    pub v_rst: f64,
    pub f_rst: f64,
    pub r_stall: f64,
    pub x_stall: f64,
    pub p0: f64,
    pub q0: f64,
}

impl SinglePhaseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_stall < self.v_brk && self.v_brk < self.v_rst) {
            return Err(ClmError::InvalidParameter(format!(
                "single-phase thresholds must satisfy v_stall < v_brk < v_rst ({} / {} / {})",
                self.v_stall, self.v_brk, self.v_rst
            )));
        }
        if !(0.0..=1.0).contains(&self.f_rst) {
            return Err(ClmError::InvalidParameter(format!("f_rst must be in [0, 1], got {}", self.f_rst)));
        }
        if !(self.r_stall > 0.0 && self.x_stall > 0.0) {
            return Err(ClmError::InvalidParameter("r_stall and x_stall must be > 0".into()));
        }
        Ok(())
    }

    /// Unstalled P/Q characteristic (states 1 and 2), falling back to the
    /// stall impedance below `v_stall`.
    pub fn running_pq(&self, v: f64) -> (f64, f64) {
        if v > self.v_brk {
            let dv = v - self.v_brk;
            (self.p0, self.q0 + STATE1_Q_GAIN * dv * dv)
        } else if v >= self.v_stall {
            let dv = self.v_brk - v;
            (
                self.p0 + STATE2_P_GAIN * dv.powf(STATE2_P_EXP),
                self.q0 + STATE2_Q_GAIN * dv.powf(STATE2_Q_EXP),
            )
        } else {
            self.stall_pq(v)
        }
    }

    /// Constant-impedance draw of a stalled compressor.
    pub fn stall_pq(&self, v: f64) -> (f64, f64) {
        let v2 = v * v;
        (v2 / self.r_stall, v2 / self.x_stall)
    }

    /// Picks `p0`/`q0` so the running characteristic passes through `(p, q)` at `v`.
    pub fn anchored_at(mut self, v: f64, p: f64, q: f64) -> Result<Self> {
        if v < self.v_stall {
            return Err(ClmError::InvalidParameter(format!(
                "single-phase motor cannot start stalled: v0 {v} < v_stall {}",
                self.v_stall
            )));
        }
        self.p0 = 0.0;
        self.q0 = 0.0;
        let (p_shape, q_shape) = self.running_pq(v);
        self.p0 = p - p_shape;
        self.q0 = q - q_shape;
        Ok(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglePhaseState {
    pub stalled: bool,
    pub v_min_seen: f64,
    pub restart_ramp: f64,
}

impl SinglePhaseState {
    pub fn new(v0: f64) -> Self {
        SinglePhaseState {
            stalled: false,
            v_min_seen: v0,
            restart_ramp: 0.0,
        }
    }
}

/// Advances the stall latch and restart ramp by one sample of length `dt` at voltage `v`.
pub fn advance_single_phase(v: f64, params: &SinglePhaseParams, state: SinglePhaseState, dt: f64) -> SinglePhaseState {
    let mut next = state;
    next.v_min_seen = state.v_min_seen.min(v);
    if !next.stalled && v < params.v_stall {
        next.stalled = true;
        next.restart_ramp = 0.0;
    } else if next.stalled && v > params.v_rst {
        next.restart_ramp = (next.restart_ramp + dt / RESTART_RAMP_TIME).min(1.0);
    }
    next
}

/// Component-base P/Q at voltage `v` for a given latch state.
///
/// Once latched, the non-restartable share `1 - f_rst` stays on the stall
/// impedance. The restartable share moves from the stall impedance back onto
/// the running characteristic in proportion to the restart ramp.
pub fn single_phase_output(v: f64, params: &SinglePhaseParams, state: &SinglePhaseState) -> (f64, f64) {
    if !state.stalled {
        return params.running_pq(v);
    }
    let ramp = state.restart_ramp;
    let (p_stall, q_stall) = params.stall_pq(v);
    let (p_run, q_run) = params.running_pq(v);
    let restartable_p = ramp * p_run + (1.0 - ramp) * p_stall;
    let restartable_q = ramp * q_run + (1.0 - ramp) * q_stall;
    (
        params.f_rst * restartable_p + (1.0 - params.f_rst) * p_stall,
        params.f_rst * restartable_q + (1.0 - params.f_rst) * q_stall,
    )
}

/// Advances the latch by one sample and returns the P/Q drawn afterwards.
///
/// The restart ramp grows linearly over [`RESTART_RAMP_TIME`] while
/// `v > v_rst` and freezes when the voltage falls back.
pub fn single_phase_pq(
    v: f64,
    params: &SinglePhaseParams,
    state: SinglePhaseState,
    dt: f64,
) -> (f64, f64, SinglePhaseState) {
    let next = advance_single_phase(v, params, state, dt);
    let (p, q) = single_phase_output(v, params, &next);
    (p, q, next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> SinglePhaseParams {
        SinglePhaseParams {
            v_brk: 0.86,
            v_stall: 0.6,
            v_rst: 0.95,
            f_rst: 0.2,
            r_stall: 0.1,
            x_stall: 0.1,
            p0: 1.0,
            q0: 0.1,
        }
    }

    #[test]
    fn state_one_is_constant_power() {
        let (p, q, st) = single_phase_pq(1.0, &params(), SinglePhaseState::new(1.0), 0.01);
        assert_eq!(p, 1.0);
        assert_relative_eq!(q, 0.1 + 6.0 * 0.14 * 0.14, epsilon = 1e-14);
        assert!(!st.stalled);
    }

    #[test]
    fn state_three_latches_stall() {
        let (p, q, st) = single_phase_pq(0.5, &params(), SinglePhaseState::new(1.0), 0.01);
        assert_relative_eq!(p, 2.5, epsilon = 1e-14);
        assert_relative_eq!(q, 2.5, epsilon = 1e-14);
        assert!(st.stalled);
        assert_eq!(st.v_min_seen, 0.5);
        assert_eq!(st.restart_ramp, 0.0);
    }

    #[test]
    fn restart_after_recovery() {
        let p = params();
        let (_, _, mut st) = single_phase_pq(0.5, &p, SinglePhaseState::new(1.0), 0.01);
        // below v_rst: no recovery, stays fully stalled
        let (pp, _, s2) = single_phase_pq(0.9, &p, st, 0.01);
        assert_eq!(s2.restart_ramp, 0.0);
        assert_relative_eq!(pp, 0.81 / 0.1, epsilon = 1e-12);
        st = s2;
        let mut out = (0.0, 0.0);
        for _ in 0..20 {
            let (a, b, s) = single_phase_pq(1.0, &p, st, 0.01);
            assert!(s.restart_ramp >= st.restart_ramp);
            st = s;
            out = (a, b);
        }
        assert_eq!(st.restart_ramp, 1.0);
        assert_relative_eq!(out.0, 1.0 * 0.2 + 1.0 / 0.1 * 0.8, epsilon = 1e-12);
    }

    #[test]
    fn ramp_freezes_when_voltage_sags_again() {
        let p = params();
        let (_, _, st) = single_phase_pq(0.5, &p, SinglePhaseState::new(1.0), 0.01);
        let (_, _, st) = single_phase_pq(1.0, &p, st, 0.03);
        let frozen = st.restart_ramp;
        let (_, _, st) = single_phase_pq(0.9, &p, st, 0.03);
        assert_eq!(st.restart_ramp, frozen);
    }

    #[test]
    fn continuous_at_breakdown() {
        let p = params();
        let below = p.running_pq(p.v_brk);
        let above = p.running_pq(p.v_brk + 1e-12);
        assert_relative_eq!(below.0, above.0, epsilon = 1e-9);
        assert_relative_eq!(below.1, above.1, epsilon = 1e-9);
    }

    #[test]
    fn anchoring_hits_target() {
        for v0 in [1.0, 0.8] {
            let a = params().anchored_at(v0, 1.0, 0.25).unwrap();
            let (p, q) = a.running_pq(v0);
            assert_relative_eq!(p, 1.0, epsilon = 1e-12);
            assert_relative_eq!(q, 0.25, epsilon = 1e-12);
        }
        assert!(params().anchored_at(0.5, 1.0, 0.25).is_err());
    }
}
