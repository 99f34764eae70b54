//! Fifth-order three-phase induction motor.
//!
//! States are the transient and sub-transient voltages behind the stator
//! leakage plus the rotor slip, all in a frame rotating at `OMEGA_0`.
//! Currents are positive into the motor:
//!
//! ```text
//! I        = (V - E'') / (R_s + j L_pp)
//! dE'/dt   = -(E' - j (L_s - L_p) I) / T_p0 - j s w0 E'
//! dE''/dt  = (1/T_pp0 - 1/T_p0) E' + j ((L_s - L_p)/T_p0 + (L_p - L_pp)/T_pp0) I
//!            - E''/T_pp0 - j s w0 E''
//! ds/dt    = (T_m0 (1 - s)^e_trq - Re(E'' conj(I))) / (2 H)
//! ```
//!
//! Written per axis with `E = E_d + j E_q`, these are the usual double-cage
//! reduction; the sub-transient equations follow from subtracting the
//! transient equations, so the rotational terms on `E'` cancel.
//! At zero slip the steady-state input impedance is `R_s + j L_s`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};

/// Synchronous speed in rad/s.
pub const OMEGA_0: f64 = 2.0 * std::f64::consts::PI * 60.0;
pub const SLIP_MIN: f64 = -0.05;
pub const SLIP_MAX: f64 = 1.0;

/// Upper end of the slip interval searched for the operating point.
const SLIP_SEARCH_MAX: f64 = 0.3;
/// Loads at or below this are treated as a degenerate (unloaded) motor.
const MIN_MOTOR_LOADING: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImParams {
    pub r_s: f64,
    pub l_s: f64,
    pub l_p: f64,
    pub l_pp: f64,
    pub t_p0: f64,
    pub t_pp0: f64,
    pub h: f64,
    /// Torque-speed exponent: 0 for constant torque, 2 for speed-squared loads.
    pub e_trq: f64,
}

impl ImParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("r_s", self.r_s),
            ("l_s", self.l_s),
            ("l_p", self.l_p),
            ("l_pp", self.l_pp),
            ("t_p0", self.t_p0),
            ("t_pp0", self.t_pp0),
            ("h", self.h),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(ClmError::InvalidParameter(format!("motor {name} must be > 0, got {v}")));
            }
        }
        if self.e_trq != 0.0 && self.e_trq != 2.0 {
            return Err(ClmError::InvalidParameter(format!(
                "motor e_trq must be 0 or 2, got {}",
                self.e_trq
            )));
        }
        if !(self.l_s > self.l_p && self.l_p > self.l_pp) {
            return Err(ClmError::InvalidParameter(format!(
                "motor reactances must satisfy l_s > l_p > l_pp ({} / {} / {})",
                self.l_s, self.l_p, self.l_pp
            )));
        }
        if self.t_p0 <= self.t_pp0 {
            return Err(ClmError::InvalidParameter(format!(
                "motor t_p0 {} must exceed t_pp0 {}",
                self.t_p0, self.t_pp0
            )));
        }
        Ok(())
    }

    fn mechanical_speed_factor(&self, slip: f64) -> f64 {
        let w = 1.0 - slip;
        if self.e_trq == 0.0 {
            1.0
        } else if self.e_trq == 2.0 {
            w * w
        } else {
            w.powf(self.e_trq)
        }
    }

    /// Steady-state input impedance at a given slip.
    pub fn steady_state_impedance(&self, slip: f64) -> Complex64 {
        let j = Complex64::i();
        let transient = Complex64::new(1.0, slip * OMEGA_0 * self.t_p0);
        let subtransient = Complex64::new(1.0, slip * OMEGA_0 * self.t_pp0);
        Complex64::new(self.r_s, self.l_pp)
            + j * (self.l_s - self.l_p) / transient
            + j * (self.l_p - self.l_pp) / subtransient
    }

    /// Steady-state active power drawn at slip `slip` and terminal voltage `v`.
    pub fn steady_state_power(&self, slip: f64, v: f64) -> f64 {
        v * v * (1.0 / self.steady_state_impedance(slip)).re
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ImState {
    pub e_qp: f64,
    pub e_dp: f64,
    pub e_qpp: f64,
    pub e_dpp: f64,
    pub slip: f64,
    /// Mechanical torque base, fixed at initialization.
    pub t_m0: f64,
}

impl ImState {
    pub const DIM: usize = 5;

    pub fn to_array(&self) -> [f64; 5] {
        [self.e_qp, self.e_dp, self.e_qpp, self.e_dpp, self.slip]
    }

    pub fn from_slice(x: &[f64], t_m0: f64) -> Self {
        ImState {
            e_qp: x[0],
            e_dp: x[1],
            e_qpp: x[2],
            e_dpp: x[3],
            slip: x[4],
            t_m0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.t_m0.is_finite()
    }

    /// Rotates the voltage states by `angle` radians in the d-q plane.
    pub fn rotated(&self, angle: f64) -> Self {
        let r = Complex64::from_polar(1.0, angle);
        let ep = Complex64::new(self.e_dp, self.e_qp) * r;
        let epp = Complex64::new(self.e_dpp, self.e_qpp) * r;
        ImState {
            e_qp: ep.im,
            e_dp: ep.re,
            e_qpp: epp.im,
            e_dpp: epp.re,
            ..*self
        }
    }
}

/// Time derivative of the dynamic part of [`ImState`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ImDerivative {
    pub e_qp: f64,
    pub e_dp: f64,
    pub e_qpp: f64,
    pub e_dpp: f64,
    pub slip: f64,
}

impl ImDerivative {
    pub fn to_array(&self) -> [f64; 5] {
        [self.e_qp, self.e_dp, self.e_qpp, self.e_dpp, self.slip]
    }

    pub fn max_abs(&self) -> f64 {
        self.to_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Stator currents `(i_d, i_q)` flowing into the motor.
pub fn im_currents(state: &ImState, params: &ImParams, v_d: f64, v_q: f64) -> (f64, f64) {
    let den = params.r_s * params.r_s + params.l_pp * params.l_pp;
    let dv_d = v_d - state.e_dpp;
    let dv_q = v_q - state.e_qpp;
    let i_d = (params.r_s * dv_d + params.l_pp * dv_q) / den;
    let i_q = (params.r_s * dv_q - params.l_pp * dv_d) / den;
    (i_d, i_q)
}

/// Active and reactive power drawn at the terminal.
///
/// Reactive power is `Im(V conj(I))`, which makes it consistent with the
/// currents of [`im_currents`]: the resistive cross term enters with `+R_s`.
pub fn im_pq(state: &ImState, params: &ImParams, v_d: f64, v_q: f64) -> (f64, f64) {
    let den = params.r_s * params.r_s + params.l_pp * params.l_pp;
    let in_phase = v_d * v_d + v_q * v_q - v_d * state.e_dpp - v_q * state.e_qpp;
    let cross = v_d * state.e_qpp - v_q * state.e_dpp;
    let p = (params.r_s * in_phase - params.l_pp * cross) / den;
    let q = (params.l_pp * in_phase + params.r_s * cross) / den;
    (p, q)
}

pub fn im_derivatives(state: &ImState, params: &ImParams, v_d: f64, v_q: f64) -> Result<ImDerivative> {
    if !state.is_finite() || !v_d.is_finite() || !v_q.is_finite() {
        return Err(ClmError::NumericalDivergence);
    }
    let (i_d, i_q) = im_currents(state, params, v_d, v_q);
    let inv_tp = 1.0 / params.t_p0;
    let inv_tpp = 1.0 / params.t_pp0;
    let x_tr = params.l_s - params.l_p;
    let coupling = x_tr * inv_tp + (params.l_p - params.l_pp) * inv_tpp;
    let sw = state.slip * OMEGA_0;

    let d_e_qp = -inv_tp * (state.e_qp - x_tr * i_d) - sw * state.e_dp;
    let d_e_dp = -inv_tp * (state.e_dp + x_tr * i_q) + sw * state.e_qp;
    let d_e_qpp = (inv_tpp - inv_tp) * state.e_qp + coupling * i_d - inv_tpp * state.e_qpp - sw * state.e_dpp;
    let d_e_dpp = (inv_tpp - inv_tp) * state.e_dp - coupling * i_q - inv_tpp * state.e_dpp + sw * state.e_qpp;

    let t_elec = state.e_dpp * i_d + state.e_qpp * i_q;
    let t_mech = state.t_m0 * params.mechanical_speed_factor(state.slip);
    let d_slip = (t_mech - t_elec) / (2.0 * params.h);

    let d = ImDerivative {
        e_qp: d_e_qp,
        e_dp: d_e_dp,
        e_qpp: d_e_qpp,
        e_dpp: d_e_dpp,
        slip: d_slip,
    };
    if d.to_array().iter().all(|v| v.is_finite()) {
        Ok(d)
    } else {
        Err(ClmError::NumericalDivergence)
    }
}

/// Peak steady-state active power over slip in (0, 0.3] and the slip where it occurs.
pub fn pull_out_power(params: &ImParams, v0: f64) -> (f64, f64) {
    const GRID: usize = 3000;
    let mut best = (f64::NEG_INFINITY, 0.0);
    let step = SLIP_SEARCH_MAX / GRID as f64;
    for k in 1..=GRID {
        let s = k as f64 * step;
        let p = params.steady_state_power(s, v0);
        if p > best.0 {
            best = (p, s);
        }
    }
    // golden-section refinement around the grid peak
    let (mut a, mut b) = ((best.1 - step).max(1e-12), (best.1 + step).min(SLIP_SEARCH_MAX));
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if params.steady_state_power(c, v0) > params.steady_state_power(d, v0) {
            b = d;
        } else {
            a = c;
        }
    }
    let s = 0.5 * (a + b);
    let p = params.steady_state_power(s, v0);
    if p >= best.0 {
        (p, s)
    } else {
        best
    }
}

/// Equilibrium state drawing `p_target` at terminal voltage `v0` (on the d axis).
pub fn im_init(params: &ImParams, p_target: f64, v0: f64) -> Result<ImState> {
    params.validate()?;
    if !(v0.is_finite() && v0 > 0.0) {
        return Err(ClmError::InvalidParameter(format!("motor initial voltage must be > 0, got {v0}")));
    }
    if !(p_target > MIN_MOTOR_LOADING) {
        return Err(ClmError::InfeasibleMotorLoading {
            requested: p_target,
            pull_out: f64::NAN,
        });
    }
    let (p_max, s_max) = pull_out_power(params, v0);
    let p_zero = params.steady_state_power(0.0, v0);
    if p_target >= p_max || p_target <= p_zero {
        return Err(ClmError::InfeasibleMotorLoading {
            requested: p_target,
            pull_out: p_max,
        });
    }
    // P(s) rises monotonically from P(0) to the pull-out peak
    let (mut lo, mut hi) = (0.0_f64, s_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if params.steady_state_power(mid, v0) < p_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    let slip = 0.5 * (lo + hi);
    Ok(steady_state_at_slip(params, slip, v0))
}

/// Steady state at an imposed slip with torque base chosen for zero acceleration.
pub fn steady_state_at_slip(params: &ImParams, slip: f64, v0: f64) -> ImState {
    let j = Complex64::i();
    let v = Complex64::new(v0, 0.0);
    let current = v / params.steady_state_impedance(slip);
    let e_p = j * (params.l_s - params.l_p) * current / Complex64::new(1.0, slip * OMEGA_0 * params.t_p0);
    let e_pp = e_p + j * (params.l_p - params.l_pp) * current / Complex64::new(1.0, slip * OMEGA_0 * params.t_pp0);
    let t_elec = (e_pp * current.conj()).re;
    let mut state = ImState {
        e_qp: e_p.im,
        e_dp: e_p.re,
        e_qpp: e_pp.im,
        e_dpp: e_pp.re,
        slip,
        t_m0: 0.0,
    };
    state.t_m0 = t_elec / params.mechanical_speed_factor(slip);
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn ma_like() -> ImParams {
        ImParams {
            r_s: 0.04,
            l_s: 1.8,
            l_p: 0.12,
            l_pp: 0.104,
            t_p0: 0.095,
            t_pp0: 0.0021,
            h: 0.1,
            e_trq: 0.0,
        }
    }

    #[test]
    fn currents_vanish_when_terminal_equals_subtransient() {
        let p = ma_like();
        let s = ImState {
            e_qpp: 0.3,
            e_dpp: 0.9,
            ..Default::default()
        };
        let (i_d, i_q) = im_currents(&s, &p, 0.9, 0.3);
        assert_eq!((i_d, i_q), (0.0, 0.0));
        let (pp, qq) = im_pq(&s, &p, 0.9, 0.3);
        assert!(pp.abs() < 1e-14 && qq.abs() < 1e-14);
    }

    #[test]
    fn currents_direct_evaluation() {
        let p = ImParams {
            r_s: 0.04,
            l_pp: 0.14,
            ..ma_like()
        };
        let s = ImState::default();
        let (i_d, i_q) = im_currents(&s, &p, 1.0, 0.0);
        assert_relative_eq!(i_d, 0.04 / 0.0212, max_relative = 1e-12);
        assert_relative_eq!(i_q, -0.14 / 0.0212, max_relative = 1e-12);
        assert_relative_eq!(i_d, 1.8868, epsilon = 1e-4);
        assert_relative_eq!(i_q, -6.6038, epsilon = 1e-4);
        let (pp, qq) = im_pq(&s, &p, 1.0, 0.0);
        assert_relative_eq!(pp, 1.8868, epsilon = 1e-4);
        assert_relative_eq!(qq, 6.6038, epsilon = 1e-4);
    }

    #[test]
    fn currents_scale_linearly() {
        let p = ma_like();
        let s = ImState {
            e_qpp: 0.1,
            e_dpp: 0.8,
            ..Default::default()
        };
        let (a_d, a_q) = im_currents(&s, &p, 0.95, 0.05);
        let (b_d, b_q) = im_currents(&s, &p, 0.8 + 2.0 * 0.15, 0.1 + 2.0 * (-0.05));
        assert_relative_eq!(b_d, 2.0 * a_d, max_relative = 1e-12);
        assert_relative_eq!(b_q, 2.0 * a_q, max_relative = 1e-12);
    }

    #[test]
    fn equilibrium_from_init() {
        let p = ma_like();
        let st = im_init(&p, 0.75, 1.0).unwrap();
        let d = im_derivatives(&st, &p, 1.0, 0.0).unwrap();
        assert!(d.max_abs() < 1e-8, "{d:?}");
        let (pp, _) = im_pq(&st, &p, 1.0, 0.0);
        assert_relative_eq!(pp, 0.75, epsilon = 1e-9);
        assert!(st.slip > 0.0 && st.slip < 0.3);
    }

    #[test]
    fn speed_squared_equilibrium() {
        let p = ImParams {
            l_p: 0.2,
            l_pp: 0.13,
            t_p0: 0.2,
            t_pp0: 0.0025,
            h: 0.5,
            e_trq: 2.0,
            ..ma_like()
        };
        let st = im_init(&p, 0.75, 0.98).unwrap();
        assert!(im_derivatives(&st, &p, 0.98, 0.0).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn degenerate_and_infeasible_loading() {
        let p = ma_like();
        assert!(matches!(im_init(&p, 0.0, 1.0), Err(ClmError::InfeasibleMotorLoading { .. })));
        assert!(matches!(im_init(&p, 1e-7, 1.0), Err(ClmError::InfeasibleMotorLoading { .. })));
        let (pmax, _) = pull_out_power(&p, 1.0);
        assert!(matches!(im_init(&p, pmax * 1.01, 1.0), Err(ClmError::InfeasibleMotorLoading { .. })));
    }

    #[test]
    fn bolted_fault_decelerates() {
        let p = ma_like();
        let st = im_init(&p, 0.75, 1.0).unwrap();
        let d = im_derivatives(&st, &p, 0.0, 0.0).unwrap();
        assert!(d.slip > 0.0);
    }

    #[test]
    fn non_finite_state_is_divergence() {
        let p = ma_like();
        let st = ImState {
            slip: f64::NAN,
            ..Default::default()
        };
        assert!(matches!(im_derivatives(&st, &p, 1.0, 0.0), Err(ClmError::NumericalDivergence)));
    }

    #[test]
    fn rotation_commutes_with_dynamics() {
        let p = ma_like();
        let st = im_init(&p, 0.6, 1.0).unwrap();
        let st = ImState { slip: st.slip + 0.01, ..st };
        let angle = 0.37;
        let rot = st.rotated(angle);
        let v = Complex64::from_polar(0.9, angle);
        let d0 = im_derivatives(&st, &p, 0.9, 0.0).unwrap();
        let d1 = im_derivatives(&rot, &p, v.re, v.im).unwrap();
        let e0 = Complex64::new(d0.e_dp, d0.e_qp) * Complex64::from_polar(1.0, angle);
        assert_relative_eq!(e0.re, d1.e_dp, epsilon = 1e-9);
        assert_relative_eq!(e0.im, d1.e_qp, epsilon = 1e-9);
        assert_relative_eq!(d0.slip, d1.slip, epsilon = 1e-9);
    }

    #[test]
    fn zero_slip_impedance_is_synchronous_reactance() {
        let p = ma_like();
        let z = p.steady_state_impedance(0.0);
        assert_relative_eq!(z.re, p.r_s, epsilon = 1e-15);
        assert_relative_eq!(z.im, p.l_s, epsilon = 1e-12);
    }
}
