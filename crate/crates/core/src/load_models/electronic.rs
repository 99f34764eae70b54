use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectronicParams {
    /// Voltage where tripping starts.
    pub v_d1: f64,
    /// Voltage where all of the load has tripped.
    pub v_d2: f64,
    /// Share of the tripped load that reconnects on recovery.
    pub fr_cel: f64,
    pub pf_elc: f64,
    pub p0: f64,
}

impl ElectronicParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_d2 < self.v_d1) {
            return Err(ClmError::InvalidParameter(format!(
                "electronic v_d2 {} must be below v_d1 {}",
                self.v_d2, self.v_d1
            )));
        }
        if !(0.0..=1.0).contains(&self.fr_cel) {
            return Err(ClmError::InvalidParameter(format!("fr_cel must be in [0, 1], got {}", self.fr_cel)));
        }
        if !(self.pf_elc > 0.0 && self.pf_elc <= 1.0) {
            return Err(ClmError::InvalidParameter(format!("pf_elc must be in (0, 1], got {}", self.pf_elc)));
        }
        Ok(())
    }
}

/// Connected fraction given the present voltage and the minimum seen so far.
///
/// Tripping is linear between `v_d1` and `v_d2` while the voltage is at its
/// running minimum. Once it rises above that minimum only `fr_cel` of the
/// tripped share comes back, anchored at the minimum.
pub fn electronic_fvl(v: f64, params: &ElectronicParams, v_min_seen: f64) -> f64 {
    let v_min = v_min_seen.min(v);
    let span = params.v_d1 - params.v_d2;
    let fvl = if v_min >= params.v_d1 {
        1.0
    } else if v <= v_min {
        (v - params.v_d2) / span
    } else {
        (v_min - params.v_d2 + params.fr_cel * (v - v_min)) / span
    };
    fvl.clamp(0.0, 1.0)
}

pub fn electronic_pq(v: f64, params: &ElectronicParams, v_min_seen: f64) -> (f64, f64) {
    let p = electronic_fvl(v, params, v_min_seen) * params.p0;
    let q = if params.pf_elc >= 1.0 {
        0.0
    } else {
        params.pf_elc.acos().tan() * p
    };
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ElectronicParams {
        ElectronicParams {
            v_d1: 0.65,
            v_d2: 0.52,
            fr_cel: 0.5,
            pf_elc: 1.0,
            p0: 0.3,
        }
    }

    #[test]
    fn untripped_is_full_load() {
        assert_eq!(electronic_pq(1.0, &params(), 1.0), (0.3, 0.0));
    }

    #[test]
    fn below_full_trip_is_zero() {
        assert_eq!(electronic_pq(0.52, &params(), 1.0).0, 0.0);
        assert_eq!(electronic_pq(0.3, &params(), 0.3).0, 0.0);
    }

    #[test]
    fn partial_reconnection() {
        let f = electronic_fvl(0.61, &params(), 0.55);
        assert_relative_eq!(f, (0.03 + 0.5 * 0.06) / 0.13, epsilon = 1e-12);
        assert_relative_eq!(f, 0.4615, epsilon = 1e-4);
    }

    #[test]
    fn linear_trip_on_the_way_down() {
        let f = electronic_fvl(0.6, &params(), 1.0);
        assert_relative_eq!(f, 0.08 / 0.13, epsilon = 1e-12);
    }

    #[test]
    fn recovery_is_continuous_at_minimum() {
        let p = params();
        let down = electronic_fvl(0.58, &p, 0.58);
        let up = electronic_fvl(0.58 + 1e-12, &p, 0.58);
        assert_relative_eq!(down, up, epsilon = 1e-9);
    }

    #[test]
    fn non_unity_power_factor() {
        let p = ElectronicParams { pf_elc: 0.8, ..params() };
        let (pp, q) = electronic_pq(1.0, &p, 1.0);
        assert_relative_eq!(q, 0.75 * pp, epsilon = 1e-12);
    }
}
