use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Static polynomial load. Coefficients are Z/I/P shares of `p0`/`q0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZipParams {
    pub p1c: f64,
    pub p2c: f64,
    pub p3c: f64,
    pub q1c: f64,
    pub q2c: f64,
    pub q3c: f64,
    pub p0: f64,
    pub q0: f64,
    pub v0: f64,
}

impl ZipParams {
    pub fn validate(&self) -> Result<()> {
        for (name, c) in [
            ("p", [self.p1c, self.p2c, self.p3c]),
            ("q", [self.q1c, self.q2c, self.q3c]),
        ] {
            if c.iter().any(|x| !(-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(x)) {
                return Err(ClmError::InvalidParameter(format!("zip {name} coefficients must lie in [0, 1]: {c:?}")));
            }
            let sum: f64 = c.iter().sum();
            if (sum - 1.0).abs() > SIMPLEX_TOL {
                return Err(ClmError::InvalidParameter(format!("zip {name} coefficients must sum to 1, got {sum}")));
            }
        }
        if !(self.v0 > 0.0) {
            return Err(ClmError::InvalidParameter("zip v0 must be > 0".into()));
        }
        Ok(())
    }
}

pub fn zip_pq(v: f64, params: &ZipParams) -> (f64, f64) {
    let r = v / params.v0;
    let p = params.p0 * (params.p1c * r * r + params.p2c * r + params.p3c);
    let q = params.q0 * (params.q1c * r * r + params.q2c * r + params.q3c);
    (p, q)
}
