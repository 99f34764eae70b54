//! Full composite parameter sets and their uniform sampling ranges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::electronic::ElectronicParams;
use super::motor::ImParams;
use super::single_phase::SinglePhaseParams;
use super::zip::ZipParams;
use crate::error::{ClmError, Result};

const MAX_REJECTIONS: usize = 100_000;

/// Closed interval `[lo, hi]`, written as a two-element array in config files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound(pub f64, pub f64);

impl Bound {
    pub fn lo(&self) -> f64 {
        self.0
    }

    pub fn hi(&self) -> f64 {
        self.1
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.0 && v <= self.1
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.0 == self.1 {
            self.0
        } else {
            rng.random_range(self.0..=self.1)
        }
    }

    fn check(&self, name: &str) -> Result<()> {
        if !(self.0.is_finite() && self.1.is_finite() && self.0 <= self.1) {
            return Err(ClmError::InvalidConfig(format!("range {name} must satisfy lo <= hi, got {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotorRanges {
    pub r_s: Bound,
    pub l_s: Bound,
    pub l_p: Bound,
    pub l_pp: Bound,
    pub t_p0: Bound,
    pub t_pp0: Bound,
    pub h: Bound,
    pub e_trq: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinglePhaseRanges {
    pub v_brk: Bound,
    pub v_stall: Bound,
    pub v_rst: Bound,
    pub f_rst: Bound,
    pub r_stall: Bound,
    pub x_stall: Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElectronicRanges {
    pub v_d1: Bound,
    pub v_d2: Bound,
    pub fr_cel: Bound,
    pub pf_elc: Bound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamRanges {
    pub ma: MotorRanges,
    pub mb: MotorRanges,
    pub mc: MotorRanges,
    pub single_phase: SinglePhaseRanges,
    pub electronic: ElectronicRanges,
}

impl Default for ParamRanges {
    fn default() -> Self {
        let ma = MotorRanges {
            r_s: Bound(0.03, 0.05),
            l_s: Bound(1.50, 2.00),
            l_p: Bound(0.10, 0.15),
            l_pp: Bound(0.10, 0.20),
            t_p0: Bound(0.09, 0.10),
            t_pp0: Bound(1e-3, 2e-3),
            h: Bound(0.10, 0.20),
            e_trq: 0.0,
        };
        let mb = MotorRanges {
            l_p: Bound(0.17, 0.22),
            l_pp: Bound(0.12, 0.15),
            t_p0: Bound(0.18, 0.22),
            t_pp0: Bound(2e-3, 3e-3),
            h: Bound(0.25, 1.00),
            e_trq: 2.0,
            ..ma
        };
        let mc = MotorRanges { h: Bound(0.10, 0.20), ..mb };
        ParamRanges {
            ma,
            mb,
            mc,
            single_phase: SinglePhaseRanges {
                v_brk: Bound(0.85, 0.90),
                v_stall: Bound(0.55, 0.65),
                v_rst: Bound(0.92, 0.96),
                f_rst: Bound(0.15, 0.30),
                r_stall: Bound(0.10, 0.12),
                x_stall: Bound(0.10, 0.12),
            },
            electronic: ElectronicRanges {
                v_d1: Bound(0.60, 0.70),
                v_d2: Bound(0.50, 0.55),
                fr_cel: Bound(0.10, 0.30),
                pf_elc: Bound(1.0, 1.0),
            },
        }
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("ma", &self.ma), ("mb", &self.mb), ("mc", &self.mc)] {
            for (field, b) in [
                ("r_s", m.r_s),
                ("l_s", m.l_s),
                ("l_p", m.l_p),
                ("l_pp", m.l_pp),
                ("t_p0", m.t_p0),
                ("t_pp0", m.t_pp0),
                ("h", m.h),
            ] {
                b.check(&format!("{name}.{field}"))?;
                if b.lo() <= 0.0 {
                    return Err(ClmError::InvalidConfig(format!("range {name}.{field} must be positive")));
                }
            }
            if m.e_trq != 0.0 && m.e_trq != 2.0 {
                return Err(ClmError::InvalidConfig(format!("{name}.e_trq must be 0 or 2")));
            }
            // l_s > l_p > l_pp and t_p0 > t_pp0 must be reachable by rejection
            if m.l_pp.lo() >= m.l_p.hi() || m.l_p.lo() >= m.l_s.hi() || m.t_pp0.lo() >= m.t_p0.hi() {
                return Err(ClmError::InvalidConfig(format!("{name}: ordering l_s > l_p > l_pp, t_p0 > t_pp0 unreachable")));
            }
        }
        let s = &self.single_phase;
        for (field, b) in [
            ("v_brk", s.v_brk),
            ("v_stall", s.v_stall),
            ("v_rst", s.v_rst),
            ("f_rst", s.f_rst),
            ("r_stall", s.r_stall),
            ("x_stall", s.x_stall),
        ] {
            b.check(&format!("single_phase.{field}"))?;
        }
        if s.v_stall.lo() >= s.v_brk.hi() || s.v_brk.lo() >= s.v_rst.hi() {
            return Err(ClmError::InvalidConfig("single_phase: v_stall < v_brk < v_rst unreachable".into()));
        }
        if s.f_rst.lo() < 0.0 || s.f_rst.hi() > 1.0 || s.r_stall.lo() <= 0.0 || s.x_stall.lo() <= 0.0 {
            return Err(ClmError::InvalidConfig("single_phase: f_rst in [0,1], stall impedance > 0".into()));
        }
        let e = &self.electronic;
        for (field, b) in [("v_d1", e.v_d1), ("v_d2", e.v_d2), ("fr_cel", e.fr_cel), ("pf_elc", e.pf_elc)] {
            b.check(&format!("electronic.{field}"))?;
        }
        if e.v_d2.lo() >= e.v_d1.hi() {
            return Err(ClmError::InvalidConfig("electronic: v_d2 < v_d1 unreachable".into()));
        }
        if e.fr_cel.lo() < 0.0 || e.fr_cel.hi() > 1.0 || e.pf_elc.lo() <= 0.0 || e.pf_elc.hi() > 1.0 {
            return Err(ClmError::InvalidConfig("electronic: fr_cel in [0,1], pf_elc in (0,1]".into()));
        }
        Ok(())
    }
}

/// Parameters of every component of one composite load instance.
///
/// Sampled sets carry placeholder initial powers; the simulator assigns
/// them from the load composition at initialization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeParams {
    pub ma: ImParams,
    pub mb: ImParams,
    pub mc: ImParams,
    pub single_phase: SinglePhaseParams,
    pub electronic: ElectronicParams,
    pub zip: ZipParams,
}

impl CompositeParams {
    pub fn validate(&self) -> Result<()> {
        self.ma.validate()?;
        self.mb.validate()?;
        self.mc.validate()?;
        self.single_phase.validate()?;
        self.electronic.validate()?;
        self.zip.validate()
    }

    pub fn motors(&self) -> [&ImParams; 3] {
        [&self.ma, &self.mb, &self.mc]
    }
}

fn sample_motor(r: &MotorRanges, rng: &mut impl Rng) -> ImParams {
    let r_s = r.r_s.sample(rng);
    let h = r.h.sample(rng);
    let mut draw = || {
        (
            r.l_s.sample(rng),
            r.l_p.sample(rng),
            r.l_pp.sample(rng),
            r.t_p0.sample(rng),
            r.t_pp0.sample(rng),
        )
    };
    for _ in 0..MAX_REJECTIONS {
        let (l_s, l_p, l_pp, t_p0, t_pp0) = draw();
        if l_s > l_p && l_p > l_pp && t_p0 > t_pp0 {
            return ImParams {
                r_s,
                l_s,
                l_p,
                l_pp,
                t_p0,
                t_pp0,
                h,
                e_trq: r.e_trq,
            };
        }
    }
    unreachable!("motor ranges validated as satisfiable")
}

fn sample_simplex3(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let a: f64 = rng.random_range(0.0..=1.0);
        let b: f64 = rng.random_range(0.0..=1.0);
        let c = 1.0 - a - b;
        if c >= 0.0 {
            return [a, b, c];
        }
    }
}

/// Draws one parameter set uniformly within `ranges`. Deterministic in `seed`.
pub fn sample_params(ranges: &ParamRanges, seed: u64) -> CompositeParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ma = sample_motor(&ranges.ma, &mut rng);
    let mb = sample_motor(&ranges.mb, &mut rng);
    let mc = sample_motor(&ranges.mc, &mut rng);

    let s = &ranges.single_phase;
    let single_phase = loop {
        let v_brk = s.v_brk.sample(&mut rng);
        let v_stall = s.v_stall.sample(&mut rng);
        let v_rst = s.v_rst.sample(&mut rng);
        if v_stall < v_brk && v_brk < v_rst {
            break SinglePhaseParams {
                v_brk,
                v_stall,
                v_rst,
                f_rst: s.f_rst.sample(&mut rng),
                r_stall: s.r_stall.sample(&mut rng),
                x_stall: s.x_stall.sample(&mut rng),
                p0: 1.0,
                q0: 0.0,
            };
        }
    };

    let e = &ranges.electronic;
    let electronic = loop {
        let v_d1 = e.v_d1.sample(&mut rng);
        let v_d2 = e.v_d2.sample(&mut rng);
        if v_d2 < v_d1 {
            break ElectronicParams {
                v_d1,
                v_d2,
                fr_cel: e.fr_cel.sample(&mut rng),
                pf_elc: e.pf_elc.sample(&mut rng),
                p0: 1.0,
            };
        }
    };

    let [p1c, p2c, p3c] = sample_simplex3(&mut rng);
    let [q1c, q2c, q3c] = sample_simplex3(&mut rng);
    let zip = ZipParams {
        p1c,
        p2c,
        p3c,
        q1c,
        q2c,
        q3c,
        p0: 1.0,
        q0: 0.0,
        v0: 1.0,
    };

    CompositeParams {
        ma,
        mb,
        mc,
        single_phase,
        electronic,
        zip,
    }
}

/// Seed of the `index`-th draw of a parameter stream rooted at `base`.
pub fn stream_seed(base: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ParamRanges::default().validate().unwrap();
    }

    #[test]
    fn sampling_is_deterministic() {
        let r = ParamRanges::default();
        assert_eq!(sample_params(&r, 7), sample_params(&r, 7));
        assert_ne!(sample_params(&r, 7), sample_params(&r, 8));
    }

    #[test]
    fn table_bounds_hold() {
        let r = ParamRanges::default();
        for seed in 0..500 {
            let p = sample_params(&r, seed);
            assert!((0.03..=0.05).contains(&p.ma.r_s));
            assert!((0.55..=0.65).contains(&p.single_phase.v_stall));
            p.validate().unwrap();
        }
    }

    #[test]
    fn unreachable_ordering_is_rejected() {
        let mut r = ParamRanges::default();
        r.ma.l_pp = Bound(0.16, 0.20);
        assert!(r.validate().is_err());
        let mut r = ParamRanges::default();
        r.electronic.v_d2 = Bound(0.75, 0.8);
        assert!(r.validate().is_err());
    }

    #[test]
    fn stream_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| stream_seed(42, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
