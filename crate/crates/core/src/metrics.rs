//! Fitting losses: RMSE, the trend-aware search reward, pinball loss and
//! quantile-band scoring of a composition.

use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};
use crate::simulator::PQTrace;

/// Default episode-termination threshold on the reward.
pub const DEFAULT_LAMBDA: f64 = -0.012;

/// Weights of the search reward `-(alpha * rmse + beta * trend) - r_step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub alpha: f64,
    pub beta: f64,
    pub r_step: f64,
    /// Normalizer of the peak/valley index mismatch; the trace length by default.
    pub k_scale: f64,
    /// Episodes end once a state scores above this value.
    pub lambda_term: f64,
    /// First sample of the post-fault window searched for peaks and valleys.
    pub trend_window_start: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha: 1.0,
            beta: 1.0,
            r_step: 0.0,
            k_scale: 1.0,
            lambda_term: DEFAULT_LAMBDA,
            trend_window_start: 0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [("alpha", self.alpha), ("beta", self.beta), ("k_scale", self.k_scale)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ClmError::InvalidConfig(format!("reward {name} must be > 0, got {v}")));
            }
        }
        if !(self.r_step >= 0.0 && self.r_step.is_finite()) {
            return Err(ClmError::InvalidConfig(format!("reward r_step must be >= 0, got {}", self.r_step)));
        }
        if !(self.lambda_term < 0.0) {
            return Err(ClmError::InvalidConfig(format!(
                "reward lambda_term must be < 0, got {}",
                self.lambda_term
            )));
        }
        Ok(())
    }
}

/// Per-channel and summed root-mean-square error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub p: f64,
    pub q: f64,
}

impl Rmse {
    pub fn sum(&self) -> f64 {
        self.p + self.q
    }
}

/// Named loss values of one trace against a reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub p_rmse: f64,
    pub q_rmse: f64,
    pub rmse_sum: f64,
    pub trend: f64,
    pub reward: f64,
}

fn check_lengths(test: &PQTrace, reference: &PQTrace) -> Result<()> {
    if test.len() != reference.len() {
        return Err(ClmError::LengthMismatch {
            left: test.len(),
            right: reference.len(),
        });
    }
    Ok(())
}

fn channel_rmse(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

pub fn rmse(test: &PQTrace, reference: &PQTrace) -> Result<Rmse> {
    check_lengths(test, reference)?;
    Ok(Rmse {
        p: channel_rmse(&test.p, &reference.p),
        q: channel_rmse(&test.q, &reference.q),
    })
}

/// Index of the smallest and largest element, earliest on ties.
fn arg_extrema(xs: &[f64]) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[lo] {
            lo = i;
        }
        if x > xs[hi] {
            hi = i;
        }
    }
    (lo, hi)
}

/// Peak and valley timing mismatch, summed over P and Q and divided by `k_scale`.
///
/// Only samples from `window_start` on are searched.
pub fn trend_loss(test: &PQTrace, reference: &PQTrace, k_scale: f64, window_start: usize) -> Result<f64> {
    check_lengths(test, reference)?;
    let start = window_start.min(test.len());
    let mut total = 0usize;
    for (a, b) in [(&test.p, &reference.p), (&test.q, &reference.q)] {
        if start >= a.len() {
            continue;
        }
        let (a_lo, a_hi) = arg_extrema(&a[start..]);
        let (b_lo, b_hi) = arg_extrema(&b[start..]);
        total += a_lo.abs_diff(b_lo) + a_hi.abs_diff(b_hi);
    }
    Ok(total as f64 / k_scale)
}

/// Search reward: weighted RMSE and trend terms clamped to `[-1, 0]`, minus the step penalty.
pub fn reward(test: &PQTrace, reference: &PQTrace, cfg: &RewardConfig) -> Result<f64> {
    Ok(loss_report(test, reference, cfg)?.reward)
}

pub fn loss_report(test: &PQTrace, reference: &PQTrace, cfg: &RewardConfig) -> Result<LossReport> {
    let e = rmse(test, reference)?;
    let trend = trend_loss(test, reference, cfg.k_scale, cfg.trend_window_start)?;
    Ok(LossReport {
        p_rmse: e.p,
        q_rmse: e.q,
        rmse_sum: e.sum(),
        trend,
        reward: reward_from_terms(e.sum(), trend, cfg),
    })
}

/// Reward from precomputed RMSE and trend terms.
pub fn reward_from_terms(rmse_sum: f64, trend: f64, cfg: &RewardConfig) -> f64 {
    let weighted = -(cfg.alpha * rmse_sum + cfg.beta * trend);
    let clamped = if weighted.is_nan() { -1.0 } else { weighted.clamp(-1.0, 0.0) };
    clamped - cfg.r_step
}

/// Quantile (pinball) loss of the estimate `x_hat` of quantile `tau` against observation `x`.
pub fn pinball(x_hat: f64, x: f64, tau: f64) -> f64 {
    let d = x_hat - x;
    (d * tau).max(d * (tau - 1.0))
}

/// Symmetric quantile band at levels `1 - o` (lower) and `o` (upper) for P and Q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileBand {
    pub o: f64,
    pub p_lower: Vec<f64>,
    pub p_upper: Vec<f64>,
    pub q_lower: Vec<f64>,
    pub q_upper: Vec<f64>,
}

impl QuantileBand {
    pub fn len(&self) -> usize {
        self.p_lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_lower.is_empty()
    }
}

/// Empirical quantile of sorted data by linear interpolation between order
/// statistics at position `level * (n - 1)`.
pub fn sorted_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = level.clamp(0.0, 1.0) * (n - 1) as f64;
    let i = (pos.floor() as usize).min(n - 2);
    let w = pos - i as f64;
    sorted[i] + (sorted[i + 1] - sorted[i]) * w
}

/// Per-snapshot quantile band of a sample set at level `o` (and `1 - o`).
pub fn quantile_band(samples: &[PQTrace], o: f64) -> Result<QuantileBand> {
    if samples.len() < 2 {
        return Err(ClmError::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(o > 0.0 && o < 1.0) {
        return Err(ClmError::InvalidParameter(format!("quantile level must be in (0, 1), got {o}")));
    }
    let n = samples[0].len();
    if let Some(bad) = samples.iter().find(|s| s.len() != n) {
        return Err(ClmError::LengthMismatch { left: n, right: bad.len() });
    }
    let (lo_level, hi_level) = if o >= 0.5 { (1.0 - o, o) } else { (o, 1.0 - o) };
    let mut band = QuantileBand {
        o,
        p_lower: Vec::with_capacity(n),
        p_upper: Vec::with_capacity(n),
        q_lower: Vec::with_capacity(n),
        q_upper: Vec::with_capacity(n),
    };
    let mut col = vec![0.0; samples.len()];
    for k in 0..n {
        for (c, s) in col.iter_mut().zip(samples) {
            *c = s.p[k];
        }
        col.sort_by(f64::total_cmp);
        band.p_lower.push(sorted_quantile(&col, lo_level));
        band.p_upper.push(sorted_quantile(&col, hi_level));
        for (c, s) in col.iter_mut().zip(samples) {
            *c = s.q[k];
        }
        col.sort_by(f64::total_cmp);
        band.q_lower.push(sorted_quantile(&col, lo_level));
        band.q_upper.push(sorted_quantile(&col, hi_level));
    }
    Ok(band)
}

/// How the band edges enter the pinball loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinballConvention {
    /// Each edge is scored as the quantile it estimates: the upper edge
    /// (level `o`) with the standard quantile loss
    /// `max(o (x - x_hat), (o - 1)(x - x_hat))`, which [`pinball`] gives at
    /// `tau = 1 - o`. The expected loss is then minimized by the true
    /// quantiles, so the band of the true composition scores best on average.
    #[default]
    Proper,
    /// [`pinball`] at `tau = o` on the upper edge and `1 - o` on the lower
    /// edge. With the residual `x_hat - x` this is minimized by the
    /// `(1 - o)` quantile on the upper edge, which favors narrow bands.
    AsPrinted,
}

/// Mean pinball loss of a reference trace against a band, over the `N`
/// snapshots, summing the upper and lower edges of both P and Q.
pub fn composition_pinball(band: &QuantileBand, reference: &PQTrace, convention: PinballConvention) -> Result<f64> {
    if band.len() != reference.len() {
        return Err(ClmError::LengthMismatch {
            left: band.len(),
            right: reference.len(),
        });
    }
    if band.is_empty() {
        return Ok(0.0);
    }
    let upper_level = band.o.max(1.0 - band.o);
    let (tau_hi, tau_lo) = match convention {
        PinballConvention::Proper => (1.0 - upper_level, upper_level),
        PinballConvention::AsPrinted => (upper_level, 1.0 - upper_level),
    };
    let mut total = 0.0;
    for k in 0..band.len() {
        total += pinball(band.p_upper[k], reference.p[k], tau_hi)
            + pinball(band.p_lower[k], reference.p[k], tau_lo)
            + pinball(band.q_upper[k], reference.q[k], tau_hi)
            + pinball(band.q_lower[k], reference.q[k], tau_lo);
    }
    Ok(total / band.len() as f64)
}
