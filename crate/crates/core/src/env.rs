//! Reward environment shared by the composition searches: scores a load
//! composition by simulating it under a fixed stream of parameter samples
//! and comparing each response with the reference.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{LoadComposition, ModelLayout};
use crate::error::{ClmError, Result};
use crate::load_models::{sample_params, stream_seed, CompositeParams, ParamRanges};
use crate::metrics::{self, RewardConfig, Rmse};
use crate::simulator::{simulate, PQTrace, SimConfig, VoltageTrace};

/// How the rewards of the parameter samples combine into the state reward.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardAggregate {
    /// Best reward over the samples.
    #[default]
    Best,
    Mean,
}

/// Score of one composition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub reward: f64,
    /// RMSE and trend of the best-scoring sample.
    pub rmse: Rmse,
    pub trend: f64,
    /// Position of the best-scoring sample in the parameter stream.
    pub best_sample: usize,
    /// Samples whose simulation succeeded.
    pub valid_samples: usize,
}

/// Anything that scores load compositions; implemented by [`Environment`]
/// and by synthetic landscapes in tests.
pub trait RewardEnv: Sync {
    fn layout(&self) -> ModelLayout;
    fn evaluate(&self, comp: &LoadComposition) -> Result<Evaluation>;
}

impl RewardEnv for Environment {
    fn layout(&self) -> ModelLayout {
        self.layout
    }

    fn evaluate(&self, comp: &LoadComposition) -> Result<Evaluation> {
        Environment::evaluate(self, comp)
    }
}

impl Evaluation {
    /// An evaluation carrying only a reward, for synthetic environments.
    pub fn from_reward(reward: f64) -> Self {
        Evaluation {
            reward,
            rmse: Rmse::default(),
            trend: 0.0,
            best_sample: 0,
            valid_samples: 1,
        }
    }
}

/// Everything needed to score a composition against a reference response.
#[derive(Debug)]
pub struct Environment {
    pub layout: ModelLayout,
    pub reference: PQTrace,
    pub voltage: Arc<VoltageTrace>,
    pub sim: SimConfig,
    pub reward: RewardConfig,
    pub aggregate: RewardAggregate,
    seed: u64,
    params: Vec<CompositeParams>,
    cache: Mutex<HashMap<Vec<i64>, Evaluation>>,
}

impl Environment {
    /// Builds the environment with `n_eval` parameter samples drawn from the
    /// stream `seed`. Every composition is scored against the same samples.
    pub fn new(
        layout: ModelLayout,
        reference: PQTrace,
        voltage: Arc<VoltageTrace>,
        sim: SimConfig,
        ranges: &ParamRanges,
        reward: RewardConfig,
        n_eval: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_eval == 0 {
            return Err(ClmError::InvalidConfig("n_eval must be >= 1".into()));
        }
        if reference.len() != voltage.len() {
            return Err(ClmError::LengthMismatch {
                left: reference.len(),
                right: voltage.len(),
            });
        }
        reward.validate()?;
        ranges.validate()?;
        sim.validate()?;
        let params = (0..n_eval).map(|i| sample_params(ranges, stream_seed(seed, i as u64))).collect();
        Ok(Environment {
            layout,
            reference,
            voltage,
            sim,
            reward,
            aggregate: RewardAggregate::Best,
            seed,
            params,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn with_aggregate(mut self, aggregate: RewardAggregate) -> Self {
        self.aggregate = aggregate;
        self
    }

    pub fn n_eval(&self) -> usize {
        self.params.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &[CompositeParams] {
        &self.params
    }

    /// Number of distinct compositions simulated so far.
    pub fn cache_len(&self) -> usize {
        self.cache.lock().expect("cache lock").len()
    }

    /// Replaces the reward weights and drops cached scores.
    pub fn set_reward(&mut self, reward: RewardConfig) -> Result<()> {
        reward.validate()?;
        self.reward = reward;
        self.cache.lock().expect("cache lock").clear();
        Ok(())
    }

    /// Best-sample RMSE sum and trend of `comp` under the current parameter stream,
    /// selecting the sample by RMSE alone.
    pub fn fit_terms(&self, comp: &LoadComposition) -> Result<(f64, f64)> {
        let terms: Vec<Option<(f64, f64)>> = self
            .params
            .par_iter()
            .map(|p| {
                let t = self.simulate(comp, p).ok()?;
                let e = metrics::rmse(&t, &self.reference).ok()?;
                let tr = metrics::trend_loss(&t, &self.reference, self.reward.k_scale, self.reward.trend_window_start).ok()?;
                Some((e.sum(), tr))
            })
            .collect();
        terms
            .into_iter()
            .flatten()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .ok_or(ClmError::AllSimulationsFailed(self.params.len()))
    }

    /// Sets the reward weights from anchor compositions.
    ///
    /// With an `anchor` (the reference group), `alpha` puts the anchor's
    /// RMSE term at half the termination threshold and `beta` keeps its
    /// trend term within a quarter of it. Without one, `alpha` makes the
    /// all-static composition score -1 on RMSE alone. Returns the weights set.
    pub fn calibrate(&mut self, static_comp: &LoadComposition, anchor: Option<&LoadComposition>) -> Result<RewardConfig> {
        let lam = self.reward.lambda_term.abs();
        let (rmse_static, _) = self.fit_terms(static_comp)?;
        let mut cfg = self.reward.clone();
        match anchor {
            Some(a) => {
                let (rmse_a, trend_a) = self.fit_terms(a)?;
                cfg.alpha = if lam.is_finite() && rmse_a > 0.0 {
                    0.5 * lam / rmse_a
                } else {
                    1.0 / rmse_static.max(f64::MIN_POSITIVE)
                };
                cfg.beta = if lam.is_finite() && trend_a > 0.0 {
                    cfg.alpha.min(0.25 * lam / trend_a)
                } else {
                    cfg.alpha
                };
            }
            None => {
                cfg.alpha = 1.0 / rmse_static.max(f64::MIN_POSITIVE);
                cfg.beta = cfg.alpha;
            }
        }
        self.set_reward(cfg.clone())?;
        Ok(cfg)
    }

    /// Simulates `comp` with one parameter set against the environment's voltage.
    pub fn simulate(&self, comp: &LoadComposition, params: &CompositeParams) -> Result<PQTrace> {
        simulate(comp, params, &self.voltage, &self.sim)
    }

    /// Scores a composition; results are cached per composition.
    pub fn evaluate(&self, comp: &LoadComposition) -> Result<Evaluation> {
        if comp.layout != self.layout {
            return Err(ClmError::InvalidComposition(format!(
                "composition layout {:?} does not match environment layout {:?}",
                comp.layout, self.layout
            )));
        }
        comp.validate()?;
        let key = comp.key();
        if let Some(e) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(*e);
        }
        let e = self.evaluate_uncached(comp)?;
        self.cache.lock().expect("cache lock").insert(key, e);
        Ok(e)
    }

    fn evaluate_uncached(&self, comp: &LoadComposition) -> Result<Evaluation> {
        let reports: Vec<Option<metrics::LossReport>> = self
            .params
            .par_iter()
            .map(|p| {
                self.simulate(comp, p)
                    .ok()
                    .and_then(|t| metrics::loss_report(&t, &self.reference, &self.reward).ok())
            })
            .collect();
        let mut best: Option<(usize, metrics::LossReport)> = None;
        let mut sum = 0.0;
        let mut valid = 0;
        for (i, r) in reports.iter().enumerate() {
            let Some(r) = r else { continue };
            valid += 1;
            sum += r.reward;
            if best.is_none_or(|(_, b)| r.reward > b.reward) {
                best = Some((i, *r));
            }
        }
        let Some((best_sample, b)) = best else {
            return Err(ClmError::AllSimulationsFailed(self.params.len()));
        };
        let reward = match self.aggregate {
            RewardAggregate::Best => b.reward,
            RewardAggregate::Mean => sum / valid as f64,
        };
        Ok(Evaluation {
            reward,
            rmse: Rmse { p: b.p_rmse, q: b.q_rmse },
            trend: b.trend,
            best_sample,
            valid_samples: valid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{make_fault_trace, FaultScenario};

    fn setup(n_eval: usize) -> Result<Environment> {
        let sim = SimConfig {
            t_end: 1.0,
            substeps: 5,
            ..Default::default()
        };
        let voltage = Arc::new(make_fault_trace(&FaultScenario::default(), &sim)?);
        let truth = LoadComposition::zip_im(0.3, 0.7)?;
        let reference = simulate(&truth, &sample_params(&ParamRanges::default(), 1234), &voltage, &sim)?;
        let reward = RewardConfig {
            k_scale: reference.len() as f64,
            ..Default::default()
        };
        Environment::new(ModelLayout::ZipIm, reference, voltage, sim, &ParamRanges::default(), reward, n_eval, 7)
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(setup(0).is_err());
    }

    #[test]
    fn evaluation_is_cached_and_deterministic() {
        let env = setup(4).unwrap();
        let c = LoadComposition::zip_im(0.5, 0.5).unwrap();
        let a = env.evaluate(&c).unwrap();
        assert_eq!(env.cache_len(), 1);
        let b = env.evaluate(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.valid_samples, 4);
        assert!(a.reward <= 0.0 && a.reward >= -1.0);
    }

    #[test]
    fn truth_beats_far_composition() {
        let env = setup(6).unwrap();
        let near = env.evaluate(&LoadComposition::zip_im(0.3, 0.7).unwrap()).unwrap();
        let far = env.evaluate(&LoadComposition::zip_im(1.0, 0.0).unwrap()).unwrap();
        assert!(near.reward > far.reward, "{near:?} vs {far:?}");
    }

    #[test]
    fn mean_aggregate_is_not_above_best() {
        let env = setup(5).unwrap();
        let c = LoadComposition::zip_im(0.4, 0.6).unwrap();
        let best = env.evaluate(&c).unwrap().reward;
        let env = setup(5).unwrap().with_aggregate(RewardAggregate::Mean);
        assert!(env.evaluate(&c).unwrap().reward <= best);
    }

    #[test]
    fn rejects_layout_mismatch() {
        let env = setup(2).unwrap();
        assert!(env.evaluate(&LoadComposition::uniform(ModelLayout::Wecc)).is_err());
    }
}
