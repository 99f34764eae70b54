//! Particle-swarm and genetic-algorithm composition searches, scored by the
//! same reward environment as the Q-learning agent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::{LoadComposition, ModelLayout};
use crate::env::{Evaluation, RewardEnv};
use crate::error::{ClmError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub particles: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    pub iterations: usize,
    /// Initial fractions are drawn uniformly within `1/n +- init_spread`.
    pub init_spread: f64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        SwarmConfig {
            particles: 30,
            inertia: 0.7,
            cognitive: 1.5,
            social: 1.5,
            iterations: 30,
            init_spread: 0.03,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(ClmError::InvalidConfig("swarm needs at least one particle".into()));
        }
        for (name, v) in [
            ("inertia", self.inertia),
            ("cognitive", self.cognitive),
            ("social", self.social),
            ("init_spread", self.init_spread),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ClmError::InvalidConfig(format!("swarm {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    /// Individuals kept from parents plus offspring each generation.
    pub elite: usize,
    /// Standard deviation of the Gaussian mutation per component.
    pub mutation_scale: f64,
    /// Probability that an offspring is a crossover of two parents rather
    /// than a copy of one.
    pub crossover_rate: f64,
    pub generations: usize,
    pub init_spread: f64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 30,
            elite: 30,
            mutation_scale: 0.02,
            crossover_rate: 0.9,
            generations: 30,
            init_spread: 0.03,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(ClmError::InvalidConfig("GA population must be >= 2".into()));
        }
        if self.elite == 0 {
            return Err(ClmError::InvalidConfig("GA elite count must be >= 1".into()));
        }
        if !(self.mutation_scale.is_finite() && self.mutation_scale >= 0.0) {
            return Err(ClmError::InvalidConfig("GA mutation scale must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            return Err(ClmError::InvalidConfig("GA crossover rate must lie in [0, 1]".into()));
        }
        if !(self.init_spread.is_finite() && self.init_spread >= 0.0) {
            return Err(ClmError::InvalidConfig("GA init spread must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Result of a baseline search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub best: LoadComposition,
    pub best_evaluation: Evaluation,
    /// Best reward found up to and including each iteration; entry 0 is the
    /// initial population.
    pub history: Vec<f64>,
}

/// Projects arbitrary weights onto the simplex: clamp each to `[0, 1]`
/// (non-finite values become 0), then renormalize. All-zero weights give the
/// uniform composition.
pub fn project(layout: ModelLayout, weights: &[f64]) -> Result<LoadComposition> {
    let clamped: Vec<f64> = weights
        .iter()
        .map(|w| if w.is_finite() { w.clamp(0.0, 1.0) } else { 0.0 })
        .collect();
    LoadComposition::from_weights(layout, &clamped)
}

/// `n` compositions with fractions drawn uniformly in `1/len +- spread`,
/// projected onto the simplex.
pub fn initial_population(layout: ModelLayout, n: usize, spread: f64, seed: u64) -> Result<Vec<LoadComposition>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = 1.0 / layout.len() as f64;
    (0..n)
        .map(|_| {
            let w: Vec<f64> = (0..layout.len())
                .map(|_| center + spread * (2.0 * rng.random::<f64>() - 1.0))
                .collect();
            project(layout, &w)
        })
        .collect()
}

fn evaluate_all<E: RewardEnv + ?Sized>(env: &E, pop: &[LoadComposition]) -> Result<Vec<Evaluation>> {
    pop.par_iter().map(|c| env.evaluate(c)).collect()
}

/// Index of the highest reward; ties keep the first.
fn argmax(evals: &[Evaluation]) -> usize {
    let mut best = 0;
    for (i, e) in evals.iter().enumerate() {
        if e.reward > evals[best].reward {
            best = i;
        }
    }
    best
}

/// Particle swarm search from `init` (or a fresh population drawn from `seed`).
pub fn pso_search<E: RewardEnv + ?Sized>(
    cfg: &SwarmConfig,
    env: &E,
    init: Option<&[LoadComposition]>,
    seed: u64,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let layout = env.layout();
    let n = layout.len();
    let mut pos = match init {
        Some(p) => p.to_vec(),
        None => initial_population(layout, cfg.particles, cfg.init_spread, seed)?,
    };
    if pos.is_empty() {
        return Err(ClmError::InvalidConfig("empty initial swarm".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut vel = vec![vec![0.0; n]; pos.len()];
    let evals = evaluate_all(env, &pos)?;
    let mut personal: Vec<(LoadComposition, Evaluation)> = pos.iter().cloned().zip(evals.iter().copied()).collect();
    let g = argmax(&evals);
    let mut global = (pos[g].clone(), evals[g]);
    let mut history = vec![global.1.reward];
    for _ in 0..cfg.iterations {
        for (i, x) in pos.iter_mut().enumerate() {
            let pb = personal[i].0.fractions();
            let gb = global.0.fractions();
            let xf = x.fractions();
            let mut w = vec![0.0; n];
            for k in 0..n {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                vel[i][k] = cfg.inertia * vel[i][k] + cfg.cognitive * r1 * (pb[k] - xf[k]) + cfg.social * r2 * (gb[k] - xf[k]);
                w[k] = xf[k] + vel[i][k];
            }
            *x = project(layout, &w)?;
        }
        let evals = evaluate_all(env, &pos)?;
        for (i, e) in evals.iter().enumerate() {
            if e.reward > personal[i].1.reward {
                personal[i] = (pos[i].clone(), *e);
            }
            if e.reward > global.1.reward {
                global = (pos[i].clone(), *e);
            }
        }
        history.push(global.1.reward);
    }
    Ok(SearchOutcome {
        best: global.0,
        best_evaluation: global.1,
        history,
    })
}

/// Convex combination `w * a + (1 - w) * b` of two compositions.
pub fn crossover(a: &LoadComposition, b: &LoadComposition, w: f64) -> Result<LoadComposition> {
    let f: Vec<f64> = a
        .fractions()
        .iter()
        .zip(b.fractions())
        .map(|(x, y)| w * x + (1.0 - w) * y)
        .collect();
    LoadComposition::new(a.layout, f)
}

/// Elitist genetic search: each generation breeds `population` offspring by
/// tournament selection, convex crossover and projected Gaussian mutation,
/// then keeps the `elite` best of parents and offspring.
pub fn ga_search<E: RewardEnv + ?Sized>(
    cfg: &GaConfig,
    env: &E,
    init: Option<&[LoadComposition]>,
    seed: u64,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let layout = env.layout();
    let mut pop = match init {
        Some(p) => p.to_vec(),
        None => initial_population(layout, cfg.population, cfg.init_spread, seed)?,
    };
    if pop.is_empty() {
        return Err(ClmError::InvalidConfig("empty initial population".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD1B5_4A32_D192_ED03);
    let noise = Normal::new(0.0, cfg.mutation_scale.max(f64::MIN_POSITIVE)).expect("valid normal");
    let mut evals = evaluate_all(env, &pop)?;
    let g = argmax(&evals);
    let mut best = (pop[g].clone(), evals[g]);
    let mut history = vec![best.1.reward];
    for _ in 0..cfg.generations {
        let tournament = |rng: &mut ChaCha8Rng| {
            let i = rng.random_range(0..pop.len());
            let j = rng.random_range(0..pop.len());
            if evals[j].reward > evals[i].reward {
                j
            } else {
                i
            }
        };
        let mut offspring = Vec::with_capacity(cfg.population);
        for _ in 0..cfg.population {
            let a = tournament(&mut rng);
            let mut child = if rng.random::<f64>() < cfg.crossover_rate {
                let b = tournament(&mut rng);
                crossover(&pop[a], &pop[b], rng.random())?
            } else {
                pop[a].clone()
            };
            if cfg.mutation_scale > 0.0 {
                let w: Vec<f64> = child.fractions().iter().map(|f| f + noise.sample(&mut rng)).collect();
                child = project(layout, &w)?;
            }
            offspring.push(child);
        }
        let child_evals = evaluate_all(env, &offspring)?;
        let mut merged: Vec<(LoadComposition, Evaluation)> = pop.into_iter().zip(evals).collect();
        merged.extend(offspring.into_iter().zip(child_evals));
        // stable sort: parents precede equal-reward offspring
        merged.sort_by(|a, b| b.1.reward.total_cmp(&a.1.reward));
        merged.truncate(cfg.elite.min(merged.len()));
        if merged[0].1.reward > best.1.reward {
            best = merged[0].clone();
        }
        (pop, evals) = merged.into_iter().unzip();
        history.push(best.1.reward);
    }
    Ok(SearchOutcome {
        best: best.0,
        best_evaluation: best.1,
        history,
    })
}
