//! Stage one: load-composition search with double-network Q-learning.
//!
//! The state is the composition vector; an action moves `rho` of the bus
//! load from one component to another. A prediction network (A) is trained
//! on replayed transitions against bootstrap targets from a target network
//! (B) that is refreshed from A at the start of every episode.

pub mod net;
mod replay;

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use net::{Adam, ForwardCache, Mlp};
pub use replay::ReplayBuffer;

use crate::composition::{LoadComposition, ModelLayout};
use crate::env::{Evaluation, RewardEnv};
use crate::error::{ClmError, Result};

/// Slack allowed when deciding whether a component can give up `rho`.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Move `rho` of the load from component `src` to component `dst`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub src: usize,
    pub dst: usize,
}

/// All ordered pairs of distinct components; `n (n - 1)` actions.
pub fn action_space(n: usize) -> Vec<Action> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1));
    for src in 0..n {
        for dst in 0..n {
            if src != dst {
                out.push(Action { src, dst });
            }
        }
    }
    out
}

pub fn is_feasible(s: &LoadComposition, a: Action, rho: f64) -> bool {
    let f = s.fractions();
    a.src != a.dst && a.src < f.len() && a.dst < f.len() && f[a.src] + FEASIBILITY_TOL >= rho
}

/// Feasibility mask over `actions` at state `s`.
pub fn feasible_mask(s: &LoadComposition, actions: &[Action], rho: f64) -> Vec<bool> {
    actions.iter().map(|a| is_feasible(s, *a, rho)).collect()
}

/// Transfers `rho` from `a.src` to `a.dst`; the sum of the fractions is preserved.
pub fn apply_action(s: &LoadComposition, a: Action, rho: f64) -> Result<LoadComposition> {
    if !is_feasible(s, a, rho) {
        return Err(ClmError::InvalidComposition(format!(
            "action {}->{} infeasible at {s}",
            a.src, a.dst
        )));
    }
    let mut f = s.fractions().to_vec();
    // a source within the feasibility slack gives up exactly what it has
    let moved = rho.min(f[a.src]);
    f[a.src] -= moved;
    f[a.dst] += moved;
    LoadComposition::new(s.layout, f)
}

/// Index of the largest value among feasible entries, lowest index on ties.
pub fn masked_argmax(values: &[f64], mask: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (&v, &ok)) in values.iter().zip(mask).enumerate() {
        if ok && best.is_none_or(|b| v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Network input for a state: deviation from the uniform composition, scaled.
pub fn features(s: &LoadComposition, scale: f64) -> Vec<f64> {
    let u = 1.0 / s.len() as f64;
    s.fractions().iter().map(|f| (f - u) * scale).collect()
}

fn masked_max(values: &[f64], mask: &[bool]) -> Option<f64> {
    masked_argmax(values, mask).map(|i| values[i])
}

/// Hyperparameters of the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Step size of the network update.
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Multiplicative epsilon decay per episode.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub episode_step_cap: usize,
    /// Parameter samples simulated per state.
    pub n_eval: usize,
    pub rho: f64,
    pub episodes: usize,
    pub hidden_sizes: Vec<usize>,
    /// Use the decoupled target `Q_B(s', argmax_a' Q_A(s', a'))` instead of `max_a' Q_B(s', a')`.
    pub canonical_double: bool,
    /// Candidates returned from the terminal states.
    pub top_k: usize,
    /// Starting composition; uniform when absent.
    pub start: Option<Vec<f64>>,
    /// Network inputs are the fractions' deviations from uniform times this factor.
    pub input_scale: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            learning_rate: 1e-3,
            gamma: 0.9,
            epsilon: 1.0,
            epsilon_decay: 0.995,
            epsilon_floor: 0.05,
            buffer_capacity: 2000,
            batch_size: 32,
            episode_step_cap: 80,
            n_eval: 20,
            rho: 0.01,
            episodes: 1000,
            hidden_sizes: vec![64, 64],
            canonical_double: false,
            top_k: 3,
            start: None,
            input_scale: 10.0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ClmError::InvalidConfig(format!("agent {m}")));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must be in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.epsilon) || !(0.0..=1.0).contains(&self.epsilon_floor) {
            return bad("epsilon and epsilon_floor must be in [0, 1]");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad("epsilon_decay must be in (0, 1]");
        }
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.episode_step_cap == 0 {
            return bad("buffer_capacity, batch_size and episode_step_cap must be >= 1");
        }
        if self.n_eval == 0 {
            return bad("n_eval must be >= 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must be in (0, 1)");
        }
        if self.hidden_sizes.contains(&0) {
            return bad("hidden layer sizes must be >= 1");
        }
        if !(self.input_scale > 0.0 && self.input_scale.is_finite()) {
            return bad("input_scale must be > 0");
        }
        if self.top_k == 0 {
            return bad("top_k must be >= 1");
        }
        Ok(())
    }

    /// Exploration rate used during episode `e` (zero-based).
    pub fn epsilon_at(&self, episode: usize) -> f64 {
        (self.epsilon * self.epsilon_decay.powi(episode as i32)).max(self.epsilon_floor)
    }

    pub fn start_state(&self, layout: ModelLayout) -> Result<LoadComposition> {
        match &self.start {
            Some(f) => LoadComposition::new(layout, f.clone()),
            None => Ok(LoadComposition::uniform(layout)),
        }
    }

    pub fn network_sizes(&self, layout: ModelLayout) -> Vec<usize> {
        let n = layout.len();
        let mut sizes = vec![n];
        sizes.extend(&self.hidden_sizes);
        sizes.push(n * (n - 1));
        sizes
    }
}

/// One environment step stored for replay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: LoadComposition,
    /// Index into the action space.
    pub a: usize,
    pub s_next: LoadComposition,
    pub r: f64,
    /// Whether the episode ended at `s_next`.
    pub terminal: bool,
}

/// The fixed quantities of a learning update.
#[derive(Clone, Copy, Debug)]
pub struct TdSettings<'a> {
    pub gamma: f64,
    pub rho: f64,
    pub actions: &'a [Action],
    pub canonical_double: bool,
    pub input_scale: f64,
}

/// Bootstrap target of one transition.
pub fn td_target(net_a: &Mlp, net_b: &Mlp, t: &Transition, td: &TdSettings) -> f64 {
    if t.terminal {
        return t.r;
    }
    let mask = feasible_mask(&t.s_next, td.actions, td.rho);
    let q_b = net_b.forward(&features(&t.s_next, td.input_scale));
    let bootstrap = if td.canonical_double {
        let q_a = net_a.forward(&features(&t.s_next, td.input_scale));
        masked_argmax(&q_a, &mask).map(|i| q_b[i])
    } else {
        masked_max(&q_b, &mask)
    };
    t.r + td.gamma * bootstrap.unwrap_or(0.0)
}

/// Gradient of `sum_t 0.5 (Q_A(s_t, a_t) - y_t)^2` with the targets `y_t` held fixed.
pub fn td_gradient(net_a: &Mlp, net_b: &Mlp, batch: &[Transition], td: &TdSettings) -> Vec<f64> {
    let mut grad = vec![0.0; net_a.params.len()];
    let mut d_out = vec![0.0; net_a.output_size()];
    for t in batch {
        let y = td_target(net_a, net_b, t, td);
        let cache = net_a.forward_cached(&features(&t.s, td.input_scale));
        d_out.fill(0.0);
        d_out[t.a] = cache.output()[t.a] - y;
        net_a.backward(&cache, &d_out, &mut grad);
    }
    grad
}

/// One optimizer step of network A on the squared TD error of `batch`.
pub fn train_step(net_a: &mut Mlp, net_b: &Mlp, opt: &mut Adam, batch: &[Transition], td: &TdSettings) {
    if batch.is_empty() {
        return;
    }
    let grad = td_gradient(net_a, net_b, batch, td);
    opt.step(&mut net_a.params, &grad);
}

/// Per-episode learning-curve record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub cumulative_reward: f64,
    /// P + Q RMSE at the state where the episode ended.
    pub rmse_sum: f64,
    /// Reward of the state where the episode ended.
    pub final_reward: f64,
    /// Best reward of any state visited so far.
    pub best_reward: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub terminated: bool,
}

/// A distinct terminal state and its score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub composition: LoadComposition,
    pub reward: f64,
    pub evaluation: Evaluation,
    /// Episodes that ended in this state.
    pub hits: usize,
}

/// Snapshot of the learner, written as JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub config: AgentConfig,
    pub episodes_done: usize,
    pub net: Mlp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub history: Vec<EpisodeRecord>,
    /// Distinct terminal states, best first, at most `top_k`.
    pub candidates: Vec<Candidate>,
    /// Best state visited anywhere during training.
    pub best_visited: Candidate,
    pub checkpoint: Checkpoint,
    pub states_evaluated: usize,
}

/// Runs `cfg.episodes` episodes of epsilon-greedy Q-learning against `env`.
///
/// Episodes end when a state scores above `lambda_term` or after
/// `episode_step_cap` steps. Every episode's final state is a terminal state;
/// the distinct terminal states are returned best first.
pub fn train<E: RewardEnv + ?Sized>(env: &E, cfg: &AgentConfig, lambda_term: f64, seed: u64) -> Result<TrainOutcome> {
    cfg.validate()?;
    let layout = env.layout();
    if layout.len() < 2 {
        return Err(ClmError::InvalidConfig("composition search needs at least two components".into()));
    }
    let start = cfg.start_state(layout)?;
    let actions = action_space(layout.len());
    let td = TdSettings {
        gamma: cfg.gamma,
        rho: cfg.rho,
        actions: &actions,
        canonical_double: cfg.canonical_double,
        input_scale: cfg.input_scale,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net_a = Mlp::new(&cfg.network_sizes(layout), rng.random());
    let mut opt = Adam::new(net_a.params.len(), cfg.learning_rate);
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut history = Vec::with_capacity(cfg.episodes);
    let mut terminals: HashMap<Vec<i64>, Candidate> = HashMap::new();
    let mut best_visited = Candidate {
        composition: start.clone(),
        reward: f64::NEG_INFINITY,
        evaluation: Evaluation::from_reward(f64::NEG_INFINITY),
        hits: 0,
    };
    let mut visited = std::collections::HashSet::new();

    for episode in 0..cfg.episodes {
        let net_b = net_a.clone();
        let epsilon = cfg.epsilon_at(episode);
        let mut s = start.clone();
        let mut cumulative = 0.0;
        let mut last_eval = None;
        let mut steps = 0;
        let mut terminated = false;
        while steps < cfg.episode_step_cap {
            let mask = feasible_mask(&s, &actions, cfg.rho);
            let a = if rng.random::<f64>() < epsilon {
                let feasible: Vec<usize> = (0..actions.len()).filter(|&i| mask[i]).collect();
                feasible[rng.random_range(0..feasible.len())]
            } else {
                let q = net_a.forward(&features(&s, cfg.input_scale));
                masked_argmax(&q, &mask).expect("some component always holds at least rho")
            };
            let s_next = apply_action(&s, actions[a], cfg.rho)?;
            let eval = env.evaluate(&s_next)?;
            visited.insert(s_next.key());
            steps += 1;
            let r = eval.reward;
            terminated = lambda_term.is_finite() && r > lambda_term;
            let done = terminated || steps == cfg.episode_step_cap;
            buffer.push(Transition {
                s: s.clone(),
                a,
                s_next: s_next.clone(),
                r,
                terminal: done,
            });
            if buffer.len() >= cfg.batch_size {
                let batch = buffer.sample(cfg.batch_size, &mut rng);
                train_step(&mut net_a, &net_b, &mut opt, &batch, &td);
            }
            cumulative += r;
            if r > best_visited.reward {
                best_visited = Candidate {
                    composition: s_next.clone(),
                    reward: r,
                    evaluation: eval,
                    hits: 0,
                };
            }
            s = s_next;
            last_eval = Some(eval);
            if done {
                break;
            }
        }
        let eval = last_eval.expect("episodes take at least one step");
        terminals
            .entry(s.key())
            .and_modify(|c| c.hits += 1)
            .or_insert_with(|| Candidate {
                composition: s.clone(),
                reward: eval.reward,
                evaluation: eval,
                hits: 1,
            });
        history.push(EpisodeRecord {
            episode,
            cumulative_reward: cumulative,
            rmse_sum: eval.rmse.sum(),
            final_reward: eval.reward,
            best_reward: best_visited.reward,
            steps,
            epsilon,
            terminated,
        });
    }

    let mut candidates: Vec<Candidate> = terminals.into_values().collect();
    candidates.sort_by(|a, b| {
        b.reward
            .total_cmp(&a.reward)
            .then_with(|| a.composition.key().cmp(&b.composition.key()))
    });
    candidates.truncate(cfg.top_k);
    Ok(TrainOutcome {
        history,
        candidates,
        best_visited,
        checkpoint: Checkpoint {
            config: cfg.clone(),
            episodes_done: cfg.episodes,
            net: net_a,
        },
        states_evaluated: visited.len(),
    })
}
