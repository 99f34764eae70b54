//! End-to-end commands: reference generation, two-stage identification,
//! robustness sweeps, the baseline comparison and the loss-versus-samples
//! study. Each command writes its artifacts to an output directory and
//! returns the report it wrote.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composition::{Component, LoadComposition, ModelLayout};
use crate::config::{Calibration, RunConfig};
use crate::ddqn::{self, Candidate, EpisodeRecord};
use crate::env::Environment;
use crate::error::{ClmError, Result};
use crate::io::{self, Table};
use crate::load_models::{sample_params, stream_seed, CompositeParams};
use crate::metrics::{self, RewardConfig};
use crate::montecarlo::{self, CompositionCandidate, IdentificationResult, LossStudy, McSetup};
use crate::search_baselines::{self, initial_population};
use crate::simulator::{make_fault_trace, simulate, FaultScenario, PQTrace, VoltageTrace};

/// Independent seeds of the random streams in one run, all derived from
/// the global seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Parameter samples scored by the search reward.
    pub env: u64,
    pub agent: u64,
    /// Parameter samples of stage two.
    pub montecarlo: u64,
    pub baseline: u64,
}

impl Seeds {
    pub fn derive(seed: u64) -> Self {
        Seeds {
            env: stream_seed(seed, 1),
            agent: stream_seed(seed, 2),
            montecarlo: stream_seed(seed, 3),
            baseline: stream_seed(seed, 4),
        }
    }
}

/// Reference response and the inputs needed to reproduce it.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub layout: ModelLayout,
    /// Reference composition and parameters, when the reference is simulated.
    pub truth: Option<(LoadComposition, CompositeParams)>,
    pub reference: PQTrace,
    pub voltage: Arc<VoltageTrace>,
    /// First sample of the disturbance.
    pub fault_index: usize,
}

/// Parameters of the reference model.
pub fn reference_params(cfg: &RunConfig) -> CompositeParams {
    cfg.reference
        .params
        .unwrap_or_else(|| sample_params(&cfg.ranges, cfg.reference.params_seed))
}

/// Linear-interpolation resampling of a voltage trace, holding the last value.
pub fn resample_voltage(v: &VoltageTrace, dt: f64, n: usize) -> Result<VoltageTrace> {
    let pq = PQTrace::new(v.dt, v.samples.clone(), vec![0.0; v.len()])?.resample(dt, n)?;
    VoltageTrace::new(dt, pq.p)
}

fn first_departure(v: &VoltageTrace) -> usize {
    let v0 = v.samples[0];
    v.samples.iter().position(|x| (x - v0).abs() > 1e-3).unwrap_or(0)
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ClmError::InvalidConfig(format!("{what} {} does not exist", path.display())))
    }
}

/// Builds the voltage input and the reference response.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let sim = &cfg.sim;
    for (path, what) in [(&cfg.reference.csv, "reference csv"), (&cfg.reference.voltage_csv, "voltage csv")] {
        if let Some(p) = path {
            require_file(p, what)?;
        }
    }
    let (voltage, fault_index) = match &cfg.reference.voltage_csv {
        Some(path) => {
            let raw = io::read_v_csv(path)?;
            let duration = raw.dt * (raw.len() - 1) as f64;
            let n = (duration / sim.dt + 1e-9).floor() as usize + 1;
            let v = resample_voltage(&raw, sim.dt, n)?;
            let k = first_departure(&v);
            (v, k)
        }
        None => {
            let v = make_fault_trace(&cfg.scenario, sim)?;
            let k = (cfg.scenario.t_fault / sim.dt).round() as usize;
            (v, k)
        }
    };
    let layout = cfg.layout()?;
    let (reference, truth) = match &cfg.reference.csv {
        Some(path) => {
            let raw = io::read_pq_csv(path)?;
            (raw.resample(sim.dt, voltage.len())?, None)
        }
        None => {
            let comp = cfg.reference.composition()?;
            let params = reference_params(cfg);
            let r = simulate(&comp, &params, &voltage, sim).map_err(|e| e.in_stage("reference"))?;
            (r, Some((comp, params)))
        }
    };
    Ok(Prepared {
        layout,
        truth,
        reference,
        voltage: Arc::new(voltage),
        fault_index,
    })
}

/// The all-static composition of a layout: everything on the ZIP load.
pub fn static_vertex(layout: ModelLayout) -> LoadComposition {
    let mut f = vec![0.0; layout.len()];
    let zip = layout
        .components()
        .iter()
        .position(|c| *c == Component::Zip)
        .expect("every layout has a ZIP component");
    f[zip] = 1.0;
    LoadComposition::new(layout, f).expect("a vertex is on the simplex")
}

/// Reward environment of the search, with calibrated weights.
pub fn build_env(cfg: &RunConfig, prep: &Prepared, env_seed: u64) -> Result<Environment> {
    let reward = cfg.reward.resolve(prep.reference.len(), prep.fault_index);
    let mut env = Environment::new(
        prep.layout,
        prep.reference.clone(),
        prep.voltage.clone(),
        cfg.sim.clone(),
        &cfg.ranges,
        reward,
        cfg.n_eval(),
        env_seed,
    )?;
    if cfg.reward.needs_calibration() {
        let anchor = match cfg.reward.calibration {
            Calibration::Anchor => match &prep.truth {
                Some((c, _)) if c.layout == prep.layout => Some(c.clone()),
                _ => {
                    return Err(ClmError::InvalidConfig(
                        "anchor calibration needs a simulated reference in the identification layout".into(),
                    ))
                }
            },
            _ => None,
        };
        env.calibrate(&static_vertex(prep.layout), anchor.as_ref())?;
    }
    Ok(env)
}

fn mc_setup<'a>(cfg: &'a RunConfig, prep: &'a Prepared, seed: u64) -> McSetup<'a> {
    McSetup {
        reference: &prep.reference,
        voltage: &prep.voltage,
        sim: &cfg.sim,
        ranges: &cfg.ranges,
        seed,
        pinball: cfg.montecarlo.pinball,
    }
}

/// Summary of an identification run, written as `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifyReport {
    pub layout: ModelLayout,
    pub seeds: Seeds,
    pub reward: RewardConfig,
    pub stage_one_candidates: Vec<Candidate>,
    pub best_visited: Candidate,
    pub states_evaluated: usize,
    pub ranked: Vec<CompositionCandidate>,
    pub result: IdentificationResult,
    pub dynamic_share: f64,
    /// Reference composition, when known.
    pub truth: Option<LoadComposition>,
}

#[derive(Clone, Debug)]
pub struct IdentifyRun {
    pub report: IdentifyReport,
    pub history: Vec<EpisodeRecord>,
    pub reference: PQTrace,
    pub fit: PQTrace,
    pub checkpoint: ddqn::Checkpoint,
}

/// Stage one (composition search), candidate ranking and stage two
/// (parameter fit), without writing anything.
pub fn run_identify(cfg: &RunConfig, prep: &Prepared) -> Result<IdentifyRun> {
    let seeds = Seeds::derive(cfg.seed);
    let env = build_env(cfg, prep, seeds.env).map_err(|e| e.in_stage("reward setup"))?;
    let agent = ddqn::AgentConfig {
        n_eval: cfg.n_eval(),
        top_k: cfg.montecarlo.top_k,
        ..cfg.agent.clone()
    };
    let outcome = ddqn::train(&env, &agent, env.reward.lambda_term, seeds.agent).map_err(|e| e.in_stage("stage one"))?;
    let comps: Vec<LoadComposition> = outcome.candidates.iter().map(|c| c.composition.clone()).collect();
    let setup = mc_setup(cfg, prep, seeds.montecarlo);
    let ranked = montecarlo::rank_compositions(&comps, cfg.montecarlo.n_samples, &cfg.montecarlo.levels, &setup)
        .map_err(|e| e.in_stage("candidate ranking"))?;
    let result = montecarlo::result_from_candidate(&ranked[0], &setup);
    let fit = simulate(&result.chosen_composition, &result.chosen_params, &prep.voltage, &cfg.sim)
        .map_err(|e| e.in_stage("stage two"))?;
    let report = IdentifyReport {
        layout: prep.layout,
        seeds,
        reward: env.reward.clone(),
        stage_one_candidates: outcome.candidates,
        best_visited: outcome.best_visited,
        states_evaluated: outcome.states_evaluated,
        dynamic_share: result.chosen_composition.dynamic_share(),
        ranked,
        result,
        truth: prep.truth.as_ref().map(|(c, _)| c.clone()),
    };
    Ok(IdentifyRun {
        report,
        history: outcome.history,
        reference: prep.reference.clone(),
        fit,
        checkpoint: outcome.checkpoint,
    })
}

pub fn learning_curve_table(history: &[EpisodeRecord]) -> Result<Table> {
    Table::new(
        &["episode", "cumulative_reward", "rmse_sum"],
        vec![
            history.iter().map(|h| h.episode as f64).collect(),
            history.iter().map(|h| h.cumulative_reward).collect(),
            history.iter().map(|h| h.rmse_sum).collect(),
        ],
    )
}

pub fn reward_history_table(best: &[f64]) -> Result<Table> {
    Table::new(
        &["iteration", "best_reward"],
        vec![(0..best.len()).map(|i| i as f64).collect(), best.to_vec()],
    )
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Writes the artifacts of an identification run into `dir`.
pub fn write_identify(dir: &Path, run: &IdentifyRun) -> Result<()> {
    ensure_dir(dir)?;
    learning_curve_table(&run.history)?.write(&dir.join("learning_curve.csv"))?;
    io::write_json(&dir.join("candidates.json"), &run.report.ranked)?;
    io::write_overlay_csv(&dir.join("fit_overlay.csv"), &run.reference, &run.fit)?;
    io::write_json(&dir.join("result.json"), &run.report.result)?;
    io::write_json(&dir.join("report.json"), &run.report)?;
    io::write_json(&dir.join("checkpoint.json"), &run.checkpoint)?;
    Ok(())
}

fn write_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    ensure_dir(dir)?;
    std::fs::write(dir.join("config.toml"), cfg.to_toml_string()?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub composition: LoadComposition,
    pub params: CompositeParams,
    pub samples: usize,
    pub dt: f64,
    pub initial_p: f64,
    pub initial_q: f64,
}

/// Simulates the reference model and writes `voltage.csv` and `reference.csv`.
pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<SimulateReport> {
    let cfg = RunConfig {
        reference: crate::config::ReferenceSpec {
            csv: None,
            ..cfg.reference.clone()
        },
        ..cfg.clone()
    };
    let prep = prepare(&cfg)?;
    let (composition, params) = prep.truth.clone().expect("simulated reference");
    ensure_dir(out)?;
    io::write_v_csv(&out.join("voltage.csv"), &prep.voltage)?;
    io::write_pq_csv(&out.join("reference.csv"), &prep.reference)?;
    let report = SimulateReport {
        composition,
        params,
        samples: prep.reference.len(),
        dt: prep.reference.dt,
        initial_p: prep.reference.p[0],
        initial_q: prep.reference.q[0],
    };
    io::write_json(&out.join("simulate.json"), &report)?;
    Ok(report)
}

/// Runs the two-stage identification and writes its artifacts.
pub fn cmd_identify(cfg: &RunConfig, out: &Path) -> Result<IdentifyReport> {
    let prep = prepare(cfg)?;
    let run = run_identify(cfg, &prep)?;
    write_config(out, cfg)?;
    io::write_pq_csv(&out.join("reference.csv"), &prep.reference)?;
    write_identify(out, &run)?;
    Ok(run.report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Stats {
        Stats {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRmse {
    pub label: String,
    pub v_fault: f64,
    pub duration_cycles: f64,
    pub p_rmse: f64,
    pub q_rmse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessGroup {
    pub group: String,
    pub scenarios: Vec<ScenarioRmse>,
    pub p_rmse: Stats,
    pub q_rmse: Stats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub result: IdentificationResult,
    pub groups: Vec<RobustnessGroup>,
}

/// Scenario groups of the sweep: the dip sweep (standing in for fault
/// locations) at each duration, and the fault-type scenarios.
pub fn robustness_groups(cfg: &RunConfig) -> Vec<(String, Vec<FaultScenario>)> {
    let rb = &cfg.robustness;
    let mut groups = Vec::new();
    if !rb.location_dips.is_empty() {
        for &d in &rb.durations_cycles {
            let scenarios = rb
                .location_dips
                .iter()
                .map(|&v| FaultScenario {
                    v_fault: v,
                    duration_cycles: d,
                    label: format!("dip {v} / {d} cycles"),
                    ..cfg.scenario.clone()
                })
                .collect();
            groups.push((format!("duration_{d}_cycles"), scenarios));
        }
    }
    if !rb.scenarios.is_empty() {
        groups.push(("fault_type".to_string(), rb.scenarios.clone()));
    }
    groups
}

/// Re-simulates the reference model and an identified model over the sweep.
pub fn robustness_report(cfg: &RunConfig, result: &IdentificationResult) -> Result<RobustnessReport> {
    let groups = robustness_groups(cfg);
    if groups.is_empty() {
        return Err(ClmError::InvalidConfig("robustness sweep is empty".into()));
    }
    if cfg.reference.csv.is_some() {
        return Err(ClmError::InvalidConfig(
            "robustness needs a simulated reference (reference.csv is set)".into(),
        ));
    }
    let truth = cfg.reference.composition()?;
    let truth_params = reference_params(cfg);
    let mut out = Vec::with_capacity(groups.len());
    for (name, scenarios) in groups {
        let mut rows = Vec::with_capacity(scenarios.len());
        for s in &scenarios {
            let v = make_fault_trace(s, &cfg.sim)?;
            let r = simulate(&truth, &truth_params, &v, &cfg.sim)?;
            let f = simulate(&result.chosen_composition, &result.chosen_params, &v, &cfg.sim)?;
            let e = metrics::rmse(&f, &r)?;
            rows.push(ScenarioRmse {
                label: s.label.clone(),
                v_fault: s.v_fault,
                duration_cycles: s.duration_cycles,
                p_rmse: e.p,
                q_rmse: e.q,
            });
        }
        let p: Vec<f64> = rows.iter().map(|r| r.p_rmse).collect();
        let q: Vec<f64> = rows.iter().map(|r| r.q_rmse).collect();
        out.push(RobustnessGroup {
            group: name,
            p_rmse: Stats::of(&p),
            q_rmse: Stats::of(&q),
            scenarios: rows,
        });
    }
    Ok(RobustnessReport {
        result: result.clone(),
        groups: out,
    })
}

/// Robustness sweep of a stored identification result, or of a fresh one
/// (written to `out/identify`) when none is configured.
pub fn cmd_robustness(cfg: &RunConfig, out: &Path) -> Result<RobustnessReport> {
    if robustness_groups(cfg).is_empty() {
        return Err(ClmError::InvalidConfig("robustness sweep is empty".into()));
    }
    let result = match &cfg.robustness.result {
        Some(path) => io::read_json(path)?,
        None => cmd_identify(cfg, &out.join("identify"))?.result,
    };
    let report = robustness_report(cfg, &result)?;
    ensure_dir(out)?;
    io::write_json(&out.join("robustness.json"), &report)?;
    Ok(report)
}

/// One row of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub p_rmse: f64,
    pub q_rmse: f64,
    /// Search reward of the chosen composition.
    pub final_reward: f64,
    pub seed: u64,
    pub composition: LoadComposition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub seeds: Vec<u64>,
    /// Per seed: DDQN P-RMSE <= PSO <= GA.
    pub ordering_holds: Vec<bool>,
    pub majority_holds: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRun {
    pub rows: Vec<MethodResult>,
    pub summary: CompareSummary,
    /// Per seed and method, the best reward per iteration.
    pub histories: Vec<(u64, String, Vec<f64>)>,
}

pub const METHODS: [&str; 3] = ["ddqn", "pso", "ga"];

/// DDQN, PSO and GA on the same reference, reward environment and
/// stage-two sample stream, for each seed.
pub fn run_compare(cfg: &RunConfig, prep: &Prepared) -> Result<CompareRun> {
    if cfg.compare.seeds.is_empty() {
        return Err(ClmError::InvalidConfig("compare needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    let mut histories = Vec::new();
    let mut ordering = Vec::new();
    for &seed in &cfg.compare.seeds {
        let seeds = Seeds::derive(seed);
        let env = build_env(cfg, prep, seeds.env)?;
        let setup = mc_setup(cfg, prep, seeds.montecarlo);
        let n = cfg.montecarlo.n_samples;

        let agent = ddqn::AgentConfig {
            n_eval: cfg.n_eval(),
            top_k: cfg.montecarlo.top_k,
            ..cfg.agent.clone()
        };
        let outcome = ddqn::train(&env, &agent, env.reward.lambda_term, seeds.agent).map_err(|e| e.in_stage("ddqn"))?;
        let comps: Vec<LoadComposition> = outcome.candidates.iter().map(|c| c.composition.clone()).collect();
        let ranked = montecarlo::rank_compositions(&comps, n, &cfg.montecarlo.levels, &setup)?;
        let ddqn_fit = montecarlo::result_from_candidate(&ranked[0], &setup);
        histories.push((seed, "ddqn".to_string(), outcome.history.iter().map(|h| h.best_reward).collect()));

        let init = initial_population(prep.layout, cfg.compare.pso.particles, cfg.compare.pso.init_spread, seeds.baseline)?;
        let pso = search_baselines::pso_search(&cfg.compare.pso, &env, Some(&init), seeds.baseline)
            .map_err(|e| e.in_stage("pso"))?;
        let ga_init = (cfg.compare.ga.population == init.len()).then_some(init.as_slice());
        let ga = search_baselines::ga_search(&cfg.compare.ga, &env, ga_init, seeds.baseline).map_err(|e| e.in_stage("ga"))?;
        let pso_fit = montecarlo::stage_two_fit(&pso.best, n, &setup)?;
        let ga_fit = montecarlo::stage_two_fit(&ga.best, n, &setup)?;
        histories.push((seed, "pso".to_string(), pso.history.clone()));
        histories.push((seed, "ga".to_string(), ga.history.clone()));

        let mut p = Vec::new();
        for (method, fit) in METHODS.iter().zip([&ddqn_fit, &pso_fit, &ga_fit]) {
            let final_reward = env.evaluate(&fit.chosen_composition)?.reward;
            p.push(fit.p_rmse);
            rows.push(MethodResult {
                method: method.to_string(),
                p_rmse: fit.p_rmse,
                q_rmse: fit.q_rmse,
                final_reward,
                seed,
                composition: fit.chosen_composition.clone(),
            });
        }
        ordering.push(p[0] <= p[1] && p[1] <= p[2]);
    }
    let holds = ordering.iter().filter(|b| **b).count();
    Ok(CompareRun {
        rows,
        summary: CompareSummary {
            seeds: cfg.compare.seeds.clone(),
            majority_holds: 2 * holds > ordering.len(),
            ordering_holds: ordering,
        },
        histories,
    })
}

pub fn cmd_compare(cfg: &RunConfig, out: &Path) -> Result<CompareRun> {
    let prep = prepare(cfg)?;
    let run = run_compare(cfg, &prep)?;
    write_config(out, cfg)?;
    io::write_json(&out.join("compare.json"), &run.rows)?;
    io::write_json(&out.join("compare_summary.json"), &run.summary)?;
    for (seed, method, h) in &run.histories {
        reward_history_table(h)?.write(&out.join(format!("history_{method}_seed{seed}.csv")))?;
    }
    Ok(run)
}

/// Composition drawn uniformly from the simplex.
pub fn random_composition(layout: ModelLayout, seed: u64) -> LoadComposition {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<f64> = (0..layout.len()).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    LoadComposition::from_weights(layout, &w).expect("positive weights")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStudyReport {
    pub truth: LoadComposition,
    pub fitted: LoadComposition,
    pub random: LoadComposition,
    pub study: LossStudy,
}

pub fn loss_study_table(study: &LossStudy) -> Result<Table> {
    let mut headers = vec!["n"];
    headers.extend(study.labels.iter().map(String::as_str));
    let mut columns = vec![study.rows.iter().map(|r| r.n as f64).collect::<Vec<_>>()];
    for j in 0..study.labels.len() {
        columns.push(study.rows.iter().map(|r| r.losses[j]).collect());
    }
    Table::new(&headers, columns)
}

/// Mean best-of-n loss curves of the true, a fitted and a random composition.
/// Mean fitting loss against sample count for the true, a fitted and a
/// random composition, without writing anything.
pub fn run_loss_study(cfg: &RunConfig, prep: &Prepared, fitted: LoadComposition) -> Result<LossStudyReport> {
    let Some((truth, _)) = prep.truth.clone() else {
        return Err(ClmError::InvalidConfig("loss study needs a simulated reference".into()));
    };
    if truth.layout != prep.layout || fitted.layout != prep.layout {
        return Err(ClmError::InvalidConfig("loss study needs the reference layout for identification".into()));
    }
    let random = match &cfg.loss_study.random {
        Some(f) => LoadComposition::new(prep.layout, f.clone())?,
        None => random_composition(prep.layout, stream_seed(cfg.seed, 5)),
    };
    let comps = vec![
        ("true".to_string(), truth.clone()),
        ("fitted".to_string(), fitted.clone()),
        ("random".to_string(), random.clone()),
    ];
    let setup = mc_setup(cfg, prep, Seeds::derive(cfg.seed).montecarlo);
    let study = montecarlo::loss_vs_samples_study(&comps, cfg.loss_study.n_max, cfg.loss_study.repeats, &setup)?;
    Ok(LossStudyReport {
        truth,
        fitted,
        random,
        study,
    })
}

/// Loss study with the fitted composition from the config, or from an
/// identification run written under `out/identify`.
pub fn cmd_loss_study(cfg: &RunConfig, out: &Path) -> Result<LossStudyReport> {
    let prep = prepare(cfg)?;
    let fitted = match &cfg.loss_study.fitted {
        Some(f) => LoadComposition::new(prep.layout, f.clone())?,
        None => {
            if prep.truth.is_none() {
                return Err(ClmError::InvalidConfig("loss study needs a simulated reference".into()));
            }
            cmd_identify(cfg, &out.join("identify"))?.result.chosen_composition
        }
    };
    let report = run_loss_study(cfg, &prep, fitted)?;
    ensure_dir(out)?;
    loss_study_table(&report.study)?.write(&out.join("loss_study.csv"))?;
    io::write_json(&out.join("loss_study.json"), &report)?;
    Ok(report)
}
