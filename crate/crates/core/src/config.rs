//! Run configuration read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::composition::{LoadComposition, ModelLayout};
use crate::ddqn::AgentConfig;
use crate::error::{ClmError, Result};
use crate::load_models::{CompositeParams, ParamRanges};
use crate::metrics::{PinballConvention, RewardConfig, DEFAULT_LAMBDA};
use crate::montecarlo::{DEFAULT_LEVELS, DEFAULT_SAMPLES};
use crate::search_baselines::{GaConfig, SwarmConfig};
use crate::simulator::{FaultScenario, SimConfig};

/// Where the reference response comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceSpec {
    /// True composition; 2 entries for ZIP+IM, 6 for the full model.
    pub composition: Vec<f64>,
    /// Seed of the parameter draw used for the reference, unless `params` is given.
    pub params_seed: u64,
    pub params: Option<CompositeParams>,
    /// External `t,p,q` CSV used instead of simulating the reference.
    pub csv: Option<PathBuf>,
    /// External `t,v` CSV driving the simulations instead of `scenario`.
    pub voltage_csv: Option<PathBuf>,
}

impl Default for ReferenceSpec {
    fn default() -> Self {
        ReferenceSpec {
            composition: vec![0.3637, 0.1430, 0.0914, 0.1526, 0.1088, 0.1405],
            params_seed: 1,
            params: None,
            csv: None,
            voltage_csv: None,
        }
    }
}

impl ReferenceSpec {
    pub fn composition(&self) -> Result<LoadComposition> {
        let layout = match self.composition.len() {
            2 => ModelLayout::ZipIm,
            6 => ModelLayout::Wecc,
            n => {
                return Err(ClmError::InvalidConfig(format!(
                    "reference composition needs 2 or 6 fractions, got {n}"
                )))
            }
        };
        LoadComposition::new(layout, self.composition.clone())
    }
}

/// How the reward weights are chosen when not given explicitly.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Calibration {
    /// Scale so that the all-static composition scores about -1.
    #[default]
    Static,
    /// Scale from the reference composition itself (needs the truth; for
    /// experiments only).
    Anchor,
    /// Use `alpha = beta = 1` unless given.
    Off,
}

/// Reward settings; unset weights are filled in by calibration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSpec {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub r_step: f64,
    /// Defaults to the trace length.
    pub k_scale: Option<f64>,
    /// Episode-termination threshold; `-inf` disables termination.
    pub lambda_term: f64,
    /// Defaults to the fault-onset sample.
    pub trend_window_start: Option<usize>,
    pub calibration: Calibration,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            alpha: None,
            beta: None,
            r_step: 0.0,
            k_scale: None,
            lambda_term: DEFAULT_LAMBDA,
            trend_window_start: None,
            calibration: Calibration::Static,
        }
    }
}

impl RewardSpec {
    /// Reward weights before calibration.
    pub fn resolve(&self, n_samples: usize, fault_index: usize) -> RewardConfig {
        RewardConfig {
            alpha: self.alpha.unwrap_or(1.0),
            beta: self.beta.or(self.alpha).unwrap_or(1.0),
            r_step: self.r_step,
            k_scale: self.k_scale.unwrap_or(n_samples.max(1) as f64),
            lambda_term: self.lambda_term,
            trend_window_start: self.trend_window_start.unwrap_or(fault_index),
        }
    }

    /// True when calibration should set the weights.
    pub fn needs_calibration(&self) -> bool {
        self.alpha.is_none() && self.calibration != Calibration::Off
    }
}

/// Stage-one search settings shared by the agent and the baselines.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSpec {
    /// Identification layout; defaults to the reference's.
    pub layout: Option<ModelLayout>,
    /// Parameter samples scored per composition; overrides `agent.n_eval`.
    pub n_eval: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub n_samples: usize,
    pub levels: Vec<f64>,
    /// Stage-one candidates passed to the ranking.
    pub top_k: usize,
    pub pinball: PinballConvention,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec {
            n_samples: DEFAULT_SAMPLES,
            levels: DEFAULT_LEVELS.to_vec(),
            top_k: 3,
            pinball: PinballConvention::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessSpec {
    /// Identification result to test; the run identifies first when unset.
    pub result: Option<PathBuf>,
    /// Dip depths standing in for fault locations; run at every duration.
    pub location_dips: Vec<f64>,
    /// Fault durations (cycles) of the dip sweep.
    pub durations_cycles: Vec<f64>,
    /// Fault-type scenarios.
    pub scenarios: Vec<FaultScenario>,
}

impl Default for RobustnessSpec {
    fn default() -> Self {
        RobustnessSpec {
            result: None,
            location_dips: vec![0.3, 0.45, 0.6, 0.7, 0.8, 0.9],
            durations_cycles: vec![6.0, 8.0, 10.0],
            scenarios: vec![
                FaultScenario::three_phase(),
                FaultScenario::double_phase_to_ground(),
                FaultScenario::single_phase_to_ground(),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSpec {
    pub seeds: Vec<u64>,
    pub pso: SwarmConfig,
    pub ga: GaConfig,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            seeds: vec![1, 2, 3],
            pso: SwarmConfig::default(),
            ga: GaConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossStudySpec {
    pub n_max: usize,
    pub repeats: usize,
    /// Fitted composition; identification runs first when unset.
    pub fitted: Option<Vec<f64>>,
    /// Fixed random composition; drawn from the run seed when unset.
    pub random: Option<Vec<f64>>,
}

impl Default for LossStudySpec {
    fn default() -> Self {
        LossStudySpec {
            n_max: 100,
            repeats: 20,
            fitted: None,
            random: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub sim: SimConfig,
    pub scenario: FaultScenario,
    pub ranges: ParamRanges,
    pub reference: ReferenceSpec,
    pub search: SearchSpec,
    pub agent: AgentConfig,
    pub reward: RewardSpec,
    pub montecarlo: MonteCarloSpec,
    pub robustness: RobustnessSpec,
    pub compare: CompareSpec,
    pub loss_study: LossStudySpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            out: None,
            sim: SimConfig {
                t_end: 2.0,
                substeps: 5,
                ..Default::default()
            },
            scenario: FaultScenario {
                v_fault: 0.7,
                ..Default::default()
            },
            ranges: ParamRanges::default(),
            reference: ReferenceSpec::default(),
            search: SearchSpec::default(),
            agent: AgentConfig::default(),
            reward: RewardSpec::default(),
            montecarlo: MonteCarloSpec::default(),
            robustness: RobustnessSpec::default(),
            compare: CompareSpec::default(),
            loss_study: LossStudySpec::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ClmError::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ClmError::ConfigParse(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| ClmError::ConfigParse(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.reference.csv, &mut cfg.reference.voltage_csv, &mut cfg.robustness.result]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| ClmError::ConfigParse(e.to_string()))
    }

    /// Identification layout.
    pub fn layout(&self) -> Result<ModelLayout> {
        match self.search.layout {
            Some(l) => Ok(l),
            None => Ok(self.reference.composition()?.layout),
        }
    }

    pub fn n_eval(&self) -> usize {
        self.search.n_eval.unwrap_or(self.agent.n_eval)
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.scenario.validate()?;
        self.ranges.validate()?;
        if self.reference.csv.is_none() {
            self.reference.composition()?;
        }
        if let Some(p) = &self.reference.params {
            p.validate()?;
        }
        let layout = self.layout()?;
        let agent = AgentConfig {
            n_eval: self.n_eval(),
            ..self.agent.clone()
        };
        agent.validate()?;
        if let Some(start) = &agent.start {
            LoadComposition::new(layout, start.clone())?;
        }
        if let Some(a) = self.reward.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(ClmError::InvalidConfig(format!("reward alpha must be > 0, got {a}")));
            }
        }
        self.reward.resolve(100, 0).validate()?;
        let mc = &self.montecarlo;
        if mc.n_samples < 2 || mc.top_k == 0 || mc.levels.is_empty() {
            return Err(ClmError::InvalidConfig(
                "montecarlo needs n_samples >= 2, top_k >= 1 and at least one level".into(),
            ));
        }
        if mc.levels.iter().any(|l| !(0.5..1.0).contains(l)) {
            return Err(ClmError::InvalidConfig("montecarlo levels must lie in [0.5, 1)".into()));
        }
        for s in &self.robustness.scenarios {
            s.validate()?;
        }
        for &d in &self.robustness.location_dips {
            FaultScenario {
                v_fault: d,
                ..self.scenario.clone()
            }
            .validate()?;
        }
        for &c in &self.robustness.durations_cycles {
            FaultScenario {
                duration_cycles: c,
                ..self.scenario.clone()
            }
            .validate()?;
        }
        self.compare.pso.validate()?;
        self.compare.ga.validate()?;
        if self.loss_study.n_max == 0 || self.loss_study.repeats == 0 {
            return Err(ClmError::InvalidConfig("loss_study needs n_max and repeats >= 1".into()));
        }
        for c in [&self.loss_study.fitted, &self.loss_study.random].into_iter().flatten() {
            LoadComposition::new(layout, c.clone())?;
        }
        Ok(())
    }
}
