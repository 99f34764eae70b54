//! Stage two: Monte-Carlo quantile bands, pinball ranking of candidate
//! compositions, and best-fit parameter selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composition::LoadComposition;
use crate::error::{ClmError, Result};
use crate::load_models::{sample_params, stream_seed, CompositeParams, ParamRanges};
use crate::metrics::{self, composition_pinball, quantile_band, PinballConvention, Rmse};
use crate::simulator::{simulate, PQTrace, SimConfig, VoltageTrace};

/// Default upper quantile levels: coverages of 70, 80 and 90 percent.
pub const DEFAULT_LEVELS: [f64; 3] = [0.85, 0.90, 0.95];
pub const DEFAULT_SAMPLES: usize = 500;

/// Fixed inputs shared by the Monte-Carlo operations.
#[derive(Clone, Copy, Debug)]
pub struct McSetup<'a> {
    pub reference: &'a PQTrace,
    pub voltage: &'a VoltageTrace,
    pub sim: &'a SimConfig,
    pub ranges: &'a ParamRanges,
    pub seed: u64,
    pub pinball: PinballConvention,
}

/// Parameter set `index` of the sample stream `seed`.
pub fn stream_params(ranges: &ParamRanges, seed: u64, index: usize) -> CompositeParams {
    sample_params(ranges, stream_seed(seed, index as u64))
}

/// Simulated responses of the first `n` parameter sets of the stream;
/// failed simulations are `None`.
pub fn simulate_stream(comp: &LoadComposition, n: usize, setup: &McSetup) -> Vec<Option<PQTrace>> {
    (0..n)
        .into_par_iter()
        .map(|i| simulate(comp, &stream_params(setup.ranges, setup.seed, i), setup.voltage, setup.sim).ok())
        .collect()
}

/// Best-fitting sample of a stream of responses, by summed P and Q RMSE.
/// Ties keep the earliest sample.
fn best_fit(traces: &[Option<PQTrace>], reference: &PQTrace) -> Result<Option<(usize, Rmse)>> {
    let mut best: Option<(usize, Rmse)> = None;
    for (i, t) in traces.iter().enumerate() {
        let Some(t) = t else { continue };
        let e = metrics::rmse(t, reference)?;
        if best.is_none_or(|(_, b)| e.sum() < b.sum()) {
            best = Some((i, e));
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalLoss {
    /// Upper quantile level; the band is `[1 - level, level]`.
    pub level: f64,
    pub loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionCandidate {
    pub composition: LoadComposition,
    pub pinball_by_interval: Vec<IntervalLoss>,
    pub mean_pinball: f64,
    pub n_samples: usize,
    pub valid_samples: usize,
    /// Best-fitting sample among the ones used for the bands.
    pub best_sample: usize,
    pub best_rmse: Rmse,
}

/// Selected composition and parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentificationResult {
    pub chosen_composition: LoadComposition,
    pub chosen_params: CompositeParams,
    pub p_rmse: f64,
    pub q_rmse: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub sample_index: usize,
    pub n_samples: usize,
    pub valid_samples: usize,
}

/// Scores every candidate by the mean over `levels` of its pinball loss
/// against the reference and returns them best (lowest loss) first.
///
/// All candidates use the same parameter stream, so the composition is the
/// only thing that differs between them.
pub fn rank_compositions(
    candidates: &[LoadComposition],
    n_samples: usize,
    levels: &[f64],
    setup: &McSetup,
) -> Result<Vec<CompositionCandidate>> {
    if candidates.is_empty() {
        return Err(ClmError::InvalidConfig("no candidate compositions to rank".into()));
    }
    if n_samples < 2 {
        return Err(ClmError::TooFewSamples {
            needed: 2,
            got: n_samples,
        });
    }
    if levels.is_empty() {
        return Err(ClmError::InvalidConfig("no quantile levels given".into()));
    }
    let mut ranked = Vec::with_capacity(candidates.len());
    for comp in candidates {
        let traces = simulate_stream(comp, n_samples, setup);
        let valid: Vec<PQTrace> = traces.iter().flatten().cloned().collect();
        if valid.len() < 2 {
            return Err(ClmError::TooFewSamples {
                needed: 2,
                got: valid.len(),
            });
        }
        let mut by_interval = Vec::with_capacity(levels.len());
        for &level in levels {
            let band = quantile_band(&valid, level)?;
            by_interval.push(IntervalLoss {
                level,
                loss: composition_pinball(&band, setup.reference, setup.pinball)?,
            });
        }
        let mean = by_interval.iter().map(|l| l.loss).sum::<f64>() / by_interval.len() as f64;
        let (best_sample, best_rmse) = best_fit(&traces, setup.reference)?.expect("at least two valid samples");
        ranked.push(CompositionCandidate {
            composition: comp.clone(),
            pinball_by_interval: by_interval,
            mean_pinball: mean,
            n_samples,
            valid_samples: valid.len(),
            best_sample,
            best_rmse,
        });
    }
    // stable sort keeps the input order among equal losses
    ranked.sort_by(|a, b| a.mean_pinball.total_cmp(&b.mean_pinball));
    Ok(ranked)
}

/// Identification result of a ranked candidate, reusing its band samples.
pub fn result_from_candidate(c: &CompositionCandidate, setup: &McSetup) -> IdentificationResult {
    IdentificationResult {
        chosen_composition: c.composition.clone(),
        chosen_params: stream_params(setup.ranges, setup.seed, c.best_sample),
        p_rmse: c.best_rmse.p,
        q_rmse: c.best_rmse.q,
        provenance: Provenance {
            seed: setup.seed,
            sample_index: c.best_sample,
            n_samples: c.n_samples,
            valid_samples: c.valid_samples,
        },
    }
}

/// Simulates `n_samples` parameter sets at `comp` and keeps the one with the
/// lowest summed P and Q RMSE.
pub fn stage_two_fit(comp: &LoadComposition, n_samples: usize, setup: &McSetup) -> Result<IdentificationResult> {
    comp.validate()?;
    if n_samples == 0 {
        return Err(ClmError::TooFewSamples { needed: 1, got: 0 });
    }
    let traces = simulate_stream(comp, n_samples, setup);
    let valid = traces.iter().filter(|t| t.is_some()).count();
    let (index, e) = best_fit(&traces, setup.reference)?.ok_or(ClmError::AllSimulationsFailed(n_samples))?;
    Ok(IdentificationResult {
        chosen_composition: comp.clone(),
        chosen_params: stream_params(setup.ranges, setup.seed, index),
        p_rmse: e.p,
        q_rmse: e.q,
        provenance: Provenance {
            seed: setup.seed,
            sample_index: index,
            n_samples,
            valid_samples: valid,
        },
    })
}

/// One row of the loss-versus-sample-count table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStudyRow {
    pub n: usize,
    /// Mean best-of-n loss per composition, in the order given.
    pub losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossStudy {
    pub labels: Vec<String>,
    pub rows: Vec<LossStudyRow>,
    pub repeats: usize,
}

impl LossStudy {
    /// Curve of one composition over the sample-count grid.
    pub fn curve(&self, label: &str) -> Option<Vec<f64>> {
        let j = self.labels.iter().position(|l| l == label)?;
        Some(self.rows.iter().map(|r| r.losses[j]).collect())
    }
}

/// Mean (over `repeats` independent streams) best-of-n fitting loss, the
/// summed P and Q RMSE, for `n = 1..=n_max` and every composition.
///
/// Each repeat draws one stream shared by all compositions. Failed
/// simulations count as infinite loss.
pub fn loss_vs_samples_study(
    compositions: &[(String, LoadComposition)],
    n_max: usize,
    repeats: usize,
    setup: &McSetup,
) -> Result<LossStudy> {
    if repeats == 0 {
        return Err(ClmError::InvalidConfig("loss study needs repeats >= 1".into()));
    }
    if n_max == 0 || compositions.is_empty() {
        return Err(ClmError::InvalidConfig("loss study needs n_max >= 1 and a composition".into()));
    }
    let mut sums = vec![vec![0.0; compositions.len()]; n_max];
    for r in 0..repeats {
        let rep_setup = McSetup {
            seed: stream_seed(setup.seed, 0x5EED_0000 + r as u64),
            ..*setup
        };
        for (j, (_, comp)) in compositions.iter().enumerate() {
            let traces = simulate_stream(comp, n_max, &rep_setup);
            let mut best = f64::INFINITY;
            for (i, t) in traces.iter().enumerate() {
                if let Some(t) = t {
                    best = best.min(metrics::rmse(t, setup.reference)?.sum());
                }
                sums[i][j] += best;
            }
        }
    }
    let rows = sums
        .into_iter()
        .enumerate()
        .map(|(i, s)| LossStudyRow {
            n: i + 1,
            losses: s.into_iter().map(|v| v / repeats as f64).collect(),
        })
        .collect();
    Ok(LossStudy {
        labels: compositions.iter().map(|(l, _)| l.clone()).collect(),
        rows,
        repeats,
    })
}
