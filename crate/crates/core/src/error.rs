use thiserror::Error;

/// Errors raised by the load models, the simulator and the identification layers.
#[derive(Debug, Error)]
pub enum ClmError {
    #[error("numerical divergence")]
    NumericalDivergence,

    #[error("numerical divergence at step {step}")]
    DivergenceAtStep { step: usize },

    #[error("infeasible motor loading: requested {requested:.6} pu, pull-out {pull_out:.6} pu")]
    InfeasibleMotorLoading { requested: f64, pull_out: f64 },

    #[error("feeder voltage fixed point did not converge at step {step}")]
    FixedPointNonConvergence { step: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("horizon too short: t_end {t_end} s < {needed} s")]
    HorizonTooShort { t_end: f64, needed: f64 },

    #[error("all {0} simulations failed")]
    AllSimulationsFailed(usize),

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<ClmError>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    ConfigParse(String),
}

impl ClmError {
    pub fn in_stage(self, stage: &'static str) -> Self {
        ClmError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors that stem from the input configuration rather than a run.
    pub fn is_config_error(&self) -> bool {
        match self {
            ClmError::InvalidConfig(_)
            | ClmError::ConfigParse(_)
            | ClmError::InvalidParameter(_)
            | ClmError::InvalidComposition(_)
            | ClmError::HorizonTooShort { .. } => true,
            ClmError::Stage { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}

pub type Result<T, E = ClmError> = std::result::Result<T, E>;
