//! Load composition: the per-component share of total bus active power.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ClmError, Result};

pub const SIMPLEX_TOL: f64 = 1e-9;

/// Resolution used when compositions are compared or hashed.
const KEY_SCALE: f64 = 1e7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    MotorA,
    MotorB,
    MotorC,
    SinglePhase,
    Electronic,
    Zip,
}

impl Component {
    pub const ALL: [Component; 6] = [
        Component::MotorA,
        Component::MotorB,
        Component::MotorC,
        Component::SinglePhase,
        Component::Electronic,
        Component::Zip,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Component::MotorA => "IM_A",
            Component::MotorB => "IM_B",
            Component::MotorC => "IM_C",
            Component::SinglePhase => "IM_1p",
            Component::Electronic => "ELC",
            Component::Zip => "ZIP",
        }
    }

    pub fn is_dynamic(self) -> bool {
        !matches!(self, Component::Electronic | Component::Zip)
    }
}

/// Which components a composition vector ranges over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelLayout {
    /// Three three-phase motors, single-phase motor, electronic, ZIP.
    #[default]
    Wecc,
    /// Conventional ZIP plus one induction motor, ordered `[zip, im]`.
    ZipIm,
}

impl ModelLayout {
    pub fn components(self) -> &'static [Component] {
        match self {
            ModelLayout::Wecc => &Component::ALL,
            ModelLayout::ZipIm => &[Component::Zip, Component::MotorA],
        }
    }

    pub fn len(self) -> usize {
        self.components().len()
    }

    pub fn is_empty(self) -> bool {
        false
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadComposition {
    pub layout: ModelLayout,
    fractions: Vec<f64>,
}

impl LoadComposition {
    pub fn new(layout: ModelLayout, fractions: Vec<f64>) -> Result<Self> {
        let c = LoadComposition { layout, fractions };
        c.validate()?;
        Ok(c)
    }

    pub fn wecc(fractions: [f64; 6]) -> Result<Self> {
        Self::new(ModelLayout::Wecc, fractions.to_vec())
    }

    pub fn zip_im(zip: f64, im: f64) -> Result<Self> {
        Self::new(ModelLayout::ZipIm, vec![zip, im])
    }

    pub fn uniform(layout: ModelLayout) -> Self {
        let n = layout.len();
        LoadComposition {
            layout,
            fractions: vec![1.0 / n as f64; n],
        }
    }

    /// Builds a composition from arbitrary nonnegative weights by normalization.
    pub fn from_weights(layout: ModelLayout, weights: &[f64]) -> Result<Self> {
        if weights.len() != layout.len() {
            return Err(ClmError::InvalidComposition(format!(
                "expected {} fractions, got {}",
                layout.len(),
                weights.len()
            )));
        }
        let clamped: Vec<f64> = weights.iter().map(|w| w.max(0.0)).collect();
        let sum: f64 = clamped.iter().sum();
        if !(sum > 0.0) {
            return Ok(Self::uniform(layout));
        }
        Self::new(layout, clamped.iter().map(|w| w / sum).collect())
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.len() != self.layout.len() {
            return Err(ClmError::InvalidComposition(format!(
                "expected {} fractions, got {}",
                self.layout.len(),
                self.fractions.len()
            )));
        }
        for &f in &self.fractions {
            if !(f.is_finite() && (-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&f)) {
                return Err(ClmError::InvalidComposition(format!("fraction {f} outside [0, 1]")));
            }
        }
        let sum: f64 = self.fractions.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(ClmError::InvalidComposition(format!("fractions sum to {sum}, expected 1")));
        }
        Ok(())
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }

    /// Fraction of each of the six WECC components, zero where the layout lacks one.
    pub fn component_fractions(&self) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (c, f) in self.layout.components().iter().zip(&self.fractions) {
            out[c.index()] = f.max(0.0);
        }
        out
    }

    pub fn fraction_of(&self, component: Component) -> f64 {
        self.component_fractions()[component.index()]
    }

    /// Share of motor load (three-phase and single-phase).
    pub fn dynamic_share(&self) -> f64 {
        let f = self.component_fractions();
        Component::ALL.iter().filter(|c| c.is_dynamic()).map(|c| f[c.index()]).sum()
    }

    pub fn static_share(&self) -> f64 {
        1.0 - self.dynamic_share()
    }

    pub fn sum(&self) -> f64 {
        self.fractions.iter().sum()
    }

    /// Quantized representation for hashing and deduplication.
    pub fn key(&self) -> Vec<i64> {
        self.fractions.iter().map(|f| (f * KEY_SCALE).round() as i64).collect()
    }

    pub fn max_abs_diff(&self, other: &LoadComposition) -> f64 {
        self.fractions
            .iter()
            .zip(&other.fractions)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Index of the largest fraction (lowest index on ties).
    pub fn dominant(&self) -> Component {
        let mut best = 0;
        for (i, f) in self.fractions.iter().enumerate() {
            if *f > self.fractions[best] {
                best = i;
            }
        }
        self.layout.components()[best]
    }
}

impl fmt::Display for LoadComposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, x) in self.fractions.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x:.4}")?;
        }
        write!(f, "]")
    }
}
