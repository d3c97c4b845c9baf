use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::bunce_deddens::{NormTermConvention, SupernaturalSequence};
use crate::error::{Error, Result};
use crate::ou_core::{KantorovichParams, NetParams, StageLip};
use crate::periodic_matfun::GridParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// Space used by the `kantorovich` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ToySpace {
    /// Points on the real line.
    Line { points: Vec<f64> },
    /// An explicit distance matrix.
    Metric { distances: Vec<Vec<f64>> },
    /// A stage of the configured tower, truncated at the configured cutoff.
    Stage { stage: usize, lip: StageLip },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sigma: SupernaturalSequence,
    pub max_stage: usize,
    pub cutoff: usize,
    pub grid: GridParams,
    pub seed: u64,
    /// Random elements per sampled check.
    pub samples: usize,
    pub norm_term: NormTermConvention,
    /// Checks `l(U_m)` against the bound without the `2π` factor.
    pub uncorrected_unitary_bound: bool,
    pub kantorovich: KantorovichParams,
    pub net: NetParams,
    pub baire_pairs: Vec<(SupernaturalSequence, SupernaturalSequence)>,
    pub toy: ToySpace,
    pub format: Option<Format>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

fn seq(v: &[usize]) -> SupernaturalSequence {
    SupernaturalSequence::new(v.to_vec()).expect("entries are at least 2")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sigma: seq(&[2, 3]),
            max_stage: 2,
            cutoff: 2,
            grid: GridParams::default(),
            seed: 0,
            samples: 20,
            norm_term: NormTermConvention::Corrected,
            uncorrected_unitary_bound: false,
            kantorovich: KantorovichParams::default(),
            net: NetParams::default(),
            baire_pairs: vec![
                (seq(&[2, 2, 2]), seq(&[2, 2, 3])),
                (seq(&[2, 3]), seq(&[3, 2])),
                (seq(&[2, 3, 2]), seq(&[2, 3, 2])),
            ],
            toy: ToySpace::Line { points: vec![0.0, 0.5, 1.5, 2.0] },
            format: None,
            out: None,
        }
    }
}

/// Largest stage order and cutoff the desk-scale suites accept.
const MAX_ORDER: usize = 48;
const MAX_CUTOFF: usize = 32;

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.max_stage > self.sigma.len() {
            return bad(format!("max_stage {} exceeds the length of {}", self.max_stage, self.sigma));
        }
        let order = self.sigma.boxtimes(self.max_stage)?;
        if order > MAX_ORDER {
            return bad(format!("stage order {} exceeds {}", order, MAX_ORDER));
        }
        if self.cutoff > MAX_CUTOFF {
            return bad(format!("cutoff {} exceeds {}", self.cutoff, MAX_CUTOFF));
        }
        if self.samples == 0 {
            return bad("samples must be positive".into());
        }
        self.grid.validate().map_err(|e| Error::Config(e.to_string()))?;
        let kp = &self.kantorovich;
        if kp.restarts == 0 || kp.iterations == 0 || !(kp.step_decay > 0.0 && kp.step_decay <= 1.0) || !(kp.initial_step > 0.0) {
            return bad("kantorovich parameters out of range".into());
        }
        match &self.toy {
            ToySpace::Line { points } if points.len() < 2 => return bad("line toy needs at least two points".into()),
            ToySpace::Metric { distances } if distances.len() < 2 => return bad("metric toy needs at least two points".into()),
            ToySpace::Stage { stage, .. } if *stage > self.max_stage => {
                return bad(format!("toy stage {} exceeds max_stage {}", stage, self.max_stage))
            }
            _ => {}
        }
        Ok(())
    }
}
