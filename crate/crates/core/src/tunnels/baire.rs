use serde::Serialize;

use crate::bunce_deddens::{max_terms, BdTower, SupernaturalSequence};
use crate::error::Result;
use crate::periodic_matfun::GridParams;

/// Ultrametric distance on sequences with 1-based indices: `2^{−f}` where
/// `f` is the first index of disagreement among the compared entries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaireDistance {
    pub value: f64,
    pub first_difference: Option<usize>,
    /// Number of entries compared: the shorter length.
    pub compared: usize,
    /// No disagreement within the compared prefix; `value` is then 0.
    pub prefix_equal: bool,
}

pub fn baire_distance(x: &SupernaturalSequence, y: &SupernaturalSequence) -> BaireDistance {
    let compared = x.len().min(y.len());
    let first = (1..=compared).find(|&m| x.entries()[m - 1] != y.entries()[m - 1]);
    BaireDistance {
        value: first.map_or(0.0, |f| 2f64.powi(-(f as i32))),
        first_difference: first,
        compared,
        prefix_equal: first.is_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaireReport {
    pub x: String,
    pub y: String,
    pub distance: BaireDistance,
    /// Stages `0..=shared` are built from the common prefix.
    pub shared_stages: usize,
    /// `8 Σ_{j≥f} 2^{−j}` on each side of the shared stage, so `32·2^{−f}`.
    pub chain_bound: f64,
    /// Same chain counted from the last shared stage `f − 1`: `64·d`.
    pub prefix_bound: f64,
    pub lipschitz_bound: f64,
    /// `chain_bound / (32·d)`; 1 whenever the sequences differ.
    pub ratio: Option<f64>,
    /// Largest disagreement of `S` between the two towers on sampled
    /// elements of the shared stages.
    pub max_evaluator_discrepancy: f64,
    pub passed: bool,
}

/// Compares the towers of `x` and `y` on their shared stages and assembles
/// the Lipschitz bound `chain ≤ 32·d(x, y)`. Only the first `depth` entries
/// are read.
pub fn baire_lipschitz_check(
    x: &SupernaturalSequence,
    y: &SupernaturalSequence,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<BaireReport> {
    let x = x.prefix(depth.min(x.len()))?;
    let y = y.prefix(depth.min(y.len()))?;
    let distance = baire_distance(&x, &y);
    let shared = distance.first_difference.map_or(distance.compared, |f| f - 1);
    let gp = GridParams::default();
    let tx = BdTower::with_defaults(x.prefix(shared)?)?;
    let ty = BdTower::with_defaults(y.prefix(shared)?)?;
    let mut discrepancy: f64 = 0.0;
    for m in 0..=shared {
        for i in 0..samples {
            let s = seed.wrapping_add((m * samples + i) as u64);
            let ax = tx.random_element(m, 1, s)?;
            let ay = ty.random_element(m, 1, s)?;
            let (sx, sy) = (max_terms(&tx.s_terms(&ax)?, &gp), max_terms(&ty.s_terms(&ay)?, &gp));
            discrepancy = discrepancy.max((sx - sy).abs());
        }
    }
    let (chain_bound, prefix_bound, ratio) = match distance.first_difference {
        Some(f) => {
            let tail = 8.0 * 2f64.powi(1 - f as i32);
            let chain = tail + 0.0 + tail;
            (chain, 64.0 * distance.value, Some(chain / (32.0 * distance.value)))
        }
        None => (0.0, 0.0, None),
    };
    let lipschitz_bound = 32.0 * distance.value;
    Ok(BaireReport {
        x: x.to_string(),
        y: y.to_string(),
        shared_stages: shared,
        chain_bound,
        prefix_bound,
        lipschitz_bound,
        ratio,
        max_evaluator_discrepancy: discrepancy,
        passed: chain_bound <= lipschitz_bound && discrepancy < 1e-9,
        distance,
    })
}
