use std::collections::BTreeMap;

use serde::Serialize;

use crate::bunce_deddens::SupernaturalSequence;
use crate::error::{Error, Result};

/// One step of a chained bound. `to_stage = None` stands for the limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundLink {
    pub from_stage: usize,
    pub to_stage: Option<usize>,
    pub tag: String,
    pub constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    /// Consecutive-stage links; `total` is their sum.
    pub links: Vec<BoundLink>,
    pub total: f64,
    /// From the first stage to the limit.
    pub tail: BoundLink,
    pub metadata: BTreeMap<String, String>,
}

impl BoundReport {
    /// Recomputes `total` from the links.
    pub fn rederived_total(&self) -> f64 {
        self.links.iter().map(|l| l.constant).sum()
    }
}

/// `dist_q` upper bounds along `σ`: `4·2^{−j}` from stage `j` to `j+1` for
/// `n ≤ j < to`, and `4 Σ_{j≥n} 2^{−j} = 2^{3−n}` from stage `n` to the limit.
pub fn distq_chain_bound(sigma: &SupernaturalSequence, n: usize, to: usize) -> Result<BoundReport> {
    if n > to || to > sigma.len() {
        return Err(Error::InvalidParameter(format!(
            "need n <= to <= {} for {}, got n = {}, to = {}",
            sigma.len(),
            sigma,
            n,
            to
        )));
    }
    let links: Vec<BoundLink> = (n..to)
        .map(|j| BoundLink {
            from_stage: j,
            to_stage: Some(j + 1),
            tag: "consecutive-stage tunnel".into(),
            constant: 4.0 * 2f64.powi(-(j as i32)),
        })
        .collect();
    let total = links.iter().map(|l| l.constant).sum();
    let tail = BoundLink {
        from_stage: n,
        to_stage: None,
        tag: "geometric tail to the limit".into(),
        constant: 2f64.powi(3 - n as i32),
    };
    let mut metadata = BTreeMap::new();
    metadata.insert("sigma".into(), sigma.to_string());
    metadata.insert("beta".into(), "2^-n".into());
    metadata.insert("norm_term_coefficient".into(), "2^m".into());
    metadata.insert("indexing".into(), "stages from 0, sequence entries from 1".into());
    Ok(BoundReport { links, total, tail, metadata })
}
