//! Bridges, evident tunnels, extents, the modified Lip-norms used to glue a
//! space to a subspace, and the chained `dist_q` bound arithmetic.

mod baire;
mod bd;
mod bounds;
mod bridge;
mod extent;
mod lipnorms;

pub use baire::{baire_distance, baire_lipschitz_check, BaireDistance, BaireReport};
pub use bd::{BdBridge, BdCandidate, BdEvidentTunnel};
pub use bounds::{distq_chain_bound, BoundLink, BoundReport};
pub use bridge::{
    evident_tunnel, Bridge, BridgeLengthReport, BridgeSample, Direction, QuotientReport, Tunnel,
};
pub use extent::{tunnel_extent_estimate, tunnel_extent_lp, ExtentReport};
pub use lipnorms::{
    block_average_toy, modified_lipnorm_bilip, modified_lipnorm_cond_exp, HypothesisCheck, ModifiedLipNorm,
};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ou_core::{DeskQMSpace, LinearMap};

pub(crate) fn apply(map: &LinearMap, x: &[f64]) -> Vec<f64> {
    (map * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// The structure's hint elements, then seeded random elements, all rescaled
/// to `L = 1`; elements with negligible `L` are skipped.
pub(crate) fn unit_ball_samples(space: &DeskQMSpace, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hints = space.structure().hints().into_iter();
    let mut out = Vec::with_capacity(samples);
    let mut attempts = 0;
    while out.len() < samples && attempts < 10 * samples.max(1) {
        attempts += 1;
        let x = hints.next().unwrap_or_else(|| space.structure().random_element(&mut rng));
        let l = space.lip().eval(&x);
        if l > 1e-9 {
            out.push(x.iter().map(|v| v / l).collect());
        }
    }
    out
}
