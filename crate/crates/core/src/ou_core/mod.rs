//! Desk-scale quantum metric order unit spaces: real coordinate models,
//! Lip-norm evaluators, states, Monge-Kantorovich distances and Hausdorff
//! distances between finite state nets.

mod axioms;
mod hausdorff;
mod kantorovich;
mod lp;
mod seminorm;
mod space;
mod transport;

pub use axioms::{check_lipnorm_axioms, check_lipnorm_axioms_with, AxiomCheck, AxiomReport};
pub use hausdorff::{hausdorff, hausdorff_matrix};
pub use kantorovich::{kantorovich, KantorovichParams, KantorovichResult};
pub use lp::{kantorovich_lp, kantorovich_lp_polyhedral};
pub use seminorm::{
    CompiledSeminorm, CompiledTerm, ComposedSeminorm, FnSeminorm, LinearMap, PolyhedralSeminorm, Seminorm,
};
pub use space::{
    finite_space, stage_space, state_net, sum_structure, DeskQMSpace, FiniteMetric, NetParams, StageChart, StageLip,
    StateFunctional, Structure,
};
pub use transport::kantorovich_exact_finite;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
