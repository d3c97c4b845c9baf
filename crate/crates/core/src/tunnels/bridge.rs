use std::sync::Arc;

use serde::Serialize;

use super::{apply, unit_ball_samples};
use crate::error::{Error, Result};
use crate::ou_core::{sum_structure, ComposedSeminorm, DeskQMSpace, LinearMap, Seminorm};

const UNIT_BALL_TOL: f64 = 1e-9;

/// A bridge from `domain` to `codomain`: `embed` realizes the domain inside
/// the codomain and `pivot` is a codomain element, stored in coordinates.
#[derive(Clone, Debug)]
pub struct Bridge {
    pub domain: DeskQMSpace,
    pub codomain: DeskQMSpace,
    pub embed: LinearMap,
    pub pivot: Vec<f64>,
}

impl Bridge {
    /// Checks shapes and that `embed` is unital.
    pub fn new(domain: DeskQMSpace, codomain: DeskQMSpace, embed: LinearMap, pivot: Vec<f64>) -> Result<Self> {
        if embed.nrows() != codomain.dim() || embed.ncols() != domain.dim() || pivot.len() != codomain.dim() {
            return Err(Error::DimensionMismatch { left: codomain.dim(), right: embed.nrows() });
        }
        let image = apply(&embed, &domain.unit());
        let residual = image.iter().zip(codomain.unit()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual > 1e-12 {
            return Err(Error::InvalidParameter(format!("embedding is not unital (residual {:e})", residual)));
        }
        Ok(Self { domain, codomain, embed, pivot })
    }

    /// The evident bridge: pivot `1`.
    pub fn evident(domain: DeskQMSpace, codomain: DeskQMSpace, embed: LinearMap) -> Result<Self> {
        let pivot = codomain.unit();
        Self::new(domain, codomain, embed, pivot)
    }

    pub fn has_identity_pivot(&self) -> bool {
        self.pivot == self.codomain.unit()
    }

    fn require_identity_pivot(&self) -> Result<()> {
        if !self.has_identity_pivot() {
            return Err(Error::InvalidParameter("only identity pivots are supported".into()));
        }
        Ok(())
    }

    /// `‖π(a)ω − ω b‖` for the identity pivot.
    pub fn bridge_norm(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.require_identity_pivot()?;
        let diff: Vec<f64> = apply(&self.embed, a).iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(self.codomain.norm().eval(&diff))
    }

    /// Sampled two-sided sup-inf over unit balls. `up` proposes codomain
    /// partners for domain elements and `down` the reverse; each sample's
    /// distance bounds the inf for that element from above whenever the
    /// partner lies in the unit ball.
    pub fn length_estimate(&self, up: &LinearMap, down: &LinearMap, samples: usize, seed: u64) -> Result<BridgeLengthReport> {
        self.require_identity_pivot()?;
        if up.nrows() != self.codomain.dim() || up.ncols() != self.domain.dim() {
            return Err(Error::DimensionMismatch { left: self.codomain.dim(), right: up.nrows() });
        }
        if down.nrows() != self.domain.dim() || down.ncols() != self.codomain.dim() {
            return Err(Error::DimensionMismatch { left: self.domain.dim(), right: down.nrows() });
        }
        let mut out = Vec::with_capacity(2 * samples);
        for (index, a) in unit_ball_samples(&self.domain, samples, seed).into_iter().enumerate() {
            let b = apply(up, &a);
            out.push(BridgeSample::new(Direction::Up, index, self.codomain.lip().eval(&b), self.bridge_norm(&a, &b)?, None));
        }
        for (index, b) in unit_ball_samples(&self.codomain, samples, seed.wrapping_add(1)).into_iter().enumerate() {
            let a = apply(down, &b);
            out.push(BridgeSample::new(Direction::Down, index, self.domain.lip().eval(&a), self.bridge_norm(&a, &b)?, None));
        }
        Ok(BridgeLengthReport::new(out, seed))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Domain element, codomain partner.
    Up,
    /// Codomain element, domain partner.
    Down,
}

/// One unit-ball sample: the partner's Lip-norm, the achieved distance, and
/// whether that distance is a valid upper bound (partner in the unit ball).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgeSample {
    pub direction: Direction,
    pub index: usize,
    pub partner_lip: f64,
    pub distance: f64,
    pub admissible: bool,
    /// Outcome of a known a priori bound on `distance`, when one applies.
    pub within_bound: Option<bool>,
}

impl BridgeSample {
    pub(crate) fn new(direction: Direction, index: usize, partner_lip: f64, distance: f64, bound: Option<f64>) -> Self {
        Self {
            direction,
            index,
            partner_lip,
            distance,
            admissible: partner_lip <= 1.0 + UNIT_BALL_TOL,
            within_bound: bound.map(|b| distance <= b),
        }
    }
}

/// Empirical sup over samples. This is an estimate, not a certified length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgeLengthReport {
    pub empirical_sup: f64,
    pub seed: u64,
    pub samples: Vec<BridgeSample>,
}

impl BridgeLengthReport {
    pub(crate) fn new(samples: Vec<BridgeSample>, seed: u64) -> Self {
        let empirical_sup = samples.iter().map(|s| s.distance).fold(0.0, f64::max);
        Self { empirical_sup, seed, samples }
    }

    pub fn all_admissible(&self) -> bool {
        self.samples.iter().all(|s| s.admissible)
    }

    pub fn all_within_bound(&self) -> bool {
        self.samples.iter().all(|s| s.within_bound != Some(false))
    }
}

/// A Lip-norm on `left ⊕ right` whose coordinate projections are the two
/// surjections.
#[derive(Clone, Debug)]
pub struct Tunnel {
    pub total: DeskQMSpace,
    pub left: DeskQMSpace,
    pub right: DeskQMSpace,
    pub r: f64,
}

impl Tunnel {
    pub fn lip(&self, a: &[f64], b: &[f64]) -> f64 {
        self.total.lip().eval(&[a, b].concat())
    }

    /// Distance bound implied by the construction: `2r`.
    pub fn distq_upper_bound(&self) -> f64 {
        2.0 * self.r
    }

    /// Samples each factor's unit ball, pairs every element with its partner
    /// under `to_right` or `to_left`, and records `L^r` of the pair. The upper
    /// side asks `L^r ≤ 1 + tol`; the lower side asks `L^r` to dominate both
    /// factor norms.
    pub fn quotient_check(
        &self,
        to_right: &LinearMap,
        to_left: &LinearMap,
        samples: usize,
        seed: u64,
        tol: f64,
    ) -> QuotientReport {
        let mut report = QuotientReport::default();
        for a in unit_ball_samples(&self.left, samples, seed) {
            let b = apply(to_right, &a);
            report.record(self.lip(&a, &b), 1.0, self.right.lip().eval(&b));
        }
        for b in unit_ball_samples(&self.right, samples, seed.wrapping_add(1)) {
            let a = apply(to_left, &b);
            report.record(self.lip(&a, &b), self.left.lip().eval(&a), 1.0);
        }
        report.finish(tol);
        report
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct QuotientReport {
    pub samples: usize,
    /// Largest `L^r` at a partner pair of a unit-ball element.
    pub max_lip: f64,
    /// Smallest `L^r − max{L_A, L_B}`; never negative for an admissible norm.
    pub min_dominance_slack: f64,
    pub passed: bool,
}

impl QuotientReport {
    pub(crate) fn record(&mut self, lip: f64, la: f64, lb: f64) {
        if self.samples == 0 {
            self.min_dominance_slack = f64::INFINITY;
        }
        self.samples += 1;
        self.max_lip = self.max_lip.max(lip);
        self.min_dominance_slack = self.min_dominance_slack.min(lip - la.max(lb));
    }

    pub(crate) fn finish(&mut self, tol: f64) {
        self.passed = self.samples > 0 && self.max_lip <= 1.0 + tol && self.min_dominance_slack >= -tol;
    }
}

/// `L^r(a, b) = max{ L_A(a), L_B(b), ‖π(a) − b‖/r }` on `domain ⊕ codomain`.
pub fn evident_tunnel(bridge: &Bridge, r: f64) -> Result<Tunnel> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("tunnel parameter must be positive, got {}", r)));
    }
    bridge.require_identity_pivot()?;
    let (da, db) = (bridge.domain.dim(), bridge.codomain.dim());
    let structure = sum_structure(bridge.domain.structure().clone(), bridge.codomain.structure().clone());
    let left = structure.projection(true)?;
    let right = structure.projection(false)?;
    let mut gap = LinearMap::zeros(db, da + db);
    gap.view_mut((0, 0), (db, da)).copy_from(&bridge.embed);
    gap.view_mut((0, da), (db, db)).copy_from(&(-LinearMap::identity(db, db)));
    let lip: Arc<dyn Seminorm> = Arc::new(
        ComposedSeminorm::new(da + db)
            .with_part(1.0, bridge.domain.lip().clone(), Some(left))
            .with_part(1.0, bridge.codomain.lip().clone(), Some(right))
            .with_part(1.0 / r, bridge.codomain.norm().clone(), Some(gap)),
    );
    let total = DeskQMSpace::new(format!("tunnel({},{};r={})", bridge.domain.label, bridge.codomain.label, r), structure, lip, None)?;
    Ok(Tunnel { total, left: bridge.domain.clone(), right: bridge.codomain.clone(), r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou_core::{finite_space, FiniteMetric};
    use crate::tunnels::block_average_toy;

    fn triangle() -> DeskQMSpace {
        finite_space(FiniteMetric::new(vec![vec![0.0, 1.0, 1.5], vec![1.0, 0.0, 0.8], vec![1.5, 0.8, 0.0]]).unwrap())
    }

    #[test]
    fn self_bridge_is_trivial() {
        let x = triangle();
        let id = LinearMap::identity(3, 3);
        let bridge = Bridge::evident(x.clone(), x.clone(), id.clone()).unwrap();
        let t = evident_tunnel(&bridge, 0.5).unwrap();
        let a = [0.3, -1.0, 2.0];
        assert_eq!(t.lip(&a, &a), x.lip().eval(&a));
        let report = bridge.length_estimate(&id, &id, 30, 1).unwrap();
        assert_eq!(report.empirical_sup, 0.0);
        assert!(report.all_admissible());
        let q = t.quotient_check(&id, &id, 30, 2, 1e-9);
        assert!(q.passed, "{:?}", q);
        assert!(evident_tunnel(&bridge, 0.0).is_err());
        assert!(evident_tunnel(&bridge, -1.0).is_err());
    }

    #[test]
    fn zero_candidate_reports_norms() {
        let x = triangle();
        let id = LinearMap::identity(3, 3);
        let zero = LinearMap::zeros(3, 3);
        let bridge = Bridge::evident(x.clone(), x.clone(), id).unwrap();
        let report = bridge.length_estimate(&zero, &zero, 20, 4).unwrap();
        for s in &report.samples {
            assert!(s.admissible);
        }
        let norms = super::super::unit_ball_samples(&x, 20, 4)
            .iter()
            .map(|a| x.norm().eval(a))
            .fold(0.0, f64::max);
        assert!(report.empirical_sup >= norms - 1e-12);
        assert!(report.empirical_sup > 0.1);
    }

    #[test]
    fn non_unital_embedding_is_rejected() {
        let x = triangle();
        assert!(Bridge::evident(x.clone(), x, LinearMap::zeros(3, 3)).is_err());
    }

    #[test]
    fn subspace_tunnel_is_a_quotient() {
        let (big, small, inc, avg) = block_average_toy(0.4).unwrap();
        let eps = 0.3;
        let big_eps = crate::tunnels::modified_lipnorm_cond_exp(&big, &avg, eps, 30, 0).unwrap().space;
        let bridge = Bridge::evident(small, big_eps, inc.clone()).unwrap();
        let t = evident_tunnel(&bridge, eps).unwrap();
        // partners: inclusion upward, restriction of the block average downward
        let down = LinearMap::from_fn(2, 4, |r, c| if c / 2 == r { 0.5 } else { 0.0 });
        let q = t.quotient_check(&inc, &down, 40, 9, 1e-9);
        assert!(q.passed, "{:?}", q);
    }
}
