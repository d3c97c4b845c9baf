use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::bridge::{BridgeLengthReport, BridgeSample, Direction, QuotientReport};
use crate::bunce_deddens::{max_terms, BdTower, StageElement};
use crate::error::{Error, Result};

fn sample_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn s_norm(tower: &BdTower, a: &StageElement) -> Result<f64> {
    Ok(max_terms(&tower.s_terms(a)?, tower.gp()))
}

/// Seeded stage-`m` elements rescaled to `S_m = 1`.
fn unit_ball(tower: &BdTower, m: usize, samples: usize, cutoff: usize, seed: u64) -> Result<Vec<StageElement>> {
    (0..samples)
        .map(|i| {
            let a = tower.random_element(m, cutoff, sample_seed(seed, i))?;
            let s = s_norm(tower, &a)?;
            Ok(a.scale(1.0 / s))
        })
        .collect()
}

fn check_stages(tower: &BdTower, m: usize) -> Result<()> {
    if m >= tower.max_stage() {
        return Err(Error::StageOutOfRange { m: m + 1, len: tower.max_stage() });
    }
    Ok(())
}

/// Partner choice for the stage bridge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BdCandidate {
    /// `α` upward and `α^{-1}∘E` downward.
    #[default]
    Natural,
    /// The zero map both ways.
    Zero,
}

/// The evident bridge from stage `m` into stage `m+1` along `α`.
#[derive(Clone, Debug)]
pub struct BdBridge {
    tower: Arc<BdTower>,
    m: usize,
}

impl BdBridge {
    pub fn new(tower: Arc<BdTower>, m: usize) -> Result<Self> {
        check_stages(&tower, m)?;
        Ok(Self { tower, m })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Samples both `S`-unit balls. For the natural candidate every downward
    /// sample is also checked against the displacement bound
    /// `‖b − E(b)‖ ≤ 2^{−(m+1)}`.
    pub fn length_estimate(&self, candidate: BdCandidate, samples: usize, cutoff: usize, seed: u64) -> Result<BridgeLengthReport> {
        let t = &self.tower;
        let gp = t.gp();
        let bound = 2f64.powi(-(self.m as i32 + 1)) + 1e-9;
        let mut out = Vec::with_capacity(2 * samples);
        for (i, a) in unit_ball(t, self.m, samples, cutoff, seed)?.into_iter().enumerate() {
            let image = t.alpha(&a)?;
            let partner = match candidate {
                BdCandidate::Natural => image.clone(),
                BdCandidate::Zero => t.zero(self.m + 1)?,
            };
            let d = image.sup_distance(&partner, gp)?;
            out.push(BridgeSample::new(Direction::Up, i, s_norm(t, &partner)?, d, None));
        }
        for (i, b) in unit_ball(t, self.m + 1, samples, cutoff, seed.wrapping_add(1))?.into_iter().enumerate() {
            let (partner, certified) = match candidate {
                BdCandidate::Natural => (t.alpha_inverse(&t.cond_expectation(&b)?)?, Some(bound)),
                BdCandidate::Zero => (t.zero(self.m)?, None),
            };
            let d = t.alpha(&partner)?.sup_distance(&b, gp)?;
            out.push(BridgeSample::new(Direction::Down, i, s_norm(t, &partner)?, d, certified));
        }
        Ok(BridgeLengthReport::new(out, seed))
    }
}

/// `max{ S_m(a), S_{m+1}(b), ‖α(a) − b‖/r }` on stage `m` ⊕ stage `m+1`,
/// evaluated on stage elements directly.
#[derive(Clone, Debug)]
pub struct BdEvidentTunnel {
    tower: Arc<BdTower>,
    m: usize,
    r: f64,
}

impl BdEvidentTunnel {
    pub fn new(tower: Arc<BdTower>, m: usize, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("tunnel parameter must be positive, got {}", r)));
        }
        check_stages(&tower, m)?;
        Ok(Self { tower, m, r })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn distq_upper_bound(&self) -> f64 {
        2.0 * self.r
    }

    pub fn lip(&self, a: &StageElement, b: &StageElement) -> Result<f64> {
        if a.m != self.m || b.m != self.m + 1 {
            return Err(Error::InvalidParameter(format!(
                "expected stages ({}, {}), got ({}, {})",
                self.m,
                self.m + 1,
                a.m,
                b.m
            )));
        }
        let t = &self.tower;
        let gap = t.alpha(a)?.sup_distance(b, t.gp())?;
        Ok(s_norm(t, a)?.max(s_norm(t, b)?).max(gap / self.r))
    }

    /// Pairs `a` with `α(a)` and `b` with `α^{-1}(E(b))` over both unit balls.
    pub fn quotient_check(&self, samples: usize, cutoff: usize, seed: u64, tol: f64) -> Result<QuotientReport> {
        let t = &self.tower;
        let mut report = QuotientReport::default();
        for a in unit_ball(t, self.m, samples, cutoff, seed)? {
            let b = t.alpha(&a)?;
            report.record(self.lip(&a, &b)?, 1.0, s_norm(t, &b)?);
        }
        for b in unit_ball(t, self.m + 1, samples, cutoff, seed.wrapping_add(1))? {
            let a = t.alpha_inverse(&t.cond_expectation(&b)?)?;
            report.record(self.lip(&a, &b)?, s_norm(t, &a)?, 1.0);
        }
        report.finish(tol);
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bunce_deddens::{NormTermConvention, SupernaturalSequence};
    use crate::periodic_matfun::{make_shift_v, GridParams, PeriodicMatrixFunction};

    fn tower(entries: &[usize], convention: NormTermConvention) -> Arc<BdTower> {
        let sigma = SupernaturalSequence::new(entries.to_vec()).unwrap();
        Arc::new(BdTower::new(sigma, GridParams::default(), convention).unwrap())
    }

    #[test]
    fn bridge_samples_respect_displacement() {
        let t = tower(&[2, 3], NormTermConvention::Corrected);
        let report = BdBridge::new(t, 1).unwrap().length_estimate(BdCandidate::Natural, 12, 2, 5).unwrap();
        assert!(report.empirical_sup <= 0.25 + 1e-8, "{}", report.empirical_sup);
        assert!(report.all_admissible());
        assert!(report.all_within_bound());
        assert!(report.samples.iter().filter(|s| s.direction == Direction::Up).all(|s| s.distance < 1e-9));
    }

    #[test]
    fn zero_candidate_is_worse() {
        let t = tower(&[2, 2], NormTermConvention::Corrected);
        let b = BdBridge::new(t, 0).unwrap();
        let natural = b.length_estimate(BdCandidate::Natural, 6, 1, 2).unwrap();
        let zero = b.length_estimate(BdCandidate::Zero, 6, 1, 2).unwrap();
        assert!(zero.empirical_sup > natural.empirical_sup);
    }

    #[test]
    fn literal_convention_breaks_the_certificate() {
        // b = U (V ⊗ I) U*: no derivative term and E(b) = 0
        for (convention, holds) in [(NormTermConvention::Corrected, true), (NormTermConvention::Literal, false)] {
            let t = tower(&[2, 2], convention);
            let g = PeriodicMatrixFunction::constant(crate::linalg::kron_identity(&make_shift_v(2), 2));
            let b = t.element(2, t.unrotate(2, &g).unwrap()).unwrap();
            let b = b.scale(1.0 / s_norm(&t, &b).unwrap());
            let d = b.sup_distance(&t.cond_expectation(&b).unwrap(), t.gp()).unwrap();
            assert_eq!(d <= 0.25 + 1e-9, holds, "{:?}: {}", convention, d);
        }
    }

    #[test]
    fn tunnel_pairs_alpha_images() {
        let t = tower(&[2, 3], NormTermConvention::Corrected);
        let tun = BdEvidentTunnel::new(t.clone(), 1, 0.25).unwrap();
        let a = t.random_element(1, 2, 8).unwrap();
        let s = s_norm(&t, &a).unwrap();
        assert!((tun.lip(&a, &t.alpha(&a).unwrap()).unwrap() - s).abs() < 1e-8 * s.max(1.0));
        let q = tun.quotient_check(6, 2, 1, 1e-8).unwrap();
        assert!(q.passed, "{:?}", q);
        assert!(BdEvidentTunnel::new(t.clone(), 1, 0.0).is_err());
        assert!(BdEvidentTunnel::new(t, 2, 1.0).is_err());
    }
}
