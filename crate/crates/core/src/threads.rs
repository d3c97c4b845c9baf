//! Truncated compatible sequences of stage pairs, the seminorm `S_0` on them,
//! and the embeddings `ψ_n` of a single stage.

use std::sync::Arc;

use serde::Serialize;

use crate::bunce_deddens::{max_terms, BdTower, StageElement};
use crate::error::{Error, Result};

/// Entries `(a^n_n, a^n_{n+1})` for `n = 0..depth`, the first at stage `n`
/// and the second at stage `n + 1`. Beyond the depth the thread continues by
/// pushing its last element forward along `α`.
#[derive(Clone, Debug, PartialEq)]
pub struct Thread {
    pub entries: Vec<(StageElement, StageElement)>,
}

impl Thread {
    pub fn new(entries: Vec<(StageElement, StageElement)>) -> Result<Self> {
        for (n, (a, b)) in entries.iter().enumerate() {
            if a.m != n || b.m != n + 1 {
                return Err(Error::InvalidParameter(format!(
                    "entry {} has stages ({}, {}), expected ({}, {})",
                    n,
                    a.m,
                    b.m,
                    n,
                    n + 1
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn depth(&self) -> usize {
        self.entries.len()
    }

    /// `sup_n max{‖a^n_n‖, ‖a^n_{n+1}‖}`.
    pub fn sup_norm(&self, tower: &BdTower) -> f64 {
        self.entries
            .iter()
            .map(|(a, b)| a.sup_norm(tower.gp()).max(b.sup_norm(tower.gp())))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompatReport {
    pub compatible: bool,
    /// First `n` with `a^n_{n+1} ≠ a^{n+1}_{n+1}`.
    pub first_violation: Option<usize>,
    pub max_residual: f64,
}

/// Checks `a^n_{n+1} = a^{n+1}_{n+1}` in sup norm for consecutive entries.
pub fn check_thread_compat(tower: &BdTower, thread: &Thread, tol: f64) -> Result<CompatReport> {
    let mut first = None;
    let mut max_residual: f64 = 0.0;
    for (n, w) in thread.entries.windows(2).enumerate() {
        let r = w[0].1.sup_distance(&w[1].0, tower.gp())?;
        max_residual = max_residual.max(r);
        if r > tol && first.is_none() {
            first = Some(n);
        }
    }
    Ok(CompatReport { compatible: first.is_none(), first_violation: first, max_residual })
}

/// `β(n) = 2^{−n}`.
pub fn beta(n: usize) -> f64 {
    2f64.powi(-(n as i32))
}

fn s_norm(tower: &BdTower, a: &StageElement) -> Result<f64> {
    Ok(max_terms(&tower.s_terms(a)?, tower.gp()))
}

/// `S_0 = sup_n max{ S_n(a^n_n), ‖α(a^n_n) − a^{n+1}_{n+1}‖ / (2β(n)) }`.
/// The last entry's second component stands in for the implicit tail, whose
/// later terms repeat its `S` value and contribute no differences.
pub fn thread_s0(tower: &BdTower, thread: &Thread, tol: f64) -> Result<f64> {
    let compat = check_thread_compat(tower, thread, tol)?;
    if let Some(index) = compat.first_violation {
        return Err(Error::IncompatibleThread { index, residual: compat.max_residual });
    }
    let mut s0: f64 = 0.0;
    for (n, (a, next)) in thread.entries.iter().enumerate() {
        let jump = tower.alpha(a)?.sup_distance(next, tower.gp())?;
        s0 = s0.max(s_norm(tower, a)?).max(jump / (2.0 * beta(n)));
    }
    if let Some((_, last)) = thread.entries.last() {
        s0 = s0.max(s_norm(tower, last)?);
    }
    Ok(s0)
}

/// `ψ_n(a)`: zero entries before `n − 1`, `(0, a)` at `n − 1`, then `a`
/// pushed forward along `α`.
pub fn embed_psi(tower: &Arc<BdTower>, n: usize, a: &StageElement, depth: usize) -> Result<Thread> {
    if n >= depth {
        return Err(Error::InvalidParameter(format!("need n < depth, got n = {}, depth = {}", n, depth)));
    }
    if a.m != n {
        return Err(Error::InvalidParameter(format!("element lives at stage {}, expected {}", a.m, n)));
    }
    if depth > tower.max_stage() {
        return Err(Error::StageOutOfRange { m: depth, len: tower.max_stage() });
    }
    let mut entries = Vec::with_capacity(depth);
    for k in 0..n.saturating_sub(1) {
        entries.push((tower.zero(k)?, tower.zero(k + 1)?));
    }
    if n >= 1 {
        entries.push((tower.zero(n - 1)?, a.clone()));
    }
    let mut current = a.clone();
    for _ in n..depth {
        let next = tower.alpha(&current)?;
        entries.push((current, next.clone()));
        current = next;
    }
    Thread::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bunce_deddens::SupernaturalSequence;

    fn tower() -> Arc<BdTower> {
        Arc::new(BdTower::with_defaults(SupernaturalSequence::new(vec![2, 2, 2, 2]).unwrap()).unwrap())
    }

    #[test]
    fn psi_zero_of_one_is_all_ones() {
        let t = tower();
        let th = embed_psi(&t, 0, &t.unit(0).unwrap(), 4).unwrap();
        for (n, (a, b)) in th.entries.iter().enumerate() {
            assert_eq!(a, &t.unit(n).unwrap());
            assert_eq!(b, &t.unit(n + 1).unwrap());
        }
        assert_eq!(thread_s0(&t, &th, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn psi_is_isometric_and_compatible() {
        let t = tower();
        for n in 1..4 {
            let a = t.random_element(n, 1, 30 + n as u64).unwrap();
            let th = embed_psi(&t, n, &a, 4).unwrap();
            assert!((th.sup_norm(&t) - a.sup_norm(t.gp())).abs() < 1e-10);
            assert!(check_thread_compat(&t, &th, 1e-10).unwrap().compatible);
            let expected = s_norm(&t, &a).unwrap().max(a.sup_norm(t.gp()) / (2.0 * beta(n - 1)));
            let got = thread_s0(&t, &th, 1e-10).unwrap();
            assert!((got - expected).abs() < 1e-8 * expected.max(1.0), "{} vs {}", got, expected);
        }
        assert!(embed_psi(&t, 4, &t.unit(4).unwrap(), 4).is_err());
    }

    #[test]
    fn replaced_entry_breaks_compatibility() {
        let t = tower();
        let a = t.random_element(2, 1, 4).unwrap();
        let mut th = embed_psi(&t, 2, &a, 4).unwrap();
        assert!(check_thread_compat(&t, &th.clone(), 1e-10).unwrap().compatible);
        th.entries[3].0 = t.random_element(3, 1, 99).unwrap();
        let r = check_thread_compat(&t, &th, 1e-10).unwrap();
        assert_eq!(r.first_violation, Some(2));
        assert!(matches!(thread_s0(&t, &th, 1e-10), Err(Error::IncompatibleThread { index: 2, .. })));
    }

    #[test]
    fn perturbation_shows_up_in_s0() {
        let t = tower();
        let a = t.random_element(1, 1, 6).unwrap();
        let mut th = embed_psi(&t, 1, &a, 4).unwrap();
        // perturb the shared element at stage 2 in both places it appears
        let p = t.random_element(2, 1, 7).unwrap().scale(0.01);
        let j = 2;
        th.entries[j - 1].1 = th.entries[j - 1].1.add(&p).unwrap();
        th.entries[j].0 = th.entries[j].0.add(&p).unwrap();
        let s0 = thread_s0(&t, &th, 1e-10).unwrap();
        assert!(s0 >= p.sup_norm(t.gp()) / (2.0 * beta(j - 1)) - 1e-9);
    }

    #[test]
    fn psi_restricts_consistently() {
        let t = tower();
        let a = t.random_element(1, 1, 12).unwrap();
        let lower = embed_psi(&t, 1, &a, 4).unwrap();
        let upper = embed_psi(&t, 2, &t.alpha(&a).unwrap(), 4).unwrap();
        for n in 2..4 {
            assert!(lower.entries[n].0.sup_distance(&upper.entries[n].0, t.gp()).unwrap() < 1e-10);
            assert!(lower.entries[n].1.sup_distance(&upper.entries[n].1, t.gp()).unwrap() < 1e-10);
        }
    }
}
