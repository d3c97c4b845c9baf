use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::kantorovich::{kantorovich, KantorovichParams};
use super::space::{state_net, DeskQMSpace, NetParams};

const TOL: f64 = 1e-9;
const SAMPLES: usize = 16;
const KERNEL_SAMPLES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    /// Measured quantity.
    pub value: f64,
    /// What it is compared against.
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AxiomReport {
    pub space: String,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn at_most(name: &str, value: f64, bound: f64) -> AxiomCheck {
    AxiomCheck { name: name.into(), passed: value <= bound, value, bound }
}

/// Samples the Lip-norm axioms on `space`: unit in the kernel, seminorm laws,
/// kernel reduced to scalars, states unital and positive, and the state net
/// within the certified radius around the reference state.
pub fn check_lipnorm_axioms(space: &DeskQMSpace, seed: u64) -> AxiomReport {
    let kp = KantorovichParams { restarts: 4, iterations: 200, seed, ..Default::default() };
    check_lipnorm_axioms_with(space, seed, &NetParams { seed, ..Default::default() }, &kp)
}

pub fn check_lipnorm_axioms_with(
    space: &DeskQMSpace,
    seed: u64,
    net_params: &NetParams,
    kp: &KantorovichParams,
) -> AxiomReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lip = space.lip();
    let norm = space.norm();
    let unit = space.unit();
    let reference = space.reference_state();
    let mut checks = Vec::new();
    let sample = |rng: &mut ChaCha8Rng| space.structure().random_element(rng);

    checks.push(at_most("unit_in_kernel", lip.eval(&unit), TOL));

    let (mut homog, mut triangle) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..SAMPLES {
        let (x, y) = (sample(&mut rng), sample(&mut rng));
        let c: f64 = rng.gen_range(-3.0..3.0);
        let lx = lip.eval(&x);
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        homog = homog.max((lip.eval(&cx) - c.abs() * lx).abs() / (1.0 + c.abs() * lx));
        let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let ly = lip.eval(&y);
        triangle = triangle.max((lip.eval(&xy) - lx - ly) / (1.0 + lx + ly));
    }
    checks.push(at_most("homogeneity", homog, TOL));
    checks.push(at_most("triangle", triangle, TOL));

    let mut kernel_min = f64::INFINITY;
    for _ in 0..KERNEL_SAMPLES {
        let x = sample(&mut rng);
        let r = reference.eval(&x);
        let centered: Vec<f64> = x.iter().zip(&unit).map(|(a, u)| a - r * u).collect();
        let nrm = norm.eval(&centered);
        if nrm > 0.0 {
            let y: Vec<f64> = centered.iter().map(|v| v / nrm).collect();
            kernel_min = kernel_min.min(lip.eval(&y));
        }
    }
    checks.push(AxiomCheck {
        name: "kernel_is_scalars".into(),
        passed: kernel_min > 10.0 * TOL,
        value: kernel_min,
        bound: 10.0 * TOL,
    });

    let net = state_net(space, net_params);
    let unital = net.iter().map(|s| (s.eval(&unit) - 1.0).abs()).fold(0.0, f64::max);
    checks.push(at_most("states_unital", unital, TOL));
    let mut positivity = f64::INFINITY;
    for _ in 0..SAMPLES {
        let y = sample(&mut rng);
        let ny = norm.eval(&y);
        let pos: Vec<f64> = y.iter().zip(&unit).map(|(a, u)| a + ny * u).collect();
        for s in &net {
            positivity = positivity.min(s.eval(&pos) / (1.0 + ny));
        }
    }
    checks.push(AxiomCheck { name: "states_positive".into(), passed: positivity >= -TOL, value: positivity, bound: -TOL });

    let mut radius_est = 0.0f64;
    let mut degenerate = false;
    for s in &net {
        match kantorovich(space, s, &reference, kp) {
            Ok(r) => radius_est = radius_est.max(r.value),
            Err(_) => degenerate = true,
        }
    }
    let bound = 2.0 * space.radius().unwrap_or(f64::INFINITY);
    checks.push(AxiomCheck {
        name: "net_diameter".into(),
        passed: !degenerate && 2.0 * radius_est <= bound + 1e-6,
        value: if degenerate { f64::INFINITY } else { 2.0 * radius_est },
        bound,
    });

    AxiomReport { space: space.label.clone(), checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bunce_deddens::{BdTower, SupernaturalSequence};
    use crate::ou_core::{finite_space, stage_space, FiniteMetric, FnSeminorm, StageLip};
    use std::sync::Arc;

    #[test]
    fn stage_l_passes() {
        let t = Arc::new(BdTower::with_defaults(SupernaturalSequence::new(vec![2]).unwrap()).unwrap());
        let space = stage_space(t, 1, 1, StageLip::L).unwrap();
        let r = check_lipnorm_axioms(&space, 3);
        assert!(r.passed(), "{:#?}", r);
    }

    #[test]
    fn commutative_three_points_pass() {
        let space = finite_space(FiniteMetric::from_line(&[0.0, 0.3, 1.0]).unwrap());
        let r = check_lipnorm_axioms(&space, 1);
        assert!(r.passed(), "{:#?}", r);
    }

    #[test]
    fn zero_seminorm_fails_kernel_check() {
        let space = finite_space(FiniteMetric::from_line(&[0.0, 1.0, 2.0]).unwrap());
        let broken = space.with_lip("zero", Arc::new(FnSeminorm::new(3, |_: &[f64]| 0.0)), None).unwrap();
        let r = check_lipnorm_axioms(&broken, 1);
        assert!(!r.check("kernel_is_scalars").unwrap().passed);
        assert!(!r.passed());
    }
}
