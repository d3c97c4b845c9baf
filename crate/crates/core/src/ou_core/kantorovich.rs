use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::space::{DeskQMSpace, StateFunctional};
use super::{dot, norm2};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KantorovichParams {
    pub restarts: usize,
    pub iterations: usize,
    pub step_decay: f64,
    /// First step length relative to the norm of the starting point.
    pub initial_step: f64,
    pub seed: u64,
    /// `L` below this on the constraint hyperplane counts as degenerate.
    pub degenerate_tol: f64,
    /// Cutting-plane rounds after the subgradient phase; 0 disables them.
    pub polish_rounds: usize,
}

impl Default for KantorovichParams {
    fn default() -> Self {
        Self { restarts: 4, iterations: 100, step_decay: 0.98, initial_step: 0.5, seed: 0, degenerate_tol: 1e-10, polish_rounds: 60 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KantorovichResult {
    /// Best ratio found; a lower bound on the Monge-Kantorovich distance.
    pub value: f64,
    /// Achieving element, scaled to `L = 1`.
    pub maximizer: Vec<f64>,
    pub restart_values: Vec<f64>,
    /// Largest minus smallest restart value.
    pub spread: f64,
    /// Value of the final cutting-plane model when its box constraints were
    /// slack; the model contains the unit ball, so this bounds the distance
    /// from above.
    pub upper_bound: Option<f64>,
}

/// `sup{ (φ − ψ)(a) : L(a) ≤ 1 }` by minimizing `L` on the hyperplane
/// `(φ − ψ)(a) = 1` with projected subgradient steps from several starts.
/// Every candidate is evaluated exactly, so the value never overshoots.
pub fn kantorovich(
    space: &DeskQMSpace,
    phi: &StateFunctional,
    psi: &StateFunctional,
    params: &KantorovichParams,
) -> Result<KantorovichResult> {
    let dim = space.dim();
    if phi.weights.len() != dim || psi.weights.len() != dim {
        return Err(Error::DimensionMismatch { left: dim, right: phi.weights.len().max(psi.weights.len()) });
    }
    let g: Vec<f64> = phi.weights.iter().zip(&psi.weights).map(|(a, b)| a - b).collect();
    let gg = dot(&g, &g);
    if gg.sqrt() < 1e-14 {
        return Ok(KantorovichResult { value: 0.0, maximizer: vec![0.0; dim], restart_values: Vec::new(), spread: 0.0, upper_bound: Some(0.0) });
    }
    let unit = space.unit();
    let uu = dot(&unit, &unit);
    let lip = space.lip();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut starts = vec![g.clone()];
    starts.extend(space.structure().hints().into_iter().take(params.restarts.saturating_sub(1)));
    while starts.len() < params.restarts.max(1) {
        starts.push(space.structure().random_element(&mut rng));
    }

    let onto_plane = |x: &mut Vec<f64>| {
        let c = (1.0 - dot(&g, x)) / gg;
        x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi += c * gi);
    };

    let mut best_value = f64::NEG_INFINITY;
    let mut best_x = vec![0.0; dim];
    let mut restart_values = Vec::with_capacity(starts.len());
    let mut cuts: Vec<Vec<f64>> = Vec::new();
    for d in starts {
        let gd = dot(&g, &d);
        let mut x = if gd.abs() > 1e-9 * gg.sqrt() * norm2(&d) {
            d.iter().map(|v| v / gd).collect()
        } else {
            let mut x = d;
            onto_plane(&mut x);
            x
        };
        let mut step = params.initial_step * norm2(&x);
        let mut local_best = f64::NEG_INFINITY;
        for _ in 0..params.iterations.max(1) {
            let (l, s) = lip.eval_with_subgradient(&x);
            if l < params.degenerate_tol {
                return Err(Error::DegenerateLipNorm { value: l });
            }
            let value = dot(&g, &x) / l;
            if value > local_best {
                local_best = value;
            }
            if value > best_value {
                best_value = value;
                best_x = x.iter().map(|v| v / l).collect();
                cuts.push(s.clone());
            }
            // project the subgradient onto directions tangent to the plane
            // and orthogonal to the unit
            let cs = dot(&g, &s) / gg;
            let mut p: Vec<f64> = s.iter().zip(&g).map(|(si, gi)| si - cs * gi).collect();
            if uu > 0.0 {
                let cu = dot(&unit, &p) / uu;
                p.iter_mut().zip(&unit).for_each(|(pi, ui)| *pi -= cu * ui);
            }
            let pn = norm2(&p);
            if pn < 1e-15 {
                break;
            }
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi -= step * pi / pn);
            onto_plane(&mut x);
            step *= params.step_decay;
        }
        restart_values.push(local_best);
    }
    let spread = restart_values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - restart_values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut upper_bound = None;
    if params.polish_rounds > 0 {
        let box_size = 1e3 * best_x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for _ in 0..params.polish_rounds {
            let Some((model, x, slack)) = cutting_plane_step(&g, &unit, &cuts, box_size) else { break };
            let (l, s) = lip.eval_with_subgradient(&x);
            if l < params.degenerate_tol {
                break;
            }
            let value = dot(&g, &x) / l;
            if value > best_value {
                best_value = value;
                best_x = x.iter().map(|v| v / l).collect();
            }
            upper_bound = slack.then_some(model);
            if model - best_value <= 1e-12 * model.abs().max(1.0) {
                break;
            }
            cuts.push(s);
        }
    }
    Ok(KantorovichResult { value: best_value.max(0.0), maximizer: best_x, restart_values, spread, upper_bound })
}

/// Maximizes `g·x` over `{|s·x| ≤ 1 for every cut s, unit·x = 0, |x_i| ≤ b}`.
/// Every subgradient of a seminorm gives a valid cut, so the feasible set
/// contains the unit ball. Returns the model value, the maximizer, and
/// whether the box was slack there.
fn cutting_plane_step(g: &[f64], unit: &[f64], cuts: &[Vec<f64>], b: f64) -> Option<(f64, Vec<f64>, bool)> {
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = g.iter().map(|gi| p.add_var(*gi, (-b, b))).collect();
    for s in cuts {
        let expr: Vec<_> = vars.iter().zip(s).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
        if expr.is_empty() {
            continue;
        }
        p.add_constraint(expr.as_slice(), ComparisonOp::Le, 1.0);
        p.add_constraint(expr.as_slice(), ComparisonOp::Ge, -1.0);
    }
    let pin: Vec<_> = vars.iter().zip(unit).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
    if !pin.is_empty() {
        p.add_constraint(pin.as_slice(), ComparisonOp::Eq, 0.0);
    }
    let outcome = p.solve().ok()?;
    let sol = outcome.solution()?;
    let x: Vec<f64> = vars.iter().map(|v| sol.var_value(*v)).collect();
    let slack = x.iter().all(|v| v.abs() < b * (1.0 - 1e-9));
    Some((sol.objective(), x, slack))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou_core::{finite_space, kantorovich_exact_finite, FiniteMetric, FnSeminorm};
    use rand::Rng;
    use std::sync::Arc;

    fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> FiniteMetric {
        // Euclidean points in the plane
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0))).collect();
        FiniteMetric::new(
            pts.iter()
                .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
                .collect(),
        )
        .unwrap()
    }

    fn random_probability(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn identical_states_give_zero() {
        let space = finite_space(FiniteMetric::from_line(&[0.0, 1.0, 3.0]).unwrap());
        let s = space.reference_state();
        assert_eq!(kantorovich(&space, &s, &s, &KantorovichParams::default()).unwrap().value, 0.0);
    }

    #[test]
    fn agrees_with_exact_transport() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let params = KantorovichParams::default();
        for _ in 0..12 {
            let n = rng.gen_range(2..=8);
            let metric = random_metric(&mut rng, n);
            let space = finite_space(metric.clone());
            let (mu, nu) = (random_probability(&mut rng, n), random_probability(&mut rng, n));
            let exact = kantorovich_exact_finite(&metric, &mu, &nu).unwrap();
            let est = kantorovich(&space, &StateFunctional::new("mu", mu), &StateFunctional::new("nu", nu), &params).unwrap();
            assert!(est.value <= exact * (1.0 + 1e-12) + 1e-12);
            assert!((exact - est.value) / exact.max(1e-6) < 1e-3, "n={} exact={} est={}", n, exact, est.value);
        }
    }

    #[test]
    fn maximizer_is_normalized() {
        let space = finite_space(FiniteMetric::from_line(&[0.0, 1.0, 2.5]).unwrap());
        let (a, b) = (StateFunctional::new("a", vec![1.0, 0.0, 0.0]), StateFunctional::new("b", vec![0.0, 0.0, 1.0]));
        let r = kantorovich(&space, &a, &b, &KantorovichParams::default()).unwrap();
        assert!((r.value - 2.5).abs() < 1e-12);
        assert!((space.lip().eval(&r.maximizer) - 1.0).abs() < 1e-12);
        assert!((a.eval(&r.maximizer) - b.eval(&r.maximizer) - r.value).abs() < 1e-12);
    }

    #[test]
    fn degenerate_lip_norm_reported() {
        let space = finite_space(FiniteMetric::from_line(&[0.0, 1.0]).unwrap());
        let broken = space.with_lip("zero", Arc::new(FnSeminorm::new(2, |_: &[f64]| 0.0)), None).unwrap();
        let (a, b) = (StateFunctional::new("a", vec![1.0, 0.0]), StateFunctional::new("b", vec![0.0, 1.0]));
        assert!(matches!(
            kantorovich(&broken, &a, &b, &KantorovichParams::default()),
            Err(Error::DegenerateLipNorm { .. })
        ));
    }
}
