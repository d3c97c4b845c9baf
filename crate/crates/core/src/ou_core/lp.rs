use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::seminorm::PolyhedralSeminorm;
use super::space::{DeskQMSpace, StateFunctional};
use crate::error::{Error, Result};

/// `sup{ φ(x) − ψ(x) : max_i |r_i·x| ≤ 1 }` as a linear program. `unit` is
/// pinned to zero mass so the kernel direction does not make the feasible set
/// unbounded. Returns the value and a maximizer.
pub fn kantorovich_lp_polyhedral(
    lip: &PolyhedralSeminorm,
    unit: &[f64],
    phi: &StateFunctional,
    psi: &StateFunctional,
) -> Result<(f64, Vec<f64>)> {
    let dim = unit.len();
    if phi.weights.len() != dim || psi.weights.len() != dim {
        return Err(Error::DimensionMismatch { left: dim, right: phi.weights.len().max(psi.weights.len()) });
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = (0..dim)
        .map(|k| p.add_var(phi.weights[k] - psi.weights[k], (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for row in lip.rows() {
        let expr: Vec<_> = vars.iter().zip(row).filter(|(_, c)| **c != 0.0).map(|(v, c)| (*v, *c)).collect();
        p.add_constraint(expr.as_slice(), ComparisonOp::Le, 1.0);
        p.add_constraint(expr.as_slice(), ComparisonOp::Ge, -1.0);
    }
    let pin: Vec<_> = vars.iter().zip(unit).map(|(v, c)| (*v, *c)).collect();
    p.add_constraint(pin.as_slice(), ComparisonOp::Eq, 0.0);
    let outcome = p.solve().map_err(|e| Error::LinearProgram(format!("{:?}", e)))?;
    let sol = outcome
        .solution()
        .ok_or_else(|| Error::LinearProgram("solver interrupted".into()))?;
    Ok((sol.objective(), vars.iter().map(|v| sol.var_value(*v)).collect()))
}

/// Exact Monge-Kantorovich distance on a space whose Lip-norm is polyhedral.
pub fn kantorovich_lp(space: &DeskQMSpace, phi: &StateFunctional, psi: &StateFunctional) -> Result<(f64, Vec<f64>)> {
    let rows = space
        .lip()
        .polyhedral_rows()
        .ok_or_else(|| Error::LinearProgram(format!("Lip-norm of {} is not polyhedral", space.label)))?;
    kantorovich_lp_polyhedral(&PolyhedralSeminorm::new(space.dim(), rows), &space.unit(), phi, psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou_core::{finite_space, kantorovich_exact_finite, FiniteMetric};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lp_dual_matches_transport_primal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for trial in 0..10 {
            let pts: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..3.0)).collect();
            let metric = if trial % 2 == 0 {
                FiniteMetric::from_line(&pts).unwrap()
            } else {
                // a non-line metric: shortest paths on a weighted cycle
                let n = 6;
                let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.5)).collect();
                let mut d = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        let (a, b) = (i.min(j), i.max(j));
                        let fwd: f64 = w[a..b].iter().sum();
                        let total: f64 = w.iter().sum();
                        d[i][j] = fwd.min(total - fwd);
                    }
                }
                FiniteMetric::new(d).unwrap()
            };
            let mut draw = || {
                let v: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<_>>()
            };
            let (mu, nu) = (draw(), draw());
            let space = finite_space(metric.clone());
            let rows = PolyhedralSeminorm::new(6, metric.lipschitz_rows());
            let (v, _) = kantorovich_lp_polyhedral(
                &rows,
                &space.unit(),
                &StateFunctional::new("mu", mu.clone()),
                &StateFunctional::new("nu", nu.clone()),
            )
            .unwrap();
            let exact = kantorovich_exact_finite(&metric, &mu, &nu).unwrap();
            assert!((v - exact).abs() < 1e-9, "{} vs {}", v, exact);
        }
    }
}
