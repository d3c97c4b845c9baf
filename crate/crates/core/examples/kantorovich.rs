//! Monge-Kantorovich distance on a finite metric space: iterative engine,
//! exact LP and optimal transport side by side.
use bdqm::ou_core::{finite_space, kantorovich, kantorovich_exact_finite, kantorovich_lp, FiniteMetric, KantorovichParams, StateFunctional};

fn main() -> bdqm::Result<()> {
    let metric = FiniteMetric::from_line(&[0.0, 0.3, 1.0, 1.8, 2.0])?;
    let space = finite_space(metric.clone());
    let states = [
        vec![1.0, 0.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, 0.0, 1.0],
        vec![0.2, 0.2, 0.2, 0.2, 0.2],
        vec![0.5, 0.0, 0.1, 0.0, 0.4],
    ];
    let params = KantorovichParams::default();
    println!("{:>3} {:>3} {:>12} {:>12} {:>12}", "i", "j", "engine", "lp", "transport");
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let (phi, psi) = (StateFunctional::new("phi", states[i].clone()), StateFunctional::new("psi", states[j].clone()));
            let engine = kantorovich(&space, &phi, &psi, &params)?.value;
            let lp = kantorovich_lp(&space, &phi, &psi)?.0;
            let ot = kantorovich_exact_finite(&metric, &states[i], &states[j])?;
            println!("{i:>3} {j:>3} {engine:>12.9} {lp:>12.9} {ot:>12.9}");
        }
    }
    Ok(())
}
