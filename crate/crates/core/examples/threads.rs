//! Threads through the tower: embedding a stage element, the limit norm
//! and the seminorm S_0, plus a broken thread.
use std::sync::Arc;

use bdqm::bunce_deddens::{max_terms, BdTower, SupernaturalSequence};
use bdqm::threads::{beta, check_thread_compat, embed_psi, thread_s0};

fn main() -> bdqm::Result<()> {
    let tower = Arc::new(BdTower::with_defaults(SupernaturalSequence::new(vec![2, 3, 2])?)?);
    let gp = *tower.gp();
    let depth = tower.max_stage();
    for n in 1..depth {
        let a = tower.random_element(n, 2, n as u64)?;
        let th = embed_psi(&tower, n, &a, depth)?;
        let expected = max_terms(&tower.s_terms(&a)?, &gp).max(a.sup_norm(&gp) / (2.0 * beta(n - 1)));
        println!(
            "n = {n}: |a| {:.6} thread norm {:.6}  S_0 {:.6} expected {:.6}",
            a.sup_norm(&gp),
            th.sup_norm(&tower),
            thread_s0(&tower, &th, 1e-10)?,
            expected
        );
    }
    let mut broken = embed_psi(&tower, 0, &tower.random_element(0, 2, 9)?, depth)?;
    broken.entries[1].0 = tower.random_element(1, 2, 10)?;
    let r = check_thread_compat(&tower, &broken, 1e-10)?;
    println!("broken thread: compatible {} first violation {:?} residual {:.3}", r.compatible, r.first_violation, r.max_residual);
    Ok(())
}
