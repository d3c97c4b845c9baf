//! Connecting maps of a tower: alpha, the conditional expectation and its
//! left inverse, checked on a few random elements.
use bdqm::bunce_deddens::{BdTower, SupernaturalSequence};

fn main() -> bdqm::Result<()> {
    let tower = BdTower::with_defaults(SupernaturalSequence::new(vec![2, 3, 2])?)?;
    let gp = *tower.gp();
    for m in 0..tower.max_stage() {
        println!("stage {} -> {} (order {} -> {})", m, m + 1, tower.boxtimes(m)?, tower.boxtimes(m + 1)?);
        for seed in 0..3 {
            let a = tower.random_element(m, 2, seed)?;
            let b = tower.random_element(m, 2, seed + 100)?;
            let hom = tower.alpha(&a.mul(&b)?)?.sup_distance(&tower.alpha(&a)?.mul(&tower.alpha(&b)?)?, &gp)?;
            let up = tower.alpha(&a)?;
            let fixed = tower.cond_expectation(&up)?.sup_distance(&up, &gp)?;
            let back = tower.alpha_inverse(&up)?.sup_distance(&a, &gp)?;
            println!("  seed {seed}: hom {hom:.1e}  E(alpha a) - alpha a {fixed:.1e}  alpha^-1 alpha a - a {back:.1e}");
        }
    }
    Ok(())
}
