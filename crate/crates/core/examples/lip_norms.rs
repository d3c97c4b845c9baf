//! L and S on stage elements: the bi-Lipschitz sandwich for alpha and the
//! displacement estimate for S.
use bdqm::bunce_deddens::{BdTower, SupernaturalSequence};

fn main() -> bdqm::Result<()> {
    let tower = BdTower::with_defaults(SupernaturalSequence::new(vec![2, 2, 2])?)?;
    let gp = *tower.gp();
    for m in 1..=tower.max_stage() {
        let k = tower.stage_constants(m)?;
        let (c, d) = (k.c(tower.sigma().get(m)?), k.d());
        println!("stage {m}: sandwich constants c = {c:.6}, d = {d:.6}");
        for seed in 0..4 {
            let a = tower.random_element(m - 1, 2, seed)?;
            let up = tower.alpha(&a)?;
            let (l, lu) = (tower.lip_l(&a)?, tower.lip_l(&up)?);
            let (s, su) = (tower.lip_s(&a)?, tower.lip_s(&up)?);
            let b = tower.random_element(m, 2, seed)?;
            let disp = b.sup_distance(&tower.cond_expectation(&b)?, &gp)? / tower.lip_s(&b)?;
            println!(
                "  L {l:.4} -> {lu:.4} in [{:.4}, {:.4}]  S {s:.6} -> {su:.6}  |b - E b|/S(b) {disp:.4} <= {}",
                c * l,
                d * l,
                2f64.powi(-(m as i32))
            );
        }
    }
    Ok(())
}
