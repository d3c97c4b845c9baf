//! Distance between towers: Baire distance of the sequences against the
//! dist_q chain bound.
use bdqm::bunce_deddens::SupernaturalSequence;
use bdqm::tunnels::{baire_lipschitz_check, distq_chain_bound};

fn main() -> bdqm::Result<()> {
    let sigma = SupernaturalSequence::new(vec![2, 3, 2, 5])?;
    let chain = distq_chain_bound(&sigma, 1, sigma.len())?;
    for link in &chain.links {
        println!("{:>2} -> {:?}: {} ({})", link.from_stage, link.to_stage, link.constant, link.tag);
    }
    println!("tail {}  total {}", chain.tail.constant, chain.total);
    let pairs = [(vec![2, 2, 2], vec![2, 2, 3]), (vec![2, 3], vec![3, 2]), (vec![2, 3, 5, 2], vec![2, 3, 5, 3])];
    for (x, y) in pairs {
        let (x, y) = (SupernaturalSequence::new(x)?, SupernaturalSequence::new(y)?);
        let r = baire_lipschitz_check(&x, &y, x.len(), 3, 5)?;
        println!(
            "{} vs {}: d = {}  bound {}  ratio {:?}  shared-stage S discrepancy {:.1e}",
            r.x, r.y, r.distance.value, r.chain_bound, r.ratio, r.max_evaluator_discrepancy
        );
    }
    Ok(())
}
