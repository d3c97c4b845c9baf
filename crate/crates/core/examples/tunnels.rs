//! A subspace toy: a two-point space inside a four-point space, the
//! conditional-expectation Lip-norm, its evident tunnel and the extent.
use bdqm::ou_core::{state_net, LinearMap, KantorovichParams, NetParams};
use bdqm::tunnels::{block_average_toy, evident_tunnel, modified_lipnorm_cond_exp, tunnel_extent_estimate, tunnel_extent_lp, Bridge};

fn main() -> bdqm::Result<()> {
    let (big, small, inclusion, average) = block_average_toy(0.5)?;
    for eps in [0.1, 0.25, 0.5] {
        let modified = modified_lipnorm_cond_exp(&big, &average, eps, 50, 1)?;
        for c in &modified.checks {
            assert!(c.passed, "{} failed", c.name);
        }
        let tunnel = evident_tunnel(&Bridge::evident(small.clone(), modified.space.clone(), inclusion.clone())?, eps)?;
        // partners: inclusion upward, block average read on the small space downward
        let down = LinearMap::from_fn(2, 4, |r, c| if c / 2 == r { 0.5 } else { 0.0 });
        let q = tunnel.quotient_check(&inclusion, &down, 40, 2, 1e-8);
        let net = NetParams::default();
        let (na, nb) = (state_net(&small, &net), state_net(&modified.space, &net));
        let exact = tunnel_extent_lp(&tunnel, &na, &nb)?.estimate;
        let engine = tunnel_extent_estimate(&tunnel, &na, &nb, &KantorovichParams::default())?.estimate;
        println!("eps {eps}: quotient ok {}  extent lp {exact:.6}  engine {engine:.6}  dist_q <= {}", q.passed, tunnel.distq_upper_bound());
    }
    Ok(())
}
