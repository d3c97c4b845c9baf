use serde::Serialize;

use super::bridge::Tunnel;
use crate::error::Result;
use crate::ou_core::{hausdorff_matrix, kantorovich, kantorovich_lp, KantorovichParams, StateFunctional};

/// Hausdorff distance between the two embedded state nets under the
/// tunnel's Monge-Kantorovich metric. Restricted to the nets, so an estimate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtentReport {
    pub estimate: f64,
    /// `distances[i][j] = K(φ_i ∘ π_left, ψ_j ∘ π_right)`.
    pub distances: Vec<Vec<f64>>,
    pub left_labels: Vec<String>,
    pub right_labels: Vec<String>,
    pub solver: String,
}

fn extent_with(
    tunnel: &Tunnel,
    net_a: &[StateFunctional],
    net_b: &[StateFunctional],
    solver: &str,
    k: impl Fn(&StateFunctional, &StateFunctional) -> Result<f64>,
) -> Result<ExtentReport> {
    let structure = tunnel.total.structure();
    let left = net_a.iter().map(|p| structure.embed_state(true, p)).collect::<Result<Vec<_>>>()?;
    let right = net_b.iter().map(|p| structure.embed_state(false, p)).collect::<Result<Vec<_>>>()?;
    let distances = left
        .iter()
        .map(|p| right.iter().map(|q| k(p, q)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(ExtentReport {
        estimate: hausdorff_matrix(&distances)?,
        distances,
        left_labels: net_a.iter().map(|p| p.label.clone()).collect(),
        right_labels: net_b.iter().map(|p| p.label.clone()).collect(),
        solver: solver.into(),
    })
}

/// Net-restricted extent with the iterative Kantorovich engine.
pub fn tunnel_extent_estimate(
    tunnel: &Tunnel,
    net_a: &[StateFunctional],
    net_b: &[StateFunctional],
    params: &KantorovichParams,
) -> Result<ExtentReport> {
    extent_with(tunnel, net_a, net_b, "subgradient", |p, q| Ok(kantorovich(&tunnel.total, p, q, params)?.value))
}

/// Net-restricted extent with exact linear programs; needs a polyhedral
/// tunnel Lip-norm.
pub fn tunnel_extent_lp(tunnel: &Tunnel, net_a: &[StateFunctional], net_b: &[StateFunctional]) -> Result<ExtentReport> {
    extent_with(tunnel, net_a, net_b, "lp", |p, q| Ok(kantorovich_lp(&tunnel.total, p, q)?.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ou_core::{finite_space, state_net, FiniteMetric, LinearMap, NetParams};
    use crate::tunnels::{block_average_toy, evident_tunnel, modified_lipnorm_cond_exp, Bridge};

    #[test]
    fn identical_spaces_extent_at_most_r() {
        let x = finite_space(FiniteMetric::from_line(&[0.0, 0.7, 1.0]).unwrap());
        let bridge = Bridge::evident(x.clone(), x.clone(), LinearMap::identity(3, 3)).unwrap();
        let net = state_net(&x, &NetParams::default());
        for r in [0.1, 0.4] {
            let t = evident_tunnel(&bridge, r).unwrap();
            let e = tunnel_extent_estimate(&t, &net, &net, &KantorovichParams::default()).unwrap();
            assert!(e.estimate <= r + 1e-6, "{} > {}", e.estimate, r);
            let exact = tunnel_extent_lp(&t, &net, &net).unwrap();
            assert!((exact.estimate - e.estimate).abs() < 1e-3 * exact.estimate.max(1.0));
        }
    }

    #[test]
    fn subspace_toy_extent_at_most_eps() {
        let (big, small, inc, avg) = block_average_toy(0.5).unwrap();
        for eps in [0.1, 0.5] {
            let big_eps = modified_lipnorm_cond_exp(&big, &avg, eps, 20, 0).unwrap().space;
            let bridge = Bridge::evident(small.clone(), big_eps.clone(), inc.clone()).unwrap();
            let t = evident_tunnel(&bridge, eps).unwrap();
            let net_a = state_net(&small, &NetParams::default());
            let net_b = state_net(&big_eps, &NetParams::default());
            let exact = tunnel_extent_lp(&t, &net_a, &net_b).unwrap();
            assert!(exact.estimate <= eps + 1e-9, "{}", exact.estimate);
            let est = tunnel_extent_estimate(&t, &net_a, &net_b, &KantorovichParams::default()).unwrap();
            assert!((exact.estimate - est.estimate).abs() <= 1e-3 * exact.estimate.max(1.0));
        }
    }

    #[test]
    fn same_net_on_one_factor_gives_zero() {
        let x = finite_space(FiniteMetric::from_line(&[0.0, 1.0]).unwrap());
        let bridge = Bridge::evident(x.clone(), x.clone(), LinearMap::identity(2, 2)).unwrap();
        let t = evident_tunnel(&bridge, 0.3).unwrap();
        let net = state_net(&x, &NetParams::default());
        let structure = t.total.structure();
        let embedded: Vec<_> = net.iter().map(|p| structure.embed_state(true, p).unwrap()).collect();
        let d: Vec<Vec<f64>> = embedded
            .iter()
            .map(|p| embedded.iter().map(|q| kantorovich_lp(&t.total, p, q).unwrap().0).collect())
            .collect();
        assert!(hausdorff_matrix(&d).unwrap() < 1e-12);
    }
}
