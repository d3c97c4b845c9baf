use super::space::FiniteMetric;
use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-9;
const MAX_POINTS: usize = 64;

fn check_probability(p: &[f64], n: usize, name: &str) -> Result<()> {
    if p.len() != n {
        return Err(Error::DimensionMismatch { left: n, right: p.len() });
    }
    if p.iter().any(|v| !v.is_finite() || *v < -MASS_TOL) {
        return Err(Error::NotProbability(format!("{} has a negative or non-finite entry", name)));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > MASS_TOL {
        return Err(Error::NotProbability(format!("{} sums to {}", name, s)));
    }
    Ok(())
}

/// Exact Wasserstein-1 distance on a finite metric space by successive
/// shortest paths on the transport network (surplus points to deficit
/// points, Bellman-Ford on the residual graph).
pub fn kantorovich_exact_finite(x: &FiniteMetric, mu: &[f64], nu: &[f64]) -> Result<f64> {
    let n = x.len();
    if n > MAX_POINTS {
        return Err(Error::InvalidParameter(format!("exact transport is limited to {} points", MAX_POINTS)));
    }
    check_probability(mu, n, "mu")?;
    check_probability(nu, n, "nu")?;
    let mut supply: Vec<f64> = (0..n).map(|i| (mu[i] - nu[i]).max(0.0)).collect();
    let mut demand: Vec<f64> = (0..n).map(|i| (nu[i] - mu[i]).max(0.0)).collect();
    // flow[i][j]: mass sent from surplus point i to deficit point j
    let mut flow = vec![vec![0.0; n]; n];
    let eps = 1e-15;
    loop {
        if !supply.iter().any(|s| *s > eps) || !demand.iter().any(|d| *d > eps) {
            break;
        }
        // distances over the residual graph; sources are points with supply left
        let mut dist = vec![f64::INFINITY; n];
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; n];
        for i in 0..n {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if !dist[u].is_finite() {
                    continue;
                }
                for v in 0..n {
                    if u == v {
                        continue;
                    }
                    // forward arc u -> v has unbounded capacity; backward arc
                    // cancels existing flow v -> u
                    let forward = dist[u] + x.d(u, v);
                    if forward < dist[v] - 1e-15 {
                        dist[v] = forward;
                        pred[v] = Some((u, false));
                        changed = true;
                    }
                    if flow[v][u] > eps {
                        let back = dist[u] - x.d(v, u);
                        if back < dist[v] - 1e-15 {
                            dist[v] = back;
                            pred[v] = Some((u, true));
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let sink = (0..n)
            .filter(|&j| demand[j] > eps && dist[j].is_finite())
            .min_by(|a, b| dist[*a].total_cmp(&dist[*b]))
            .ok_or_else(|| Error::InvalidParameter("transport network disconnected".into()))?;
        // walk back, collecting arcs and the bottleneck
        let mut path = Vec::new();
        let mut v = sink;
        while let Some((u, back)) = pred[v] {
            path.push((u, v, back));
            v = u;
            if path.len() > n {
                return Err(Error::InvalidParameter("residual graph has a negative cycle".into()));
            }
        }
        let source = v;
        let mut amount = supply[source].min(demand[sink]);
        for &(u, v, back) in &path {
            if back {
                amount = amount.min(flow[v][u]);
            }
        }
        for &(u, v, back) in &path {
            if back {
                flow[v][u] -= amount;
            } else {
                flow[u][v] += amount;
            }
        }
        supply[source] -= amount;
        demand[sink] -= amount;
    }
    let mut cost = 0.0;
    for i in 0..n {
        for j in 0..n {
            cost += flow[i][j] * x.d(i, j);
        }
    }
    Ok(cost)
}
