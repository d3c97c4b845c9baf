use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::seminorm::{CompiledSeminorm, CompiledTerm, ComposedSeminorm, LinearMap, PolyhedralSeminorm, Seminorm};
use crate::bunce_deddens::{BdTower, StageElement};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::periodic_matfun::PeriodicMatrixFunction;

/// A positive unital functional, represented by its weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateFunctional {
    pub label: String,
    pub weights: Vec<f64>,
}

impl StateFunctional {
    pub fn new(label: impl Into<String>, weights: Vec<f64>) -> Self {
        Self { label: label.into(), weights }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        super::dot(&self.weights, x)
    }
}

/// Finite metric space given by its distance matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetric {
    d: Vec<Vec<f64>>,
}

impl FiniteMetric {
    pub fn new(d: Vec<Vec<f64>>) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(Error::InvalidParameter("metric space needs at least one point".into()));
        }
        for (i, row) in d.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { left: n, right: row.len() });
            }
            for (j, v) in row.iter().enumerate() {
                let ok = if i == j { *v == 0.0 } else { *v > 0.0 && v.is_finite() && (*v - d[j][i]).abs() <= 1e-12 };
                if !ok {
                    return Err(Error::InvalidParameter(format!("d[{}][{}] = {} is not a metric entry", i, j, v)));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if d[i][j] > d[i][k] + d[k][j] + 1e-12 {
                        return Err(Error::InvalidParameter(format!("triangle inequality fails at ({}, {}, {})", i, j, k)));
                    }
                }
            }
        }
        Ok(Self { d })
    }

    /// Points on the real line.
    pub fn from_line(points: &[f64]) -> Result<Self> {
        Self::new(points.iter().map(|x| points.iter().map(|y| (x - y).abs()).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().flatten().fold(0.0, |a, v| a.max(*v))
    }

    /// Rows `(e_i − e_j)/d(i,j)` of the Lipschitz seminorm.
    pub fn lipschitz_rows(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mut r = vec![0.0; n];
                r[i] = 1.0 / self.d[i][j];
                r[j] = -1.0 / self.d[i][j];
                rows.push(r);
            }
        }
        rows
    }
}

/// Real coordinates for the self-adjoint part of stage `m` truncated at
/// integer frequencies `|ν| ≤ cutoff`.
///
/// Layout: the `n` real diagonal entries of `C_0`, then `(Re, Im)` of each
/// `C_0[i][j]` with `i < j`, then `(Re, Im)` of every entry of `C_ν` for
/// `ν = 1..=cutoff`; `C_{−ν} = C_ν*`. Dimension `n²(2·cutoff + 1)`.
#[derive(Clone, Debug)]
pub struct StageChart {
    tower: Arc<BdTower>,
    m: usize,
    cutoff: usize,
    n: usize,
    basis: Vec<StageElement>,
}

impl StageChart {
    pub fn new(tower: Arc<BdTower>, m: usize, cutoff: usize) -> Result<Self> {
        let n = tower.boxtimes(m)?;
        let mut chart = Self { tower, m, cutoff, n, basis: Vec::new() };
        let dim = chart.dim();
        chart.basis = (0..dim)
            .map(|k| {
                let mut x = vec![0.0; dim];
                x[k] = 1.0;
                chart.to_element(&x)
            })
            .collect();
        Ok(chart)
    }

    pub fn tower(&self) -> &Arc<BdTower> {
        &self.tower
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.n * self.n * (2 * self.cutoff + 1)
    }

    pub fn basis(&self) -> &[StageElement] {
        &self.basis
    }

    pub fn to_element(&self, x: &[f64]) -> StageElement {
        assert_eq!(x.len(), self.dim(), "coordinate length");
        let n = self.n;
        let mut it = x.iter().copied();
        let mut next = || it.next().expect("length checked");
        let mut c0 = CMatrix::zeros(n, n);
        for i in 0..n {
            c0[(i, i)] = C64::new(next(), 0.0);
        }
        for i in 0..n {
            for j in i + 1..n {
                let z = C64::new(next(), next());
                c0[(i, j)] = z;
                c0[(j, i)] = z.conj();
            }
        }
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, c0);
        for nu in 1..=self.cutoff as i64 {
            let mut c = CMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    c[(i, j)] = C64::new(next(), next());
                }
            }
            coeffs.insert(-nu, c.adjoint());
            coeffs.insert(nu, c);
        }
        let f = PeriodicMatrixFunction::from_coeffs(n, 1, coeffs, 0.0).expect("shapes are consistent");
        StageElement { m: self.m, f: f.pruned(0.0) }
    }

    /// Coordinates of a self-adjoint element; rejects frequencies above the cutoff.
    pub fn from_element(&self, a: &StageElement) -> Result<Vec<f64>> {
        if a.m != self.m {
            return Err(Error::DimensionMismatch { left: self.m, right: a.m });
        }
        let tol = self.tower.gp().tol;
        let f = if a.f.q() == 1 { a.f.clone() } else { a.f.project_one_periodic(tol)? };
        if let Some(r) = f
            .coeffs()
            .iter()
            .filter(|(k, _)| k.unsigned_abs() as usize > self.cutoff)
            .map(|(_, c)| linalg::frobenius(c))
            .reduce(f64::max)
        {
            if r > tol {
                return Err(Error::InvalidParameter(format!(
                    "element has frequencies above cutoff {} (norm {:.3e})",
                    self.cutoff, r
                )));
            }
        }
        let n = self.n;
        let mut x = Vec::with_capacity(self.dim());
        let c0 = f.mean();
        for i in 0..n {
            x.push(c0[(i, i)].re);
        }
        for i in 0..n {
            for j in i + 1..n {
                x.push(c0[(i, j)].re);
                x.push(c0[(i, j)].im);
            }
        }
        for nu in 1..=self.cutoff as i64 {
            let c = f.coeff(nu).cloned().unwrap_or_else(|| CMatrix::zeros(n, n));
            for z in c.transpose().iter() {
                x.push(z.re);
                x.push(z.im);
            }
        }
        Ok(x)
    }

    /// `a ↦ Re Tr(ρ a(t))`.
    pub fn point_state(&self, label: impl Into<String>, t: f64, rho: &CMatrix) -> StateFunctional {
        let weights = self.basis.iter().map(|e| (rho * e.f.evaluate(t)).trace().re).collect();
        StateFunctional::new(label, weights)
    }

    /// The trace `τ`.
    pub fn tau(&self) -> StateFunctional {
        let weights = self.basis.iter().map(|e| self.tower.trace_tau(e).re).collect();
        StateFunctional::new("tau", weights)
    }
}

/// Coordinate structure of a desk space: unit, norm, states, sampling.
#[derive(Clone, Debug)]
pub enum Structure {
    Stage(StageChart),
    Finite(FiniteMetric),
    Sum(Arc<Structure>, Arc<Structure>),
}

pub fn sum_structure(a: Arc<Structure>, b: Arc<Structure>) -> Arc<Structure> {
    Arc::new(Structure::Sum(a, b))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetParams {
    pub grid_points: usize,
    pub random_states: usize,
    pub seed: u64,
}

impl Default for NetParams {
    fn default() -> Self {
        Self { grid_points: 4, random_states: 2, seed: 0 }
    }
}

impl Structure {
    pub fn dim(&self) -> usize {
        match self {
            Self::Stage(c) => c.dim(),
            Self::Finite(d) => d.len(),
            Self::Sum(a, b) => a.dim() + b.dim(),
        }
    }

    pub fn unit(&self) -> Vec<f64> {
        match self {
            Self::Stage(c) => {
                let mut x = vec![0.0; c.dim()];
                x[..c.n].iter_mut().for_each(|v| *v = 1.0);
                x
            }
            Self::Finite(d) => vec![1.0; d.len()],
            Self::Sum(a, b) => [a.unit(), b.unit()].concat(),
        }
    }

    /// Coordinate projection onto the left or right summand.
    pub fn projection(&self, left: bool) -> Result<LinearMap> {
        match self {
            Self::Sum(a, b) => {
                let (da, db) = (a.dim(), b.dim());
                let (rows, offset) = if left { (da, 0) } else { (db, da) };
                let mut m = LinearMap::zeros(rows, da + db);
                for i in 0..rows {
                    m[(i, offset + i)] = 1.0;
                }
                Ok(m)
            }
            _ => Err(Error::InvalidParameter("projection needs a direct sum".into())),
        }
    }

    /// The order-unit norm.
    pub fn norm(&self) -> Arc<dyn Seminorm> {
        match self {
            Self::Stage(c) => {
                let images = c.basis.iter().map(|e| e.f.clone()).collect();
                Arc::new(CompiledSeminorm::new(c.dim(), vec![CompiledTerm::new(1.0, images)], *c.tower.gp()))
            }
            Self::Finite(d) => {
                let n = d.len();
                let rows = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
                Arc::new(PolyhedralSeminorm::new(n, rows))
            }
            Self::Sum(a, b) => Arc::new(
                ComposedSeminorm::new(self.dim())
                    .with_part(1.0, a.norm(), Some(self.projection(true).expect("sum")))
                    .with_part(1.0, b.norm(), Some(self.projection(false).expect("sum"))),
            ),
        }
    }

    /// `φ ∘ π` for a state `φ` of one summand.
    pub fn embed_state(&self, left: bool, phi: &StateFunctional) -> Result<StateFunctional> {
        match self {
            Self::Sum(a, b) => {
                let w = if left {
                    [phi.weights.clone(), vec![0.0; b.dim()]].concat()
                } else {
                    [vec![0.0; a.dim()], phi.weights.clone()].concat()
                };
                let side = if left { "L" } else { "R" };
                Ok(StateFunctional::new(format!("{}:{}", side, phi.label), w))
            }
            _ => Err(Error::InvalidParameter("embedding needs a direct sum".into())),
        }
    }

    /// Trace for stages, uniform state for finite spaces, the left reference
    /// state for sums.
    pub fn reference_state(&self) -> StateFunctional {
        match self {
            Self::Stage(c) => c.tau(),
            Self::Finite(d) => StateFunctional::new("uniform", vec![1.0 / d.len() as f64; d.len()]),
            Self::Sum(a, _) => self.embed_state(true, &a.reference_state()).expect("sum"),
        }
    }

    pub fn state_net(&self, params: &NetParams) -> Vec<StateFunctional> {
        match self {
            Self::Stage(c) => {
                let n = c.n;
                let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(params.seed);
                let mut net = vec![c.tau()];
                for g in 0..params.grid_points {
                    let t = g as f64 / params.grid_points as f64;
                    for i in 0..n {
                        let mut rho = CMatrix::zeros(n, n);
                        rho[(i, i)] = linalg::ONE;
                        net.push(c.point_state(format!("t={}:e{}", t, i), t, &rho));
                    }
                    let mixed = linalg::identity(n) / C64::new(n as f64, 0.0);
                    net.push(c.point_state(format!("t={}:mixed", t), t, &mixed));
                    for r in 0..params.random_states {
                        let v = CVector::from_fn(n, |_, _| {
                            C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
                        });
                        let v = &v / C64::new(v.norm(), 0.0);
                        let rho = &v * v.adjoint();
                        net.push(c.point_state(format!("t={}:rand{}", t, r), t, &rho));
                    }
                }
                net
            }
            Self::Finite(d) => {
                let n = d.len();
                let mut net: Vec<StateFunctional> = (0..n)
                    .map(|i| {
                        let mut w = vec![0.0; n];
                        w[i] = 1.0;
                        StateFunctional::new(format!("delta{}", i), w)
                    })
                    .collect();
                net.push(self.reference_state());
                net
            }
            Self::Sum(a, b) => {
                let mut net: Vec<StateFunctional> =
                    a.state_net(params).iter().map(|p| self.embed_state(true, p).expect("sum")).collect();
                net.extend(b.state_net(params).iter().map(|p| self.embed_state(false, p).expect("sum")));
                net
            }
        }
    }

    /// Structured starting points for the Kantorovich engine.
    pub fn hints(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Stage(_) => Vec::new(),
            Self::Finite(d) => (0..d.len()).map(|i| (0..d.len()).map(|j| d.d(i, j)).collect()).collect(),
            Self::Sum(a, b) => {
                let (ha, hb) = (a.hints(), b.hints());
                let (za, zb) = (vec![0.0; a.dim()], vec![0.0; b.dim()]);
                let mut out: Vec<Vec<f64>> = ha.iter().map(|h| [h.clone(), zb.clone()].concat()).collect();
                out.extend(hb.iter().map(|h| [za.clone(), h.clone()].concat()));
                if a.dim() == b.dim() {
                    out.extend(ha.iter().map(|h| [h.clone(), h.clone()].concat()));
                }
                out
            }
        }
    }

    pub fn random_element(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim()).map(|_| rng.sample(StandardNormal)).collect()
    }
}

/// A finite-dimensional quantum metric order unit space.
#[derive(Clone)]
pub struct DeskQMSpace {
    pub label: String,
    structure: Arc<Structure>,
    lip: Arc<dyn Seminorm>,
    norm: Arc<dyn Seminorm>,
    radius: Option<f64>,
}

impl std::fmt::Debug for DeskQMSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeskQMSpace").field("label", &self.label).field("dim", &self.dim()).finish()
    }
}

impl DeskQMSpace {
    /// `radius`, when known, bounds `K(φ, reference)` for every state `φ`.
    pub fn new(label: impl Into<String>, structure: Arc<Structure>, lip: Arc<dyn Seminorm>, radius: Option<f64>) -> Result<Self> {
        if lip.dim() != structure.dim() {
            return Err(Error::DimensionMismatch { left: structure.dim(), right: lip.dim() });
        }
        let norm = structure.norm();
        Ok(Self { label: label.into(), structure, lip, norm, radius })
    }

    pub fn with_lip(&self, label: impl Into<String>, lip: Arc<dyn Seminorm>, radius: Option<f64>) -> Result<Self> {
        Self::new(label, self.structure.clone(), lip, radius)
    }

    pub fn structure(&self) -> &Arc<Structure> {
        &self.structure
    }

    pub fn lip(&self) -> &Arc<dyn Seminorm> {
        &self.lip
    }

    pub fn norm(&self) -> &Arc<dyn Seminorm> {
        &self.norm
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.structure.dim()
    }

    pub fn unit(&self) -> Vec<f64> {
        self.structure.unit()
    }

    pub fn reference_state(&self) -> StateFunctional {
        self.structure.reference_state()
    }

    pub fn stage_chart(&self) -> Option<&StageChart> {
        match self.structure.as_ref() {
            Structure::Stage(c) => Some(c),
            _ => None,
        }
    }
}

/// Which stage Lip-norm a stage space carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageLip {
    L,
    S,
}

/// Stage `m` of `tower`, truncated at `cutoff`, with `L_{σ,m}` or `S_{σ,m}`
/// compiled into exact-subgradient form.
pub fn stage_space(tower: Arc<BdTower>, m: usize, cutoff: usize, which: StageLip) -> Result<DeskQMSpace> {
    let chart = StageChart::new(tower.clone(), m, cutoff)?;
    let dim = chart.dim();
    let mut per_term: Vec<(f64, Vec<PeriodicMatrixFunction>)> = Vec::new();
    for e in chart.basis() {
        let terms = match which {
            StageLip::L => tower.l_terms(e)?,
            StageLip::S => tower.s_terms(e)?,
        };
        if per_term.is_empty() {
            per_term = terms.iter().map(|(w, _)| (*w, Vec::with_capacity(dim))).collect();
        }
        for (slot, (_, f)) in per_term.iter_mut().zip(terms) {
            slot.1.push(f);
        }
    }
    let terms = per_term.into_iter().map(|(w, imgs)| CompiledTerm::new(w, imgs)).collect();
    let lip = Arc::new(CompiledSeminorm::new(dim, terms, *tower.gp()));
    // L ≥ ‖a − τ(a)‖ and S ≥ κ_m L
    let radius = match which {
        StageLip::L => 1.0,
        StageLip::S => 1.0 / tower.stage_constants(m)?.kappa,
    };
    let label = format!("stage{}{}:{:?}", tower.sigma(), m, which);
    DeskQMSpace::new(label, Arc::new(Structure::Stage(chart)), lip, Some(radius))
}

/// `C(X)` with the Lipschitz seminorm of the metric.
pub fn finite_space(metric: FiniteMetric) -> DeskQMSpace {
    let n = metric.len();
    let lip = Arc::new(PolyhedralSeminorm::new(n, metric.lipschitz_rows()));
    let radius = metric.diameter();
    DeskQMSpace::new(format!("finite{}", n), Arc::new(Structure::Finite(metric)), lip, Some(radius))
        .expect("dimensions agree")
}

pub fn state_net(space: &DeskQMSpace, params: &NetParams) -> Vec<StateFunctional> {
    space.structure.state_net(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bunce_deddens::SupernaturalSequence;

    fn tower(entries: &[usize]) -> Arc<BdTower> {
        Arc::new(BdTower::with_defaults(SupernaturalSequence::new(entries.to_vec()).unwrap()).unwrap())
    }

    #[test]
    fn chart_round_trip() {
        let t = tower(&[2, 3]);
        let chart = StageChart::new(t.clone(), 1, 2).unwrap();
        assert_eq!(chart.dim(), 4 * 5);
        let a = t.random_element(1, 2, 11).unwrap();
        let x = chart.from_element(&a).unwrap();
        assert_eq!(chart.to_element(&x).f.coeff_distance(&a.f).unwrap(), 0.0);
        assert!(chart.from_element(&t.random_element(1, 3, 1).unwrap()).is_err());
        let u = Structure::Stage(chart.clone()).unit();
        assert_eq!(chart.to_element(&u).f, t.unit(1).unwrap().f);
    }

    #[test]
    fn compiled_stage_norms_match_tower() {
        let t = tower(&[2, 2]);
        for (m, which) in [(1, StageLip::L), (2, StageLip::S), (1, StageLip::S)] {
            let space = stage_space(t.clone(), m, 1, which).unwrap();
            let chart = space.stage_chart().unwrap();
            let a = t.random_element(m, 1, 5).unwrap();
            let x = chart.from_element(&a).unwrap();
            let want = match which {
                StageLip::L => t.lip_l(&a).unwrap(),
                StageLip::S => t.lip_s(&a).unwrap(),
            };
            assert!((space.lip().eval(&x) - want).abs() < 1e-9 * (1.0 + want));
            assert!((space.norm().eval(&x) - a.sup_norm(t.gp())).abs() < 1e-9);
            assert!(space.lip().eval(&space.unit()) < 1e-12);
        }
    }

    #[test]
    fn states_act_as_expected() {
        let t = tower(&[2]);
        let space = stage_space(t.clone(), 1, 1, StageLip::L).unwrap();
        let chart = space.stage_chart().unwrap();
        let a = t.random_element(1, 1, 3).unwrap();
        let x = chart.from_element(&a).unwrap();
        assert!((chart.tau().eval(&x) - t.trace_tau(&a).re).abs() < 1e-12);
        let rho = linalg::identity(2) * C64::new(0.5, 0.0);
        let phi = chart.point_state("p", 0.3, &rho);
        assert!((phi.eval(&x) - (rho * a.f.evaluate(0.3)).trace().re).abs() < 1e-12);
        let net = state_net(&space, &NetParams::default());
        assert!(net.iter().any(|s| s.label == "tau"));
        assert_eq!(net.len(), 1 + 4 * (2 + 1 + 2));
    }

    #[test]
    fn finite_net_and_metric_validation() {
        let m = FiniteMetric::from_line(&[0.0, 1.0]).unwrap();
        let net = state_net(&finite_space(m), &NetParams::default());
        let labels: Vec<_> = net.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["delta0", "delta1", "uniform"]);
        assert!(FiniteMetric::new(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
        assert!(FiniteMetric::new(vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]]).is_err());
    }
}
