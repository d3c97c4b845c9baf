use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, CMatrix, C64};
use crate::periodic_matfun::{GridParams, PeriodicMatrixFunction};

/// Real-linear map between coordinate spaces; columns index the input.
pub type LinearMap = DMatrix<f64>;

/// A seminorm on `R^dim` with a subgradient oracle.
pub trait Seminorm: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Central differences; implementors with an exact oracle override this.
    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        let scale = x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let h = 1e-6 * scale;
        let mut y = x.to_vec();
        (0..x.len())
            .map(|k| {
                y[k] = x[k] + h;
                let up = self.eval(&y);
                y[k] = x[k] - h;
                let down = self.eval(&y);
                y[k] = x[k];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn eval_with_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.eval(x), self.subgradient(x))
    }

    /// Rows `r_i` with `L(x) = max_i |r_i · x|`, when `L` is polyhedral.
    fn polyhedral_rows(&self) -> Option<Vec<Vec<f64>>> {
        None
    }
}

/// `max_i |r_i · x|`.
#[derive(Clone, Debug)]
pub struct PolyhedralSeminorm {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl PolyhedralSeminorm {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == dim), "row length must equal dim");
        Self { dim, rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn argmax(&self, x: &[f64]) -> Option<(usize, f64)> {
        self.rows
            .iter()
            .map(|r| super::dot(r, x))
            .enumerate()
            .fold(None, |best, (i, v)| match best {
                Some((_, b)) if f64::abs(b) >= v.abs() => best,
                _ => Some((i, v)),
            })
    }
}

impl Seminorm for PolyhedralSeminorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.argmax(x).map_or(0.0, |(_, v)| v.abs())
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.eval_with_subgradient(x).1
    }

    fn eval_with_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match self.argmax(x) {
            Some((i, v)) => {
                let sign = if v < 0.0 { -1.0 } else { 1.0 };
                (v.abs(), self.rows[i].iter().map(|r| sign * r).collect())
            }
            None => (0.0, vec![0.0; self.dim]),
        }
    }

    fn polyhedral_rows(&self) -> Option<Vec<Vec<f64>>> {
        Some(self.rows.clone())
    }
}

/// One term `w · sup_t ‖Σ_k x_k T_k(t)‖` of a compiled seminorm; `images[k]`
/// is the image of the `k`-th coordinate vector.
#[derive(Clone, Debug)]
pub struct CompiledTerm {
    pub weight: f64,
    n: usize,
    q: u64,
    images: Vec<BTreeMap<i64, CMatrix>>,
}

impl CompiledTerm {
    pub fn new(weight: f64, images: Vec<PeriodicMatrixFunction>) -> Self {
        let n = images.first().map_or(1, |f| f.n());
        let q = images.iter().fold(1, |q, f| linalg::lcm(q, f.q()));
        let images = images
            .iter()
            .map(|f| f.with_denominator(q).expect("lcm is a multiple").coeffs().clone())
            .collect();
        Self { weight, n, q, images }
    }

    fn combine(&self, x: &[f64]) -> PeriodicMatrixFunction {
        let mut acc: BTreeMap<i64, CMatrix> = BTreeMap::new();
        for (xk, img) in x.iter().zip(&self.images) {
            if *xk == 0.0 {
                continue;
            }
            for (nu, c) in img {
                let term = c * C64::new(*xk, 0.0);
                match acc.get_mut(nu) {
                    Some(a) => *a += term,
                    None => {
                        acc.insert(*nu, term);
                    }
                }
            }
        }
        PeriodicMatrixFunction::from_coeffs(self.n, self.q, acc, 1e-14).expect("consistent shapes")
    }

    fn image_at(&self, k: usize, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        let q = self.q as f64;
        for (nu, c) in &self.images[k] {
            out += c * linalg::phase((*nu as f64 * t).rem_euclid(q) / q);
        }
        out
    }
}

/// `max_i w_i sup_t ‖T_i(x)(t)‖` for linear `T_i` into matrix functions, with
/// exact subgradients from the sup witness.
#[derive(Clone, Debug)]
pub struct CompiledSeminorm {
    dim: usize,
    terms: Vec<CompiledTerm>,
    gp: GridParams,
}

impl CompiledSeminorm {
    pub fn new(dim: usize, terms: Vec<CompiledTerm>, gp: GridParams) -> Self {
        assert!(terms.iter().all(|t| t.images.len() == dim), "each term needs one image per coordinate");
        Self { dim, terms, gp }
    }

    pub fn terms(&self) -> &[CompiledTerm] {
        &self.terms
    }
}

impl Seminorm for CompiledSeminorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * t.combine(x).sup_norm(&self.gp))
            .fold(0.0, f64::max)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.eval_with_subgradient(x).1
    }

    fn eval_with_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut best: Option<(f64, usize, f64, linalg::CVector, linalg::CVector)> = None;
        for (i, term) in self.terms.iter().enumerate() {
            let w = term.combine(x).sup_norm_witness(&self.gp);
            let v = term.weight * w.value;
            if best.as_ref().is_none_or(|b| v > b.0) {
                best = Some((v, i, w.t, w.u, w.v));
            }
        }
        match best {
            Some((v, i, t, u, w)) if v > 0.0 => {
                let term = &self.terms[i];
                let g = (0..self.dim).map(|k| term.weight * linalg::bilinear(&u, &term.image_at(k, t), &w)).collect();
                (v, g)
            }
            _ => (0.0, vec![0.0; self.dim]),
        }
    }
}

/// `max_i w_i L_i(M_i x)`.
#[derive(Clone)]
pub struct ComposedSeminorm {
    dim: usize,
    parts: Vec<(f64, Arc<dyn Seminorm>, Option<LinearMap>)>,
}

impl ComposedSeminorm {
    pub fn new(dim: usize) -> Self {
        Self { dim, parts: Vec::new() }
    }

    /// Adds `w · inner(M x)`; `None` stands for the identity.
    pub fn with_part(mut self, weight: f64, inner: Arc<dyn Seminorm>, map: Option<LinearMap>) -> Self {
        let cols = map.as_ref().map_or(inner.dim(), |m| m.ncols());
        let rows = map.as_ref().map_or(inner.dim(), |m| m.nrows());
        assert_eq!(cols, self.dim, "map input must match the outer dimension");
        assert_eq!(rows, inner.dim(), "map output must match the inner seminorm");
        self.parts.push((weight, inner, map));
        self
    }

    fn apply(map: &Option<LinearMap>, x: &[f64]) -> Vec<f64> {
        match map {
            Some(m) => (m * DVector::from_column_slice(x)).as_slice().to_vec(),
            None => x.to_vec(),
        }
    }
}

impl Seminorm for ComposedSeminorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.parts
            .iter()
            .map(|(w, inner, map)| w * inner.eval(&Self::apply(map, x)))
            .fold(0.0, f64::max)
    }

    fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.eval_with_subgradient(x).1
    }

    fn eval_with_subgradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut best = (0.0, vec![0.0; self.dim]);
        for (w, inner, map) in &self.parts {
            let y = Self::apply(map, x);
            let v = w * inner.eval(&y);
            if v > best.0 {
                let g = inner.subgradient(&y);
                let g = match map {
                    Some(m) => (m.transpose() * DVector::from_vec(g)).as_slice().to_vec(),
                    None => g,
                };
                best = (v, g.into_iter().map(|gi| w * gi).collect());
            }
        }
        best
    }

    fn polyhedral_rows(&self) -> Option<Vec<Vec<f64>>> {
        let mut rows = Vec::new();
        for (w, inner, map) in &self.parts {
            for r in inner.polyhedral_rows()? {
                let pulled = match map {
                    Some(m) => (m.transpose() * DVector::from_vec(r)).as_slice().to_vec(),
                    None => r,
                };
                rows.push(pulled.into_iter().map(|v| w * v).collect());
            }
        }
        Some(rows)
    }
}

/// A seminorm given by a closure, differentiated numerically.
pub struct FnSeminorm<F: Fn(&[f64]) -> f64 + Send + Sync> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> FnSeminorm<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Seminorm for FnSeminorm<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyhedral_subgradient_is_exact() {
        let p = PolyhedralSeminorm::new(2, vec![vec![1.0, -1.0], vec![0.0, 2.0]]);
        let (v, g) = p.eval_with_subgradient(&[1.0, -3.0]);
        assert_eq!(v, 6.0);
        assert_eq!(g, vec![0.0, -2.0]);
        let fd = Seminorm::subgradient(&FnSeminorm::new(2, |x: &[f64]| p.eval(x)), &[1.0, -3.0]);
        assert!((fd[1] + 2.0).abs() < 1e-6);
    }

    #[test]
    fn compiled_matches_direct_sum_and_gradient() {
        let e = |nu: i64, z: f64| PeriodicMatrixFunction::monomial(1, nu, CMatrix::from_element(1, 1, C64::new(z, 0.0)));
        let images = vec![e(0, 1.0), e(1, 1.0).add(&e(-1, 1.0)).unwrap()];
        let s = CompiledSeminorm::new(2, vec![CompiledTerm::new(1.0, images)], GridParams::default());
        // x0 + 2 x1 cos(2πt): sup = |x0| + 2|x1|
        let x = [0.5, -0.75];
        let (v, g) = s.eval_with_subgradient(&x);
        assert!((v - 2.0).abs() < 1e-12);
        let fd = FnSeminorm::new(2, |y: &[f64]| s.eval(y)).subgradient(&x);
        for (a, b) in g.iter().zip(&fd) {
            assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn composed_pulls_back_subgradients() {
        let inner: Arc<dyn Seminorm> = Arc::new(PolyhedralSeminorm::new(1, vec![vec![1.0]]));
        let m = LinearMap::from_row_slice(1, 2, &[1.0, 1.0]);
        let c = ComposedSeminorm::new(2).with_part(3.0, inner, Some(m));
        let (v, g) = c.eval_with_subgradient(&[1.0, -2.0]);
        assert_eq!(v, 3.0);
        assert_eq!(g, vec![-3.0, -3.0]);
    }
}
