//! Matrix-valued trigonometric polynomials with rational frequencies.
//!
//! `f(t) = Σ_ν C_ν exp(2πi ν t / Q)`, with integer numerators `ν` over a
//! shared denominator `Q`. Products, adjoints and the rescalings used by the
//! connecting maps are exact in frequency; only the coefficients are floats.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::bunce_deddens::SupernaturalSequence;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridParams {
    pub oversample: usize,
    pub prune_floor: f64,
    pub tol: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { oversample: 8, prune_floor: 1e-14, tol: 1e-9 }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if self.oversample < 2 {
            return Err(Error::InvalidParameter(format!("oversample must be >= 2, got {}", self.oversample)));
        }
        if !(self.prune_floor >= 0.0 && self.tol >= 0.0) {
            return Err(Error::InvalidParameter("prune_floor and tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Grid size for a function whose largest numerator is `nu_max`.
    pub fn grid_size(&self, nu_max: u64) -> usize {
        linalg::next_pow2(self.oversample * (2 * nu_max as usize + 1))
    }
}

/// Where the sup norm is attained: `value = Re(u* f(t) v)`, `u`, `v` unit.
#[derive(Clone, Debug)]
pub struct SupWitness {
    pub value: f64,
    pub t: f64,
    pub u: CVector,
    pub v: CVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicMatrixFunction {
    n: usize,
    q: u64,
    coeffs: BTreeMap<i64, CMatrix>,
}

const DEFAULT_FLOOR: f64 = 1e-14;

impl PeriodicMatrixFunction {
    /// Builds from a coefficient map, dropping coefficients at or below `floor`.
    pub fn from_coeffs(n: usize, q: u64, coeffs: BTreeMap<i64, CMatrix>, floor: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("matrix order must be positive".into()));
        }
        if q == 0 {
            return Err(Error::InvalidParameter("frequency denominator must be positive".into()));
        }
        for c in coeffs.values() {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch { left: n, right: c.nrows().max(c.ncols()) });
            }
        }
        let mut f = Self { n, q, coeffs };
        f.prune(floor);
        Ok(f)
    }

    pub fn constant(c: CMatrix) -> Self {
        assert!(c.is_square(), "constant function needs a square matrix");
        let n = c.nrows();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(0, c);
        let mut f = Self { n, q: 1, coeffs };
        f.prune(DEFAULT_FLOOR);
        f
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(linalg::identity(n))
    }

    pub fn zero(n: usize) -> Self {
        Self { n, q: 1, coeffs: BTreeMap::new() }
    }

    pub fn scalar(n: usize, c: C64) -> Self {
        Self::constant(linalg::identity(n) * c)
    }

    /// `C · exp(2πi ν t / Q)`.
    pub fn monomial(q: u64, nu: i64, c: CMatrix) -> Self {
        let n = c.nrows();
        let mut coeffs = BTreeMap::new();
        coeffs.insert(nu, c);
        let mut f = Self { n, q: q.max(1), coeffs };
        f.prune(DEFAULT_FLOOR);
        f
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, CMatrix> {
        &self.coeffs
    }

    pub fn coeff(&self, nu: i64) -> Option<&CMatrix> {
        self.coeffs.get(&nu)
    }

    pub fn nu_max(&self) -> u64 {
        self.coeffs.keys().map(|k| k.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn prune(&mut self, floor: f64) {
        self.coeffs.retain(|_, c| linalg::frobenius(c) > floor);
    }

    pub fn pruned(mut self, floor: f64) -> Self {
        self.prune(floor);
        self
    }

    /// Same function over denominator `q2`, which must be a multiple of `Q`.
    pub fn with_denominator(&self, q2: u64) -> Result<Self> {
        if q2 == 0 || !q2.is_multiple_of(self.q) {
            return Err(Error::InvalidParameter(format!("{} is not a multiple of {}", q2, self.q)));
        }
        let r = (q2 / self.q) as i64;
        Ok(Self {
            n: self.n,
            q: q2,
            coeffs: self.coeffs.iter().map(|(k, c)| (k * r, c.clone())).collect(),
        })
    }

    /// Smallest denominator representing the same function.
    pub fn reduced(&self) -> Self {
        let g = self.coeffs.keys().fold(self.q, |g, k| linalg::gcd(g, k.unsigned_abs()));
        if g <= 1 {
            return self.clone();
        }
        Self {
            n: self.n,
            q: self.q / g,
            coeffs: self.coeffs.iter().map(|(k, c)| (k / g as i64, c.clone())).collect(),
        }
    }

    fn common(&self, other: &Self) -> Result<(Self, Self)> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch { left: self.n, right: other.n });
        }
        let q = linalg::lcm(self.q, other.q);
        Ok((self.with_denominator(q)?, other.with_denominator(q)?))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -ONE)
    }

    /// `self + w · other`.
    pub fn combine(&self, other: &Self, w: C64) -> Result<Self> {
        let (mut a, b) = self.common(other)?;
        for (k, c) in b.coeffs {
            let scaled = c * w;
            a.coeffs
                .entry(k)
                .and_modify(|x| *x += &scaled)
                .or_insert(scaled);
        }
        a.prune(DEFAULT_FLOOR);
        Ok(a)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.common(other)?;
        let mut out: BTreeMap<i64, CMatrix> = BTreeMap::new();
        for (ka, ca) in &a.coeffs {
            for (kb, cb) in &b.coeffs {
                let p = ca * cb;
                match out.get_mut(&(ka + kb)) {
                    Some(x) => *x += p,
                    None => {
                        out.insert(ka + kb, p);
                    }
                }
            }
        }
        let mut f = Self { n: a.n, q: a.q, coeffs: out };
        f.prune(DEFAULT_FLOOR);
        Ok(f)
    }

    /// Product of a chain, left to right.
    pub fn product(factors: &[&Self]) -> Result<Self> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty product".into()))?;
        rest.iter().try_fold((*first).clone(), |acc, f| acc.mul(f))
    }

    pub fn scale(&self, w: C64) -> Self {
        let mut f = self.map_coeffs(|_, c| c * w);
        f.prune(DEFAULT_FLOOR);
        f
    }

    pub fn scale_real(&self, w: f64) -> Self {
        self.scale(C64::new(w, 0.0))
    }

    /// `t ↦ f(t)*`: `C_ν ↦ (C_{−ν})*`.
    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            q: self.q,
            coeffs: self.coeffs.iter().map(|(k, c)| (-k, c.adjoint())).collect(),
        }
    }

    /// Exact derivative, `C_ν ↦ 2πi(ν/Q) C_ν`.
    pub fn derivative(&self) -> Self {
        let q = self.q as f64;
        let mut f = self.map_coeffs(|k, c| c * C64::new(0.0, 2.0 * PI * k as f64 / q));
        f.prune(DEFAULT_FLOOR);
        f
    }

    pub fn map_coeffs(&self, mut g: impl FnMut(i64, &CMatrix) -> CMatrix) -> Self {
        Self {
            n: self.n,
            q: self.q,
            coeffs: self.coeffs.iter().map(|(k, c)| (*k, g(*k, c))).collect(),
        }
    }

    /// Applies a linear map to every coefficient; the output order may change.
    pub fn map_linear(&self, g: impl Fn(&CMatrix) -> CMatrix) -> Self {
        let coeffs: BTreeMap<i64, CMatrix> = self.coeffs.iter().map(|(k, c)| (*k, g(c))).collect();
        let n = coeffs.values().next().map_or_else(|| g(&CMatrix::zeros(self.n, self.n)).nrows(), |c| c.nrows());
        let mut f = Self { n, q: self.q, coeffs };
        f.prune(DEFAULT_FLOOR);
        f
    }

    /// `f ⊗ I_k`.
    pub fn kron_identity(&self, k: usize) -> Self {
        Self {
            n: self.n * k,
            q: self.q,
            coeffs: self.coeffs.iter().map(|(nu, c)| (*nu, linalg::kron_identity(c, k))).collect(),
        }
    }

    pub fn evaluate(&self, t: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.n, self.n);
        let q = self.q as f64;
        for (k, c) in &self.coeffs {
            // reduce the phase argument exactly before going to floating point
            let r = (*k as f64 * t).rem_euclid(q);
            out += c * linalg::phase(r / q);
        }
        out
    }

    /// Coefficient at frequency zero: the mean over one period.
    pub fn mean(&self) -> CMatrix {
        self.coeffs.get(&0).cloned().unwrap_or_else(|| CMatrix::zeros(self.n, self.n))
    }

    /// Largest coefficient norm sitting at a non-integer frequency.
    pub fn off_lattice_residual(&self) -> f64 {
        let q = self.q as i64;
        self.coeffs
            .iter()
            .filter(|(k, _)| *k % q != 0)
            .map(|(_, c)| linalg::frobenius(c))
            .fold(0.0, f64::max)
    }

    pub fn is_one_periodic(&self, gp: &GridParams) -> bool {
        self.off_lattice_residual() < gp.tol
    }

    /// Drops non-integer frequencies (checked against `tol`) and rewrites
    /// over denominator 1.
    pub fn project_one_periodic(&self, tol: f64) -> Result<Self> {
        let residual = self.off_lattice_residual();
        if residual >= tol {
            return Err(Error::NotOnePeriodic { residual });
        }
        let q = self.q as i64;
        Ok(Self {
            n: self.n,
            q: 1,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(k, _)| *k % q == 0)
                .map(|(k, c)| (k / q, c.clone()))
                .collect(),
        })
    }

    /// Largest entry of `C_{−ν} − C_ν*` over all `ν`.
    pub fn self_adjoint_residual(&self) -> f64 {
        let zero = CMatrix::zeros(self.n, self.n);
        let mut r: f64 = 0.0;
        for (k, c) in &self.coeffs {
            let partner = self.coeffs.get(&-k).unwrap_or(&zero);
            r = r.max(linalg::max_abs_diff(partner, &c.adjoint()));
        }
        r
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.self_adjoint_residual() < tol
    }

    /// Hermitian part `(f + f*)/2`.
    pub fn hermitian_part(&self) -> Self {
        self.add(&self.adjoint()).expect("same shape").scale_real(0.5)
    }

    /// `t ↦ f((t + j)/s)`.
    pub fn rescale_compose(&self, s: u64, j: u64) -> Self {
        let qs = self.q * s;
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, c)| {
                let r = (*k as i128 * j as i128).rem_euclid(qs as i128) as f64;
                (*k, c * linalg::phase(r / qs as f64))
            })
            .collect();
        Self { n: self.n, q: qs, coeffs }
    }

    /// Samples on the uniform grid of `N` points over one period `[0, Q)`.
    /// Returns the sample points and values.
    pub fn grid_samples(&self, gp: &GridParams) -> (Vec<f64>, Vec<CMatrix>) {
        let size = gp.grid_size(self.nu_max());
        let ts: Vec<f64> = (0..size).map(|k| self.q as f64 * k as f64 / size as f64).collect();
        (ts, self.samples_at_size(size))
    }

    fn samples_at_size(&self, size: usize) -> Vec<CMatrix> {
        let mut out = vec![CMatrix::zeros(self.n, self.n); size];
        if self.coeffs.is_empty() {
            return out;
        }
        if self.coeffs.len() == 1 && self.coeffs.contains_key(&0) {
            return vec![self.coeffs[&0].clone(); size];
        }
        let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_inverse(size);
        let mut buf = vec![ZERO; size];
        for i in 0..self.n {
            for j in 0..self.n {
                buf.iter_mut().for_each(|z| *z = ZERO);
                let mut any = false;
                for (k, c) in &self.coeffs {
                    let z = c[(i, j)];
                    if z != ZERO {
                        buf[k.rem_euclid(size as i64) as usize] += z;
                        any = true;
                    }
                }
                if !any {
                    continue;
                }
                fft.process(&mut buf);
                for (m, z) in buf.iter().enumerate() {
                    out[m][(i, j)] = *z;
                }
            }
        }
        out
    }

    /// Operator-norm sup over the line. Grid maximum followed by a
    /// golden-section refinement around the largest grid peaks; always a
    /// lower estimate of the true sup.
    pub fn sup_norm(&self, gp: &GridParams) -> f64 {
        self.sup_search(gp).0
    }

    pub fn sup_norm_witness(&self, gp: &GridParams) -> SupWitness {
        let (_, t) = self.sup_search(gp);
        let herm = self.is_self_adjoint(1e-12);
        let (value, u, v) = linalg::op_norm_witness(&self.evaluate(t), herm);
        SupWitness { value, t, u, v }
    }

    fn sup_search(&self, gp: &GridParams) -> (f64, f64) {
        if self.coeffs.is_empty() {
            return (0.0, 0.0);
        }
        let herm = self.is_self_adjoint(1e-12);
        if self.coeffs.len() == 1 && self.coeffs.contains_key(&0) {
            return (linalg::op_norm(&self.coeffs[&0], herm), 0.0);
        }
        let (ts, vals) = self.grid_samples(gp);
        let norms: Vec<f64> = vals.iter().map(|m| linalg::op_norm(m, herm)).collect();
        let size = norms.len();
        let (mut best, mut best_t) = (norms[0], ts[0]);
        for (k, v) in norms.iter().enumerate() {
            if *v > best {
                best = *v;
                best_t = ts[k];
            }
        }
        // local maxima, largest first
        let mut peaks: Vec<usize> = (0..size)
            .filter(|&k| norms[k] >= norms[(k + size - 1) % size] && norms[k] >= norms[(k + 1) % size])
            .collect();
        peaks.sort_by(|a, b| norms[*b].total_cmp(&norms[*a]).then(a.cmp(b)));
        peaks.truncate(REFINE_PEAKS);
        let h = self.q as f64 / size as f64;
        let g = |t: f64| linalg::op_norm(&self.evaluate(t), herm);
        for k in peaks {
            let (v, t) = golden_max(&g, ts[k] - h, ts[k] + h);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        (best, best_t)
    }

    /// `sup_t ‖f′(t)‖`, the Lipschitz constant of a trig polynomial.
    pub fn lipschitz_seminorm(&self, gp: &GridParams) -> f64 {
        self.derivative().sup_norm(gp)
    }

    /// `sup_t ‖f(t) − g(t)‖`.
    pub fn sup_distance(&self, other: &Self, gp: &GridParams) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm(gp))
    }

    /// Largest coefficient-wise entry difference; an exact-arithmetic proxy
    /// for equality checks that avoids grid error.
    pub fn coeff_distance(&self, other: &Self) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.coeffs.values().map(linalg::frobenius).fold(0.0, f64::max))
    }
}

const REFINE_PEAKS: usize = 8;
const GOLDEN_ITERS: usize = 48;

fn golden_max(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..GOLDEN_ITERS {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    if gc >= gd {
        (gc, c)
    } else {
        (gd, d)
    }
}

/// Entry `z^m_{j,k}(t) = m^{-1/2} exp(2πi (m−j)(t+k−1)/m)`, 1-based indices.
/// Direct scalar formula, kept separate from the Fourier construction.
pub fn z_entry(m: usize, j: usize, k: usize, t: f64) -> C64 {
    let mf = m as f64;
    linalg::phase((m - j) as f64 * (t + k as f64 - 1.0) / mf) / mf.sqrt()
}

/// The `m`-periodic unitary `U_m`; `U_0` is the constant 1.
pub fn make_unitary_u(m: usize) -> PeriodicMatrixFunction {
    if m <= 1 {
        return PeriodicMatrixFunction::identity(1);
    }
    let mut coeffs = BTreeMap::new();
    let scale = 1.0 / (m as f64).sqrt();
    for j in 1..=m {
        let nu = m - j;
        let mut c = CMatrix::zeros(m, m);
        for k in 1..=m {
            c[(j - 1, k - 1)] = linalg::phase((nu * (k - 1)) as f64 / m as f64) * scale;
        }
        coeffs.insert(nu as i64, c);
    }
    PeriodicMatrixFunction { n: m, q: m as u64, coeffs }
}

/// Cyclic shift with `U_m(t+1) = U_m(t) V_m`.
pub fn make_shift_v(m: usize) -> CMatrix {
    let m = m.max(1);
    let mut v = CMatrix::zeros(m, m);
    for l in 0..m {
        v[((l + 1) % m, l)] = ONE;
    }
    v
}

/// `W_{σ,m} = V_{σ_m} ⊗ I_{⊠σ_{m−1}}`; the 1×1 identity at `m = 0`.
pub fn make_w_sigma(sigma: &SupernaturalSequence, m: usize) -> Result<CMatrix> {
    if m == 0 {
        return Ok(linalg::identity(1));
    }
    let s = sigma.get(m)?;
    Ok(linalg::kron_identity(&make_shift_v(s), sigma.boxtimes(m - 1)?))
}

/// `U_{σ,m} = U_{σ_m} ⊗ I_{⊠σ_{m−1}}`; the 1×1 constant 1 at `m = 0`.
pub fn make_u_sigma(sigma: &SupernaturalSequence, m: usize) -> Result<PeriodicMatrixFunction> {
    if m == 0 {
        return Ok(PeriodicMatrixFunction::identity(1));
    }
    let s = sigma.get(m)?;
    Ok(make_unitary_u(s).kron_identity(sigma.boxtimes(m - 1)?))
}

/// Upper bound on `l(U_m)` obtained by summing entrywise Lipschitz bounds.
/// `corrected` carries the `2π` Lipschitz constant of `exp(2πit)`; without it
/// the bound assumes that constant is 1.
pub fn unitary_lip_bound(m: usize, corrected: bool) -> f64 {
    let mf = m as f64;
    let base = ((2.0 * mf * mf + 3.0 * mf + 1.0) / (6.0 * mf)).sqrt();
    if corrected {
        2.0 * PI * base
    } else {
        base
    }
}

/// Entrywise bound `l(z^m_{j,k}) ≤ 2π(m−j)/m^{3/2}`.
pub fn entry_lip_bound(m: usize, j: usize) -> f64 {
    2.0 * PI * (m - j) as f64 / (m as f64).powf(1.5)
}

/// Grid maximum of `‖U(t)U(t)* − I‖` over one period.
pub fn unitarity_residual(u: &PeriodicMatrixFunction, samples: usize) -> f64 {
    let id = linalg::identity(u.n());
    (0..samples)
        .map(|k| {
            let t = u.q() as f64 * k as f64 / samples as f64;
            let x = u.evaluate(t);
            linalg::op_norm(&(&x * x.adjoint() - &id), false)
        })
        .fold(0.0, f64::max)
}

/// Grid maximum of `‖U(t+1) − U(t)W‖` over one period.
pub fn intertwining_residual(u: &PeriodicMatrixFunction, w: &CMatrix, samples: usize) -> f64 {
    (0..samples)
        .map(|k| {
            let t = u.q() as f64 * k as f64 / samples as f64;
            linalg::op_norm(&(u.evaluate(t + 1.0) - u.evaluate(t) * w), false)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar_fn(q: u64, terms: &[(i64, C64)]) -> PeriodicMatrixFunction {
        let coeffs = terms
            .iter()
            .map(|(k, z)| (*k, CMatrix::from_element(1, 1, *z)))
            .collect();
        PeriodicMatrixFunction::from_coeffs(1, q, coeffs, 0.0).unwrap()
    }

    fn random_fn(rng: &mut ChaCha8Rng, n: usize, q: u64, k: i64) -> PeriodicMatrixFunction {
        let mut coeffs = BTreeMap::new();
        for nu in -k..=k {
            coeffs.insert(nu, CMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
        PeriodicMatrixFunction::from_coeffs(n, q, coeffs, 0.0).unwrap()
    }

    #[test]
    fn unit_involution_and_phase_cancellation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_fn(&mut rng, 3, 2, 3);
        let id = PeriodicMatrixFunction::identity(3);
        assert!(id.mul(&f).unwrap().coeff_distance(&f).unwrap() < 1e-14);
        assert_eq!(f.adjoint().adjoint(), f);
        let i2 = linalg::identity(2);
        let e = PeriodicMatrixFunction::monomial(1, 1, i2.clone());
        let einv = PeriodicMatrixFunction::monomial(1, -1, i2.clone());
        assert_eq!(e.mul(&einv).unwrap(), PeriodicMatrixFunction::identity(2));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = PeriodicMatrixFunction::identity(2);
        let b = PeriodicMatrixFunction::identity(3);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
        assert!(a.add(&b).is_err());
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(PeriodicMatrixFunction::identity(2).evaluate(0.37), linalg::identity(2));
        let e = scalar_fn(1, &[(1, ONE)]);
        assert!((e.evaluate(0.25)[(0, 0)] - c(0.0, 1.0)).norm() < 1e-15);
        let u = make_unitary_u(2).evaluate(0.0);
        let r = 1.0 / 2f64.sqrt();
        let want = CMatrix::from_row_slice(2, 2, &[c(r, 0.0), c(-r, 0.0), c(r, 0.0), c(r, 0.0)]);
        assert!(linalg::max_abs_diff(&u, &want) < 1e-15);
    }

    #[test]
    fn fourier_construction_matches_scalar_entries() {
        for m in 1..=6 {
            let u = make_unitary_u(m);
            for &t in &[0.0, 0.3, 1.7, -2.2] {
                let x = u.evaluate(t);
                for j in 1..=m {
                    for k in 1..=m {
                        assert!((x[(j - 1, k - 1)] - z_entry(m, j, k, t)).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn grid_samples_agree_with_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_fn(&mut rng, 2, 3, 4);
        let (ts, vals) = f.grid_samples(&GridParams::default());
        for (t, v) in ts.iter().zip(&vals).step_by(7) {
            assert!(linalg::max_abs_diff(&f.evaluate(*t), v) < 1e-12);
        }
    }

    #[test]
    fn sup_norm_examples() {
        let gp = GridParams::default();
        assert_eq!(PeriodicMatrixFunction::identity(3).sup_norm(&gp), 1.0);
        let cos = scalar_fn(1, &[(1, c(0.5, 0.0)), (-1, c(0.5, 0.0))]);
        assert!((cos.sup_norm(&gp) - 1.0).abs() < gp.tol);
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, c(2.0, 0.0)]));
        let f = PeriodicMatrixFunction::monomial(1, 1, d);
        assert!((f.sup_norm(&gp) - 2.0).abs() < gp.tol);
    }

    #[test]
    fn refinement_recovers_off_grid_peak() {
        // cos(2π(t − 0.013)) peaks between grid points
        let p = linalg::phase(-0.013);
        let f = scalar_fn(1, &[(1, p * 0.5), (-1, p.conj() * 0.5)]);
        assert!((f.sup_norm(&GridParams::default()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn witness_realises_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_fn(&mut rng, 3, 1, 2);
        let w = f.sup_norm_witness(&GridParams::default());
        assert!((linalg::bilinear(&w.u, &f.evaluate(w.t), &w.v) - w.value).abs() < 1e-10);
        assert!((w.value - f.sup_norm(&GridParams::default())).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_examples() {
        let gp = GridParams::default();
        assert_eq!(PeriodicMatrixFunction::identity(2).lipschitz_seminorm(&gp), 0.0);
        let e = scalar_fn(1, &[(1, ONE)]);
        // two-point difference quotients
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut best: f64 = 0.0;
        for _ in 0..100_000 {
            let s: f64 = rng.gen_range(0.0..1.0);
            let h: f64 = rng.gen_range(1e-6..1e-3);
            best = best.max((e.evaluate(s + h)[(0, 0)] - e.evaluate(s)[(0, 0)]).norm() / h);
        }
        let l = e.lipschitz_seminorm(&gp);
        assert!((l - 2.0 * PI).abs() < gp.tol);
        assert!(best <= l + gp.tol && l - best < 1e-4);
        // U_2: dense finite differences
        let u = make_unitary_u(2);
        let h = 1e-6;
        let fd = (0..4000)
            .map(|k| {
                let t = 2.0 * k as f64 / 4000.0;
                linalg::op_norm(&((u.evaluate(t + h) - u.evaluate(t - h)) / C64::new(2.0 * h, 0.0)), false)
            })
            .fold(0.0, f64::max);
        assert!((u.lipschitz_seminorm(&gp) - PI).abs() < 1e-6);
        assert!((fd - PI).abs() < 1e-6);
    }

    #[test]
    fn shift_and_intertwining() {
        let v2 = make_shift_v(2);
        assert_eq!(v2, CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]));
        let u = make_unitary_u(2);
        let r = 1.0 / 2f64.sqrt();
        let want = CMatrix::from_row_slice(2, 2, &[c(-r, 0.0), c(r, 0.0), c(r, 0.0), c(r, 0.0)]);
        assert!(linalg::max_abs_diff(&u.evaluate(1.0), &(u.evaluate(0.0) * &v2)) < 1e-12);
        assert!(linalg::max_abs_diff(&u.evaluate(1.0), &want) < 1e-12);
        for m in 2..=8 {
            let u = make_unitary_u(m);
            assert!(unitarity_residual(&u, 1024) < 1e-10);
            assert!(intertwining_residual(&u, &make_shift_v(m), 1024) < 1e-10);
        }
    }

    #[test]
    fn sigma_unitaries() {
        let gp = GridParams::default();
        let s22 = SupernaturalSequence::new(vec![2, 2]).unwrap();
        let w = make_w_sigma(&s22, 2).unwrap();
        assert_eq!(w, linalg::kron_identity(&make_shift_v(2), 2));
        let s23 = SupernaturalSequence::new(vec![2, 3]).unwrap();
        assert_eq!(make_u_sigma(&s23, 1).unwrap(), make_unitary_u(2));
        let u = make_u_sigma(&s23, 2).unwrap();
        assert_eq!(u.n(), 6);
        assert!((u.lipschitz_seminorm(&gp) - make_unitary_u(3).lipschitz_seminorm(&gp)).abs() < gp.tol);
        assert!(intertwining_residual(&u, &make_w_sigma(&s23, 2).unwrap(), 512) < 1e-10);
        assert_eq!(make_u_sigma(&s23, 0).unwrap(), PeriodicMatrixFunction::identity(1));
    }

    #[test]
    fn corrected_unitary_bounds() {
        let gp = GridParams::default();
        for m in 2..=8 {
            let u = make_unitary_u(m);
            assert!(u.lipschitz_seminorm(&gp) <= unitary_lip_bound(m, true) + 1e-6);
            for j in 1..=m {
                let entry = u.map_linear(|c| CMatrix::from_element(1, 1, c[(j - 1, 0)]));
                assert!(entry.lipschitz_seminorm(&gp) <= entry_lip_bound(m, j) + gp.tol);
            }
        }
        assert!(make_unitary_u(2).lipschitz_seminorm(&gp) > unitary_lip_bound(2, false));
    }

    #[test]
    fn rescale_examples() {
        let e = scalar_fn(1, &[(1, ONE)]);
        let same = e.rescale_compose(1, 0);
        assert_eq!(same, e);
        let g = e.rescale_compose(2, 1);
        for &t in &[0.0, 0.4, 1.3] {
            let want = -linalg::phase(t / 2.0);
            assert!((g.evaluate(t)[(0, 0)] - want).norm() < 1e-14);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_fn(&mut rng, 2, 1, 3);
        let h = f.rescale_compose(2, 0);
        for k in 0..50 {
            let t = k as f64 / 50.0;
            assert!(linalg::max_abs_diff(&h.evaluate(2.0 * t), &f.evaluate(t)) < 1e-12);
        }
    }

    #[test]
    fn periodicity_predicate() {
        let gp = GridParams::default();
        assert!(PeriodicMatrixFunction::identity(2).is_one_periodic(&gp));
        let half = scalar_fn(2, &[(1, ONE)]);
        assert!(!half.is_one_periodic(&gp));
        assert!(half.project_one_periodic(gp.tol).is_err());
        let full = scalar_fn(2, &[(2, ONE), (-4, ONE)]);
        let p = full.project_one_periodic(gp.tol).unwrap();
        assert_eq!(p.q(), 1);
        assert!(p.coeff(1).is_some() && p.coeff(-2).is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn seminorm_laws(seed in 0u64..10_000, n in 1usize..4, k in 0i64..4) {
            let gp = GridParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_fn(&mut rng, n, 1, k);
            let g = random_fn(&mut rng, n, 2, k);
            let lf = f.lipschitz_seminorm(&gp);
            prop_assert!((f.adjoint().lipschitz_seminorm(&gp) - lf).abs() < 1e-9 * (1.0 + lf));
            let lfg = f.mul(&g).unwrap().lipschitz_seminorm(&gp);
            let rhs = f.sup_norm(&gp) * g.lipschitz_seminorm(&gp) + lf * g.sup_norm(&gp);
            // sup estimates are lower bounds; allow the usual relative slack
            prop_assert!(lfg <= rhs * (1.0 + 1e-6) + gp.tol);
        }

        #[test]
        fn difference_quotients_below_seminorm(seed in 0u64..10_000, k in 1i64..5) {
            let gp = GridParams::default();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_fn(&mut rng, 2, 3, k);
            let l = f.lipschitz_seminorm(&gp);
            for _ in 0..200 {
                let s: f64 = rng.gen_range(0.0..3.0);
                let t: f64 = s + rng.gen_range(1e-4..1.0);
                let q = linalg::op_norm(&(f.evaluate(t) - f.evaluate(s)), false) / (t - s);
                prop_assert!(q <= l + gp.tol * (1.0 + l));
            }
        }

        #[test]
        fn multiply_matches_pointwise(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_fn(&mut rng, 2, 2, 2);
            let g = random_fn(&mut rng, 2, 3, 2);
            let fg = f.mul(&g).unwrap();
            prop_assert_eq!(fg.q(), 6);
            let t: f64 = rng.gen_range(-3.0..3.0);
            prop_assert!(linalg::max_abs_diff(&fg.evaluate(t), &(f.evaluate(t) * g.evaluate(t))) < 1e-11);
            prop_assert!(linalg::max_abs_diff(&f.adjoint().evaluate(t), &f.evaluate(t).adjoint()) < 1e-13);
        }
    }
}
