//! Finite stages of a Bunce-Deddens tower: circle algebras of order `⊠σ_m`,
//! the twisted block-diagonal embeddings between them, conditional
//! expectations, traces, and the stage Lip-norms `L` and `S`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::periodic_matfun::{make_u_sigma, GridParams, PeriodicMatrixFunction};

/// A finite prefix of a sequence of integers `≥ 2`, read with 1-based indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SupernaturalSequence {
    entries: Vec<usize>,
}

impl SupernaturalSequence {
    pub fn new(entries: Vec<usize>) -> Result<Self> {
        if let Some(bad) = entries.iter().find(|&&e| e < 2) {
            return Err(Error::InvalidSequence(format!("entry {} is below 2", bad)));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `σ_m`, `1 ≤ m ≤ len`.
    pub fn get(&self, m: usize) -> Result<usize> {
        if m == 0 || m > self.entries.len() {
            return Err(Error::StageOutOfRange { m, len: self.entries.len() });
        }
        Ok(self.entries[m - 1])
    }

    /// `⊠σ_m = σ_1 ⋯ σ_m`, with `⊠σ_0 = 1`.
    pub fn boxtimes(&self, m: usize) -> Result<usize> {
        if m > self.entries.len() {
            return Err(Error::StageOutOfRange { m, len: self.entries.len() });
        }
        Ok(self.entries[..m].iter().product())
    }

    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m > self.entries.len() {
            return Err(Error::StageOutOfRange { m, len: self.entries.len() });
        }
        Ok(Self { entries: self.entries[..m].to_vec() })
    }
}

impl TryFrom<Vec<usize>> for SupernaturalSequence {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SupernaturalSequence> for Vec<usize> {
    fn from(s: SupernaturalSequence) -> Self {
        s.entries
    }
}

impl FromStr for SupernaturalSequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|p| p.trim())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<usize>().map_err(|e| Error::InvalidSequence(format!("{:?}: {}", p, e))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

impl fmt::Display for SupernaturalSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Element of stage `m`: a 1-periodic function of order `⊠σ_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct StageElement {
    pub m: usize,
    pub f: PeriodicMatrixFunction,
}

impl StageElement {
    fn same_stage(&self, other: &Self) -> Result<()> {
        if self.m != other.m {
            return Err(Error::DimensionMismatch { left: self.m, right: other.m });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_stage(other)?;
        Ok(Self { m: self.m, f: self.f.add(&other.f)? })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_stage(other)?;
        Ok(Self { m: self.m, f: self.f.sub(&other.f)? })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_stage(other)?;
        Ok(Self { m: self.m, f: self.f.mul(&other.f)? })
    }

    pub fn scale(&self, r: f64) -> Self {
        Self { m: self.m, f: self.f.scale_real(r) }
    }

    pub fn adjoint(&self) -> Self {
        Self { m: self.m, f: self.f.adjoint() }
    }

    pub fn sup_norm(&self, gp: &GridParams) -> f64 {
        self.f.sup_norm(gp)
    }

    pub fn sup_distance(&self, other: &Self, gp: &GridParams) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm(gp))
    }

    /// Jordan product `(ab + ba)/2`.
    pub fn jordan(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(other)?.add(&other.mul(self)?)?.scale(0.5))
    }

    /// Lie product `(ab − ba)/(2i)`.
    pub fn lie(&self, other: &Self) -> Result<Self> {
        let c = self.mul(other)?.sub(&other.mul(self)?)?;
        Ok(Self { m: self.m, f: c.f.scale(C64::new(0.0, -0.5)) })
    }
}

/// Which coefficient multiplies the norm term `‖a − E(a)‖` in `S_m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormTermConvention {
    /// `2^m`: pairs with a displacement of at most `2^{−m}` on the unit ball.
    #[default]
    Corrected,
    /// `2^{−m}`, as literally written in the recursion.
    Literal,
}

impl NormTermConvention {
    pub fn coefficient(self, m: usize) -> f64 {
        match self {
            Self::Corrected => 2f64.powi(m as i32),
            Self::Literal => 2f64.powi(-(m as i32)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageConstants {
    pub m: usize,
    /// `l(U_{σ,m−1})`.
    pub lip_u_prev: f64,
    pub k: f64,
    pub kappa: f64,
    pub beta: f64,
}

impl StageConstants {
    /// Lower sandwich constant `1/(σ_m² k_m)`.
    pub fn c(&self, sigma_m: usize) -> f64 {
        1.0 / ((sigma_m * sigma_m) as f64 * self.k)
    }

    /// Upper sandwich constant.
    pub fn d(&self) -> f64 {
        self.k
    }
}

/// A prefix `σ` with its unitaries and stage constants precomputed.
#[derive(Clone, Debug)]
pub struct BdTower {
    sigma: SupernaturalSequence,
    gp: GridParams,
    convention: NormTermConvention,
    unitaries: Vec<PeriodicMatrixFunction>,
    unitaries_adj: Vec<PeriodicMatrixFunction>,
    lip_unitaries: Vec<f64>,
    constants: Vec<StageConstants>,
}

impl BdTower {
    pub fn new(sigma: SupernaturalSequence, gp: GridParams, convention: NormTermConvention) -> Result<Self> {
        gp.validate()?;
        let len = sigma.len();
        let unitaries = (0..=len).map(|m| make_u_sigma(&sigma, m)).collect::<Result<Vec<_>>>()?;
        let unitaries_adj = unitaries.iter().map(|u| u.adjoint()).collect();
        let lip_unitaries: Vec<f64> = unitaries.iter().map(|u| u.lipschitz_seminorm(&gp)).collect();
        let mut constants = vec![StageConstants { m: 0, lip_u_prev: 0.0, k: 1.0, kappa: 1.0, beta: 1.0 }];
        for m in 1..=len {
            let lip_u_prev = lip_unitaries[m - 1];
            let k = ((1.0 + 2.0 * lip_u_prev) / sigma.get(m)? as f64).max(1.0);
            let kappa = if m == 1 { 1.0 } else { constants[m - 1].kappa / k };
            constants.push(StageConstants { m, lip_u_prev, k, kappa, beta: 2f64.powi(-(m as i32)) });
        }
        Ok(Self { sigma, gp, convention, unitaries, unitaries_adj, lip_unitaries, constants })
    }

    pub fn with_defaults(sigma: SupernaturalSequence) -> Result<Self> {
        Self::new(sigma, GridParams::default(), NormTermConvention::Corrected)
    }

    pub fn sigma(&self) -> &SupernaturalSequence {
        &self.sigma
    }

    pub fn gp(&self) -> &GridParams {
        &self.gp
    }

    pub fn convention(&self) -> NormTermConvention {
        self.convention
    }

    pub fn max_stage(&self) -> usize {
        self.sigma.len()
    }

    pub fn boxtimes(&self, m: usize) -> Result<usize> {
        self.sigma.boxtimes(m)
    }

    fn check_stage(&self, m: usize) -> Result<()> {
        if m > self.sigma.len() {
            return Err(Error::StageOutOfRange { m, len: self.sigma.len() });
        }
        Ok(())
    }

    /// `U_{σ,m}`.
    pub fn u_sigma(&self, m: usize) -> Result<&PeriodicMatrixFunction> {
        self.check_stage(m)?;
        Ok(&self.unitaries[m])
    }

    /// `l(U_{σ,m})`.
    pub fn lip_u(&self, m: usize) -> Result<f64> {
        self.check_stage(m)?;
        Ok(self.lip_unitaries[m])
    }

    pub fn stage_constants(&self, m: usize) -> Result<StageConstants> {
        self.check_stage(m)?;
        Ok(self.constants[m])
    }

    /// Wraps `f` as a stage-`m` element after checking order and 1-periodicity.
    pub fn element(&self, m: usize, f: PeriodicMatrixFunction) -> Result<StageElement> {
        let n = self.boxtimes(m)?;
        if f.n() != n {
            return Err(Error::DimensionMismatch { left: n, right: f.n() });
        }
        let f = if f.q() == 1 { f } else { f.project_one_periodic(self.gp.tol)? };
        Ok(StageElement { m, f })
    }

    pub fn scalar(&self, m: usize, r: f64) -> Result<StageElement> {
        Ok(StageElement { m, f: PeriodicMatrixFunction::scalar(self.boxtimes(m)?, C64::new(r, 0.0)) })
    }

    pub fn unit(&self, m: usize) -> Result<StageElement> {
        self.scalar(m, 1.0)
    }

    pub fn zero(&self, m: usize) -> Result<StageElement> {
        Ok(StageElement { m, f: PeriodicMatrixFunction::zero(self.boxtimes(m)?) })
    }

    /// `α_{σ,m}`: stage `m` into stage `m+1`.
    pub fn alpha(&self, a: &StageElement) -> Result<StageElement> {
        let m = a.m;
        let s = self.sigma.get(m + 1)?;
        let n = self.boxtimes(m)?;
        if let Some(z) = scalar_value(&a.f) {
            return Ok(StageElement { m: m + 1, f: PeriodicMatrixFunction::scalar(n * s, z) });
        }
        // diag_j a((t+j)/s), assembled coefficient by coefficient
        let mut coeffs: BTreeMap<i64, CMatrix> = BTreeMap::new();
        for j in 0..s {
            let block = a.f.rescale_compose(s as u64, j as u64);
            for (nu, c) in block.coeffs() {
                let big = coeffs.entry(*nu).or_insert_with(|| CMatrix::zeros(n * s, n * s));
                big.view_mut((j * n, j * n), (n, n)).copy_from(c);
            }
        }
        let diag = PeriodicMatrixFunction::from_coeffs(n * s, a.f.q() * s as u64, coeffs, 0.0)?;
        let out = self.unrotate(m + 1, &diag)?;
        Ok(StageElement { m: m + 1, f: out.project_one_periodic(self.gp.tol)? })
    }

    /// `U_{σ,m}* f U_{σ,m}`.
    pub fn rotate(&self, m: usize, f: &PeriodicMatrixFunction) -> Result<PeriodicMatrixFunction> {
        self.check_stage(m)?;
        if m == 0 {
            return Ok(f.clone());
        }
        self.unitaries_adj[m].mul(f)?.mul(&self.unitaries[m])
    }

    /// `U_{σ,m} g U_{σ,m}*`.
    pub fn unrotate(&self, m: usize, g: &PeriodicMatrixFunction) -> Result<PeriodicMatrixFunction> {
        self.check_stage(m)?;
        if m == 0 {
            return Ok(g.clone());
        }
        self.unitaries[m].mul(g)?.mul(&self.unitaries_adj[m])
    }

    fn block_shape(&self, m: usize) -> Result<(usize, usize)> {
        if m == 0 {
            return Err(Error::NoPreviousStage);
        }
        Ok((self.sigma.get(m)?, self.boxtimes(m - 1)?))
    }

    /// `D_{σ,m}`: keeps the `σ_m` diagonal blocks of order `⊠σ_{m−1}`.
    pub fn block_diag_d(&self, m: usize, x: &CMatrix) -> Result<CMatrix> {
        let (s, b) = self.block_shape(m)?;
        if x.nrows() != s * b || x.ncols() != s * b {
            return Err(Error::DimensionMismatch { left: s * b, right: x.nrows() });
        }
        let mut out = CMatrix::zeros(s * b, s * b);
        for j in 0..s {
            out.view_mut((j * b, j * b), (b, b)).copy_from(&x.view((j * b, j * b), (b, b)));
        }
        Ok(out)
    }

    /// `F_{σ,m,j}`: diagonal block `j` (1-based).
    pub fn block_f(&self, m: usize, j: usize, x: &CMatrix) -> Result<CMatrix> {
        let (s, b) = self.block_shape(m)?;
        if x.nrows() != s * b || x.ncols() != s * b {
            return Err(Error::DimensionMismatch { left: s * b, right: x.nrows() });
        }
        if j == 0 || j > s {
            return Err(Error::InvalidParameter(format!("block index {} outside 1..={}", j, s)));
        }
        Ok(x.view(((j - 1) * b, (j - 1) * b), (b, b)).into_owned())
    }

    fn apply_d(&self, m: usize, g: &PeriodicMatrixFunction) -> Result<PeriodicMatrixFunction> {
        let (s, b) = self.block_shape(m)?;
        if g.n() != s * b {
            return Err(Error::DimensionMismatch { left: s * b, right: g.n() });
        }
        Ok(g.map_linear(|c| self.block_diag_d(m, c).expect("shape checked")))
    }

    /// `E_{σ,m}(a) = U D(U* a U) U*`.
    pub fn cond_expectation(&self, a: &StageElement) -> Result<StageElement> {
        let g = self.apply_d(a.m, &self.rotate(a.m, &a.f)?)?;
        let f = self.unrotate(a.m, &g)?.project_one_periodic(self.gp.tol)?;
        Ok(StageElement { m: a.m, f })
    }

    /// Recovers `c` at stage `m−1` from `D(U* α(c) U)` at stage `m`. Every
    /// diagonal block `j` is `t ↦ c((t+j)/σ_m)`; the blocks are unwound and
    /// averaged, which is exact on the image of `α`.
    fn unwind_blocks(&self, m: usize, dg: &PeriodicMatrixFunction) -> Result<StageElement> {
        let (s, b) = self.block_shape(m)?;
        let dg = if dg.q() == s as u64 { dg.clone() } else { dg.with_denominator(s as u64)? };
        let mut coeffs: BTreeMap<i64, CMatrix> = BTreeMap::new();
        for (nu, c) in dg.coeffs() {
            let mut acc = CMatrix::zeros(b, b);
            for j in 0..s {
                let r = (nu * j as i64).rem_euclid(s as i64) as f64;
                acc += c.view((j * b, j * b), (b, b)) * linalg::phase(-r / s as f64);
            }
            coeffs.insert(*nu, acc / C64::new(s as f64, 0.0));
        }
        let f = PeriodicMatrixFunction::from_coeffs(b, 1, coeffs, self.gp.prune_floor)?;
        Ok(StageElement { m: m - 1, f })
    }

    /// `α_{σ,m−1}^{-1}` on its image, with a residual certificate: the sum of
    /// coefficient norms of `α(c) − b` bounds `‖α(c) − b‖` from above.
    pub fn alpha_inverse(&self, b: &StageElement) -> Result<StageElement> {
        if let Some(z) = scalar_value(&b.f) {
            let (_, n) = self.block_shape(b.m)?;
            return Ok(StageElement { m: b.m - 1, f: PeriodicMatrixFunction::scalar(n, z) });
        }
        let dg = self.apply_d(b.m, &self.rotate(b.m, &b.f)?)?;
        let c = self.unwind_blocks(b.m, &dg)?;
        let diff = self.alpha(&c)?.f.sub(&b.f)?;
        let residual: f64 = diff.coeffs().values().map(linalg::frobenius).sum();
        let scale: f64 = b.f.coeffs().values().map(linalg::frobenius).sum::<f64>().max(1.0);
        let tol = self.gp.tol * scale;
        if residual > tol {
            return Err(Error::NotInImage { residual, tol });
        }
        Ok(c)
    }

    /// `τ_{σ,m}(a)`: normalized trace of the mean.
    pub fn trace_tau(&self, a: &StageElement) -> C64 {
        a.f.mean().trace() / C64::new(a.f.n() as f64, 0.0)
    }

    fn require_self_adjoint(&self, a: &StageElement) -> Result<()> {
        let scale = a.f.coeffs().values().map(linalg::frobenius).fold(1.0, f64::max);
        let residual = a.f.self_adjoint_residual();
        if residual > self.gp.tol * scale {
            return Err(Error::NotSelfAdjoint { residual });
        }
        Ok(())
    }

    fn centered(&self, a: &StageElement) -> PeriodicMatrixFunction {
        let tau = self.trace_tau(a);
        a.f.sub(&PeriodicMatrixFunction::scalar(a.f.n(), tau)).expect("same order")
    }

    /// Weighted terms whose maximum is `L_{σ,m}(a)`. Each term is linear in `a`.
    pub fn l_terms(&self, a: &StageElement) -> Result<Vec<(f64, PeriodicMatrixFunction)>> {
        let g = self.rotate(a.m, &a.f)?;
        Ok(vec![(1.0, g.derivative()), (1.0, self.centered(a))])
    }

    /// `L_{σ,m}(a) = max{ l(U* a U), ‖a − τ(a)1‖ }`.
    pub fn lip_l(&self, a: &StageElement) -> Result<f64> {
        self.require_self_adjoint(a)?;
        Ok(max_terms(&self.l_terms(a)?, &self.gp))
    }

    /// Weighted terms whose maximum is `S_{σ,m}(a)`, flattened through the
    /// recursion. Each term is linear in `a`, and the list shape depends only
    /// on `m`.
    pub fn s_terms(&self, a: &StageElement) -> Result<Vec<(f64, PeriodicMatrixFunction)>> {
        let m = a.m;
        if m == 0 {
            return self.l_terms(a);
        }
        let k = self.constants[m];
        let g = self.rotate(m, &a.f)?;
        let dg = self.apply_d(m, &g)?;
        let mut terms = vec![
            (k.kappa, g.derivative()),
            (k.kappa, self.centered(a)),
            (self.convention.coefficient(m), g.sub(&dg)?),
        ];
        terms.extend(self.s_terms(&self.unwind_blocks(m, &dg)?)?);
        Ok(terms)
    }

    /// `S_{σ,m}(a) = max{ κ_m L_m(a), S_{m−1}(α^{-1}(E(a))), c_m ‖a − E(a)‖ }`,
    /// `S_0 = L_0`, evaluated by direct recursion.
    pub fn lip_s(&self, a: &StageElement) -> Result<f64> {
        self.require_self_adjoint(a)?;
        if a.m == 0 {
            return self.lip_l(a);
        }
        let k = self.constants[a.m];
        let e = self.cond_expectation(a)?;
        let lower = self.alpha_inverse(&e)?;
        let displacement = a.sup_distance(&e, &self.gp)?;
        Ok((k.kappa * self.lip_l(a)?)
            .max(self.lip_s(&lower)?)
            .max(self.convention.coefficient(a.m) * displacement))
    }

    /// Seeded self-adjoint element with integer frequencies `|ν| ≤ cutoff`;
    /// entries are standard complex Gaussians before symmetrization.
    pub fn random_element(&self, m: usize, cutoff: usize, seed: u64) -> Result<StageElement> {
        let n = self.boxtimes(m)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid deviation");
        let gauss = |rng: &mut ChaCha8Rng| CMatrix::from_fn(n, n, |_, _| C64::new(normal.sample(rng), normal.sample(rng)));
        let mut coeffs = BTreeMap::new();
        let g0 = gauss(&mut rng);
        coeffs.insert(0, (&g0 + g0.adjoint()) * C64::new(0.5, 0.0));
        for nu in 1..=cutoff as i64 {
            let g = gauss(&mut rng);
            coeffs.insert(-nu, g.adjoint());
            coeffs.insert(nu, g);
        }
        let f = PeriodicMatrixFunction::from_coeffs(n, 1, coeffs, self.gp.prune_floor)?;
        Ok(StageElement { m, f })
    }
}

/// `Some(z)` when `f` is the constant `z·1`.
fn scalar_value(f: &PeriodicMatrixFunction) -> Option<C64> {
    match f.coeffs().len() {
        0 => Some(C64::new(0.0, 0.0)),
        1 => {
            let c = f.coeff(0)?;
            let z = c[(0, 0)];
            (*c == linalg::identity(f.n()) * z).then_some(z)
        }
        _ => None,
    }
}

/// `max_i w_i sup_t ‖T_i(t)‖`.
pub fn max_terms(terms: &[(f64, PeriodicMatrixFunction)], gp: &GridParams) -> f64 {
    terms.iter().map(|(w, f)| w * f.sup_norm(gp)).fold(0.0, f64::max)
}
