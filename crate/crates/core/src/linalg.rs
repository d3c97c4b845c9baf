//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `exp(2πi x)`.
#[inline]
pub fn phase(x: f64) -> C64 {
    let (s, c) = (2.0 * std::f64::consts::PI * x).sin_cos();
    C64::new(c, s)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `m ⊗ I_k`: every entry of `m` becomes a `k × k` scalar block.
pub fn kron_identity(m: &CMatrix, k: usize) -> CMatrix {
    if k == 1 {
        return m.clone();
    }
    let n = m.nrows();
    let mut out = CMatrix::zeros(n * k, m.ncols() * k);
    for i in 0..n {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            if z != ZERO {
                for d in 0..k {
                    out[(i * k + d, j * k + d)] = z;
                }
            }
        }
    }
    out
}

/// Operator norm (largest singular value). Hermitian input uses the cheaper
/// eigenvalue route.
pub fn op_norm(m: &CMatrix, hermitian: bool) -> f64 {
    match m.nrows() {
        0 => 0.0,
        1 if m.ncols() == 1 => m[(0, 0)].norm(),
        _ if hermitian => m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0, |acc: f64, l| acc.max(l.abs())),
        _ => m
            .clone()
            .singular_values()
            .iter()
            .fold(0.0, |acc: f64, s| acc.max(*s)),
    }
}

/// Operator norm together with unit vectors `u`, `v` such that
/// `Re(u* m v)` equals the norm. For Hermitian input `v` is an eigenvector of
/// the extreme eigenvalue and `u = sign(λ) v`.
pub fn op_norm_witness(m: &CMatrix, hermitian: bool) -> (f64, CVector, CVector) {
    let n = m.nrows();
    if n == 1 && m.ncols() == 1 {
        let z = m[(0, 0)];
        let r = z.norm();
        let u = if r > 0.0 { z / r } else { ONE };
        return (r, CVector::from_element(1, u), CVector::from_element(1, ONE));
    }
    if hermitian {
        let eig = m.clone().symmetric_eigen();
        let (idx, lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |(bi, bl), (i, l)| if l.abs() > bl.abs() { (i, *l) } else { (bi, bl) });
        let v: CVector = eig.eigenvectors.column(idx).into_owned();
        let u = if lam < 0.0 { -v.clone() } else { v.clone() };
        (lam.abs(), u, v)
    } else {
        let svd = m.clone().svd(true, true);
        let (idx, s) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0, -1.0f64), |(bi, bs), (i, s)| if *s > bs { (i, *s) } else { (bi, bs) });
        let u: CVector = svd.u.as_ref().expect("u requested").column(idx).into_owned();
        let v: CVector = svd.v_t.as_ref().expect("v_t requested").row(idx).adjoint();
        (s, u, v)
    }
}

/// `Re(u* m v)`.
pub fn bilinear(u: &CVector, m: &CMatrix, v: &CVector) -> f64 {
    (u.adjoint() * m * v)[(0, 0)].re
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn op_norm_routes_agree() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(-3.0, 0.0)],
        );
        let h = op_norm(&m, true);
        let g = op_norm(&m, false);
        assert!((h - g).abs() < 1e-12);
        let (w, u, v) = op_norm_witness(&m, true);
        assert!((w - h).abs() < 1e-12);
        assert!((bilinear(&u, &m, &v) - h).abs() < 1e-12);
        let (w2, u2, v2) = op_norm_witness(&m, false);
        assert!((bilinear(&u2, &m, &v2) - w2).abs() < 1e-12);
    }

    #[test]
    fn kron_matches_block_layout() {
        let m = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ONE, ONE]);
        let k = kron_identity(&m, 2);
        assert_eq!(k[(2, 0)], ONE);
        assert_eq!(k[(3, 1)], ONE);
        assert_eq!(k[(0, 2)], ZERO);
    }
}
