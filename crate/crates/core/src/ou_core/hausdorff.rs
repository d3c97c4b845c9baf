use crate::error::{Error, Result};

/// Hausdorff distance between finite sets under `d`.
pub fn hausdorff<T>(a: &[T], b: &[T], d: impl Fn(&T, &T) -> f64) -> Result<f64> {
    let m: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| d(x, y)).collect()).collect();
    hausdorff_matrix(&m)
}

/// Hausdorff distance from a precomputed `|A| × |B|` distance matrix.
pub fn hausdorff_matrix(d: &[Vec<f64>]) -> Result<f64> {
    let cols = d.first().map_or(0, |r| r.len());
    if d.is_empty() || cols == 0 {
        return Err(Error::EmptySet);
    }
    let rows_max = d.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let cols_max = (0..cols)
        .map(|j| d.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(rows_max.max(cols_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    #[test]
    fn examples() {
        assert_eq!(hausdorff(&[1.0, 2.0], &[2.0, 1.0], line).unwrap(), 0.0);
        assert_eq!(hausdorff(&[0.0], &[0.0, 3.0], line).unwrap(), 3.0);
        assert_eq!(hausdorff(&[0.0, 1.0], &[0.5], line).unwrap(), 0.5);
        assert!(matches!(hausdorff::<f64>(&[], &[1.0], line), Err(Error::EmptySet)));
    }
}
