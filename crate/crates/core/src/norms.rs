//! Matrix norms, most importantly the two-to-infinity norm.

use ndarray::{ArrayView1, ArrayView2};

use crate::{Error, Result};

/// Maximum Euclidean norm over the rows of `b`.
///
/// Satisfies `(1/sqrt(n)) * ||B||_F <= two_to_inf_norm(B) <= ||B||_F`, is
/// invariant under orthogonal transforms from the right and under signed
/// permutations from the left.
pub fn two_to_inf_norm(b: ArrayView2<f64>) -> Result<f64> {
    if b.is_empty() {
        return Err(Error::DimensionMismatch(
            "two_to_inf_norm of an empty matrix".into(),
        ));
    }
    Ok(b.rows()
        .into_iter()
        .map(|row| row.dot(&row).sqrt())
        .fold(0.0, f64::max))
}

/// Frobenius norm.
pub fn fro_norm(b: ArrayView2<f64>) -> f64 {
    b.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Induced infinity norm (maximum absolute row sum).
pub fn inf_norm(b: ArrayView2<f64>) -> f64 {
    b.rows()
        .into_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum())
        .fold(0.0, f64::max)
}

pub fn vec_two_norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// Spectral norm (largest singular value).
///
/// For matrices whose smaller dimension is modest the Gram matrix is
/// diagonalized exactly; otherwise a deterministic power iteration on the
/// Gram operator is used.
pub fn spectral_norm(b: ArrayView2<f64>) -> f64 {
    let (rows, cols) = b.dim();
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let k = rows.min(cols);
    if k <= 128 {
        let gram = if rows <= cols {
            b.dot(&b.t())
        } else {
            b.t().dot(&b)
        };
        let w = crate::eig::eigvalsh(&gram).expect("Gram eigendecomposition");
        return w.iter().fold(0.0f64, |m, &x| m.max(x.max(0.0))).sqrt();
    }
    power_iteration_gram(b)
}

fn power_iteration_gram(b: ArrayView2<f64>) -> f64 {
    let cols = b.ncols();
    // Fixed start vector keeps the estimate deterministic.
    let mut x = ndarray::Array1::from_shape_fn(cols, |i| 1.0 + (i as f64 + 1.0).sqrt().fract());
    let mut norm = vec_two_norm(x.view());
    x.mapv_inplace(|v| v / norm);
    let mut sigma2 = 0.0f64;
    for _ in 0..20_000 {
        let y = b.dot(&x);
        let z = b.t().dot(&y);
        norm = vec_two_norm(z.view());
        if norm == 0.0 {
            return 0.0;
        }
        let new_sigma2 = x.dot(&z);
        x = z / norm;
        if (new_sigma2 - sigma2).abs() <= 1e-14 * new_sigma2.abs() {
            sigma2 = new_sigma2;
            break;
        }
        sigma2 = new_sigma2;
    }
    sigma2.max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_inf_unit_row() {
        let mut b = ndarray::Array2::<f64>::zeros((3, 3));
        b[[0, 0]] = 1.0;
        assert_eq!(two_to_inf_norm(b.view()).unwrap(), 1.0);
    }

    #[test]
    fn two_inf_row_norms() {
        let b = array![[3.0, 4.0], [0.0, 5.0]];
        assert_eq!(two_to_inf_norm(b.view()).unwrap(), 5.0);
    }

    #[test]
    fn two_inf_full_orthonormal_square_is_one() {
        // Any square orthogonal matrix has unit rows.
        let theta = 0.7f64;
        let b = array![[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]];
        assert!((two_to_inf_norm(b.view()).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_inf_empty_errors() {
        let b = ndarray::Array2::<f64>::zeros((0, 3));
        assert!(two_to_inf_norm(b.view()).is_err());
    }

    #[test]
    fn spectral_norm_known() {
        let b = array![[3.0, 0.0], [0.0, -7.0]];
        assert!((spectral_norm(b.view()) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn norm_sandwich() {
        let b = array![[1.0, 2.0], [3.0, 4.0], [0.5, -0.25]];
        let t = two_to_inf_norm(b.view()).unwrap();
        let f = fro_norm(b.view());
        let n = b.nrows() as f64;
        assert!(f / n.sqrt() <= t + 1e-15);
        assert!(t <= f + 1e-15);
    }
}
