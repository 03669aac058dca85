//! Orthogonal Procrustes alignment and subspace distances.

use ndarray::Array2;
use ndarray_linalg::SVD;

use crate::mat::OrthoBasis;
use crate::norms::{fro_norm, two_to_inf_norm};
use crate::{Error, Result};

/// The orthogonal matrix minimizing `||wtilde * U - w||_F`, i.e. the unitary
/// polar factor of `wtilde^T w`.
pub fn procrustes_align(wtilde: &OrthoBasis, w: &OrthoBasis) -> Result<Array2<f64>> {
    check_same_shape(wtilde, w)?;
    let m = wtilde.view().t().dot(&w.view());
    polar_factor(&m)
}

/// Unitary polar factor of a square matrix via its SVD.
pub fn polar_factor(m: &Array2<f64>) -> Result<Array2<f64>> {
    let (u, _s, vt) = m
        .svd(true, true)
        .map_err(|e| Error::InvalidInput(format!("SVD failed: {e}")))?;
    let u = u.expect("requested U");
    let vt = vt.expect("requested Vt");
    Ok(u.dot(&vt))
}

/// `||W W^T - Wtilde Wtilde^T||_2`, the sine of the largest principal angle.
pub fn sin_theta_distance(w: &OrthoBasis, wtilde: &OrthoBasis) -> Result<f64> {
    check_same_shape(w, wtilde)?;
    // sigma_min of W^T Wtilde is the cosine of the largest principal angle.
    let m = w.view().t().dot(&wtilde.view());
    let (_, s, _) = m
        .svd(false, false)
        .map_err(|e| Error::InvalidInput(format!("SVD failed: {e}")))?;
    let cos_min = s.iter().cloned().fold(f64::INFINITY, f64::min).clamp(0.0, 1.0);
    Ok((1.0 - cos_min * cos_min).max(0.0).sqrt())
}

/// Procrustes-aligned subspace errors in the two-to-infinity and Frobenius
/// norms, together with the aligning orthogonal factor.
#[derive(Debug, Clone)]
pub struct SubspaceError {
    pub aligned_error: f64,
    pub frob_error: f64,
    pub u: Array2<f64>,
}

/// Aligns `v1hat` to `v1` by the Procrustes factor and reports
/// `||v1hat U - v1||` in both norms.
pub fn two_inf_subspace_error(v1hat: &OrthoBasis, v1: &OrthoBasis) -> Result<SubspaceError> {
    let u = procrustes_align(v1hat, v1)?;
    let diff = v1hat.view().dot(&u) - v1.view();
    Ok(SubspaceError {
        aligned_error: two_to_inf_norm(diff.view())?,
        frob_error: fro_norm(diff.view()),
        u,
    })
}

fn check_same_shape(a: &OrthoBasis, b: &OrthoBasis) -> Result<()> {
    if a.n() != b.n() || a.k() != b.k() {
        return Err(Error::DimensionMismatch(format!(
            "bases have shapes {}x{} and {}x{}",
            a.n(),
            a.k(),
            b.n(),
            b.k()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn basis(cols: Array2<f64>) -> OrthoBasis {
        OrthoBasis::new(cols).unwrap()
    }

    #[test]
    fn identity_alignment() {
        let w = basis(array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let u = procrustes_align(&w, &w).unwrap();
        assert!((u[[0, 0]] - 1.0).abs() < 1e-14);
        assert!((u[[1, 1]] - 1.0).abs() < 1e-14);
        assert!(u[[0, 1]].abs() < 1e-14);
    }

    #[test]
    fn exact_rotation_recovery() {
        let w = basis(array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let theta = 0.4f64;
        let r = array![[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]];
        let wtilde = basis(w.view().dot(&r));
        let u = procrustes_align(&wtilde, &w).unwrap();
        // U must be R^T.
        for (x, y) in u.iter().zip(r.t().iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn sin_theta_cases() {
        let e1 = basis(array![[1.0], [0.0]]);
        let e2 = basis(array![[0.0], [1.0]]);
        assert!(sin_theta_distance(&e1, &e1).unwrap() < 1e-14);
        assert!((sin_theta_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-14);
        let th = std::f64::consts::PI / 6.0;
        let rot = basis(array![[th.cos()], [th.sin()]]);
        assert!((sin_theta_distance(&e1, &rot).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn aligned_error_zero_for_rotated_basis() {
        let w = basis(array![
            [0.6, 0.0],
            [0.8, 0.0],
            [0.0, 1.0],
            [0.0, 0.0]
        ]);
        let theta = 1.1f64;
        let r = array![[theta.cos(), -theta.sin()], [theta.sin(), theta.cos()]];
        let wrot = basis(w.view().dot(&r));
        let err = two_inf_subspace_error(&wrot, &w).unwrap();
        assert!(err.aligned_error < 1e-12);
        assert!(err.frob_error < 1e-12);
    }
}
