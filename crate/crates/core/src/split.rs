//! Spectral splits of symmetric matrices and block projections of
//! perturbations onto the split bases.

use ndarray::{Array1, Array2};

use crate::eig::eigh_desc;
use crate::mat::{OrthoBasis, SymMatrix};
use crate::{Error, Result};

/// Eigendecomposition of a symmetric matrix partitioned at rank `r`:
/// `A = V1 diag(lambda1) V1^T + V2 diag(lambda2) V2^T` with
/// `min(lambda1) > max(lambda2)`.
///
/// `lambda2` explicitly carries any zero eigenvalues of `A`; they take part
/// in the separation quantities.
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub v1: OrthoBasis,
    pub lambda1: Array1<f64>,
    pub v2: OrthoBasis,
    pub lambda2: Array1<f64>,
    pub r: usize,
}

impl SpectralSplit {
    pub fn n(&self) -> usize {
        self.v1.n()
    }

    /// `sep_2(Lambda_1, Lambda_2) = min(lambda1) - max(lambda2)`.
    pub fn sep2(&self) -> f64 {
        self.lambda1[self.r - 1] - self.lambda2[0]
    }

    /// Reconstructs `A`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let a1 = scaled_outer(self.v1.as_array(), &self.lambda1);
        let a2 = scaled_outer(self.v2.as_array(), &self.lambda2);
        a1 + a2
    }

    /// `V2 diag(lambda2) V2^T` as a dense matrix.
    pub fn complement_operator(&self) -> Array2<f64> {
        scaled_outer(self.v2.as_array(), &self.lambda2)
    }

    /// Projects a vector onto `ran V1` / `ran V2` without forming projectors.
    pub fn project_onto_v2(&self, m: &Array2<f64>) -> Array2<f64> {
        let v1 = self.v1.as_array();
        m - &v1.dot(&v1.t().dot(m))
    }
}

fn scaled_outer(v: &Array2<f64>, w: &Array1<f64>) -> Array2<f64> {
    let mut scaled = v.clone();
    for (mut col, &lam) in scaled.columns_mut().into_iter().zip(w.iter()) {
        col.mapv_inplace(|x| x * lam);
    }
    scaled.dot(&v.t())
}

/// Default tolerance for the strict `lambda_r > lambda_{r+1}` check,
/// relative to the spectral norm of `A`.
pub fn default_gap_tol(a_norm: f64) -> f64 {
    1e-10 * a_norm
}

/// Computes the descending eigendecomposition of `a` and splits it at rank
/// `r`. Fails if `lambda_r - lambda_{r+1} <= gap_tol`.
pub fn spectral_split(a: &SymMatrix, r: usize, gap_tol: f64) -> Result<SpectralSplit> {
    let n = a.n();
    if r == 0 || r >= n {
        return Err(Error::InvalidInput(format!(
            "split rank must satisfy 1 <= r < n, got r = {r}, n = {n}"
        )));
    }
    let (w, v) = eigh_desc(a.view())?;
    let gap = w[r - 1] - w[r];
    if gap <= gap_tol {
        return Err(Error::DegenerateSplit(format!(
            "lambda_{r} - lambda_{} = {gap:.3e} <= tolerance {gap_tol:.3e}",
            r + 1
        )));
    }
    let v1 = v.slice(ndarray::s![.., ..r]).to_owned();
    let v2 = v.slice(ndarray::s![.., r..]).to_owned();
    Ok(SpectralSplit {
        v1: OrthoBasis::new_unchecked(v1),
        lambda1: w.slice(ndarray::s![..r]).to_owned(),
        v2: OrthoBasis::new_unchecked(v2),
        lambda2: w.slice(ndarray::s![r..]).to_owned(),
        r,
    })
}

/// Projections `E_{i,j} = V_i^T E V_j` of a perturbation onto a split.
#[derive(Debug, Clone)]
pub struct PerturbationBlocks {
    pub e11: Array2<f64>,
    pub e12: Array2<f64>,
    pub e21: Array2<f64>,
    pub e22: Array2<f64>,
}

impl PerturbationBlocks {
    pub fn e21_spectral_norm(&self) -> f64 {
        crate::norms::spectral_norm(self.e21.view())
    }
}

/// Computes all four blocks `V_i^T E V_j`.
pub fn project_blocks(e: &SymMatrix, split: &SpectralSplit) -> Result<PerturbationBlocks> {
    if e.n() != split.n() {
        return Err(Error::DimensionMismatch(format!(
            "perturbation is {}x{} but split is over dimension {}",
            e.n(),
            e.n(),
            split.n()
        )));
    }
    let v1 = split.v1.as_array();
    let v2 = split.v2.as_array();
    let ev1 = e.as_array().dot(v1);
    let ev2 = e.as_array().dot(v2);
    Ok(PerturbationBlocks {
        e11: v1.t().dot(&ev1),
        e12: v1.t().dot(&ev2),
        e21: v2.t().dot(&ev1),
        e22: v2.t().dot(&ev2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn diag(d: &[f64]) -> SymMatrix {
        SymMatrix::new(Array2::from_diag(&Array1::from_vec(d.to_vec()))).unwrap()
    }

    #[test]
    fn identity_split_is_degenerate() {
        let a = diag(&[1.0, 1.0, 1.0]);
        let err = spectral_split(&a, 1, default_gap_tol(1.0)).unwrap_err();
        assert!(matches!(err, Error::DegenerateSplit(_)));
    }

    #[test]
    fn simple_diag_split() {
        let a = diag(&[3.0, 2.0, 1.0]);
        let s = spectral_split(&a, 1, 0.0).unwrap();
        assert_eq!(s.lambda1.as_slice().unwrap(), &[3.0]);
        assert_eq!(s.lambda2.as_slice().unwrap(), &[2.0, 1.0]);
        assert!((s.v1.view()[[0, 0]].abs() - 1.0).abs() < 1e-14);
        assert_eq!(s.sep2(), 1.0);
    }

    #[test]
    fn reconstruction_matches() {
        let a = SymMatrix::symmetrized(array![
            [1.0, 0.3, -0.2, 0.0],
            [0.3, 0.5, 0.1, 0.2],
            [-0.2, 0.1, -0.4, 0.05],
            [0.0, 0.2, 0.05, 2.0]
        ])
        .unwrap();
        let s = spectral_split(&a, 2, 0.0).unwrap();
        let recon = s.reconstruct();
        let norm = a.spectral_norm();
        for (x, y) in a.view().iter().zip(recon.iter()) {
            assert!((x - y).abs() < 1e-10 * norm);
        }
        // v1 and v2 are mutually orthogonal.
        let cross = s.v1.view().t().dot(&s.v2.view());
        assert!(cross.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn blocks_of_zero_perturbation() {
        let a = diag(&[3.0, 2.0, 1.0]);
        let s = spectral_split(&a, 1, 0.0).unwrap();
        let blocks = project_blocks(&SymMatrix::zeros(3), &s).unwrap();
        assert!(blocks.e11.iter().all(|x| *x == 0.0));
        assert!(blocks.e22.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn blocks_symmetry_and_injection() {
        let a = diag(&[3.0, 2.0, 1.0, 0.5]);
        let s = spectral_split(&a, 2, 0.0).unwrap();
        // E = V2 M V1^T + V1 M^T V2^T has e21 = M and zero diagonal blocks.
        let m = array![[0.7, -0.3], [0.2, 0.9]];
        let v1 = s.v1.as_array();
        let v2 = s.v2.as_array();
        let e_raw = v2.dot(&m).dot(&v1.t()) + v1.dot(&m.t()).dot(&v2.t());
        let e = SymMatrix::symmetrized(e_raw).unwrap();
        let blocks = project_blocks(&e, &s).unwrap();
        for ((x, y), z) in blocks.e21.iter().zip(m.iter()).zip(blocks.e12.t().iter()) {
            assert!((x - y).abs() < 1e-12);
            assert!((x - z).abs() < 1e-12);
        }
        assert!(blocks.e11.iter().all(|x| x.abs() < 1e-12));
        assert!(blocks.e22.iter().all(|x| x.abs() < 1e-12));
    }
}
