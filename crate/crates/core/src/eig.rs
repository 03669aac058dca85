//! Deterministic dense symmetric eigendecomposition.
//!
//! Wraps the LAPACK divide-and-conquer driver and post-processes the output
//! into a fixed convention: eigenvalues in descending order, and each
//! eigenvector scaled so its largest-magnitude entry (first such index on
//! ties) is positive. This makes results reproducible bit-for-bit for a
//! fixed input on a fixed platform.

use ndarray::{Array1, Array2, ArrayView2};

use crate::{Error, Result};

/// Eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Returns `(w, v)` with eigenvectors in the columns of `v`, so that
/// `a = v * diag(w) * v^T`.
pub fn eigh_desc(a: ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = check_square(&a)?;
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    let mut buf: Vec<f64> = a.iter().cloned().collect();
    let mut w = vec![0.0f64; n];
    dsyevd(b'V', n, &mut buf, &mut w)?;
    // LAPACK wrote eigenvectors column-major into `buf`; reading the buffer
    // row-major therefore puts eigenvector k into row k.
    let mut v = Array2::<f64>::zeros((n, n));
    for k in 0..n {
        let src = k; // ascending index
        let dst = n - 1 - k; // descending position
        for i in 0..n {
            v[[i, dst]] = buf[src * n + i];
        }
    }
    let w_desc = Array1::from_iter(w.into_iter().rev());
    fix_signs(&mut v);
    Ok((w_desc, v))
}

/// Eigenvalues only, descending.
pub fn eigvalsh_desc(a: ArrayView2<f64>) -> Result<Array1<f64>> {
    let mut w = eigvalsh(&a.to_owned())?;
    w.as_slice_mut().unwrap().reverse();
    Ok(w)
}

/// Eigenvalues only, ascending (LAPACK order).
pub(crate) fn eigvalsh(a: &Array2<f64>) -> Result<Array1<f64>> {
    let n = check_square(&a.view())?;
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let mut buf: Vec<f64> = a.iter().cloned().collect();
    let mut w = vec![0.0f64; n];
    dsyevd(b'N', n, &mut buf, &mut w)?;
    Ok(Array1::from_vec(w))
}

/// Spectral norm of a symmetric matrix (largest eigenvalue magnitude).
pub fn sym_spectral_norm(a: ArrayView2<f64>) -> Result<f64> {
    let w = eigvalsh(&a.to_owned())?;
    Ok(w.iter().fold(0.0f64, |m, &x| m.max(x.abs())))
}

fn dsyevd(jobz: u8, n: usize, a: &mut [f64], w: &mut [f64]) -> Result<()> {
    let ni = n as i32;
    let mut info = 0i32;
    let mut work_query = [0.0f64];
    let mut iwork_query = [0i32];
    unsafe {
        lapack::dsyevd(
            jobz,
            b'L',
            ni,
            a,
            ni,
            w,
            &mut work_query,
            -1,
            &mut iwork_query,
            -1,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    let lwork = work_query[0] as i32;
    let liwork = iwork_query[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack::dsyevd(
            jobz,
            b'L',
            ni,
            a,
            ni,
            w,
            &mut work,
            lwork,
            &mut iwork,
            liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    Ok(())
}

/// Make the largest-magnitude entry of every column positive.
fn fix_signs(v: &mut Array2<f64>) {
    for mut col in v.columns_mut() {
        let mut best = 0usize;
        let mut best_abs = -1.0f64;
        for (i, &x) in col.iter().enumerate() {
            if x.abs() > best_abs {
                best_abs = x.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
    }
}

fn check_square(a: &ArrayView2<f64>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::DimensionMismatch(format!(
            "expected square matrix, got {r}x{c}"
        )));
    }
    Ok(r)
}
