//! Newton construction of the perturbed dominant invariant subspace.
//!
//! Solves the quadratic matrix equation
//! `F(X) = -Ahat_21 + X Ahat_11 - Ahat_22 X + X Ahat_12 X = 0`
//! by the frozen-Jacobian (modified Newton) iteration
//! `X_{t+1} = X_t - S^{-1} F(X_t)`, `X_0 = 0`, where `S` is the fixed
//! Sylvester operator `Z -> Z Ahat_11 - Ahat_22 Z`, and assembles the
//! orthonormal bases `V1hat = (V1 + V2 Xhat)(I + Xhat^T Xhat)^{-1/2}` and
//! its complement. A Newton–Kantorovich certificate `(eta, delta, kappa, h)`
//! guarantees convergence when `h < 1/2`.
//!
//! Internally the iterate is kept in ambient coordinates `Y = V2 X` (an
//! `n x r` matrix in `ran(V2)`), so nothing of size `(n-r)^2` beyond one
//! symmetric eigendecomposition is ever formed; this keeps large sweeps
//! within memory and time budgets.

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use ndarray_linalg::SVD;

use crate::eig::{eigh_desc, eigvalsh_desc};
use crate::mat::{OrthoBasis, SymMatrix};
use crate::norms::{fro_norm, spectral_norm};
use crate::split::{default_gap_tol, spectral_split, PerturbationBlocks, SpectralSplit};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Residual tolerance relative to `||A||_2 + ||E||_2`.
    pub tol: f64,
    pub max_iters: usize,
    /// Refuse to iterate when the NK certificate is invalid.
    pub check_certificate: bool,
    /// Assemble the complement basis `V2hat` (costs `O(n(n-r)r)` time and
    /// `O(n(n-r))` memory; sweeps at large `n` turn it off).
    pub compute_v2hat: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            max_iters: 50,
            check_certificate: true,
            compute_v2hat: true,
        }
    }
}

/// Newton–Kantorovich constants for the frozen-Jacobian iteration.
#[derive(Debug, Clone, Copy)]
pub struct NKCertificate {
    pub eta: f64,
    pub delta: f64,
    pub kappa: f64,
    pub h: f64,
    pub valid: bool,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    /// Root of the quadratic map, `(n-r) x r`, in `V2`-coordinates.
    pub xhat: Array2<f64>,
    /// The same root in ambient coordinates: `yhat = V2 xhat`, `n x r`.
    pub yhat: Array2<f64>,
    pub v1hat: OrthoBasis,
    pub v2hat: Option<OrthoBasis>,
    /// Final `||F(xhat)||_F`.
    pub residual: f64,
    pub iters: usize,
    pub certificate: NKCertificate,
    /// `||F||_F` before each correction, then the final residual.
    pub residual_history: Vec<f64>,
    /// Content hashes of the `A` and `E` this result was computed from;
    /// consumers use them to reject stale pairings.
    pub a_hash: u64,
    pub e_hash: u64,
}

/// Solves `Z a11 - a22 Z = f` for symmetric blocks with disjoint spectra by
/// diagonalizing both blocks and dividing entrywise by eigenvalue
/// differences.
pub fn sylvester_solve(
    a11: ArrayView2<f64>,
    a22: ArrayView2<f64>,
    f: ArrayView2<f64>,
) -> Result<Array2<f64>> {
    let r = a11.nrows();
    let m = a22.nrows();
    if a11.ncols() != r || a22.ncols() != m || f.dim() != (m, r) {
        return Err(Error::DimensionMismatch(format!(
            "sylvester_solve shapes: a11 {:?}, a22 {:?}, f {:?}",
            a11.dim(),
            a22.dim(),
            f.dim()
        )));
    }
    let (mu, q) = eigh_desc(a11)?;
    let (nu, u) = eigh_desc(a22)?;
    let scale = abs_max(mu.view()).max(abs_max(nu.view()));
    let mut ft = u.t().dot(&f).dot(&q);
    for i in 0..m {
        for j in 0..r {
            let denom = mu[j] - nu[i];
            if denom.abs() < 1e-14 * scale.max(1e-300) {
                return Err(Error::SingularOperator(format!(
                    "eigenvalue collision: |{} - {}| below tolerance",
                    mu[j], nu[i]
                )));
            }
            ft[[i, j]] /= denom;
        }
    }
    Ok(u.dot(&ft).dot(&q.t()))
}

/// Evaluates the quadratic map
/// `F(X) = -Ahat_21 + X Ahat_11 - Ahat_22 X + X Ahat_12 X`
/// with `Ahat_ij = diag(lambda_i) [i==j] + E_ij`.
pub fn quadratic_residual(
    x: ArrayView2<f64>,
    lambda1: ArrayView1<f64>,
    lambda2: ArrayView1<f64>,
    blocks: &PerturbationBlocks,
) -> Result<Array2<f64>> {
    let (m, r) = x.dim();
    if lambda1.len() != r || lambda2.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "x is {m}x{r} but spectra have lengths {} and {}",
            lambda1.len(),
            lambda2.len()
        )));
    }
    let a11 = &Array2::from_diag(&lambda1) + &blocks.e11;
    let mut out = -blocks.e21.clone();
    out += &x.dot(&a11);
    // Ahat_22 X = diag(lambda2) X + E22 X.
    for (mut row, (&lam, xr)) in out
        .rows_mut()
        .into_iter()
        .zip(lambda2.iter().zip(x.rows()))
    {
        for (o, &xv) in row.iter_mut().zip(xr.iter()) {
            *o -= lam * xv;
        }
    }
    out -= &blocks.e22.dot(&x);
    out += &x.dot(&blocks.e12).dot(&x);
    Ok(out)
}

/// NK certificate from the separation and perturbation block norms:
/// `sep_lb = sep2(Lambda1, Lambda2) - 2||E||_2`, `eta = ||E21||_2 / sep_lb`,
/// `kappa = ||E12||_2 / sep_lb`, `delta = 0`, `h = eta*kappa/(1-delta)^2`.
pub fn nk_certificate(split: &SpectralSplit, blocks: &PerturbationBlocks) -> NKCertificate {
    let n = split.n();
    let mut e = Array2::zeros((n, n));
    let r = split.r;
    e.slice_mut(ndarray::s![..r, ..r]).assign(&blocks.e11);
    e.slice_mut(ndarray::s![..r, r..]).assign(&blocks.e12);
    e.slice_mut(ndarray::s![r.., ..r]).assign(&blocks.e21);
    e.slice_mut(ndarray::s![r.., r..]).assign(&blocks.e22);
    // The block matrix is an orthogonal similarity of E.
    let e_norm = crate::eig::sym_spectral_norm(e.view()).expect("square");
    nk_certificate_from_norms(
        split.sep2(),
        blocks.e21_spectral_norm(),
        spectral_norm(blocks.e12.view()),
        e_norm,
    )
}

pub fn nk_certificate_from_norms(
    sep2: f64,
    e21_norm: f64,
    e12_norm: f64,
    e_norm: f64,
) -> NKCertificate {
    let sep_lb = sep2 - 2.0 * e_norm;
    if sep_lb <= 0.0 {
        return NKCertificate {
            eta: f64::INFINITY,
            delta: 0.0,
            kappa: f64::INFINITY,
            h: f64::INFINITY,
            valid: false,
        };
    }
    let eta = e21_norm / sep_lb;
    let kappa = e12_norm / sep_lb;
    let h = eta * kappa;
    NKCertificate {
        eta,
        delta: 0.0,
        kappa,
        h,
        valid: h < 0.5,
    }
}

/// Runs the iteration after computing the split of `A` at rank `r`.
pub fn newton_subspace(
    a: &SymMatrix,
    e: &SymMatrix,
    r: usize,
    opts: &NewtonOptions,
) -> Result<NewtonResult> {
    let anorm = a.spectral_norm();
    let split = spectral_split(a, r, default_gap_tol(anorm))?;
    newton_subspace_with_split(a, e, &split, opts)
}

/// Runs the iteration against a precomputed split of `A` (callers that know
/// the split analytically skip one eigendecomposition).
pub fn newton_subspace_with_split(
    a: &SymMatrix,
    e: &SymMatrix,
    split: &SpectralSplit,
    opts: &NewtonOptions,
) -> Result<NewtonResult> {
    let n = a.n();
    let r = split.r;
    if e.n() != n || split.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "A is {n}x{n}, E is {0}x{0}, split over {1}",
            e.n(),
            split.n()
        )));
    }
    let v1 = split.v1.as_array();
    let anorm = abs_max(split.lambda1.view()).max(abs_max(split.lambda2.view()));
    let enorm = e.spectral_norm();
    let scale = anorm + enorm;
    let tol_abs = opts.tol * scale;

    // Small projected pieces. w = P2 E V1 is Ahat_21 in ambient coordinates.
    let ev1 = e.as_array().dot(v1);
    let e11 = v1.t().dot(&ev1);
    let mut a11 = Array2::from_diag(&split.lambda1);
    a11 += &e11;
    let w = &ev1 - &v1.dot(&e11);
    let e21_norm = spectral_norm(w.view());
    let certificate = nk_certificate_from_norms(split.sep2(), e21_norm, e21_norm, enorm);
    if opts.check_certificate && !certificate.valid {
        return Err(Error::CertificateInvalid(format!(
            "NK h = {:.3e} (eta = {:.3e}, kappa = {:.3e}) not below 1/2",
            certificate.h, certificate.eta, certificate.kappa
        )));
    }

    let hashes = (a.content_hash(), e.content_hash());
    let mut residual_history = Vec::new();
    let res0 = fro_norm(w.view());
    residual_history.push(res0);
    if res0 <= tol_abs {
        // E21 = 0: V1 already spans the perturbed dominant subspace.
        return finish(
            Array2::zeros((n, r)),
            split,
            res0,
            0,
            certificate,
            residual_history,
            hashes,
            opts,
        );
    }

    // Frozen Sylvester operator in ambient coordinates:
    // S(Y) = Y a11 - M Y with M = P2 (A+E) P2, applied in the eigenbases of
    // a11 and M. M carries r artificial zero eigenvalues with eigenvectors
    // in ran(V1); those directions are excluded from every solve.
    let b = &col_scaled(v1, split.lambda1.view()) + &ev1; // (A+E) V1
    let mut m = a.as_array() + e.as_array();
    general_mat_mul(-1.0, v1, &b.t(), 1.0, &mut m);
    general_mat_mul(-1.0, &b, &v1.t(), 1.0, &mut m);
    let v1a11 = v1.dot(&a11);
    general_mat_mul(1.0, &v1a11, &v1.t(), 1.0, &mut m);
    let (nu, u) = eigh_desc(m.view())?;
    drop(m);
    let (mu, q) = eigh_desc(a11.view())?;
    // Artificial directions: eigenvectors with large ran(V1) component.
    let v1tu = v1.t().dot(&u);
    let artificial: Vec<bool> = (0..n)
        .map(|i| v1tu.column(i).iter().map(|x| x * x).sum::<f64>() > 0.25)
        .collect();
    let coll_tol = 1e-14 * scale.max(1e-300);
    for i in 0..n {
        if artificial[i] {
            continue;
        }
        for j in 0..r {
            if (mu[j] - nu[i]).abs() < coll_tol {
                return Err(Error::SingularOperator(format!(
                    "eigenvalue collision between split blocks: |{} - {}| < {coll_tol:.3e}",
                    mu[j], nu[i]
                )));
            }
        }
    }

    let mut y = Array2::<f64>::zeros((n, r));
    let mut res;
    let mut iters = 0usize;
    loop {
        // G(Y) = -W + Y a11 - M Y + Y (B^T Y); M Y is applied via the
        // stored eigenpairs to reuse them for the solve below.
        let uty = u.t().dot(&y);
        let mut g = y.dot(&a11) - u.dot(&col_scaled_rows(&uty, nu.view()));
        g -= &w;
        g += &y.dot(&b.t().dot(&y));
        res = fro_norm(g.view());
        if iters > 0 {
            residual_history.push(res);
        }
        if res <= tol_abs {
            break;
        }
        if iters >= opts.max_iters {
            return Err(Error::IterationFailure {
                residual: res,
                iters,
            });
        }
        let mut gt = u.t().dot(&g).dot(&q);
        for i in 0..n {
            for j in 0..r {
                if artificial[i] {
                    gt[[i, j]] = 0.0;
                } else {
                    gt[[i, j]] /= mu[j] - nu[i];
                }
            }
        }
        let delta = u.dot(&gt).dot(&q.t());
        y -= &delta;
        // Numerical hygiene: keep the iterate in ran(V2).
        let v1ty = v1.t().dot(&y);
        general_mat_mul(-1.0, v1, &v1ty, 1.0, &mut y);
        iters += 1;
    }

    finish(
        y,
        split,
        res,
        iters,
        certificate,
        residual_history,
        hashes,
        opts,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    y: Array2<f64>,
    split: &SpectralSplit,
    residual: f64,
    iters: usize,
    certificate: NKCertificate,
    residual_history: Vec<f64>,
    hashes: (u64, u64),
    opts: &NewtonOptions,
) -> Result<NewtonResult> {
    let v1 = split.v1.as_array();
    let v2 = split.v2.as_array();
    // (I + Xhat^T Xhat)^{-1/2} from the r x r Gram of Y (V2 is an isometry
    // on ran(V2), so Y^T Y = Xhat^T Xhat).
    let mut gram = y.t().dot(&y);
    for i in 0..gram.nrows() {
        gram[[i, i]] += 1.0;
    }
    let inv_sqrt = sym_inv_sqrt(&gram)?;
    let v1hat_raw = (v1 + &y).dot(&inv_sqrt);
    let v1hat = OrthoBasis::new(v1hat_raw)?;
    let xhat = v2.t().dot(&y);
    let v2hat = if opts.compute_v2hat {
        Some(build_v2hat(v1, v2, &xhat)?)
    } else {
        None
    };
    Ok(NewtonResult {
        xhat,
        yhat: y,
        v1hat,
        v2hat,
        residual,
        iters,
        certificate,
        residual_history,
        a_hash: hashes.0,
        e_hash: hashes.1,
    })
}

/// `V2hat = (V2 - V1 Xhat^T)(I + Xhat Xhat^T)^{-1/2}`, with the large
/// inverse square root applied through the thin SVD of `Xhat`.
fn build_v2hat(
    v1: &Array2<f64>,
    v2: &Array2<f64>,
    xhat: &Array2<f64>,
) -> Result<OrthoBasis> {
    let c = v2 - &v1.dot(&xhat.t());
    if fro_norm(xhat.view()) == 0.0 {
        return OrthoBasis::new(c);
    }
    let (p, s, _vt) = xhat
        .svd(true, false)
        .map_err(|e| Error::InvalidInput(format!("SVD failed: {e}")))?;
    let p = p.expect("requested U");
    // Thin SVD: keep the leading r columns of P.
    let k = s.len();
    let p = p.slice(ndarray::s![.., ..k]).to_owned();
    // (I + Xhat Xhat^T)^{-1/2} = I + P diag((1+s^2)^{-1/2} - 1) P^T.
    let d = Array1::from_iter(s.iter().map(|&sv| 1.0 / (1.0 + sv * sv).sqrt() - 1.0));
    let cp = c.dot(&p);
    let mut out = c;
    general_mat_mul(1.0, &col_scaled(&cp, d.view()), &p.t(), 1.0, &mut out);
    OrthoBasis::new(out)
}

/// Eigenvalue-inclusion verification of a converged result: the block
/// `V1hat^T Ahat V1hat` must have spectrum inside
/// `Lambda(Lambda1) + 2||E||_2 [-1, 1]`, the complementary block inside the
/// analogous interval around `Lambda2`, and the first block must dominate.
#[derive(Debug, Clone, Copy)]
pub struct InclusionReport {
    pub ok: bool,
    pub block1_in: bool,
    pub block2_in: bool,
    pub dominant: bool,
}

pub fn eigenvalue_inclusion_check(
    result: &NewtonResult,
    split: &SpectralSplit,
    a: &SymMatrix,
    e: &SymMatrix,
) -> Result<InclusionReport> {
    if result.a_hash != a.content_hash() || result.e_hash != e.content_hash() {
        return Err(Error::StaleResult);
    }
    let r = split.r;
    let ahat = a.as_array() + e.as_array();
    let enorm = e.spectral_norm();
    let av = ahat.dot(&result.v1hat.view());
    let block1 = result.v1hat.view().t().dot(&av);
    let block1_sym = SymMatrix::symmetrized(block1)?;
    let b1 = eigvalsh_desc(block1_sym.view())?;
    // The complement spectrum is Lambda(Ahat) minus the block-1 eigenvalues.
    let all = eigvalsh_desc(ahat.view())?;
    let mut used = vec![false; all.len()];
    for &lam in b1.iter() {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, &x) in all.iter().enumerate() {
            if !used[i] && (x - lam).abs() < best_d {
                best_d = (x - lam).abs();
                best = i;
            }
        }
        used[best] = true;
    }
    let b2: Vec<f64> = all
        .iter()
        .enumerate()
        .filter(|(i, _)| !used[*i])
        .map(|(_, &x)| x)
        .collect();

    let slack = 2.0 * enorm + 1e-12 * (abs_max(all.view()).max(1.0));
    let l1_lo = split.lambda1[r - 1] - slack;
    let l1_hi = split.lambda1[0] + slack;
    let l2_lo = split.lambda2[split.lambda2.len() - 1] - slack;
    let l2_hi = split.lambda2[0] + slack;
    let block1_in = b1.iter().all(|&x| x >= l1_lo && x <= l1_hi);
    let block2_in = b2.iter().all(|&x| x >= l2_lo && x <= l2_hi);
    let min_b1 = b1.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_b2 = b2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dominant = min_b1 > max_b2;
    Ok(InclusionReport {
        ok: block1_in && block2_in && dominant,
        block1_in,
        block2_in,
        dominant,
    })
}

fn abs_max(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Columns of `m` scaled by the entries of `d`.
fn col_scaled(m: &Array2<f64>, d: ArrayView1<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for (mut col, &lam) in out.columns_mut().into_iter().zip(d.iter()) {
        col.mapv_inplace(|x| x * lam);
    }
    out
}

/// Rows of `m` scaled by the entries of `d`.
fn col_scaled_rows(m: &Array2<f64>, d: ArrayView1<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for (mut row, &lam) in out.rows_mut().into_iter().zip(d.iter()) {
        row.mapv_inplace(|x| x * lam);
    }
    out
}

/// Inverse square root of a symmetric positive definite matrix.
fn sym_inv_sqrt(g: &Array2<f64>) -> Result<Array2<f64>> {
    let (w, v) = eigh_desc(g.view())?;
    if w.iter().any(|&x| x <= 0.0) {
        return Err(Error::SingularOperator(
            "Gram matrix not positive definite".into(),
        ));
    }
    let scaled = col_scaled(&v, w.mapv(|x| 1.0 / x.sqrt()).view());
    Ok(scaled.dot(&v.t()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procrustes::{procrustes_align, sin_theta_distance};
    use crate::split::project_blocks;
    use ndarray::array;

    fn det_sym(n: usize, scale: f64, salt: u64) -> SymMatrix {
        let a = Array2::from_shape_fn((n, n), |(i, j)| {
            let (lo, hi) = (i.min(j), i.max(j));
            scale * (((lo * 131 + hi * 31 + 7 * salt as usize) as f64).sin())
        });
        SymMatrix::symmetrized(a).unwrap()
    }

    #[test]
    fn sylvester_scaled_identity() {
        let a11 = Array2::eye(2) * 2.0;
        let a22 = Array2::zeros((3, 3));
        let f = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let z = sylvester_solve(a11.view(), a22.view(), f.view()).unwrap();
        for (zv, fv) in z.iter().zip(f.iter()) {
            assert!((zv - fv / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sylvester_diagonal_entrywise() {
        let a11 = Array2::from_diag(&array![3.0, 5.0]);
        let a22 = Array2::from_diag(&array![1.0, -1.0, 0.0]);
        let f = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let z = sylvester_solve(a11.view(), a22.view(), f.view()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                let expect = 1.0 / (a11[[j, j]] - a22[[i, i]]);
                assert!((z[[i, j]] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sylvester_random_residual() {
        let a11 = {
            let mut m = det_sym(3, 0.3, 1).into_array();
            for i in 0..3 {
                m[[i, i]] += 10.0;
            }
            m
        };
        let a22 = det_sym(12, 0.5, 2).into_array();
        let f = Array2::from_shape_fn((12, 3), |(i, j)| ((i * 7 + j * 3) as f64).cos());
        let z = sylvester_solve(a11.view(), a22.view(), f.view()).unwrap();
        let resid = &z.dot(&a11) - &a22.dot(&z) - &f;
        let scale = (spectral_norm(a11.view()) + spectral_norm(a22.view())) * fro_norm(z.view());
        assert!(fro_norm(resid.view()) <= 1e-12 * scale);
    }

    #[test]
    fn sylvester_collision_errors() {
        let a11 = array![[1.0]];
        let a22 = array![[1.0]];
        let f = array![[1.0]];
        assert!(matches!(
            sylvester_solve(a11.view(), a22.view(), f.view()),
            Err(Error::SingularOperator(_))
        ));
    }

    #[test]
    fn quadratic_residual_at_zero() {
        let a = SymMatrix::new(Array2::from_diag(&array![3.0, 1.0, 0.5])).unwrap();
        let split = spectral_split(&a, 1, 0.0).unwrap();
        let e = det_sym(3, 0.01, 3);
        let blocks = project_blocks(&e, &split).unwrap();
        let x = Array2::zeros((2, 1));
        let f = quadratic_residual(
            x.view(),
            split.lambda1.view(),
            split.lambda2.view(),
            &blocks,
        )
        .unwrap();
        for (fv, ev) in f.iter().zip(blocks.e21.iter()) {
            assert!((fv + ev).abs() < 1e-15);
        }
    }

    #[test]
    fn certificate_cases() {
        // E = 0: everything zero and valid.
        let c = nk_certificate_from_norms(1.0, 0.0, 0.0, 0.0);
        assert!(c.valid && c.eta == 0.0 && c.h == 0.0);
        // ||E||_2 = sep2/4: h <= 1/4 < 1/2.
        let c = nk_certificate_from_norms(1.0, 0.25, 0.25, 0.25);
        assert!(c.valid && c.h <= 0.25 + 1e-15);
        // ||E||_2 = sep2/2: denominator collapses, invalid.
        let c = nk_certificate_from_norms(1.0, 0.5, 0.5, 0.5);
        assert!(!c.valid);
    }

    #[test]
    fn zero_perturbation_short_circuits() {
        let a = SymMatrix::new(Array2::from_diag(&array![4.0, 2.0, 1.0, 0.0])).unwrap();
        let split = spectral_split(&a, 1, 0.0).unwrap();
        let res = newton_subspace(&a, &SymMatrix::zeros(4), 1, &NewtonOptions::default()).unwrap();
        assert_eq!(res.iters, 0);
        assert_eq!(res.residual, 0.0);
        assert!(res.xhat.iter().all(|x| *x == 0.0));
        let diff = &res.v1hat.view() - &split.v1.view();
        assert!(diff.iter().all(|x| x.abs() < 1e-14));
        assert!(res.certificate.valid);
    }

    #[test]
    fn small_instance_full_contract() {
        let n = 20;
        let r = 2;
        let a = {
            let mut d = Array2::zeros((n, n));
            for i in 0..n {
                d[[i, i]] = if i < r { 5.0 + i as f64 } else { 1.0 - 0.05 * i as f64 };
            }
            SymMatrix::new(d).unwrap()
        };
        let split = spectral_split(&a, r, 0.0).unwrap();
        let sep2 = split.sep2();
        let mut e = det_sym(n, 1.0, 9);
        let enorm = e.spectral_norm();
        e = SymMatrix::symmetrized(e.into_array() * (sep2 / (10.0 * enorm))).unwrap();

        let res = newton_subspace(&a, &e, r, &NewtonOptions::default()).unwrap();
        let scale = a.spectral_norm() + e.spectral_norm();
        assert!(res.residual <= 1e-13 * scale);
        assert!(res.iters <= 8, "iters = {}", res.iters);

        // Orthonormality and mutual orthogonality.
        let v1h = res.v1hat.view();
        let v2h = res.v2hat.as_ref().unwrap().view();
        let cross = v2h.t().dot(&v1h);
        assert!(cross.iter().all(|x| x.abs() < 1e-12));

        // Invariance of ran(V1hat) under Ahat.
        let ahat = a.as_array() + e.as_array();
        let block = v1h.t().dot(&ahat.dot(&v1h));
        let resid = ahat.dot(&v1h) - v1h.dot(&block);
        assert!(fro_norm(resid.view()) <= 1e-10 * scale);

        // Lemma-style norm bound on the root.
        let blocks = project_blocks(&e, &split).unwrap();
        let e21n = blocks.e21_spectral_norm();
        assert!(spectral_norm(res.xhat.view()) <= 4.0 * e21n / sep2);

        // Procrustes factor is the identity.
        let u = procrustes_align(&res.v1hat, &split.v1).unwrap();
        for i in 0..r {
            for j in 0..r {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((u[[i, j]] - expect).abs() < 1e-10);
            }
        }

        // Agreement with the dense eigensolver's dominant subspace.
        let (_, v) = eigh_desc(ahat.view()).unwrap();
        let dom = OrthoBasis::new(v.slice(ndarray::s![.., ..r]).to_owned()).unwrap();
        assert!(sin_theta_distance(&res.v1hat, &dom).unwrap() <= 1e-10);

        // Quadratic convergence of the residual history.
        for pair in res.residual_history.windows(2) {
            assert!(pair[1] <= pair[0]);
        }

        // Eigenvalue inclusion.
        let inc = eigenvalue_inclusion_check(&res, &split, &a, &e).unwrap();
        assert!(inc.ok);

        // Stale detection.
        let other = det_sym(n, 0.01, 77);
        assert!(matches!(
            eigenvalue_inclusion_check(&res, &split, &a, &other),
            Err(Error::StaleResult)
        ));
    }

    #[test]
    fn invalid_certificate_rejected() {
        let a = SymMatrix::new(Array2::from_diag(&array![2.0, 0.0, 0.0, 0.0])).unwrap();
        let e = det_sym(4, 1.0, 5); // huge relative to sep2 = 2
        let err = newton_subspace(&a, &e, 1, &NewtonOptions::default()).unwrap_err();
        assert!(matches!(err, Error::CertificateInvalid(_)));
        // Best-effort mode still runs.
        let opts = NewtonOptions {
            check_certificate: false,
            ..NewtonOptions::default()
        };
        let _ = newton_subspace(&a, &e, 1, &opts);
    }
}
