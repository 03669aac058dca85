//! Deterministic construction of every example family used by the
//! experiments: the low-rank and coherent model matrices, Gaussian
//! perturbations, the bound-saturating deterministic perturbation, and the
//! restricted-separation example.
//!
//! All model matrices come with closed-form spectral splits (complement
//! bases built from Helmert-style zero-sum vectors), so no eigensolve is
//! needed to set up an instance.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::mat::{OrthoBasis, SymMatrix};
use crate::split::SpectralSplit;
use crate::{Error, Result};

pub const RNG_ALGORITHM: &str = "chacha8";

/// Base seed plus deterministic substream derivation, so parallel trials
/// reproduce bit-identically regardless of schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeededRng {
    pub seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    /// Stream keyed by `(seed, a, b)` via FNV-1a over the three words.
    pub fn stream(&self, a: u64, b: u64) -> ChaCha8Rng {
        let mut h = 0xcbf29ce484222325u64;
        for word in [self.seed, a, b] {
            for byte in word.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    LowRank,
    Coherent,
    Tightness,
    SepExample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SigmaRule {
    Fixed { value: f64 },
    /// `sigma = n^{-exponent}`.
    PowerLaw { exponent: f64 },
}

impl SigmaRule {
    pub fn sigma(&self, n: usize) -> f64 {
        match self {
            SigmaRule::Fixed { value } => *value,
            SigmaRule::PowerLaw { exponent } => (n as f64).powf(-exponent),
        }
    }
}

/// Descriptor of a generated instance, embedded in sweep outputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub sigma: SigmaRule,
    pub seed: u64,
}

fn require_even(n: usize, min: usize) -> Result<()> {
    if n < min || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "family requires even n >= {min}, got {n}"
        )));
    }
    Ok(())
}

/// `+1` on the first half of the coordinates, `-1` on the second half.
fn pm_vector(n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |i| if i < n / 2 { 1.0 } else { -1.0 })
}

/// Appends the zero-sum Helmert basis over the given coordinate positions:
/// vector `k` (1-based) has `1/sqrt(k(k+1))` on the first `k` positions and
/// `-k/sqrt(k(k+1))` on position `k`. The `m - 1` columns are orthonormal
/// and orthogonal to the indicator of the positions.
fn push_helmert_columns(cols: &mut Vec<Array1<f64>>, positions: &[usize], n: usize) {
    let m = positions.len();
    for k in 1..m {
        let kf = k as f64;
        let scale = 1.0 / (kf * (kf + 1.0)).sqrt();
        let mut v = Array1::zeros(n);
        for &p in &positions[..k] {
            v[p] = scale;
        }
        v[positions[k]] = -kf * scale;
        cols.push(v);
    }
}

fn columns_to_basis(cols: Vec<Array1<f64>>, n: usize) -> OrthoBasis {
    let k = cols.len();
    let mut m = Array2::zeros((n, k));
    for (j, c) in cols.into_iter().enumerate() {
        m.column_mut(j).assign(&c);
    }
    OrthoBasis::new_unchecked(m)
}

/// Orthonormal complement of `span{1, 1_pm}`: zero-sum vectors within each
/// half of the coordinates.
fn half_helmert_complement(n: usize) -> OrthoBasis {
    let first: Vec<usize> = (0..n / 2).collect();
    let second: Vec<usize> = (n / 2..n).collect();
    let mut cols = Vec::with_capacity(n - 2);
    push_helmert_columns(&mut cols, &first, n);
    push_helmert_columns(&mut cols, &second, n);
    columns_to_basis(cols, n)
}

fn ones_pm_basis(n: usize) -> OrthoBasis {
    let s = 1.0 / (n as f64).sqrt();
    let pm = pm_vector(n);
    let mut v1 = Array2::zeros((n, 2));
    for i in 0..n {
        v1[[i, 0]] = s;
        v1[[i, 1]] = pm[i] * s;
    }
    OrthoBasis::new_unchecked(v1)
}

/// Rank-2 projector model: `A = V1 V1^T` with `V1 = [1, 1_pm]/sqrt(n)`.
/// Eigenvalues `{1, 1, 0, ...}`; the certified gap is 1.
pub fn gen_low_rank(n: usize) -> Result<(SymMatrix, SpectralSplit)> {
    require_even(n, 4)?;
    let inv = 1.0 / n as f64;
    let pm = pm_vector(n);
    let a = Array2::from_shape_fn((n, n), |(i, j)| (1.0 + pm[i] * pm[j]) * inv);
    let split = SpectralSplit {
        v1: ones_pm_basis(n),
        lambda1: Array1::from_elem(2, 1.0),
        v2: half_helmert_complement(n),
        lambda2: Array1::zeros(n - 2),
        r: 2,
    };
    Ok((SymMatrix::new(a)?, split))
}

/// Coherent full-rank model: `A = 4 V1 V1^T + v2 v2^T` with
/// `v2 = e1 - e2`. Eigenvalues `{4, 4, 2, 0, ...}`; the complement operator
/// `v2 v2^T` has constant two-to-infinity norm in `n`.
pub fn gen_coherent(n: usize) -> Result<(SymMatrix, SpectralSplit)> {
    require_even(n, 4)?;
    let inv = 1.0 / n as f64;
    let pm = pm_vector(n);
    let e12 = |i: usize| -> f64 {
        match i {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        }
    };
    let a = Array2::from_shape_fn((n, n), |(i, j)| {
        4.0 * (1.0 + pm[i] * pm[j]) * inv + e12(i) * e12(j)
    });
    // The leading Helmert vector over the first half is exactly
    // (e1 - e2)/sqrt(2), the eigenvector for the eigenvalue 2, so the
    // half-Helmert complement is already an eigenbasis ordering for
    // lambda2 = (2, 0, ..., 0).
    let split = SpectralSplit {
        v1: ones_pm_basis(n),
        lambda1: Array1::from_elem(2, 4.0),
        v2: half_helmert_complement(n),
        lambda2: {
            let mut l = Array1::zeros(n - 2);
            l[0] = 2.0;
            l
        },
        r: 2,
    };
    Ok((SymMatrix::new(a)?, split))
}

/// Symmetric Gaussian perturbation `E = sigma * Z`, `Z` iid standard normal
/// on the upper triangle (diagonal included) and mirrored. The triangle is
/// sampled in a fixed row-major order, so output is bit-reproducible per
/// RNG state.
pub fn gen_gaussian_perturbation(
    n: usize,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SymMatrix> {
    if sigma < 0.0 {
        return Err(Error::InvalidInput(format!("negative sigma {sigma}")));
    }
    let mut e = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let z: f64 = rng.sample(StandardNormal);
            let v = sigma * z;
            e[[i, j]] = v;
            e[[j, i]] = v;
        }
    }
    SymMatrix::new(e)
}

/// Deterministic bound-saturating example: `r = 1`, `lambda_1 = 1`,
/// `V1 = 1/sqrt(n)`, with `E` built from a coherent rank-2 block
/// `B = (p s^T + s p^T)/sqrt(n)` (`p = P2 e1`, `s = 1_pm`) plus a cross
/// block proportional to `P2 (I - B) y` for `y = e1 + 1_pm/sqrt(n)`,
/// weighted by `c_submult` and `c_cross` and scaled by `0.2 n^{-1/3}`.
pub fn gen_tightness_example(
    n: usize,
    c_cross: f64,
    c_submult: f64,
) -> Result<(SymMatrix, SymMatrix)> {
    require_even(n, 8)?;
    let nf = n as f64;
    let sqrt_n = nf.sqrt();
    let pm = pm_vector(n);
    // p = P2 e1 = e1 - 1/n (projection of e1 off v1 = 1/sqrt(n)).
    let p = Array1::from_shape_fn(n, |i| if i == 0 { 1.0 - 1.0 / nf } else { -1.0 / nf });
    let s = &pm;
    let b = |i: usize, j: usize| (p[i] * s[j] + s[i] * p[j]) / sqrt_n;

    // y = e1 + 1_pm/sqrt(n); w ~ P2 (I - B) y, rescaled so the cross block
    // and B have matching spectral norms before the global weights.
    let y = Array1::from_shape_fn(n, |i| if i == 0 { 1.0 + pm[i] / sqrt_n } else { pm[i] / sqrt_n });
    let sty: f64 = s.dot(&y);
    let pty: f64 = p.dot(&y);
    let by = Array1::from_shape_fn(n, |i| (p[i] * sty + s[i] * pty) / sqrt_n);
    let mut w = &y - &by;
    let mean = w.sum() / nf;
    w.mapv_inplace(|x| x - mean); // P2 w: remove the v1 component
    let p_norm = p.dot(&p).sqrt();
    let s_norm = s.dot(s).sqrt();
    let b_norm = (p.dot(s).abs() + p_norm * s_norm) / sqrt_n;
    let w_norm = w.dot(&w).sqrt();
    if w_norm == 0.0 {
        return Err(Error::InvalidInput("degenerate cross direction".into()));
    }
    w.mapv_inplace(|x| x * b_norm / w_norm);

    let v1 = 1.0 / sqrt_n;
    let scale = 0.2 * nf.powf(-1.0 / 3.0);
    let e = Array2::from_shape_fn((n, n), |(i, j)| {
        scale * (c_submult * b(i, j) + c_cross * (w[i] * v1 + v1 * w[j]))
    });

    let a = Array2::from_elem((n, n), 1.0 / nf); // v1 v1^T
    Ok((SymMatrix::new(a)?, SymMatrix::new(e)?))
}

/// Closed-form split of the tightness-example base matrix (`r = 1`,
/// `Lambda_2 = 0`).
pub fn tightness_split(n: usize) -> Result<SpectralSplit> {
    require_even(n, 8)?;
    let s = 1.0 / (n as f64).sqrt();
    let v1 = OrthoBasis::new_unchecked(Array2::from_elem((n, 1), s));
    let all: Vec<usize> = (0..n).collect();
    let mut cols = Vec::with_capacity(n - 1);
    push_helmert_columns(&mut cols, &all, n);
    Ok(SpectralSplit {
        v1,
        lambda1: Array1::from_elem(1, 1.0),
        v2: columns_to_basis(cols, n),
        lambda2: Array1::zeros(n - 1),
        r: 1,
    })
}

/// Restricted-separation example on `(n+1)` coordinates:
/// `A = 2 v1 v1^T + e1 v2^T + v2 e1^T` with `v1 = [0; 1]/sqrt(n)` and
/// `v2 = [0; 1_pm]/sqrt(n)`. Eigenvalues `{2, 1, 0^{n-2}, -1}`.
pub fn gen_sep_example(n: usize) -> Result<(SymMatrix, SpectralSplit)> {
    require_even(n, 4)?;
    let dim = n + 1;
    let sqrt_n = (n as f64).sqrt();
    let pm = pm_vector(n);
    let v1 = Array1::from_shape_fn(dim, |i| if i == 0 { 0.0 } else { 1.0 / sqrt_n });
    let v2 = Array1::from_shape_fn(dim, |i| if i == 0 { 0.0 } else { pm[i - 1] / sqrt_n });
    let e1 = Array1::from_shape_fn(dim, |i| if i == 0 { 1.0 } else { 0.0 });
    let a = Array2::from_shape_fn((dim, dim), |(i, j)| {
        2.0 * v1[i] * v1[j] + e1[i] * v2[j] + v2[i] * e1[j]
    });

    // Eigenbasis of e1 v2^T + v2 e1^T: (e1 +/- v2)/sqrt(2) for +/-1.
    let sqrt2 = std::f64::consts::SQRT_2;
    let u_plus = Array1::from_shape_fn(dim, |i| (e1[i] + v2[i]) / sqrt2);
    let u_minus = Array1::from_shape_fn(dim, |i| (e1[i] - v2[i]) / sqrt2);
    let mut cols = Vec::with_capacity(n);
    cols.push(u_plus);
    // Kernel directions: zero-sum within each half of coordinates 1..=n.
    let first: Vec<usize> = (1..=n / 2).collect();
    let second: Vec<usize> = (n / 2 + 1..=n).collect();
    push_helmert_columns(&mut cols, &first, dim);
    push_helmert_columns(&mut cols, &second, dim);
    cols.push(u_minus);
    let mut lambda2 = Array1::zeros(n);
    lambda2[0] = 1.0;
    lambda2[n - 1] = -1.0;
    let split = SpectralSplit {
        v1: OrthoBasis::new_unchecked(
            v1.clone().into_shape((dim, 1)).expect("column"),
        ),
        lambda1: Array1::from_elem(1, 2.0),
        v2: columns_to_basis(cols, dim),
        lambda2,
        r: 1,
    };
    Ok((SymMatrix::new(a)?, split))
}

/// The probe direction `q = e1 + 2 v2` for the restricted-separation
/// example; lies in `ran(V2)` with unit two-to-infinity norm for `n >= 4`.
pub fn sep_example_probe(n: usize) -> Result<Array2<f64>> {
    require_even(n, 4)?;
    let dim = n + 1;
    let sqrt_n = (n as f64).sqrt();
    let pm = pm_vector(n);
    Ok(Array2::from_shape_fn((dim, 1), |(i, _)| {
        if i == 0 {
            1.0
        } else {
            2.0 * pm[i - 1] / sqrt_n
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eig::eigvalsh_desc;
    use crate::norms::{fro_norm, two_to_inf_norm};
    use crate::separation::{gap_certificate, sep_2inf_upper_probe};

    fn check_split(a: &SymMatrix, split: &SpectralSplit) {
        // Bases orthonormal and mutually orthogonal.
        let v1 = split.v1.as_array();
        let v2 = split.v2.as_array();
        let g1 = v1.t().dot(v1);
        for i in 0..g1.nrows() {
            for j in 0..g1.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g1[[i, j]] - expect).abs() < 1e-12);
            }
        }
        let g2 = v2.t().dot(v2);
        for i in 0..g2.nrows() {
            for j in 0..g2.ncols() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((g2[[i, j]] - expect).abs() < 1e-12, "g2({i},{j})");
            }
        }
        let cross = v1.t().dot(v2);
        assert!(cross.iter().all(|x| x.abs() < 1e-12));
        // Reconstruction.
        let recon = split.reconstruct();
        let scale = a.spectral_norm().max(1.0);
        for (x, y) in a.view().iter().zip(recon.iter()) {
            assert!((x - y).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn low_rank_structure() {
        let (a, split) = gen_low_rank(8).unwrap();
        check_split(&a, &split);
        let w = eigvalsh_desc(a.view()).unwrap();
        assert!((w[0] - 1.0).abs() < 1e-10 && (w[1] - 1.0).abs() < 1e-10);
        assert!(w.iter().skip(2).all(|x| x.abs() < 1e-10));
        assert!((gap_certificate(&split).gap_lower - 1.0).abs() < 1e-10);
        // n = 4 closed form: 1/2 within same parity-half, 0 across.
        let (a4, _) = gen_low_rank(4).unwrap();
        assert_eq!(a4.view()[[0, 0]], 0.5);
        assert_eq!(a4.view()[[0, 1]], 0.5);
        assert_eq!(a4.view()[[0, 2]], 0.0);
        assert!(gen_low_rank(5).is_err());
    }

    #[test]
    fn coherent_structure() {
        let (a, split) = gen_coherent(8).unwrap();
        check_split(&a, &split);
        let w = eigvalsh_desc(a.view()).unwrap();
        assert!((w[0] - 4.0).abs() < 1e-10 && (w[1] - 4.0).abs() < 1e-10);
        assert!((w[2] - 2.0).abs() < 1e-10);
        assert!(w.iter().skip(3).all(|x| x.abs() < 1e-10));
        let cert = gap_certificate(&split);
        assert!((cert.sep2inf_lower - 2.0).abs() < 1e-10);
        assert!((cert.gap_lower - 2.0).abs() < 1e-10);
        // Complement operator has n-independent two-to-infinity norm.
        let comp = split.complement_operator();
        let norm8 = two_to_inf_norm(comp.view()).unwrap();
        let (_, split16) = gen_coherent(16).unwrap();
        let comp16 = split16.complement_operator();
        assert!((norm8 - two_to_inf_norm(comp16.view()).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_determinism_and_symmetry() {
        let seeds = SeededRng::new(42);
        let e1 = gen_gaussian_perturbation(16, 0.1, &mut seeds.stream(16, 0)).unwrap();
        let e2 = gen_gaussian_perturbation(16, 0.1, &mut seeds.stream(16, 0)).unwrap();
        assert_eq!(e1.as_array(), e2.as_array());
        let e3 = gen_gaussian_perturbation(16, 0.1, &mut seeds.stream(16, 1)).unwrap();
        assert_ne!(e1.as_array(), e3.as_array());
        let z = gen_gaussian_perturbation(8, 0.0, &mut seeds.stream(8, 0)).unwrap();
        assert!(z.as_array().iter().all(|x| *x == 0.0));
    }

    #[test]
    fn tightness_structure() {
        let n = 64;
        let (a, e) = gen_tightness_example(n, 1.0, 1.0).unwrap();
        let split = tightness_split(n).unwrap();
        check_split(&a, &split);
        // E11 block vanishes by construction (both parts are off-v1).
        let v1 = split.v1.as_array();
        let e11 = v1.t().dot(&e.as_array().dot(v1));
        assert!(e11.iter().all(|x| x.abs() < 1e-12));
        // Stays within the gap/5 hypothesis (gap = 1).
        assert!(e.spectral_norm() <= 0.2 + 1e-12);
        assert!(gen_tightness_example(7, 1.0, 1.0).is_err());
    }

    #[test]
    fn sep_example_structure() {
        let n = 16;
        let (a, split) = gen_sep_example(n).unwrap();
        check_split(&a, &split);
        let w = eigvalsh_desc(a.view()).unwrap();
        assert!((w[0] - 2.0).abs() < 1e-10);
        assert!((w[1] - 1.0).abs() < 1e-10);
        assert!((w[n] + 1.0).abs() < 1e-10);
        assert!(w.iter().skip(2).take(n - 2).all(|x| x.abs() < 1e-10));
        // sep_F = sep_2 = 1 for these diagonals.
        assert!((split.sep2() - 1.0).abs() < 1e-12);
        // The probe has unit row norm and certifies <= 3/sqrt(n).
        let q = sep_example_probe(n).unwrap();
        assert!((two_to_inf_norm(q.view()).unwrap() - 1.0).abs() < 1e-12);
        let est = sep_2inf_upper_probe(&split, &[q]).unwrap();
        assert!(est.value <= 3.0 / (n as f64).sqrt() + 1e-12);
        // Certified lower bound >= 1/sqrt(n+1).
        let cert = gap_certificate(&split);
        assert!(cert.sep2inf_lower >= 1.0 / ((n + 1) as f64).sqrt() - 1e-12);
        let _ = fro_norm(q.view());
    }
}
