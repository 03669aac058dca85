//! Core dense matrix newtypes: symmetric matrices and orthonormal bases.

use ndarray::{Array2, ArrayView2};

use crate::{Error, Result};

pub const ORTHO_TOL: f64 = 1e-12;

/// A dense real symmetric matrix. Symmetry holds exactly (bit-for-bit).
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    /// Accepts `a` only if it is square and exactly symmetric.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and nonempty, got {r}x{c}"
            )));
        }
        for i in 0..r {
            for j in 0..i {
                if a[[i, j]] != a[[j, i]] {
                    return Err(Error::InvalidInput(format!(
                        "matrix not symmetric at ({i},{j}): {} vs {}",
                        a[[i, j]],
                        a[[j, i]]
                    )));
                }
            }
        }
        Ok(Self { data: a })
    }

    /// Symmetrizes `a` as `(a + a^T) / 2`.
    pub fn symmetrized(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and nonempty, got {r}x{c}"
            )));
        }
        let mut s = a;
        for i in 0..r {
            for j in 0..i {
                let v = 0.5 * (s[[i, j]] + s[[j, i]]);
                s[[i, j]] = v;
                s[[j, i]] = v;
            }
        }
        Ok(Self { data: s })
    }

    /// Builds from the lower triangle of `a`, mirroring it to the upper.
    pub fn from_lower(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square and nonempty, got {r}x{c}"
            )));
        }
        let mut s = a;
        for i in 0..r {
            for j in 0..i {
                s[[j, i]] = s[[i, j]];
            }
        }
        Ok(Self { data: s })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn view(&self) -> ArrayView2<f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Spectral norm via symmetric eigenvalues.
    pub fn spectral_norm(&self) -> f64 {
        crate::eig::sym_spectral_norm(self.view()).expect("square by construction")
    }

    /// Order-insensitive FNV-style content hash, used to tie derived results
    /// (e.g. a Newton run) back to the exact `(A, E)` pair they came from.
    pub fn content_hash(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        for &x in self.data.iter() {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }
}

/// An `n x k` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthoBasis {
    columns: Array2<f64>,
}

impl OrthoBasis {
    /// Accepts `columns` if `columns^T columns = I_k` to within
    /// [`ORTHO_TOL`] per entry.
    pub fn new(columns: Array2<f64>) -> Result<Self> {
        let (n, k) = columns.dim();
        if k > n || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "orthonormal basis must have k <= n, got {n}x{k}"
            )));
        }
        let gram = columns.t().dot(&columns);
        for i in 0..k {
            for j in 0..k {
                let expect = if i == j { 1.0 } else { 0.0 };
                if (gram[[i, j]] - expect).abs() > ORTHO_TOL {
                    return Err(Error::InvalidInput(format!(
                        "columns not orthonormal: gram({i},{j}) = {}",
                        gram[[i, j]]
                    )));
                }
            }
        }
        Ok(Self { columns })
    }

    /// Skips the orthonormality check; for internal constructions that are
    /// orthonormal by design.
    pub(crate) fn new_unchecked(columns: Array2<f64>) -> Self {
        Self { columns }
    }

    pub fn n(&self) -> usize {
        self.columns.nrows()
    }

    pub fn k(&self) -> usize {
        self.columns.ncols()
    }

    pub fn view(&self) -> ArrayView2<f64> {
        self.columns.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.columns
    }

    pub fn into_array(self) -> Array2<f64> {
        self.columns
    }
}
