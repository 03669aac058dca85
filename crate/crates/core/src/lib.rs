//! Row-wise perturbation analysis for invariant subspaces of symmetric matrices.
//!
//! Given a symmetric matrix `A` and a symmetric perturbation `E`, this crate
//! evaluates deterministic upper bounds on the two-to-infinity norm distance
//! between the dominant invariant subspace of `A` and that of `A + E`,
//! constructs an orthonormal basis for the perturbed subspace through a
//! quadratic-root Newton iteration with a Newton-Kantorovich convergence
//! certificate, and certifies the separation quantities entering the bounds.
//!
//! The crate is organized as:
//! - [`mat`]: dense symmetric matrices and orthonormal bases,
//! - [`norms`]: the two-to-infinity norm and friends,
//! - [`eig`]: deterministic dense symmetric eigendecomposition,
//! - [`split`]: spectral splits `A = V1 L1 V1^T + V2 L2 V2^T` and block
//!   projections of perturbations,
//! - [`procrustes`]: orthogonal Procrustes alignment and subspace distances,
//! - [`separation`]: `sep_2`, `sep_F`, restricted `sep_{2,inf}` estimates and
//!   the gap certificate,
//! - [`newton`]: the Newton iteration for the perturbed basis,
//! - [`bounds`]: the main three-term bound and its variants,
//! - [`generators`]: the model matrix families and seeded Gaussian
//!   perturbations,
//! - [`experiments`]: n-sweeps, quantile summaries and slope fits,
//! - [`schur`]: the extension to non-normal matrices via ordered Schur forms,
//! - [`io`]: CSV and binary matrix formats.

// Pull in the LAPACK backend link flags even from modules that only use the
// raw `lapack` bindings.
use ndarray_linalg as _;
use openblas_src as _;

pub mod bounds;
pub mod eig;
mod error;
pub mod experiments;
pub mod generators;
pub mod io;
pub mod mat;
pub mod newton;
pub mod norms;
pub mod procrustes;
pub mod schur;
pub mod separation;
pub mod split;
pub mod svgplot;

pub use error::{Error, Result};
pub use mat::{OrthoBasis, SymMatrix};
pub use split::{PerturbationBlocks, SpectralSplit};
