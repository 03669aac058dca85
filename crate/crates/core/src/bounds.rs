//! Deterministic row-wise perturbation bounds for the dominant invariant
//! subspace of a symmetric matrix, with assumption certification.
//!
//! All bound denominators use the certified lower bound on the gap from the
//! separation module: a smaller gap only enlarges the bound, so every
//! reported value remains a sound upper bound on the Procrustes-aligned
//! two-to-infinity error.
//!
//! Every quantity involving `V2` is computed through the projector
//! `P2 = I - V1 V1^T` (`V2 E21 = P2 E V1`, `V2 E22 V2^T = P2 E P2`), so no
//! object of size `(n-r)^2` is formed.

use ndarray::linalg::general_mat_mul;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::eig::sym_spectral_norm;
use crate::mat::{OrthoBasis, SymMatrix};
use crate::newton::NewtonResult;
use crate::norms::{fro_norm, inf_norm, spectral_norm, two_to_inf_norm};
use crate::separation::{gap_certificate, GapCertificate};
use crate::split::SpectralSplit;
use crate::{Error, Result};

/// The three-term main bound, its certified gap, and assumption status.
/// Serialized field order is fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub term_quadratic: f64,
    pub term_cross: f64,
    pub term_submult: f64,
    pub total: f64,
    pub gap_used: f64,
    pub assumptions_ok: bool,
    pub observed_error: Option<f64>,
    /// Classical sin-theta-scale reference curve: `2 ||E21||_2 / sep2`.
    pub dk_reference: f64,
}

/// Incoherence parameter `mu = sqrt(n) * ||V1||_{2,inf}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Mu {
    pub value: f64,
}

pub fn mu(v1: &OrthoBasis) -> Mu {
    let v = two_to_inf_norm(v1.view()).expect("basis nonempty");
    Mu {
        value: (v1.n() as f64).sqrt() * v,
    }
}

/// Two-term variant of the bound, applicable only under an additional
/// infinity-norm condition on `E`. Inapplicability is a value, not an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub applicable: bool,
    pub term_quadratic: f64,
    pub term_cross: f64,
    pub total: f64,
    pub gap_used: f64,
    pub mu: f64,
}

/// Every scalar the bound family needs, computed once per `(split, E)`.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub n: usize,
    pub r: usize,
    pub sep2: f64,
    pub gap: GapCertificate,
    pub v1_2inf: f64,
    pub mu: f64,
    pub e_norm: f64,
    pub e_inf: f64,
    pub e21_norm: f64,
    pub v2e21_2inf: f64,
    pub v2e22v2t_2inf: f64,
}

/// `P2 E V1 = E V1 - V1 (V1^T E V1)`.
pub(crate) fn p2_e_v1(split: &SpectralSplit, e: &SymMatrix) -> Array2<f64> {
    let v1 = split.v1.as_array();
    let ev1 = e.as_array().dot(v1);
    let e11 = v1.t().dot(&ev1);
    &ev1 - &v1.dot(&e11)
}

/// `P2 E P2` as a dense matrix.
pub(crate) fn p2_e_p2(split: &SpectralSplit, e: &SymMatrix) -> Array2<f64> {
    let v1 = split.v1.as_array();
    let ev1 = e.as_array().dot(v1);
    let e11 = v1.t().dot(&ev1);
    let mut out = e.as_array().clone();
    general_mat_mul(-1.0, v1, &ev1.t(), 1.0, &mut out);
    general_mat_mul(-1.0, &ev1, &v1.t(), 1.0, &mut out);
    let v1e11 = v1.dot(&e11);
    general_mat_mul(1.0, &v1e11, &v1.t(), 1.0, &mut out);
    out
}

pub fn bound_inputs(split: &SpectralSplit, e: &SymMatrix) -> Result<BoundInputs> {
    let n = split.n();
    if e.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "perturbation is {}x{} but split is over dimension {n}",
            e.n(),
            e.n()
        )));
    }
    let gap = gap_certificate(split);
    let w = p2_e_v1(split, e);
    let p2ep2 = p2_e_p2(split, e);
    let v1_2inf = two_to_inf_norm(split.v1.view())?;
    Ok(BoundInputs {
        n,
        r: split.r,
        sep2: split.sep2(),
        gap,
        v1_2inf,
        mu: (n as f64).sqrt() * v1_2inf,
        e_norm: e.spectral_norm(),
        e_inf: inf_norm(e.view()),
        e21_norm: spectral_norm(w.view()),
        v2e21_2inf: two_to_inf_norm(w.view())?,
        v2e22v2t_2inf: two_to_inf_norm(p2ep2.view())?,
    })
}

pub fn theorem_from_inputs(bi: &BoundInputs) -> BoundReport {
    let gap = bi.gap.gap_lower;
    let ratio = bi.e21_norm / bi.sep2;
    let term_quadratic = 8.0 * bi.v1_2inf * ratio * ratio;
    let term_cross = 2.0 * bi.v2e21_2inf / gap;
    let term_submult = 4.0 * bi.v2e22v2t_2inf * bi.e21_norm / (gap * bi.sep2);
    BoundReport {
        term_quadratic,
        term_cross,
        term_submult,
        total: term_quadratic + term_cross + term_submult,
        gap_used: gap,
        assumptions_ok: bi.e_norm <= gap / 5.0,
        observed_error: None,
        dk_reference: 2.0 * bi.e21_norm / bi.sep2,
    }
}

/// Evaluates the three-term main bound with a certified gap.
pub fn theorem_main_bound(split: &SpectralSplit, e: &SymMatrix) -> Result<BoundReport> {
    Ok(theorem_from_inputs(&bound_inputs(split, e)?))
}

pub fn corollary_from_inputs(bi: &BoundInputs) -> CorollaryReport {
    let gap = bi.gap.gap_lower;
    let ratio = bi.e21_norm / bi.sep2;
    let term_quadratic = 8.0 * bi.v1_2inf * ratio * ratio;
    let term_cross = 4.0 * bi.v2e21_2inf / gap;
    let applicable = bi.e_norm <= gap / 5.0
        && bi.e_inf <= gap / (4.0 + 4.0 * bi.mu * bi.mu);
    CorollaryReport {
        applicable,
        term_quadratic,
        term_cross,
        total: term_quadratic + term_cross,
        gap_used: gap,
        mu: bi.mu,
    }
}

/// Two-term variant trading the sub-multiplicative term for a doubled cross
/// term, under an extra infinity-norm condition on `E`.
pub fn corollary_infbound(split: &SpectralSplit, e: &SymMatrix) -> Result<CorollaryReport> {
    Ok(corollary_from_inputs(&bound_inputs(split, e)?))
}

/// The sharper bound using the computed root `Yhat` itself:
/// `8||V1||(||E21||/sep2)^2 + 2(||V2 E21|| + ||V2 E22 V2^T Yhat||)/gap`.
/// Never exceeds the main-theorem total on in-hypothesis instances.
pub fn lemma_y_bound(
    split: &SpectralSplit,
    e: &SymMatrix,
    newton: &NewtonResult,
) -> Result<f64> {
    if newton.e_hash != e.content_hash() {
        return Err(Error::StaleResult);
    }
    // The iterate must live in ran(V2) of this split.
    let v1 = split.v1.as_array();
    let v1ty = v1.t().dot(&newton.yhat);
    if fro_norm(v1ty.view()) > 1e-8 * (1.0 + fro_norm(newton.yhat.view())) {
        return Err(Error::StaleResult);
    }
    let gap = gap_certificate(split).gap_lower;
    let w = p2_e_v1(split, e);
    let e21_norm = spectral_norm(w.view());
    let ratio = e21_norm / split.sep2();
    let v1_2inf = two_to_inf_norm(split.v1.view())?;
    // V2 E22 V2^T Yhat = P2 E Yhat since Yhat is in ran(V2).
    let eyhat = e.as_array().dot(&newton.yhat);
    let m_yhat = &eyhat - &v1.dot(&v1.t().dot(&eyhat));
    Ok(8.0 * v1_2inf * ratio * ratio
        + 2.0 * (two_to_inf_norm(w.view())? + two_to_inf_norm(m_yhat.view())?) / gap)
}

/// Five-term bound for a pair of perturbations sharing their first block
/// row: uses the root from the `Etilde` run to control the `E` error.
pub fn two_perturbation_bound(
    split: &SpectralSplit,
    e: &SymMatrix,
    etilde: &SymMatrix,
    newton_tilde: &NewtonResult,
) -> Result<f64> {
    if newton_tilde.e_hash != etilde.content_hash() {
        return Err(Error::StaleResult);
    }
    let v1 = split.v1.as_array();
    // E11 and E12 must agree, i.e. V1^T E = V1^T Etilde.
    let diff = v1.t().dot(&(e.as_array() - etilde.as_array()));
    let scale = e.spectral_norm().max(etilde.spectral_norm()).max(1e-300);
    if fro_norm(diff.view()) > 1e-12 * scale * (split.n() as f64).sqrt() {
        return Err(Error::InvalidInput(
            "perturbations differ in their first block row".into(),
        ));
    }
    let gap_cert = gap_certificate(split);
    let gap = gap_cert.gap_lower;
    if e.spectral_norm() > gap / 5.0 || etilde.spectral_norm() > gap / 5.0 {
        return Err(Error::InvalidInput(
            "perturbation exceeds gap/5 hypothesis".into(),
        ));
    }
    let sep2 = split.sep2();
    let v1_2inf = two_to_inf_norm(split.v1.view())?;
    let w = p2_e_v1(split, e);
    let e21_norm = spectral_norm(w.view());
    let p2ep2 = p2_e_p2(split, e);
    let e22_norm = sym_spectral_norm(p2ep2.view())?;
    let p2etp2 = p2_e_p2(split, etilde);
    let e22t_norm = sym_spectral_norm(p2etp2.view())?;
    let v2e22_2inf = two_to_inf_norm(p2ep2.view())?;
    // V2 E22 V2^T Ytilde = P2 E Ytilde (Ytilde in ran V2).
    let eyt = e.as_array().dot(&newton_tilde.yhat);
    let m_yt = &eyt - &v1.dot(&v1.t().dot(&eyt));
    let ratio = e21_norm / sep2;
    Ok(8.0 * v1_2inf * ratio * ratio
        + 2.0 * two_to_inf_norm(w.view())? / gap
        + 4.0 * two_to_inf_norm(m_yt.view())? / gap
        + 5.0 * (e22_norm + e22t_norm) * v2e22_2inf * e21_norm / (gap * sep2 * sep2)
        + 10.0 * v2e22_2inf * e21_norm.powi(3) / (gap * sep2.powi(3)))
}

/// Comparison of an observed error-decay rate against the dominant
/// theoretical exponent for `sigma = n^{-p}` scaling.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RateCheck {
    pub fitted_slope: f64,
    pub predicted_slope: f64,
}

/// Fits the log-log slope of the per-`n` median observed error and compares
/// it with the dominant exponent among `sigma^2 sqrt(n)`,
/// `sigma sqrt(log n)` (tracked as `n^{-p}` up to the log factor), and
/// `(sigma sqrt(n))^3` for `sigma = n^{-p}`.
pub fn probg_rate_check(
    records: &[crate::experiments::SweepRecord],
    sigma_exponent: f64,
) -> Result<RateCheck> {
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = std::collections::BTreeMap::new();
    for rec in records {
        by_n.entry(rec.n).or_default().push(rec.err_2inf);
    }
    if by_n.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "rate check needs >= 4 distinct n, got {}",
            by_n.len()
        )));
    }
    let mut points = Vec::new();
    for (n, mut errs) in by_n {
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = crate::experiments::quantile_sorted(&errs, 0.5);
        if med <= 0.0 {
            return Err(Error::InvalidInput("nonpositive median error".into()));
        }
        points.push(((n as f64).ln(), med.ln()));
    }
    let fit = crate::experiments::ols_fit(&points)?;
    let p = sigma_exponent;
    let predicted_slope = (-2.0 * p + 0.5).max(-p).max(-3.0 * p + 1.5);
    Ok(RateCheck {
        fitted_slope: fit.slope,
        predicted_slope,
    })
}
