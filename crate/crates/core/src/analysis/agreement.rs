use serde::Serialize;

use super::approx::ApproxExponentMap;
use super::holder::HolderMap;
use super::PointFlag;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Default agreement tolerance.
pub const AGREEMENT_TOL: f64 = 0.2;

/// A per-point exponent field.
pub trait ExponentField {
    fn grid(&self) -> &GridSpec;
    fn exponents(&self) -> &[f64];
    fn flags(&self) -> &[PointFlag];
    /// Values above this are indistinguishable to the estimator.
    fn cap(&self) -> f64 {
        f64::INFINITY
    }
}

impl ExponentField for HolderMap {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn exponents(&self) -> &[f64] {
        &self.exponent
    }
    fn flags(&self) -> &[PointFlag] {
        &self.flag
    }
    fn cap(&self) -> f64 {
        self.h_max
    }
}

impl ExponentField for ApproxExponentMap {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn exponents(&self) -> &[f64] {
        &self.a_hat
    }
    fn flags(&self) -> &[PointFlag] {
        &self.flag
    }
    fn cap(&self) -> f64 {
        self.alpha_cap
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    /// `(point, estimate, reference)` for eligible points.
    pub pairs: Vec<(usize, f64, f64)>,
    pub median_abs_diff: f64,
    pub fraction_within: f64,
    pub tolerance: f64,
}

/// Compares two exponent fields on the points flagged OK in both. Each value
/// is capped at the smaller of the two fields' caps before comparing.
pub fn exponent_agreement<A: ExponentField, B: ExponentField>(est: &A, reference: &B) -> Result<AgreementReport> {
    compare(est, reference, |r| r)
}

/// As [`exponent_agreement`] against `min(1/2, reference)`, the exponent of a
/// field with a nonzero Gaussian part.
pub fn exponent_agreement_combined<A: ExponentField, B: ExponentField>(
    est: &A,
    reference: &B,
) -> Result<AgreementReport> {
    compare(est, reference, |r| r.min(0.5))
}

fn compare<A: ExponentField, B: ExponentField>(
    est: &A,
    reference: &B,
    map: impl Fn(f64) -> f64,
) -> Result<AgreementReport> {
    if est.grid() != reference.grid() {
        return Err(Error::InvalidGrid("exponent maps live on different grids".into()));
    }
    let cap = est.cap().min(reference.cap());
    let pairs: Vec<(usize, f64, f64)> = (0..est.grid().len())
        .filter(|&p| est.flags()[p] == PointFlag::Ok && reference.flags()[p] == PointFlag::Ok)
        .map(|p| (p, est.exponents()[p].min(cap), map(reference.exponents()[p]).min(cap)))
        .collect();
    let mut diffs: Vec<f64> = pairs.iter().map(|(_, a, b)| if a == b { 0.0 } else { (a - b).abs() }).collect();
    diffs.sort_by(f64::total_cmp);
    let median_abs_diff = median_sorted(&diffs);
    let within = diffs.iter().filter(|d| **d <= AGREEMENT_TOL).count();
    let fraction_within = if diffs.is_empty() { f64::NAN } else { within as f64 / diffs.len() as f64 };
    Ok(AgreementReport { pairs, median_abs_diff, fraction_within, tolerance: AGREEMENT_TOL })
}

/// Median of a sorted slice (NaN when empty).
pub fn median_sorted(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => 0.5 * (v[n / 2 - 1] + v[n / 2]),
    }
}

/// Median of the finite-or-infinite values (NaN when empty).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

/// Quantile by linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < v.len() {
        v[i] + frac * (v[i + 1] - v[i])
    } else {
        v[i]
    }
}
