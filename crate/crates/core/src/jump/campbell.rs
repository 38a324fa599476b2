use crate::error::{Error, Result};
use crate::measure::sphere::norm;
use crate::measure::JumpMeasure;

/// Standard deviation of the bands beyond `j_trunc` at `t`:
/// `(Σ_{j > J} ∫ ⟨s,t⟩_+ x² ν)^{1/2}`.
pub fn truncation_error_std(nu: &JumpMeasure, radius: f64, j_trunc: usize, t: &[f64]) -> Result<f64> {
    if t.len() != nu.dim() {
        return Err(Error::DimMismatch { expected: nu.dim(), got: t.len() });
    }
    if norm(t) > radius {
        return Err(Error::InvalidArgument(format!("‖t‖ = {} exceeds radius {radius}", norm(t))));
    }
    Ok(nu.tail_campbell(j_trunc, t).sqrt())
}

/// Variance of the compensated bands `1..` at `t`, the Campbell scale of the
/// small-jump part.
pub fn small_jump_variance(nu: &JumpMeasure, t: &[f64]) -> f64 {
    nu.tail_campbell(0, t)
}

/// Smallest `J ≤ j_cap` with truncation std at most `rel_tol` times the
/// small-jump scale at `t`; `None` if the cap is reached first.
pub fn suggest_truncation(nu: &JumpMeasure, t: &[f64], rel_tol: f64, j_cap: usize) -> Option<usize> {
    let scale = small_jump_variance(nu, t).sqrt();
    if scale == 0.0 {
        return Some(1);
    }
    (1..=j_cap).find(|&j| nu.tail_campbell(j, t).sqrt() <= rel_tol * scale)
}
