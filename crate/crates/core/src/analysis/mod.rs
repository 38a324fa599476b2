//! Regularity estimators: pointwise Hölder exponents, box-counting spectra and
//! hyperplane approximation exponents.

pub mod agreement;
pub mod approx;
pub mod ball;
pub mod holder;
pub mod spectrum;

use serde::Serialize;

pub use agreement::{exponent_agreement, exponent_agreement_combined, median, quantile, AgreementReport};
pub use approx::{approx_exponent_map, approx_exponent_map_with, ApproxExponentMap, ApproxOptions};
pub use holder::{default_scales, holder_map, oscillation, oscillation_detrended, HolderMap};
pub use spectrum::{default_levels, spectrum_estimate, SpectrumBins, SpectrumEstimate};

/// Per-point status attached to exponent estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PointFlag {
    Ok,
    /// Locally affine at the finest scale.
    Saturated,
    /// On a sampled hyperplane.
    JumpLocus,
}

impl PointFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            PointFlag::Ok => "OK",
            PointFlag::Saturated => "SATURATED",
            PointFlag::JumpLocus => "JUMP_LOCUS",
        }
    }
}
