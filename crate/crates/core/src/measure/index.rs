use serde::{Deserialize, Serialize};

use super::jump::JumpMeasure;
use super::radial::{Tail, SLOPE_TOL};
use crate::error::{Error, Result};

/// Gauge `g(r) = r^s (log 1/r)^b` near 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerGauge {
    exponent: f64,
    log_correction: f64,
}

impl PowerGauge {
    pub fn new(exponent: f64, log_correction: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::InvalidArgument(format!("gauge exponent {exponent} not in (0, 1]")));
        }
        if !log_correction.is_finite() {
            return Err(Error::InvalidArgument("gauge log correction must be finite".into()));
        }
        Ok(Self { exponent, log_correction })
    }

    pub fn power(exponent: f64) -> Result<Self> {
        Self::new(exponent, 0.0)
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn log_correction(&self) -> f64 {
        self.log_correction
    }

    /// `log2 g(2^{-j/h})`.
    fn log2_at_band(&self, j: f64, h: f64) -> f64 {
        let base = -self.exponent * j / h;
        if self.log_correction == 0.0 {
            base
        } else {
            base + self.log_correction * (j / h * std::f64::consts::LN_2).log2()
        }
    }
}

/// Blumenthal–Getoor type index of ν, read off the growth rate of `ν_j`.
pub fn index_beta(nu: &JumpMeasure) -> Result<f64> {
    nu.check_levy()?;
    Ok(match nu.tail() {
        Tail::Finite => 0.0,
        Tail::Power { b, .. } => b.clamp(0.0, 2.0),
    })
}

/// Partial sum `Σ_{j=1}^{j_max} 2^{-j} (j ν_j)^{1/2}` and whether the full
/// series converges.
pub fn admissibility_chi(nu: &JumpMeasure, j_max: usize) -> Result<(f64, bool)> {
    if j_max < 1 {
        return Err(Error::InvalidArgument("j_max must be at least 1".into()));
    }
    let partial = (1..=j_max)
        .map(|j| {
            let jf = j as f64;
            (-jf + 0.5 * (jf.log2() + nu.log2_band_mass(j))).exp2()
        })
        .sum();
    let converged = match nu.tail() {
        Tail::Finite => true,
        Tail::Power { b, c, .. } => {
            if b < 2.0 - SLOPE_TOL {
                true
            } else if b <= 2.0 + SLOPE_TOL {
                // terms behave like j^{(1+c)/2}
                c < -3.0
            } else {
                false
            }
        }
    };
    Ok((partial, converged))
}

/// `h_ν(g) = inf{h > 0 : ∫ g(|x|^{1/h}) ν(ds,dx) = ∞}`.
///
/// Pure power gauges use the closed form `s/β`. With a log correction the
/// divergence of the band series is decided by the root test on far bands and
/// the threshold located by bisection.
pub fn gauge_exponent(nu: &JumpMeasure, g: &PowerGauge) -> Result<f64> {
    let beta = index_beta(nu)?;
    if beta == 0.0 {
        return Ok(f64::INFINITY);
    }
    if g.log_correction == 0.0 {
        return Ok(g.exponent / beta);
    }
    const J1: f64 = (1u64 << 24) as f64;
    const J2: f64 = (1u64 << 25) as f64;
    let tail = nu.tail();
    let rate = |h: f64| {
        let l = |j: f64| tail.log2_mass(j as usize) + g.log2_at_band(j, h);
        (l(J2) - l(J1)) / (J2 - J1)
    };
    let (mut lo, mut hi) = (1e-9, 1e9);
    if rate(hi) < 0.0 {
        return Ok(f64::INFINITY);
    }
    if rate(lo) >= 0.0 {
        return Ok(0.0);
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if rate(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi / lo - 1.0 < 1e-12 {
            break;
        }
    }
    Ok(hi)
}
