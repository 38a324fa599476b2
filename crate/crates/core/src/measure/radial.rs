//! Radial (jump magnitude) families.
//!
//! Bands: `I_0 = {|x| > 1}` and `I_j = (2^{-j}, 2^{-j+1}]` for `j >= 1`. All
//! masses below count both signs of `x`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};

/// Number of trailing table entries used to fit the continuation.
pub const CONTINUATION_FIT_BANDS: usize = 8;

/// Tolerance used when deciding whether a fitted tail slope sits exactly on a
/// critical value (2 for integrability and admissibility).
pub const SLOPE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuation {
    /// No mass beyond the table.
    Zero,
    /// `log2 ν_j = a + b·j`, least squares on the last bands.
    Geometric,
    /// `log2 ν_j = a + b·j + c·log2 j`, least squares on the last bands.
    LogGeometric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialFamily {
    /// Density `scale·|x|^{-1-alpha}` on R*.
    Stable { alpha: f64, scale: f64 },
    /// Mass `w` at each of `±x` for every `(x, w)`.
    #[serde(rename = "atoms")]
    FiniteAtoms { atoms: Vec<(f64, f64)> },
    /// Band masses `nu0, nu_1, ..., nu_J`. Within band `j >= 1` magnitudes are
    /// uniform on `I_j`; band 0 magnitudes are uniform on `(1, 2]`.
    #[serde(rename = "bandtable")]
    BandTable {
        nu0: f64,
        nu: Vec<f64>,
        continuation: Continuation,
    },
}

/// Asymptotic shape of the band masses: `log2 ν_j ≈ a + b·j + c·log2 j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Only finitely many nonzero bands.
    Finite,
    Power { a: f64, b: f64, c: f64 },
}

impl Tail {
    pub fn log2_mass(&self, j: usize) -> f64 {
        match *self {
            Tail::Finite => f64::NEG_INFINITY,
            Tail::Power { a, b, c } => {
                let jf = j as f64;
                a + b * jf + if c == 0.0 { 0.0 } else { c * jf.log2() }
            }
        }
    }
}

/// Band bounds `(lo, hi]`; band 0 is `(1, ∞)`.
pub fn band_bounds(j: usize) -> (f64, f64) {
    if j == 0 {
        (1.0, f64::INFINITY)
    } else {
        let hi = (-(j as f64) + 1.0).exp2();
        (hi / 2.0, hi)
    }
}

/// Band index of a nonzero magnitude.
pub fn band_of(x: f64) -> usize {
    let a = x.abs();
    if a > 1.0 {
        return 0;
    }
    // a ∈ (2^{-j}, 2^{-j+1}]  ⟺  j = floor(-log2 a) + 1, fixed up for rounding.
    let mut j = ((-a.log2()).floor() as i64 + 1).max(1) as usize;
    loop {
        let (lo, hi) = band_bounds(j);
        if a > hi {
            j -= 1;
        } else if a <= lo {
            j += 1;
        } else {
            return j;
        }
    }
}

/// `∫_0^∞ (1 − cos u) u^{-1-α} du`.
pub fn stable_cos_constant(alpha: f64) -> f64 {
    if (alpha - 1.0).abs() < 1e-12 {
        PI / 2.0
    } else {
        gamma(2.0 - alpha) / (alpha * (1.0 - alpha)) * (PI * alpha / 2.0).cos()
    }
}

impl RadialFamily {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMeasure(m));
        match self {
            RadialFamily::Stable { alpha, scale } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return bad(format!("stable alpha {alpha} outside (0, 2)"));
                }
                if !(scale.is_finite() && *scale > 0.0) {
                    return bad(format!("stable scale {scale} must be positive"));
                }
            }
            RadialFamily::FiniteAtoms { atoms } => {
                for &(x, w) in atoms {
                    if !(x.is_finite() && x != 0.0) {
                        return bad(format!("radial atom at {x} must be finite and nonzero"));
                    }
                    if !(w.is_finite() && w > 0.0) {
                        return bad(format!("radial atom weight {w} must be positive"));
                    }
                }
            }
            RadialFamily::BandTable { nu0, nu, .. } => {
                if !(nu0.is_finite() && *nu0 >= 0.0) {
                    return bad(format!("nu0 = {nu0} must be finite and nonnegative"));
                }
                if let Some((j, v)) =
                    nu.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0))
                {
                    return bad(format!("nu_{} = {v} must be finite and nonnegative", j + 1));
                }
            }
        }
        Ok(())
    }

    /// Verifies `∫(1 ∧ x²) ρ(dx) < ∞` from the tail shape.
    pub fn check_levy(&self) -> Result<()> {
        if let Tail::Power { b, c, .. } = self.tail() {
            if b > 2.0 + SLOPE_TOL {
                return Err(Error::NotLevy(format!(
                    "band masses grow like 2^({b:.4} j): Σ 4^-j ν_j diverges"
                )));
            }
            if (b - 2.0).abs() <= SLOPE_TOL && c >= -1.0 {
                return Err(Error::NotLevy(format!(
                    "band masses grow like 4^j j^{c:.4}: Σ 4^-j ν_j diverges"
                )));
            }
        }
        Ok(())
    }

    pub fn tail(&self) -> Tail {
        match self {
            RadialFamily::Stable { alpha, scale } => Tail::Power {
                a: (2.0 * scale / alpha).log2() + (1.0 - (-alpha).exp2()).log2(),
                b: *alpha,
                c: 0.0,
            },
            RadialFamily::FiniteAtoms { .. } => Tail::Finite,
            RadialFamily::BandTable { nu, continuation, .. } => fit_tail(nu, *continuation),
        }
    }

    /// `ρ(I_j)`.
    pub fn band_mass(&self, j: usize) -> f64 {
        match self {
            RadialFamily::Stable { alpha, scale } => {
                let k = 2.0 * scale / alpha;
                if j == 0 {
                    k
                } else {
                    let jf = j as f64;
                    k * ((jf * alpha).exp2() - ((jf - 1.0) * alpha).exp2())
                }
            }
            RadialFamily::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|(x, _)| band_of(*x) == j)
                .map(|(_, w)| 2.0 * w)
                .sum(),
            RadialFamily::BandTable { nu0, nu, .. } => {
                if j == 0 {
                    *nu0
                } else if j <= nu.len() {
                    nu[j - 1]
                } else {
                    self.tail().log2_mass(j).exp2()
                }
            }
        }
    }

    /// `log2 ρ(I_j)`, usable far beyond the range where `band_mass` overflows.
    pub fn log2_band_mass(&self, j: usize) -> f64 {
        match self {
            RadialFamily::Stable { .. } if j >= 1 => self.tail().log2_mass(j),
            RadialFamily::BandTable { nu, .. } if j > nu.len() => self.tail().log2_mass(j),
            _ => self.band_mass(j).log2(),
        }
    }

    /// `∫_{I_j} x² ρ(dx)`; infinite for band 0 of a stable family.
    pub fn band_second_moment(&self, j: usize) -> f64 {
        match self {
            RadialFamily::Stable { alpha, scale } => {
                if j == 0 {
                    return f64::INFINITY;
                }
                let (lo, hi) = band_bounds(j);
                let p = 2.0 - alpha;
                2.0 * scale / p * (hi.powf(p) - lo.powf(p))
            }
            RadialFamily::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|(x, _)| band_of(*x) == j)
                .map(|(x, w)| 2.0 * w * x * x)
                .sum(),
            RadialFamily::BandTable { .. } => {
                let lo = if j == 0 { 1.0 } else { band_bounds(j).0 };
                self.band_mass(j) * 7.0 / 3.0 * lo * lo
            }
        }
    }

    /// `Σ_{j > j_trunc} ∫_{I_j} x² ρ(dx)`.
    pub fn tail_second_moment(&self, j_trunc: usize) -> f64 {
        match self {
            RadialFamily::Stable { alpha, scale } => {
                let p = 2.0 - alpha;
                2.0 * scale / p * (-(j_trunc as f64) * p).exp2()
            }
            RadialFamily::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|(x, _)| band_of(*x) > j_trunc)
                .map(|(x, w)| 2.0 * w * x * x)
                .sum(),
            RadialFamily::BandTable { nu, .. } => {
                let mut acc = 0.0;
                for j in j_trunc + 1..=nu.len() {
                    acc += self.band_second_moment(j);
                }
                let start = (j_trunc + 1).max(nu.len() + 1);
                sum_series(start, |j| self.band_second_moment(j), acc)
            }
        }
    }

    /// `∫_{I_j} (cos θx − 1) ρ(dx)`.
    pub fn band_cf_exponent(&self, j: usize, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        match self {
            RadialFamily::Stable { alpha, scale } => {
                let (lo, hi) = band_bounds(j);
                if j == 0 {
                    stable_cos_above(*alpha, *scale, theta, 1.0)
                } else {
                    stable_cos_above(*alpha, *scale, theta, lo)
                        - stable_cos_above(*alpha, *scale, theta, hi)
                }
            }
            RadialFamily::FiniteAtoms { atoms } => atoms
                .iter()
                .filter(|(x, _)| band_of(*x) == j)
                .map(|(x, w)| 2.0 * w * ((theta * x).cos() - 1.0))
                .sum(),
            RadialFamily::BandTable { .. } => {
                let lo = if j == 0 { 1.0 } else { band_bounds(j).0 };
                let at = lo * theta;
                self.band_mass(j) * (((2.0 * at).sin() - at.sin()) / at - 1.0)
            }
        }
    }

    /// `∫ (cos θx − 1) ρ(dx)` over bands `0..=j_max`, or over all of R* when
    /// `j_max` is `None`.
    pub fn cf_exponent(&self, theta: f64, j_max: Option<usize>) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        match (self, j_max) {
            (RadialFamily::Stable { alpha, scale }, None) => {
                -2.0 * scale * theta.abs().powf(*alpha) * stable_cos_constant(*alpha)
            }
            (RadialFamily::Stable { alpha, scale }, Some(j)) => {
                let eps = (-(j as f64)).exp2();
                -2.0 * scale * theta.abs().powf(*alpha) * stable_cos_constant(*alpha)
                    - stable_cos_below(*alpha, *scale, theta, eps)
            }
            (_, Some(j)) => (0..=j).map(|k| self.band_cf_exponent(k, theta)).sum(),
            (RadialFamily::FiniteAtoms { atoms }, None) => atoms
                .iter()
                .map(|(x, w)| 2.0 * w * ((theta * x).cos() - 1.0))
                .sum(),
            (RadialFamily::BandTable { .. }, None) => {
                sum_series(0, |k| self.band_cf_exponent(k, theta), 0.0)
            }
        }
    }

    /// Draws `|x|` from ρ restricted to band `j` (which must carry mass).
    pub fn sample_magnitude<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> f64 {
        // (0, 1] so that the upper band edge is attainable and the lower is not.
        let u = 1.0 - rng.random::<f64>();
        match self {
            RadialFamily::Stable { alpha, .. } => {
                if j == 0 {
                    let x = u.powf(-1.0 / alpha);
                    if x > 1.0 {
                        x
                    } else {
                        f64::from_bits(1f64.to_bits() + 1)
                    }
                } else {
                    let (lo, hi) = band_bounds(j);
                    let (ta, tb) = (lo.powf(-alpha), hi.powf(-alpha));
                    let x = (ta - u * (ta - tb)).powf(-1.0 / alpha);
                    clamp_open_closed(x, lo, hi)
                }
            }
            RadialFamily::FiniteAtoms { atoms } => {
                let in_band: Vec<&(f64, f64)> =
                    atoms.iter().filter(|(x, _)| band_of(*x) == j).collect();
                let total: f64 = in_band.iter().map(|(_, w)| w).sum();
                let mut r = u * total;
                for (x, w) in &in_band {
                    if r <= *w {
                        return x.abs();
                    }
                    r -= w;
                }
                in_band.last().expect("band has mass").0.abs()
            }
            RadialFamily::BandTable { .. } => {
                let lo = if j == 0 { 1.0 } else { band_bounds(j).0 };
                clamp_open_closed(lo + u * lo, lo, 2.0 * lo)
            }
        }
    }
}

fn clamp_open_closed(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        f64::from_bits(lo.to_bits() + 1)
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Sums `f(start), f(start+1), ...` onto `acc` until terms stop mattering.
fn sum_series(start: usize, f: impl Fn(usize) -> f64, mut acc: f64) -> f64 {
    let mut small = 0;
    for j in start..start + 4096 {
        let term = f(j);
        if !term.is_finite() {
            return term;
        }
        acc += term;
        if term.abs() <= 1e-17 * acc.abs().max(1e-300) {
            small += 1;
            if small >= 8 {
                break;
            }
        } else {
            small = 0;
        }
    }
    acc
}

/// `2c ∫_ε^∞ (cos θx − 1) x^{-1-α} dx`, via the full integral minus the part
/// below ε.
fn stable_cos_above(alpha: f64, scale: f64, theta: f64, eps: f64) -> f64 {
    -2.0 * scale * theta.abs().powf(alpha) * stable_cos_constant(alpha)
        - stable_cos_below(alpha, scale, theta, eps)
}

/// `2c ∫_0^ε (cos θx − 1) x^{-1-α} dx`. Power series when θε is moderate,
/// otherwise the complement of a numerically integrated upper part.
fn stable_cos_below(alpha: f64, scale: f64, theta: f64, eps: f64) -> f64 {
    let z = theta.abs() * eps;
    if z <= 8.0 {
        // Σ_k (−1)^k θ^{2k} ε^{2k−α} / ((2k)! (2k−α))
        let mut acc = 0.0;
        let mut pow = 1.0; // z^{2k} / (2k)!
        for k in 1..200 {
            let kk = 2.0 * k as f64;
            pow *= -z * z / ((kk - 1.0) * kk);
            let term = pow / (kk - alpha);
            acc += term;
            if term.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
        2.0 * scale * acc * eps.powf(-alpha)
    } else {
        // Substitute u = θx and integrate (cos u − 1) u^{-1-α} on [0, z] by
        // splitting at 8: series below, Gauss–Legendre panels above.
        let head = stable_cos_below(alpha, 1.0, 1.0, 8.0) / 2.0;
        let tail = integrate_panels(|u| (u.cos() - 1.0) * u.powf(-1.0 - alpha), 8.0, z);
        2.0 * scale * theta.abs().powf(alpha) * (head + tail)
    }
}

fn integrate_panels(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    const X: [f64; 5] = [
        0.0,
        0.538_469_310_105_683_1,
        -0.538_469_310_105_683_1,
        0.906_179_845_938_664,
        -0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let panels = ((b - a) / 0.5).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            X.iter().zip(&W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}

fn fit_tail(nu: &[f64], continuation: Continuation) -> Tail {
    if continuation == Continuation::Zero {
        return Tail::Finite;
    }
    let start = nu.len().saturating_sub(CONTINUATION_FIT_BANDS);
    let pts: Vec<(f64, f64)> = nu[start..]
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| ((start + i + 1) as f64, v.log2()))
        .collect();
    match continuation {
        Continuation::Geometric if pts.len() >= 2 => {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            let b = sxy / sxx;
            Tail::Power { a: my - b * mx, b, c: 0.0 }
        }
        Continuation::LogGeometric if pts.len() >= 3 => {
            let mut ata = Matrix3::zeros();
            let mut aty = Vector3::zeros();
            for &(j, y) in &pts {
                let row = Vector3::new(1.0, j, j.log2());
                ata += row * row.transpose();
                aty += row * y;
            }
            match ata.lu().solve(&aty) {
                Some(s) => Tail::Power { a: s[0], b: s[1], c: s[2] },
                None => Tail::Finite,
            }
        }
        _ => Tail::Finite,
    }
}
