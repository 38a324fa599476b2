use serde::Serialize;

use crate::error::{Error, Result};
use crate::measure::sphere::norm;
use crate::measure::{band_of, JumpMeasure, RadialFamily, Tail};

use super::atoms::sample_atoms_replica;
use super::evaluate::{compensator_table, evaluate_at};

/// Largest truncation level tried when matching the truncated law to the
/// full one.
pub const CF_MAX_TRUNC: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfRow {
    pub theta: f64,
    pub analytic_re: f64,
    pub analytic_im: f64,
    pub empirical_re: f64,
    pub empirical_im: f64,
    pub stderr: f64,
}

impl CfRow {
    /// `|empirical − analytic|` in units of `stderr`.
    pub fn z(&self) -> f64 {
        (self.empirical_re - self.analytic_re).hypot(self.empirical_im - self.analytic_im)
            / self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfReport {
    pub rows: Vec<CfRow>,
    /// Truncation level used for the replicas.
    pub j_trunc: usize,
    pub replicas: usize,
}

impl CfReport {
    /// Fraction of θ values with `|emp − an| ≤ k·stderr`.
    pub fn fraction_within(&self, k: f64) -> f64 {
        let ok = self.rows.iter().filter(|r| r.z() <= k).count();
        ok as f64 / self.rows.len().max(1) as f64
    }
}

fn cexp((re, im): (f64, f64)) -> (f64, f64) {
    let m = re.exp();
    (m * im.cos(), m * im.sin())
}

/// Characteristic function of `L(t)`, full (`j_max = None`) or truncated.
pub fn analytic_cf(nu: &JumpMeasure, t: &[f64], theta: f64, j_max: Option<usize>) -> (f64, f64) {
    cexp(nu.cf_exponent(t, theta, j_max))
}

/// Highest band carrying mass when the measure has finitely many bands.
fn last_band(nu: &JumpMeasure) -> Option<usize> {
    match nu {
        JumpMeasure::AtomList { atoms, .. } => Some(atoms.iter().map(|a| band_of(a.x)).max().unwrap_or(0)),
        JumpMeasure::Product { radial, .. } => match (radial, radial.tail()) {
            (RadialFamily::FiniteAtoms { atoms }, _) => {
                Some(atoms.iter().map(|(x, _)| band_of(*x)).max().unwrap_or(0))
            }
            (RadialFamily::BandTable { nu, .. }, Tail::Finite) => Some(nu.len()),
            _ => None,
        },
    }
}

/// Compares the empirical characteristic function of `L(t)` over `replicas`
/// independent atom sets against the analytic one.
///
/// Replicas are simulated through the ordinary pipeline (sampling with radius
/// `‖t‖`, point evaluation). The truncation level is the smallest one whose
/// exact truncated law differs from the full law by at most a tenth of the
/// Monte Carlo standard error on the whole θ grid.
pub fn cf_validate(
    nu: &JumpMeasure,
    t: &[f64],
    thetas: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<CfReport> {
    if replicas < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 replicas, got {replicas}")));
    }
    if t.len() != nu.dim() {
        return Err(Error::DimMismatch { expected: nu.dim(), got: t.len() });
    }
    let stderr = (replicas as f64).powf(-0.5);
    let full: Vec<(f64, f64)> = thetas.iter().map(|th| analytic_cf(nu, t, *th, None)).collect();
    let j_trunc = match last_band(nu) {
        Some(j) => j.max(1),
        None => (1..=CF_MAX_TRUNC)
            .find(|&j| {
                thetas.iter().zip(&full).all(|(th, f)| {
                    let g = analytic_cf(nu, t, *th, Some(j));
                    (g.0 - f.0).hypot(g.1 - f.1) <= 0.1 * stderr
                })
            })
            .unwrap_or(CF_MAX_TRUNC),
    };
    let radius = norm(t);
    let samples: Vec<f64> = if radius == 0.0 {
        vec![0.0; replicas]
    } else {
        let comp = compensator_table(nu, j_trunc);
        (0..replicas as u64)
            .map(|r| {
                let atoms = sample_atoms_replica(nu, radius, j_trunc, seed, r)?;
                evaluate_at(&atoms, &comp, t)
            })
            .collect::<Result<_>>()?
    };
    let rows = thetas
        .iter()
        .zip(&full)
        .map(|(&theta, an)| {
            let (mut re, mut im) = (0.0, 0.0);
            for l in &samples {
                let (s, c) = (theta * l).sin_cos();
                re += c;
                im += s;
            }
            CfRow {
                theta,
                analytic_re: an.0,
                analytic_im: an.1,
                empirical_re: re / replicas as f64,
                empirical_im: im / replicas as f64,
                stderr,
            }
        })
        .collect();
    Ok(CfReport { rows, j_trunc, replicas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Direction, JumpAtom, SphericalMeasure};

    #[test]
    fn theta_zero_is_one() {
        let nu = JumpMeasure::product(
            SphericalMeasure::isotropic(2, 1.0).unwrap(),
            RadialFamily::Stable { alpha: 1.2, scale: 1.0 },
        )
        .unwrap();
        let r = cf_validate(&nu, &[1.0, 0.0], &[0.0], 100, 1).unwrap();
        assert_eq!((r.rows[0].analytic_re, r.rows[0].analytic_im), (1.0, 0.0));
        assert_eq!((r.rows[0].empirical_re, r.rows[0].empirical_im), (1.0, 0.0));
        assert!(cf_validate(&nu, &[1.0, 0.0], &[0.0], 99, 1).is_err());
    }

    #[test]
    fn compound_poisson_closed_form() {
        let w = 0.8;
        let nu = JumpMeasure::atom_list(
            2,
            vec![JumpAtom { direction: Direction::axis(2, 0), x: 2.0, weight: w }],
        )
        .unwrap();
        let thetas: Vec<f64> = (0..21).map(|k| -5.0 + 0.5 * k as f64).collect();
        let r = cf_validate(&nu, &[1.0, 0.0], &thetas, 2000, 4).unwrap();
        for row in &r.rows {
            let th = row.theta;
            let m = (w * ((2.0 * th).cos() - 1.0)).exp();
            assert!((row.analytic_re - m * (w * (2.0 * th).sin()).cos()).abs() < 1e-14);
            assert!((row.analytic_im - m * (w * (2.0 * th).sin()).sin()).abs() < 1e-14);
        }
        assert!(r.fraction_within(4.0) >= 0.95);
    }
}
