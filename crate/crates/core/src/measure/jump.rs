use rand::Rng;
use serde::{Deserialize, Serialize};

use super::radial::{band_of, RadialFamily, Tail};
use super::sphere::{check_dim, Direction, SphericalMeasure};
use crate::error::{Error, Result};

/// Half of a symmetric jump pair: the measure carries `weight` at both
/// `(direction, x)` and `(−direction, −x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpAtom {
    pub direction: Direction,
    pub x: f64,
    pub weight: f64,
}

/// Complex number as `(re, im)`.
pub type C64 = (f64, f64);

/// Symmetric Lévy measure on S^{d-1} × R*.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coupling", rename_all = "snake_case")]
pub enum JumpMeasure {
    Product {
        directional: SphericalMeasure,
        radial: RadialFamily,
    },
    #[serde(rename = "atomlist")]
    AtomList { dim: usize, atoms: Vec<JumpAtom> },
}

impl JumpMeasure {
    pub fn product(directional: SphericalMeasure, radial: RadialFamily) -> Result<Self> {
        let nu = JumpMeasure::Product { directional, radial };
        nu.validate()?;
        Ok(nu)
    }

    pub fn atom_list(dim: usize, atoms: Vec<JumpAtom>) -> Result<Self> {
        let nu = JumpMeasure::AtomList { dim, atoms };
        nu.validate()?;
        Ok(nu)
    }

    pub fn zero(dim: usize) -> Self {
        JumpMeasure::AtomList { dim, atoms: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            JumpMeasure::Product { directional, radial } => {
                check_dim(directional.dim())?;
                radial.validate()
            }
            JumpMeasure::AtomList { dim, atoms } => {
                check_dim(*dim)?;
                for a in atoms {
                    if a.direction.dim() != *dim {
                        return Err(Error::DimMismatch { expected: *dim, got: a.direction.dim() });
                    }
                    if !(a.x.is_finite() && a.x != 0.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "jump size {} must be finite and nonzero",
                            a.x
                        )));
                    }
                    if !(a.weight.is_finite() && a.weight > 0.0) {
                        return Err(Error::InvalidMeasure(format!(
                            "jump weight {} must be positive",
                            a.weight
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    pub fn check_levy(&self) -> Result<()> {
        match self {
            JumpMeasure::Product { radial, .. } => radial.check_levy(),
            JumpMeasure::AtomList { .. } => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            JumpMeasure::Product { directional, .. } => directional.dim(),
            JumpMeasure::AtomList { dim, .. } => *dim,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            JumpMeasure::Product { directional, radial } => {
                directional.is_zero()
                    || match radial {
                        RadialFamily::Stable { .. } => false,
                        RadialFamily::FiniteAtoms { atoms } => atoms.is_empty(),
                        RadialFamily::BandTable { nu0, nu, .. } => {
                            *nu0 == 0.0 && nu.iter().all(|v| *v == 0.0)
                        }
                    }
            }
            JumpMeasure::AtomList { atoms, .. } => atoms.is_empty(),
        }
    }

    /// `ν_j = ν(S^{d-1} × I_j)`.
    pub fn band_mass(&self, j: usize) -> f64 {
        match self {
            JumpMeasure::Product { directional, radial } => {
                let m = directional.total_mass();
                if m == 0.0 {
                    0.0
                } else {
                    m * radial.band_mass(j)
                }
            }
            JumpMeasure::AtomList { atoms, .. } => atoms
                .iter()
                .filter(|a| band_of(a.x) == j)
                .map(|a| 2.0 * a.weight)
                .sum(),
        }
    }

    pub fn log2_band_mass(&self, j: usize) -> f64 {
        match self {
            JumpMeasure::Product { directional, radial } => {
                let m = directional.total_mass();
                if m == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    m.log2() + radial.log2_band_mass(j)
                }
            }
            JumpMeasure::AtomList { .. } => self.band_mass(j).log2(),
        }
    }

    /// Asymptotic shape of `ν_j`.
    pub fn tail(&self) -> Tail {
        match self {
            JumpMeasure::Product { directional, radial } if !directional.is_zero() => {
                match radial.tail() {
                    Tail::Power { a, b, c } => {
                        Tail::Power { a: a + directional.total_mass().log2(), b, c }
                    }
                    Tail::Finite => Tail::Finite,
                }
            }
            _ => Tail::Finite,
        }
    }

    /// `ν(S^{d-1} × R*)`, infinite when the tail does not decay.
    pub fn total_mass(&self) -> f64 {
        match self.tail() {
            Tail::Power { b, c, .. } if b > 0.0 || (b == 0.0 && c >= -1.0) => f64::INFINITY,
            _ => {
                let mut acc = 0.0;
                for j in 0..4096 {
                    let m = self.band_mass(j);
                    acc += m;
                    if j > 64 && m <= 1e-17 * acc {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// `∫_{s, |x| ∈ I_j} ⟨s,t⟩_+ x² ν(ds,dx)`.
    pub fn band_campbell(&self, j: usize, t: &[f64]) -> f64 {
        match self {
            JumpMeasure::Product { directional, radial } => {
                let v = directional.half_abs_moment(t);
                if v == 0.0 {
                    0.0
                } else {
                    v * radial.band_second_moment(j)
                }
            }
            JumpMeasure::AtomList { atoms, .. } => atoms
                .iter()
                .filter(|a| band_of(a.x) == j)
                .map(|a| a.weight * a.x * a.x * a.direction.dot(t).abs())
                .sum(),
        }
    }

    /// `Σ_{j > j_trunc}` of [`Self::band_campbell`].
    pub fn tail_campbell(&self, j_trunc: usize, t: &[f64]) -> f64 {
        match self {
            JumpMeasure::Product { directional, radial } => {
                let v = directional.half_abs_moment(t);
                if v == 0.0 {
                    0.0
                } else {
                    v * radial.tail_second_moment(j_trunc)
                }
            }
            JumpMeasure::AtomList { atoms, .. } => atoms
                .iter()
                .filter(|a| band_of(a.x) > j_trunc)
                .map(|a| a.weight * a.x * a.x * a.direction.dot(t).abs())
                .sum(),
        }
    }

    /// Compensator vector `b_j = ∫_{s, x ∈ I_j} x·s ν(ds,dx)` (positive x only),
    /// so that the band-j sum has mean `⟨b_j, t⟩`.
    pub fn compensator(&self, j: usize) -> Vec<f64> {
        let mut b = vec![0.0; self.dim()];
        if j == 0 {
            return b;
        }
        if let JumpMeasure::AtomList { atoms, .. } = self {
            for a in atoms.iter().filter(|a| band_of(a.x) == j) {
                for (bi, si) in b.iter_mut().zip(a.direction.coords()) {
                    *bi += a.weight * a.x * si;
                }
            }
        }
        b
    }

    /// `∫_{|x| ∈ I_j} ⟨s,t⟩_+ (e^{iθx} − 1 − iθx·1{|x|≤1}) ν(ds,dx)`.
    pub fn band_cf_exponent(&self, j: usize, t: &[f64], theta: f64) -> C64 {
        match self {
            JumpMeasure::Product { directional, radial } => {
                let v = directional.half_abs_moment(t);
                if v == 0.0 {
                    (0.0, 0.0)
                } else {
                    (v * radial.band_cf_exponent(j, theta), 0.0)
                }
            }
            JumpMeasure::AtomList { atoms, .. } => {
                let mut acc = (0.0, 0.0);
                for a in atoms.iter().filter(|a| band_of(a.x) == j) {
                    let p = a.direction.dot(t);
                    // the pair member with ⟨s,t⟩ > 0 and its jump size
                    let (w, x) = if p > 0.0 { (p, a.x) } else { (-p, -a.x) };
                    let small = if j >= 1 { theta * x } else { 0.0 };
                    acc.0 += a.weight * w * ((theta * x).cos() - 1.0);
                    acc.1 += a.weight * w * ((theta * x).sin() - small);
                }
                acc
            }
        }
    }

    /// Characteristic exponent of `L(t)` over bands `0..=j_max`, or of the full
    /// field when `j_max` is `None`.
    pub fn cf_exponent(&self, t: &[f64], theta: f64, j_max: Option<usize>) -> C64 {
        match (self, j_max) {
            (JumpMeasure::Product { directional, radial }, _) => {
                let v = directional.half_abs_moment(t);
                if v == 0.0 {
                    (0.0, 0.0)
                } else {
                    (v * radial.cf_exponent(theta, j_max), 0.0)
                }
            }
            (JumpMeasure::AtomList { atoms, .. }, _) => {
                let top = j_max.unwrap_or(usize::MAX);
                let mut bands: Vec<usize> = atoms.iter().map(|a| band_of(a.x)).collect();
                bands.sort_unstable();
                bands.dedup();
                bands.into_iter().filter(|j| *j <= top).fold((0.0, 0.0), |acc, j| {
                    let e = self.band_cf_exponent(j, t, theta);
                    (acc.0 + e.0, acc.1 + e.1)
                })
            }
        }
    }

    /// Draws `(s, x)` from ν restricted to band `j`, normalized. The band must
    /// carry mass.
    pub fn sample_in_band<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> (Direction, f64) {
        match self {
            JumpMeasure::Product { directional, radial } => {
                let s = directional.sample_direction(rng);
                let m = radial.sample_magnitude(j, rng);
                let x = if rng.random::<bool>() { m } else { -m };
                (s, x)
            }
            JumpMeasure::AtomList { atoms, .. } => {
                let in_band: Vec<&JumpAtom> = atoms.iter().filter(|a| band_of(a.x) == j).collect();
                let total: f64 = in_band.iter().map(|a| a.weight).sum();
                let mut u = rng.random::<f64>() * total;
                let mut pick = *in_band.last().expect("band has mass");
                for a in &in_band {
                    if u < a.weight {
                        pick = a;
                        break;
                    }
                    u -= a.weight;
                }
                if rng.random::<bool>() {
                    (pick.direction.clone(), pick.x)
                } else {
                    (pick.direction.neg(), -pick.x)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> Direction {
        Direction::axis(d, i)
    }

    #[test]
    fn product_band_mass() {
        let nu = JumpMeasure::product(
            SphericalMeasure::isotropic(2, 1.0).unwrap(),
            RadialFamily::Stable { alpha: 1.0, scale: 1.0 },
        )
        .unwrap();
        assert_eq!(nu.band_mass(1), 2.0);
        assert_eq!(nu.band_mass(0), 2.0);
        assert_eq!(nu.total_mass(), f64::INFINITY);
    }

    #[test]
    fn atom_list_mass_is_additive() {
        let atoms = vec![
            JumpAtom { direction: e(2, 0), x: 0.75, weight: 1.0 },
            JumpAtom { direction: e(2, 1), x: -3.0, weight: 0.25 },
            JumpAtom { direction: e(2, 1), x: 0.01, weight: 2.0 },
        ];
        let nu = JumpMeasure::atom_list(2, atoms).unwrap();
        let sum: f64 = (0..20).map(|j| nu.band_mass(j)).sum();
        assert_eq!(sum, 2.0 * (1.0 + 0.25 + 2.0));
        assert_eq!(nu.total_mass(), sum);
    }

    #[test]
    fn compensator_of_single_pair() {
        let nu =
            JumpMeasure::atom_list(2, vec![JumpAtom { direction: e(2, 0), x: 0.75, weight: 1.0 }])
                .unwrap();
        assert_eq!(nu.compensator(1), vec![0.75, 0.0]);
        assert_eq!(nu.compensator(2), vec![0.0, 0.0]);
        // the mirrored half gives the same vector
        let mirrored =
            JumpMeasure::atom_list(2, vec![JumpAtom { direction: e(2, 0).neg(), x: -0.75, weight: 1.0 }])
                .unwrap();
        assert_eq!(mirrored.compensator(1), vec![0.75, 0.0]);
    }

    #[test]
    fn compound_poisson_cf_exponent() {
        let w = 0.7;
        let nu =
            JumpMeasure::atom_list(1, vec![JumpAtom { direction: e(1, 0), x: 2.0, weight: w }])
                .unwrap();
        for &th in &[-3.0, 0.5, 2.0] {
            let (re, im) = nu.cf_exponent(&[1.0], th, None);
            assert!((re - w * ((2.0 * th).cos() - 1.0)).abs() < 1e-15);
            assert!((im - w * (2.0 * th).sin()).abs() < 1e-15);
        }
    }
}
