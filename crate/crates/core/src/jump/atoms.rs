use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure::triple::hex;
use crate::measure::{band_of, Direction, JumpMeasure};
use crate::rng::{substream, StreamTag};

/// One Poisson hyperplane `{t : ⟨s,t⟩ = rho}` carrying a jump of size `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperplaneAtom {
    pub rho: f64,
    pub s: Direction,
    pub x: f64,
    pub band: usize,
}

/// Atoms of one magnitude band, struct-of-arrays, sorted by `rho`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Band {
    pub rho: Vec<f64>,
    /// Directions, `dim` coordinates per atom.
    pub dirs: Vec<f64>,
    pub x: Vec<f64>,
}

impl Band {
    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn direction(&self, i: usize, dim: usize) -> &[f64] {
        &self.dirs[i * dim..(i + 1) * dim]
    }
}

/// Sampled atoms with `rho < radius`, grouped by band `0..=j_trunc`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSet {
    dim: usize,
    radius: f64,
    j_trunc: usize,
    seed: u64,
    fingerprint: String,
    bands: Vec<Band>,
}

/// SHA-256 of the canonical JSON encoding of a jump measure.
pub fn measure_fingerprint(nu: &JumpMeasure) -> String {
    let json = serde_json::to_string(nu).expect("measure serializes");
    hex(&Sha256::digest(json.as_bytes()))
}

fn canonical_order(a: &HyperplaneAtom, b: &HyperplaneAtom) -> Ordering {
    a.rho
        .total_cmp(&b.rho)
        .then(a.x.total_cmp(&b.x))
        .then_with(|| {
            a.s.coords()
                .iter()
                .zip(b.s.coords())
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
}

impl AtomSet {
    /// Builds a set from explicit atoms, validating bands and sorting into the
    /// canonical order.
    pub fn from_atoms(
        dim: usize,
        radius: f64,
        j_trunc: usize,
        seed: u64,
        fingerprint: String,
        mut atoms: Vec<HyperplaneAtom>,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
        }
        for a in &atoms {
            if a.s.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, got: a.s.dim() });
            }
            if !(a.rho > 0.0 && a.rho < radius) {
                return Err(Error::InvalidArgument(format!(
                    "atom rho {} outside (0, {radius})",
                    a.rho
                )));
            }
            if !(a.x.is_finite() && a.x != 0.0) || band_of(a.x) != a.band {
                return Err(Error::InvalidArgument(format!(
                    "atom size {} does not belong to band {}",
                    a.x, a.band
                )));
            }
            if a.band > j_trunc {
                return Err(Error::InvalidArgument(format!(
                    "atom band {} beyond truncation {j_trunc}",
                    a.band
                )));
            }
        }
        atoms.sort_by(|a, b| a.band.cmp(&b.band).then_with(|| canonical_order(a, b)));
        let mut bands = vec![Band::default(); j_trunc + 1];
        for a in atoms {
            let b = &mut bands[a.band];
            b.rho.push(a.rho);
            b.dirs.extend_from_slice(a.s.coords());
            b.x.push(a.x);
        }
        Ok(Self { dim, radius, j_trunc, seed, fingerprint, bands })
    }

    pub fn empty(dim: usize, radius: f64, j_trunc: usize) -> Self {
        Self {
            dim,
            radius,
            j_trunc,
            seed: 0,
            fingerprint: String::new(),
            bands: vec![Band::default(); j_trunc + 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn j_trunc(&self) -> usize {
        self.j_trunc
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn band(&self, j: usize) -> &Band {
        &self.bands[j]
    }

    pub fn len(&self) -> usize {
        self.bands.iter().map(Band::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Atoms in canonical order (by band, then within band).
    pub fn iter(&self) -> impl Iterator<Item = HyperplaneAtom> + '_ {
        self.bands.iter().enumerate().flat_map(move |(j, b)| {
            (0..b.len()).map(move |i| HyperplaneAtom {
                rho: b.rho[i],
                s: Direction::new(b.direction(i, self.dim).to_vec()).expect("stored unit vector"),
                x: b.x[i],
                band: j,
            })
        })
    }

    /// The same atoms cut down to bands `0..=j`.
    pub fn truncated(&self, j: usize) -> Self {
        let mut out = self.clone();
        out.j_trunc = j.min(self.j_trunc);
        out.bands.truncate(out.j_trunc + 1);
        out
    }
}

/// Samples the Poisson hyperplane process of `nu` restricted to
/// `rho ∈ (0, radius)` and bands `0..=j_trunc`.
pub fn sample_atoms(nu: &JumpMeasure, radius: f64, j_trunc: usize, seed: u64) -> Result<AtomSet> {
    sample_atoms_replica(nu, radius, j_trunc, seed, 0)
}

/// As [`sample_atoms`], drawing from the substreams of replica `replica`.
/// Band `j` of a replica only reads its own stream, so raising `j_trunc`
/// leaves the lower bands untouched.
pub fn sample_atoms_replica(
    nu: &JumpMeasure,
    radius: f64,
    j_trunc: usize,
    seed: u64,
    replica: u64,
) -> Result<AtomSet> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius {radius} must be positive")));
    }
    if j_trunc < 1 {
        return Err(Error::InvalidArgument("J_trunc must be at least 1".into()));
    }
    if j_trunc >= 1 << 16 {
        return Err(Error::InvalidArgument(format!("J_trunc {j_trunc} too large")));
    }
    nu.check_levy()?;
    let dim = nu.dim();
    let mut bands = Vec::with_capacity(j_trunc + 1);
    for j in 0..=j_trunc {
        let mass = nu.band_mass(j);
        if !mass.is_finite() {
            return Err(Error::NotLevy(format!("band {j} has infinite mass")));
        }
        let mut band = Band::default();
        let mean = radius * mass;
        if mean > 0.0 {
            let mut rng = substream(seed, StreamTag::Atoms, replica, j as u64);
            let pois = Poisson::new(mean)
                .map_err(|e| Error::InvalidArgument(format!("band {j} intensity {mean}: {e}")))?;
            let count = pois.sample(&mut rng) as usize;
            let mut atoms: Vec<(f64, Direction, f64)> = (0..count)
                .map(|_| {
                    let rho = loop {
                        let r = rng.random::<f64>() * radius;
                        if r > 0.0 {
                            break r;
                        }
                    };
                    let (s, x) = nu.sample_in_band(j, &mut rng);
                    (rho, s, x)
                })
                .collect();
            atoms.sort_by(|a, b| {
                a.0.total_cmp(&b.0).then(a.2.total_cmp(&b.2)).then_with(|| {
                    a.1.coords()
                        .iter()
                        .zip(b.1.coords())
                        .map(|(p, q)| p.total_cmp(q))
                        .find(|o| *o != Ordering::Equal)
                        .unwrap_or(Ordering::Equal)
                })
            });
            band.rho.reserve(count);
            band.x.reserve(count);
            band.dirs.reserve(count * dim);
            for (rho, s, x) in atoms {
                band.rho.push(rho);
                band.dirs.extend_from_slice(s.coords());
                band.x.push(x);
            }
        }
        bands.push(band);
    }
    Ok(AtomSet { dim, radius, j_trunc, seed, fingerprint: measure_fingerprint(nu), bands })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{RadialFamily, SphericalMeasure};

    fn stable(alpha: f64) -> JumpMeasure {
        JumpMeasure::product(
            SphericalMeasure::isotropic(2, 1.0).unwrap(),
            RadialFamily::Stable { alpha, scale: 1.0 },
        )
        .unwrap()
    }

    #[test]
    fn zero_measure_gives_empty_set() {
        let set = sample_atoms(&JumpMeasure::zero(2), 1.0, 5, 1).unwrap();
        assert!(set.is_empty());
        assert_eq!(set.bands().len(), 6);
    }

    #[test]
    fn atoms_respect_bands_and_radius() {
        let set = sample_atoms(&stable(1.2), 0.8, 8, 4).unwrap();
        assert!(!set.is_empty());
        for a in set.iter() {
            assert!(a.rho > 0.0 && a.rho < 0.8);
            assert_eq!(band_of(a.x), a.band);
        }
        for b in set.bands() {
            assert!(b.rho.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn truncation_levels_nest() {
        let lo = sample_atoms(&stable(1.2), 1.0, 6, 9).unwrap();
        let hi = sample_atoms(&stable(1.2), 1.0, 9, 9).unwrap();
        assert_eq!(hi.truncated(6).bands(), lo.bands());
    }

    #[test]
    fn compound_poisson_count_mean() {
        // FiniteAtoms{±2, 0.5}, A = 10: mean count 10, all in band 0
        let nu = JumpMeasure::product(
            SphericalMeasure::isotropic(1, 1.0).unwrap(),
            RadialFamily::FiniteAtoms { atoms: vec![(2.0, 0.5)] },
        )
        .unwrap();
        let n = 500;
        let mut total = 0usize;
        for seed in 0..n {
            let set = sample_atoms(&nu, 10.0, 3, seed).unwrap();
            assert_eq!(set.len(), set.band(0).len());
            total += set.len();
        }
        let mean = total as f64 / n as f64;
        // Poisson(10): sd of the mean is sqrt(10/500)
        assert!((mean - 10.0).abs() < 4.0 * (10.0f64 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn stable_band_one_count_mean() {
        let nu = stable(1.0);
        let n = 2000;
        let total: usize = (0..n).map(|s| sample_atoms(&nu, 1.0, 1, s).unwrap().band(1).len()).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 2.0).abs() < 4.0 * (2.0f64 / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn from_atoms_canonicalizes_order() {
        let mk = |rho: f64, x: f64| HyperplaneAtom {
            rho,
            s: Direction::axis(1, 0),
            x,
            band: band_of(x),
        };
        let a = vec![mk(0.3, 2.0), mk(0.1, 0.5), mk(0.2, 3.0)];
        let mut b = a.clone();
        b.reverse();
        let sa = AtomSet::from_atoms(1, 1.0, 2, 0, String::new(), a).unwrap();
        let sb = AtomSet::from_atoms(1, 1.0, 2, 0, String::new(), b).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(sa.band(0).rho, vec![0.2, 0.3]);
        assert!(AtomSet::from_atoms(1, 1.0, 2, 0, String::new(), vec![mk(1.5, 2.0)]).is_err());
    }
}
