use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOL: f64 = 1e-12;

/// Canonical inner product. Every indicator test in the crate goes through this
/// function so that the summation order is fixed.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// A unit vector in R^d, d ∈ {1, 2, 3}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(Vec<f64>);

impl Direction {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        check_dim(coords.len())?;
        let n = norm(&coords);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidMeasure(format!(
                "direction {coords:?} has norm {n}, expected 1"
            )));
        }
        Ok(Self(coords))
    }

    /// Normalizes `v`; fails on the zero vector.
    pub fn normalized(mut v: Vec<f64>) -> Result<Self> {
        check_dim(v.len())?;
        let n = norm(&v);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidMeasure(format!("cannot normalize {v:?}")));
        }
        v.iter_mut().for_each(|c| *c /= n);
        Ok(Self(v))
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, t: &[f64]) -> f64 {
        dot(&self.0, t)
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|c| -c).collect())
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Direction::new(v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.0
    }
}

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if (1..=3).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidMeasure(format!("dimension {d} not in 1..=3")))
    }
}

/// E|s_1| for s uniform on S^{d-1}.
pub fn mean_abs_coord(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 2.0 / PI,
        3 => 0.5,
        _ => unreachable!("dimension checked at construction"),
    }
}

/// E‖p(s)‖ for s uniform on S^{d-1} and p an orthogonal projection onto a
/// d'-dimensional subspace.
pub fn projection_mean_norm(dim: usize, sub: usize) -> f64 {
    match (dim, sub) {
        (d, e) if d == e => 1.0,
        (2, 1) => 2.0 / PI,
        (3, 1) => 0.5,
        (3, 2) => PI / 4.0,
        _ => unreachable!("projection {dim}->{sub} not supported"),
    }
}

/// Half-atoms covering a uniform measure on S^{d-1}: each returned direction
/// stands for the symmetric pair {s, −s}. Equal weights are implied.
pub fn sphere_half_grid(dim: usize, n: usize) -> Vec<Direction> {
    match dim {
        1 => vec![Direction(vec![1.0])],
        2 => (0..n)
            .map(|i| {
                let th = PI * (i as f64 + 0.5) / n as f64;
                Direction(vec![th.cos(), th.sin()])
            })
            .collect(),
        3 => {
            // Fibonacci lattice on the upper hemisphere; z uniform gives equal areas.
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    Direction(vec![r * phi.cos(), r * phi.sin(), z])
                })
                .collect()
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

/// Uniform direction on S^{d-1}.
pub fn random_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Direction {
    match dim {
        1 => Direction(vec![if rng.random::<bool>() { 1.0 } else { -1.0 }]),
        2 => {
            let th = 2.0 * PI * rng.random::<f64>();
            Direction(vec![th.cos(), th.sin()])
        }
        3 => {
            let z = 2.0 * rng.random::<f64>() - 1.0;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            Direction(vec![r * phi.cos(), r * phi.sin(), z])
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

/// Finite symmetric measure on S^{d-1}: a uniform part of total mass
/// `isotropic_mass` plus atoms stored as half-pairs (each weight sits at both
/// s and −s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalMeasure {
    dim: usize,
    isotropic_mass: f64,
    atoms: Vec<(Direction, f64)>,
}

impl SphericalMeasure {
    pub fn new(dim: usize, isotropic_mass: f64, atoms: Vec<(Direction, f64)>) -> Result<Self> {
        check_dim(dim)?;
        if !(isotropic_mass.is_finite() && isotropic_mass >= 0.0) {
            return Err(Error::InvalidMeasure(format!(
                "isotropic mass {isotropic_mass} must be finite and nonnegative"
            )));
        }
        for (s, w) in &atoms {
            if s.dim() != dim {
                return Err(Error::DimMismatch { expected: dim, got: s.dim() });
            }
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom weight {w} must be positive")));
            }
        }
        Ok(Self { dim, isotropic_mass, atoms })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, isotropic_mass: 0.0, atoms: Vec::new() }
    }

    pub fn isotropic(dim: usize, mass: f64) -> Result<Self> {
        Self::new(dim, mass, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn isotropic_mass(&self) -> f64 {
        self.isotropic_mass
    }

    /// Half-pairs; each weight is carried by both s and −s.
    pub fn atoms(&self) -> &[(Direction, f64)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.isotropic_mass + 2.0 * self.atoms.iter().map(|(_, w)| w).sum::<f64>()
    }

    pub fn is_zero(&self) -> bool {
        self.total_mass() == 0.0
    }

    /// (μ(S^{d-1})/2)^{1/2}.
    pub fn c_mu(&self) -> f64 {
        (self.total_mass() / 2.0).sqrt()
    }

    /// ½∫|⟨s,u⟩| μ(ds), which by symmetry equals ∫⟨s,u⟩_+ μ(ds).
    pub fn half_abs_moment(&self, u: &[f64]) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|(s, w)| w * s.dot(u).abs()).sum();
        atoms + 0.5 * self.isotropic_mass * mean_abs_coord(self.dim) * norm(u)
    }

    /// Expands the measure into weighted half-atoms, discretizing the uniform
    /// part with `resolution` half-atoms (ignored in d = 1).
    pub fn discretized(&self, resolution: usize) -> Vec<(Direction, f64)> {
        let mut out = self.atoms.clone();
        if self.isotropic_mass > 0.0 {
            let grid = sphere_half_grid(self.dim, resolution);
            let w = self.isotropic_mass / (2.0 * grid.len() as f64);
            out.extend(grid.into_iter().map(|s| (s, w)));
        }
        out
    }

    /// Draws a direction from μ/μ(S^{d-1}). Panics on the zero measure.
    pub fn sample_direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Direction {
        let total = self.total_mass();
        assert!(total > 0.0, "sampling from the zero measure");
        let mut u = rng.random::<f64>() * total;
        if u < self.isotropic_mass || self.atoms.is_empty() {
            return random_direction(self.dim, rng);
        }
        u -= self.isotropic_mass;
        for (s, w) in &self.atoms {
            if u < 2.0 * w {
                return if u < *w { s.clone() } else { s.neg() };
            }
            u -= 2.0 * w;
        }
        let (s, _) = self.atoms.last().expect("nonempty");
        s.neg()
    }
}
