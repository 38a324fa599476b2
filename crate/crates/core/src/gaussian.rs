//! Gaussian component: variogram, covariance and exact sampling on grids.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::{ComponentTag, FieldSample, GridSpec};
use crate::measure::{CharTriple, JumpMeasure, SphericalMeasure};
use crate::rng::{substream, StreamTag};

/// Largest point count accepted by the dense factorization path.
pub const CHOLESKY_CAP: usize = 4096;

fn check(mu: &SphericalMeasure, v: &[f64]) -> Result<()> {
    if v.len() != mu.dim() {
        return Err(Error::DimMismatch { expected: mu.dim(), got: v.len() });
    }
    Ok(())
}

/// `½∫|⟨s,u⟩| μ(ds)`, the variance of `B(u)`.
pub fn variogram(mu: &SphericalMeasure, u: &[f64]) -> Result<f64> {
    check(mu, u)?;
    Ok(mu.half_abs_moment(u))
}

/// `Cov(B(t), B(t2))`.
pub fn covariance(mu: &SphericalMeasure, t: &[f64], t2: &[f64]) -> Result<f64> {
    check(mu, t)?;
    check(mu, t2)?;
    let diff: Vec<f64> = t.iter().zip(t2).map(|(a, b)| a - b).collect();
    Ok(0.5 * (mu.half_abs_moment(t) + mu.half_abs_moment(t2) - mu.half_abs_moment(&diff)))
}

/// Draws `B_μ` on `grid`.
///
/// In one dimension the field is `c_μ` times a two-sided Brownian motion and is
/// sampled from independent increments, with no size limit. Otherwise the
/// covariance over the non-origin grid points is factorized (at most
/// [`CHOLESKY_CAP`] points).
pub fn sample_gaussian(mu: &SphericalMeasure, grid: &GridSpec, seed: u64) -> Result<FieldSample> {
    if grid.dim() != mu.dim() {
        return Err(Error::DimMismatch { expected: mu.dim(), got: grid.dim() });
    }
    let fingerprint =
        CharTriple::new(vec![0.0; mu.dim()], mu.clone(), JumpMeasure::zero(mu.dim()))?.fingerprint();
    let mut rng = substream(seed, StreamTag::Gaussian, 0, 0);
    let values = if mu.is_zero() {
        vec![0.0; grid.len()]
    } else if grid.dim() == 1 {
        brownian_path(mu.c_mu(), grid, &mut rng)
    } else {
        cholesky_sample(mu, grid, &mut rng)?
    };
    FieldSample::new(grid.clone(), values, ComponentTag::Gaussian, seed, fingerprint)
}

fn brownian_path<R: Rng + ?Sized>(c: f64, grid: &GridSpec, rng: &mut R) -> Vec<f64> {
    let ax = grid.axes()[0];
    let t: Vec<f64> = (0..ax.count).map(|i| ax.coord(i)).collect();
    let mut v = vec![0.0; t.len()];
    let first_pos = t.iter().position(|x| *x > 0.0).unwrap_or(t.len());
    let mut walk = |range: &mut dyn Iterator<Item = usize>, v: &mut Vec<f64>| {
        let (mut prev_t, mut prev_v) = (0.0f64, 0.0);
        for i in range {
            let z: f64 = rng.sample(StandardNormal);
            prev_v += c * (t[i] - prev_t).abs().sqrt() * z;
            prev_t = t[i];
            v[i] = prev_v;
        }
    };
    walk(&mut (first_pos..t.len()), &mut v);
    walk(&mut (0..first_pos).rev().filter(|i| t[*i] < 0.0), &mut v);
    v
}

fn cholesky_sample<R: Rng + ?Sized>(
    mu: &SphericalMeasure,
    grid: &GridSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let origin = grid.origin_index();
    let idx: Vec<usize> = (0..grid.len()).filter(|i| Some(*i) != origin).collect();
    let n = idx.len();
    if n > CHOLESKY_CAP {
        return Err(Error::InvalidGrid(format!(
            "{n} points exceed the covariance factorization cap of {CHOLESKY_CAP}"
        )));
    }
    let pts: Vec<Vec<f64>> = idx.iter().map(|i| grid.point(*i)).collect();
    let var: Vec<f64> = pts.iter().map(|p| mu.half_abs_moment(p)).collect();
    let mut cov = DMatrix::zeros(n, n);
    let mut diff = vec![0.0; grid.dim()];
    for i in 0..n {
        cov[(i, i)] = var[i];
        for k in 0..i {
            for (d, (a, b)) in diff.iter_mut().zip(pts[i].iter().zip(&pts[k])) {
                *d = a - b;
            }
            let c = 0.5 * (var[i] + var[k] - mu.half_abs_moment(&diff));
            cov[(i, k)] = c;
            cov[(k, i)] = c;
        }
    }
    let factor = factorize_with_jitter(cov)?;
    let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let x = factor * z;
    let mut values = vec![0.0; grid.len()];
    for (k, i) in idx.iter().enumerate() {
        values[*i] = x[k];
    }
    Ok(values)
}

/// Lower Cholesky factor, adding diagonal jitter `ε·tr/n` for
/// `ε ∈ {0, 1e-12, 1e-11, 1e-10}` until the factorization succeeds.
pub fn factorize_with_jitter(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    let scale = cov.trace() / n.max(1) as f64;
    let mut last = 0.0;
    for eps in [0.0, 1e-12, 1e-11, 1e-10] {
        let mut m = cov.clone();
        for i in 0..n {
            m[(i, i)] += eps * scale;
        }
        if let Some(ch) = m.cholesky() {
            return Ok(ch.unpack());
        }
        last = eps;
    }
    Err(Error::NotPsd { jitter: last })
}

/// For each δ: `max |B(t') − B(t)|` over grid pairs with `‖t − t'‖ ≤ δ`, divided
/// by `(δ log(1/δ))^{1/2}`.
pub fn modulus_statistic(sample: &FieldSample, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if sample.tag != ComponentTag::Gaussian {
        return Err(Error::InvalidArgument("modulus statistic expects a gaussian sample".into()));
    }
    let grid = &sample.grid;
    let hmin = grid.spacings().into_iter().fold(f64::INFINITY, f64::min);
    deltas
        .iter()
        .map(|&delta| {
            if delta < hmin {
                return Err(Error::ScaleBelowResolution(format!(
                    "delta {delta} below grid spacing {hmin}"
                )));
            }
            if delta >= 1.0 {
                return Err(Error::InvalidArgument(format!("delta {delta} must be below 1")));
            }
            let sup = max_increment(sample, delta);
            Ok((delta, sup / (delta * (1.0 / delta).ln()).sqrt()))
        })
        .collect()
}

fn max_increment(sample: &FieldSample, radius: f64) -> f64 {
    let grid = &sample.grid;
    // half the symmetric stencil suffices for unordered pairs
    let offs: Vec<Vec<isize>> = grid
        .ball_offsets(radius)
        .into_iter()
        .filter(|o| o.iter().rev().find(|c| **c != 0).is_some_and(|c| *c > 0))
        .collect();
    let mut best = 0.0f64;
    for flat in 0..grid.len() {
        let idx = grid.multi_index(flat);
        let v = sample.values[flat];
        for o in &offs {
            if let Some(k) = grid.offset_index(&idx, o) {
                best = best.max((sample.values[k] - v).abs());
            }
        }
    }
    best
}

/// `min_t max_{t'} |B(t') − B(t)| / ‖t' − t‖^{1/2}` over nearest grid
/// neighbours `t'` (within one spacing).
pub fn irregularity_statistic(sample: &FieldSample) -> f64 {
    let grid = &sample.grid;
    let h = grid.spacings();
    let radius = h.iter().cloned().fold(0.0, f64::max);
    let offs: Vec<(Vec<isize>, f64)> = grid
        .ball_offsets(radius)
        .into_iter()
        .filter(|o| o.iter().any(|c| *c != 0))
        .map(|o| {
            let d = o.iter().zip(&h).map(|(c, hi)| (*c as f64 * hi).powi(2)).sum::<f64>().sqrt();
            (o, d)
        })
        .collect();
    let mut worst = f64::INFINITY;
    for flat in 0..grid.len() {
        let idx = grid.multi_index(flat);
        let v = sample.values[flat];
        let local = offs
            .iter()
            .filter_map(|(o, d)| grid.offset_index(&idx, o).map(|k| (sample.values[k] - v).abs() / d.sqrt()))
            .fold(0.0, f64::max);
        worst = worst.min(local);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Direction;
    use std::f64::consts::PI;

    fn brownian() -> SphericalMeasure {
        SphericalMeasure::new(1, 0.0, vec![(Direction::axis(1, 0), 1.0)]).unwrap()
    }

    #[test]
    fn variogram_examples() {
        assert_eq!(variogram(&brownian(), &[0.5]).unwrap(), 0.5);
        assert_eq!(variogram(&brownian(), &[0.0]).unwrap(), 0.0);
        let iso = SphericalMeasure::isotropic(2, PI).unwrap();
        // oracle: (1/2)(π/2π) ∫|cos θ| dθ by trapezoid
        let n = 1 << 14;
        let q = 0.5 * 0.5 * (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos().abs()).sum::<f64>()
            * (2.0 * PI / n as f64);
        assert!((q - 1.0).abs() < 1e-6);
        assert!((variogram(&iso, &[1.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(variogram(&iso, &[1.0]).is_err());
    }

    #[test]
    fn covariance_examples() {
        let b = brownian();
        assert_eq!(covariance(&b, &[1.0], &[2.0]).unwrap(), 1.0);
        assert_eq!(covariance(&b, &[1.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(covariance(&b, &[0.7], &[0.7]).unwrap(), variogram(&b, &[0.7]).unwrap());
        assert_eq!(covariance(&b, &[-1.0], &[2.0]).unwrap(), 0.0);
    }

    #[test]
    fn samples_vanish_at_origin_and_repeat() {
        let mu = SphericalMeasure::isotropic(2, 1.0).unwrap();
        let g = GridSpec::cube(2, -1.0, 1.0, 9).unwrap();
        let a = sample_gaussian(&mu, &g, 5).unwrap();
        let b = sample_gaussian(&mu, &g, 5).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.values[g.origin_index().unwrap()], 0.0);
        let c = sample_gaussian(&mu, &g, 6).unwrap();
        assert_ne!(a.values, c.values);
        let g1 = GridSpec::cube(1, -1.0, 1.0, 9).unwrap();
        let s = sample_gaussian(&brownian(), &g1, 1).unwrap();
        assert_eq!(s.values[4], 0.0);
    }

    #[test]
    fn degenerate_measure_needs_jitter_only() {
        let mu = SphericalMeasure::new(2, 0.0, vec![(Direction::axis(2, 0), 1.0)]).unwrap();
        let g = GridSpec::cube(2, 0.0, 1.0, 6).unwrap();
        let s = sample_gaussian(&mu, &g, 1).unwrap();
        // the field depends on t_1 only
        for j in 1..6 {
            for i in 0..6 {
                let d = s.values[i + 6 * j] - s.values[i];
                assert!(d.abs() < 1e-4, "{d}");
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mu = SphericalMeasure::isotropic(2, 1.0).unwrap();
        let g = GridSpec::cube(2, 0.1, 1.0, 65).unwrap();
        assert!(matches!(sample_gaussian(&mu, &g, 0), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn factorization_rejects_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(factorize_with_jitter(m), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn modulus_of_zero_field() {
        let g = GridSpec::cube(1, 0.0, 1.0, 65).unwrap();
        let s = FieldSample::new(g, vec![0.0; 65], ComponentTag::Gaussian, 0, String::new()).unwrap();
        for (_, r) in modulus_statistic(&s, &[0.25, 0.125]).unwrap() {
            assert_eq!(r, 0.0);
        }
        assert!(modulus_statistic(&s, &[0.001]).is_err());
        assert_eq!(irregularity_statistic(&s), 0.0);
    }

    #[test]
    fn brownian_unit_variance() {
        let g = GridSpec::cube(1, 0.0, 1.0, 1025).unwrap();
        let n = 2000;
        let v: f64 = (0..n)
            .map(|seed| sample_gaussian(&brownian(), &g, seed).unwrap().values[1024].powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((0.94..=1.06).contains(&v), "{v}");
    }

    #[test]
    fn brownian_modulus_is_bounded_and_positive() {
        let g = GridSpec::cube(1, 0.0, 1.0, 1 << 12).unwrap();
        let s = sample_gaussian(&brownian(), &g, 9).unwrap();
        let deltas: Vec<f64> = (2..=9).map(|k| (-(k as f64)).exp2()).collect();
        let r = modulus_statistic(&s, &deltas).unwrap();
        let max = r.iter().map(|p| p.1).fold(0.0, f64::max);
        let min = r.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!(min > 0.0 && max < 4.0, "{r:?}");
        assert!(irregularity_statistic(&s) > 0.0);
    }
}
