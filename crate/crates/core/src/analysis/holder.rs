use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use super::ball::ball_extrema;
use super::PointFlag;
use crate::error::{Error, Result};
use crate::grid::{FieldSample, GridSpec};

/// Below this (relative to `max(1, sup|f|)`) an oscillation counts as zero.
pub const SATURATION_TOL: f64 = 1e-12;

/// Raw slope above which the detrended oscillation is used instead.
pub const DETREND_SWITCH: f64 = 0.95;

/// Detrended oscillations sample the ball on a sub-lattice with at most this
/// many steps per radius.
pub const DETREND_STEPS: usize = 16;

/// Ball radius at scale index `k`.
pub fn scale_radius(k: u32) -> f64 {
    (-(k as f64)).exp2()
}

/// `(k_min, k_max)`: from the unit scale down to about four spacings.
pub fn default_scales(grid: &GridSpec) -> (u32, u32) {
    let h = grid.spacings().into_iter().fold(0.0, f64::max);
    (0, ((1.0 / h).log2().floor() as i64 - 2).max(0) as u32)
}

fn check_scale(grid: &GridSpec, k: u32) -> Result<Vec<Vec<isize>>> {
    let offs = grid.ball_offsets(scale_radius(k));
    if offs.len() < 4 {
        return Err(Error::ScaleBelowResolution(format!(
            "ball of radius 2^-{k} holds {} grid points",
            offs.len()
        )));
    }
    Ok(offs)
}

/// `sup − inf` of the field over the grid ball of radius `2^{-k}` around the
/// point with multi-index `idx`.
pub fn oscillation(sample: &FieldSample, idx: &[usize], k: u32) -> Result<f64> {
    let offs = check_scale(&sample.grid, k)?;
    Ok(raw_osc(sample, idx, &offs))
}

/// As [`oscillation`], after subtracting the least-squares affine fit over the
/// ball.
pub fn oscillation_detrended(sample: &FieldSample, idx: &[usize], k: u32) -> Result<f64> {
    let offs = detrend_stencil(&sample.grid, check_scale(&sample.grid, k)?, k);
    Ok(detrended_osc(sample, idx, &offs))
}

/// Keeps the offsets on the sub-lattice of stride `⌊R/DETREND_STEPS⌋`, `R`
/// the radius in spacings along the finest axis.
fn detrend_stencil(grid: &GridSpec, offs: Vec<Vec<isize>>, k: u32) -> Vec<Vec<isize>> {
    let h = grid.spacings().into_iter().fold(f64::INFINITY, f64::min);
    let stride = ((scale_radius(k) / h) as usize / DETREND_STEPS).max(1) as isize;
    if stride == 1 {
        return offs;
    }
    offs.into_iter().filter(|o| o.iter().all(|c| c % stride == 0)).collect()
}

fn raw_osc(sample: &FieldSample, idx: &[usize], offs: &[Vec<isize>]) -> f64 {
    let (lo, hi) = offs
        .iter()
        .filter_map(|o| sample.grid.offset_index(idx, o))
        .map(|j| sample.values[j])
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    hi - lo
}

fn detrended_osc(sample: &FieldSample, idx: &[usize], offs: &[Vec<isize>]) -> f64 {
    let grid = &sample.grid;
    let h = grid.spacings();
    let dim = grid.dim();
    let regress = |o: &[isize]| {
        let mut x = Vector4::new(1.0, 0.0, 0.0, 0.0);
        for k in 0..dim {
            x[k + 1] = o[k] as f64 * h[k];
        }
        x
    };
    let pts: Vec<(Vector4<f64>, f64)> = offs
        .iter()
        .filter_map(|o| grid.offset_index(idx, o).map(|j| (regress(o), sample.values[j])))
        .collect();
    let center = sample.values[grid.flat_index(idx)];
    let mut xtx = Matrix4::zeros();
    let mut xty = Vector4::zeros();
    for (x, y) in &pts {
        xtx += x * x.transpose();
        xty += x * (y - center);
    }
    for k in dim + 1..4 {
        xtx[(k, k)] = 1.0;
    }
    let Some(coef) = xtx.lu().solve(&xty) else {
        return raw_osc(sample, idx, offs);
    };
    let (lo, hi) = pts
        .iter()
        .map(|(x, y)| (y - center) - coef.dot(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    hi - lo
}

/// Least-squares slope of `y` against `x` and the fit's r² (1 when `y` is
/// constant).
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy <= 1e-30 * (1.0 + my * my) { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, r2)
}

/// Per-point Hölder exponent estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderMap {
    pub grid: GridSpec,
    /// Clipped to `[0, h_max]`; infinite where saturated.
    pub exponent: Vec<f64>,
    pub flag: Vec<PointFlag>,
    pub r2: Vec<f64>,
    pub k_min: u32,
    pub k_max: u32,
    pub h_max: f64,
}

impl HolderMap {
    /// Exponents of unflagged points.
    pub fn finite_exponents(&self) -> Vec<f64> {
        self.exponent
            .iter()
            .zip(&self.flag)
            .filter(|(_, f)| **f == PointFlag::Ok)
            .map(|(e, _)| *e)
            .collect()
    }
}

/// Regresses `log2` oscillation on `k ∈ [k_min, k_max]` at every grid point.
pub fn holder_map(sample: &FieldSample, k_min: u32, k_max: u32, h_max: f64) -> Result<HolderMap> {
    let grid = &sample.grid;
    if k_max < k_min + 3 {
        return Err(Error::InvalidArgument(format!(
            "scale range {k_min}..={k_max} has fewer than four scales"
        )));
    }
    if !(h_max > 0.0) {
        return Err(Error::InvalidArgument(format!("h_max {h_max} must be positive")));
    }
    let stencils: Vec<Vec<Vec<isize>>> = (k_min..=k_max)
        .map(|k| Ok(detrend_stencil(grid, check_scale(grid, k)?, k)))
        .collect::<Result<_>>()?;
    let raw: Vec<Vec<f64>> = (k_min..=k_max)
        .map(|k| {
            let (lo, hi) = ball_extrema(grid, &sample.values, scale_radius(k));
            lo.iter().zip(&hi).map(|(l, h)| h - l).collect()
        })
        .collect();
    let sup = sample.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = SATURATION_TOL * sup.max(1.0);
    let ks: Vec<f64> = (k_min..=k_max).map(f64::from).collect();
    let finest = stencils.last().expect("nonempty scale range");
    let n = grid.len();
    let mut exponent = vec![0.0; n];
    let mut flag = vec![PointFlag::Ok; n];
    let mut r2 = vec![1.0; n];
    for p in 0..n {
        let idx = grid.multi_index(p);
        let fine_raw = raw.last().expect("nonempty")[p];
        if fine_raw < tol || detrended_osc(sample, &idx, finest) < tol {
            exponent[p] = f64::INFINITY;
            flag[p] = PointFlag::Saturated;
            continue;
        }
        let y: Vec<f64> = raw.iter().map(|osc| osc[p].log2()).collect();
        let (mut slope, mut fit) = fit_line(&ks, &y);
        if -slope > DETREND_SWITCH {
            let yd: Vec<f64> = stencils.iter().map(|o| detrended_osc(sample, &idx, o).log2()).collect();
            (slope, fit) = fit_line(&ks, &yd);
        }
        exponent[p] = (-slope).clamp(0.0, h_max);
        r2[p] = fit;
    }
    Ok(HolderMap { grid: grid.clone(), exponent, flag, r2, k_min, k_max, h_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ComponentTag;
    use proptest::prelude::*;

    fn sample(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> FieldSample {
        let values = grid.points().map(|p| f(&p)).collect();
        FieldSample::new(grid, values, ComponentTag::Combined, 0, String::new()).unwrap()
    }

    #[test]
    fn constant_and_affine_fields() {
        let g = GridSpec::cube(2, 0.0, 1.0, 33).unwrap();
        let c = sample(g.clone(), |_| 3.0);
        let a = sample(g.clone(), |p| 1.0 + 2.0 * p[0] - 0.5 * p[1]);
        for k in 2..=4 {
            assert_eq!(oscillation(&c, &[5, 7], k).unwrap(), 0.0);
            assert!(oscillation_detrended(&a, &[5, 7], k).unwrap() < 1e-10);
            assert!(oscillation_detrended(&a, &[0, 32], k).unwrap() < 1e-10);
        }
        assert!(oscillation(&c, &[0, 0], 9).is_err());
        let m = holder_map(&a, 1, 4, 2.0).unwrap();
        assert!(m.flag.iter().all(|f| *f == PointFlag::Saturated));
    }

    #[test]
    fn step_field_has_zero_exponent_on_jump() {
        let g = GridSpec::cube(1, 0.0, 1.0, 257).unwrap();
        let s = sample(g, |p| if p[0] > 0.5 { 2.0 } else { 0.0 });
        for k in 2..=6 {
            assert_eq!(oscillation(&s, &[128], k).unwrap(), 2.0);
        }
        let m = holder_map(&s, 2, 6, 2.0).unwrap();
        assert_eq!(m.exponent[128], 0.0);
        assert_eq!(m.flag[128], PointFlag::Ok);
        assert_eq!(m.flag[20], PointFlag::Saturated);
    }

    #[test]
    fn power_cusp_exponent() {
        let g = GridSpec::cube(1, -1.0, 1.0, 4097).unwrap();
        let s = sample(g, |p| p[0].abs().powf(0.3));
        let m = holder_map(&s, 2, 8, 2.0).unwrap();
        assert!((m.exponent[2048] - 0.3).abs() < 0.02, "{}", m.exponent[2048]);
        let s = sample(GridSpec::cube(1, -1.0, 1.0, 4097).unwrap(), |p| p[0].abs().powf(1.5));
        let m = holder_map(&s, 2, 8, 2.0).unwrap();
        assert!((m.exponent[2048] - 1.5).abs() < 0.05, "{}", m.exponent[2048]);
    }

    #[test]
    fn scale_range_checks() {
        let g = GridSpec::cube(1, 0.0, 1.0, 65).unwrap();
        let s = sample(g, |p| p[0]);
        assert!(holder_map(&s, 2, 4, 2.0).is_err());
        assert!(matches!(holder_map(&s, 2, 8, 2.0), Err(Error::ScaleBelowResolution(_))));
        assert_eq!(default_scales(&GridSpec::cube(1, 0.0, 1.0, 1025).unwrap()), (0, 8));
        assert_eq!(default_scales(&GridSpec::cube(1, 0.0, 1.0, 33).unwrap()), (0, 3));
    }

    fn rough(g: &GridSpec, seed: u64) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        (0..g.len()).map(|_| { acc += rng.random::<f64>() - 0.5; acc }).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn invariant_under_constant_shift(seed in any::<u64>(), c in -10.0f64..10.0) {
            let g = GridSpec::cube(1, 0.0, 1.0, 257).unwrap();
            let v = rough(&g, seed);
            let a = FieldSample::new(g.clone(), v.clone(), ComponentTag::Combined, 0, String::new()).unwrap();
            let b = FieldSample::new(g, v.iter().map(|x| x + c).collect(), ComponentTag::Combined, 0, String::new()).unwrap();
            let (ma, mb) = (holder_map(&a, 2, 6, 2.0).unwrap(), holder_map(&b, 2, 6, 2.0).unwrap());
            for (x, y) in ma.exponent.iter().zip(&mb.exponent) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn invariant_under_positive_scaling(seed in any::<u64>(), lam in 0.01f64..100.0) {
            let g = GridSpec::cube(1, 0.0, 1.0, 257).unwrap();
            let v = rough(&g, seed);
            let a = FieldSample::new(g.clone(), v.clone(), ComponentTag::Combined, 0, String::new()).unwrap();
            let b = FieldSample::new(g, v.iter().map(|x| x * lam).collect(), ComponentTag::Combined, 0, String::new()).unwrap();
            let (ma, mb) = (holder_map(&a, 2, 6, 2.0).unwrap(), holder_map(&b, 2, 6, 2.0).unwrap());
            for (x, y) in ma.exponent.iter().zip(&mb.exponent) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn detrended_invariant_under_affine(seed in any::<u64>(), a0 in -5.0f64..5.0, a1 in -5.0f64..5.0) {
            let g = GridSpec::cube(1, 0.0, 1.0, 257).unwrap();
            let v = rough(&g, seed);
            let s = FieldSample::new(g.clone(), v.clone(), ComponentTag::Combined, 0, String::new()).unwrap();
            let w: Vec<f64> = g.points().zip(&v).map(|(p, x)| x + a0 + a1 * p[0]).collect();
            let t = FieldSample::new(g, w, ComponentTag::Combined, 0, String::new()).unwrap();
            for k in 2..=6 {
                let d = oscillation_detrended(&s, &[100], k).unwrap() - oscillation_detrended(&t, &[100], k).unwrap();
                prop_assert!(d.abs() < 1e-10);
            }
        }

        #[test]
        fn oscillation_nonincreasing_in_k(seed in any::<u64>(), i in 0usize..257) {
            let g = GridSpec::cube(1, 0.0, 1.0, 257).unwrap();
            let s = FieldSample::new(g.clone(), rough(&g, seed), ComponentTag::Combined, 0, String::new()).unwrap();
            let o: Vec<f64> = (1..=6).map(|k| oscillation(&s, &[i], k).unwrap()).collect();
            prop_assert!(o.windows(2).all(|w| w[1] <= w[0]));
        }
    }
}
