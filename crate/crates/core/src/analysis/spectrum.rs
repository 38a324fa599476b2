use serde::Serialize;

use super::holder::fit_line;
use crate::error::{Error, Result};
use crate::grid::FieldSample;

/// Oscillations below this count as saturated boxes.
pub const BOX_SATURATION_TOL: f64 = 1e-12;

/// Exponent bins `[c − δ, c + δ]`; a box joins the nearest center within δ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumBins {
    pub centers: Vec<f64>,
    pub delta: f64,
}

impl SpectrumBins {
    pub fn new(centers: Vec<f64>, delta: f64) -> Result<Self> {
        if !(0.05..=0.3).contains(&delta) {
            return Err(Error::InvalidArgument(format!("bin half-width {delta} not in [0.05, 0.3]")));
        }
        if centers.is_empty() || centers.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("bin centers must be strictly increasing".into()));
        }
        Ok(Self { centers, delta })
    }

    /// Centers 0.1, 0.3, …, 1.9 with half-width 0.1.
    pub fn standard() -> Self {
        Self { centers: (0..10).map(|k| 0.1 + 0.2 * k as f64).collect(), delta: 0.1 }
    }

    fn assign(&self, h: f64) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.centers.iter().enumerate() {
            let d = (h - c).abs();
            if d <= self.delta && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.map(|(i, _)| i)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEstimate {
    pub bins: SpectrumBins,
    /// Box side in grid spacings, one per level, finest first.
    pub box_sides: Vec<usize>,
    /// Physical box side per level.
    pub radii: Vec<f64>,
    /// `counts[level][bin]`.
    pub counts: Vec<Vec<usize>>,
    pub total_boxes: Vec<usize>,
    pub saturated: Vec<usize>,
    /// Fitted dimension per bin; `None` marks an absent bin.
    pub dimension: Vec<Option<f64>>,
    pub r2: Vec<f64>,
}

impl SpectrumEstimate {
    /// Count in `bin` at the finest level as a fraction of that level's boxes.
    pub fn finest_fraction(&self, bin: usize) -> f64 {
        self.counts[0][bin] as f64 / self.total_boxes[0].max(1) as f64
    }
}

/// Levels `ℓ ≥ 1` (box side `2^ℓ` spacings) leaving at least four boxes per
/// axis.
pub fn default_levels(sample: &FieldSample) -> Vec<u32> {
    let n = sample.grid.counts().into_iter().min().unwrap_or(2) - 1;
    (1..).take_while(|l| (n >> l) >= 4).collect()
}

/// Large-deviation box counting: every closed box of side `m = 2^ℓ` spacings
/// (`m + 1` samples per axis, fully inside the grid) gets the exponent
/// `log2(osc)/log2(r)`, `r = m·Δ`; the dimension of a bin is the slope of
/// `log2 N` against `log2(1/r)` over the three finest levels.
pub fn spectrum_estimate(sample: &FieldSample, bins: &SpectrumBins, levels: &[u32]) -> Result<SpectrumEstimate> {
    let grid = &sample.grid;
    if levels.len() < 3 {
        return Err(Error::InvalidArgument("spectrum needs at least three levels".into()));
    }
    if !grid.is_uniform() {
        return Err(Error::InvalidGrid("box counting needs equal spacing on all axes".into()));
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    levels.dedup();
    let h = grid.spacings()[0];
    let counts_ax = grid.counts();
    let dim = grid.dim();
    let mut box_sides = Vec::new();
    let mut radii = Vec::new();
    let mut counts = Vec::new();
    let mut total_boxes = Vec::new();
    let mut saturated = Vec::new();
    for &l in &levels {
        let m = 1usize << l;
        let per_axis: Vec<usize> = counts_ax.iter().map(|c| (c - 1) / m).collect();
        if per_axis.iter().any(|b| *b == 0) {
            return Err(Error::ScaleBelowResolution(format!("boxes of {m} spacings exceed the grid")));
        }
        let r = m as f64 * h;
        let lr = r.log2();
        let mut cnt = vec![0usize; bins.centers.len()];
        let mut sat = 0;
        let nboxes: usize = per_axis.iter().product();
        for b in 0..nboxes {
            let mut rem = b;
            let start: Vec<usize> = per_axis
                .iter()
                .map(|nb| {
                    let i = rem % nb;
                    rem /= nb;
                    i * m
                })
                .collect();
            let osc = box_osc(sample, &start, m, dim);
            if osc < BOX_SATURATION_TOL {
                sat += 1;
            } else if let Some(i) = bins.assign(osc.log2() / lr) {
                cnt[i] += 1;
            }
        }
        box_sides.push(m);
        radii.push(r);
        counts.push(cnt);
        total_boxes.push(nboxes);
        saturated.push(sat);
    }
    let x: Vec<f64> = radii[..3].iter().map(|r| -r.log2()).collect();
    let mut dimension = Vec::new();
    let mut r2 = Vec::new();
    for i in 0..bins.centers.len() {
        let n: Vec<usize> = counts[..3].iter().map(|c| c[i]).collect();
        if n[0] == 0 && n[1] == 0 {
            dimension.push(None);
            r2.push(0.0);
            continue;
        }
        let pts: Vec<(f64, f64)> =
            x.iter().zip(&n).filter(|(_, c)| **c > 0).map(|(a, c)| (*a, (*c as f64).log2())).collect();
        if pts.len() < 2 {
            dimension.push(Some(0.0));
            r2.push(0.0);
            continue;
        }
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let (slope, fit) = fit_line(&xs, &ys);
        dimension.push(Some(slope.clamp(0.0, dim as f64)));
        r2.push(fit);
    }
    Ok(SpectrumEstimate { bins: bins.clone(), box_sides, radii, counts, total_boxes, saturated, dimension, r2 })
}

fn box_osc(sample: &FieldSample, start: &[usize], m: usize, dim: usize) -> f64 {
    let grid = &sample.grid;
    let n0 = grid.axes()[0].count;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let rest = (m + 1).pow(dim as u32 - 1);
    let mut idx = start.to_vec();
    for r in 0..rest {
        let mut rem = r;
        for k in 1..dim {
            idx[k] = start[k] + rem % (m + 1);
            rem /= m + 1;
        }
        let base = grid.flat_index(&idx);
        debug_assert!(idx[0] + m < n0);
        for v in &sample.values[base..=base + m] {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    hi - lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ComponentTag, GridSpec};

    fn sample(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> FieldSample {
        let values = grid.points().map(|p| f(&p)).collect();
        FieldSample::new(grid, values, ComponentTag::Combined, 0, String::new()).unwrap()
    }

    #[test]
    fn constant_field_is_absent_everywhere() {
        let s = sample(GridSpec::cube(2, 0.0, 1.0, 65).unwrap(), |_| 1.0);
        let e = spectrum_estimate(&s, &SpectrumBins::standard(), &default_levels(&s)).unwrap();
        assert!(e.dimension.iter().all(Option::is_none));
        assert_eq!(e.saturated, e.total_boxes);
    }

    #[test]
    fn counts_bounded_by_boxes() {
        let s = sample(GridSpec::cube(2, 0.0, 1.0, 129).unwrap(), |p| (p[0] - 0.3).abs().sqrt() + p[1]);
        let e = spectrum_estimate(&s, &SpectrumBins::standard(), &default_levels(&s)).unwrap();
        for (c, t) in e.counts.iter().zip(&e.total_boxes) {
            assert!(c.iter().sum::<usize>() <= *t);
        }
        assert_eq!(e.total_boxes[0], 64 * 64);
        assert_eq!(e.box_sides[..3], [2, 4, 8]);
    }

    #[test]
    fn lipschitz_field_lands_in_unit_bin() {
        // osc over a box of side r is exactly r (slope 1 along one axis)
        let s = sample(GridSpec::cube(2, 0.0, 1.0, 257).unwrap(), |p| p[0]);
        let e = spectrum_estimate(&s, &SpectrumBins::standard(), &default_levels(&s)).unwrap();
        let unit = 5; // center 1.1 covers [1.0, 1.2]
        let nine = 4; // center 0.9 covers [0.8, 1.0]
        for (lvl, c) in e.counts.iter().enumerate() {
            assert_eq!(c[unit] + c[nine], e.total_boxes[lvl]);
        }
        let d = e.dimension[unit].or(e.dimension[nine]).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_bins() {
        assert!(SpectrumBins::new(vec![0.1, 0.3], 0.01).is_err());
        assert!(SpectrumBins::new(vec![0.3, 0.1], 0.1).is_err());
        assert_eq!(SpectrumBins::standard().assign(0.2), Some(0));
        assert_eq!(SpectrumBins::standard().assign(0.25), Some(1));
        assert_eq!(SpectrumBins::standard().assign(-0.5), None);
    }
}
