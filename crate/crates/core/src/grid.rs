use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::sphere::{check_dim, norm};

/// One grid axis: `count` equally spaced points from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.count - 1) as f64
    }

    /// Coordinate of sample `i`; the formula is shared by every consumer.
    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }
}

/// Rectangular lattice in R^d. Points are enumerated with axis 0 varying
/// fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    axes: Vec<Axis>,
}

impl GridSpec {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        check_dim(axes.len()).map_err(|e| Error::InvalidGrid(e.to_string()))?;
        for (k, a) in axes.iter().enumerate() {
            if !(a.min.is_finite() && a.max.is_finite() && a.min < a.max) {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: need finite min < max, got [{}, {}]",
                    a.min, a.max
                )));
            }
            if a.count < 2 {
                return Err(Error::InvalidGrid(format!("axis {k}: need at least 2 points")));
            }
        }
        Ok(Self { axes })
    }

    /// The same axis on every dimension.
    pub fn cube(dim: usize, min: f64, max: f64, count: usize) -> Result<Self> {
        Self::new(vec![Axis { min, max, count }; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn counts(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.count).collect()
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::spacing).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of axis-0 rows.
    pub fn rows(&self) -> usize {
        self.len() / self.axes[0].count
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        self.axes
            .iter()
            .map(|a| {
                let i = flat % a.count;
                flat /= a.count;
                i
            })
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).rev().fold(0, |acc, (i, a)| acc * a.count + i)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(i, a)| a.coord(*i)).collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Flat index of the origin when it is a grid point.
    pub fn origin_index(&self) -> Option<usize> {
        let idx: Option<Vec<usize>> = self
            .axes
            .iter()
            .map(|a| (0..a.count).find(|i| a.coord(*i) == 0.0))
            .collect();
        idx.map(|i| self.flat_index(&i))
    }

    /// Largest Euclidean norm over the grid (attained at a corner).
    pub fn max_norm(&self) -> f64 {
        let far: Vec<f64> = self.axes.iter().map(|a| a.min.abs().max(a.max.abs())).collect();
        norm(&far)
    }

    pub fn ensure_in_ball(&self, radius: f64) -> Result<()> {
        let r = self.max_norm();
        if r > radius {
            return Err(Error::GridOutsideBall { radius, distance: r });
        }
        Ok(())
    }

    /// Index offsets `o` with `Σ (o_a h_a)² ≤ r²` (relative slack 1e-12). This
    /// inclusion rule is the single definition of a grid ball.
    pub fn ball_offsets(&self, radius: f64) -> Vec<Vec<isize>> {
        let h = self.spacings();
        let r2 = radius * radius * (1.0 + 1e-12);
        let reach: Vec<isize> = h.iter().map(|hi| (radius / hi).floor() as isize + 1).collect();
        let mut out = Vec::new();
        let mut cur = vec![0isize; h.len()];
        fn rec(
            k: usize,
            acc: f64,
            h: &[f64],
            reach: &[isize],
            r2: f64,
            cur: &mut Vec<isize>,
            out: &mut Vec<Vec<isize>>,
        ) {
            if k == h.len() {
                out.push(cur.clone());
                return;
            }
            for o in -reach[k]..=reach[k] {
                let a = acc + (o as f64 * h[k]).powi(2);
                if a <= r2 {
                    cur[k] = o;
                    rec(k + 1, a, h, reach, r2, cur, out);
                }
            }
        }
        rec(0, 0.0, &h, &reach, r2, &mut cur, &mut out);
        out
    }

    /// Flat index of `idx + off` if it lies on the grid.
    #[inline]
    pub fn offset_index(&self, idx: &[usize], off: &[isize]) -> Option<usize> {
        let mut flat = 0usize;
        for k in (0..self.axes.len()).rev() {
            let i = idx[k] as isize + off[k];
            if i < 0 || i >= self.axes[k].count as isize {
                return None;
            }
            flat = flat * self.axes[k].count + i as usize;
        }
        Some(flat)
    }

    /// Whether all axes share one spacing (relative tolerance 1e-9).
    pub fn is_uniform(&self) -> bool {
        let h = self.axes[0].spacing();
        self.axes.iter().all(|a| (a.spacing() / h - 1.0).abs() < 1e-9)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ComponentTag {
    Gaussian,
    Jump,
    Drift,
    Combined,
}

impl ComponentTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ComponentTag::Gaussian => "gaussian",
            ComponentTag::Jump => "jump",
            ComponentTag::Drift => "drift",
            ComponentTag::Combined => "combined",
        }
    }
}

/// Field values on a grid, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub tag: ComponentTag,
    pub seed: u64,
    pub fingerprint: String,
}

impl FieldSample {
    pub fn new(
        grid: GridSpec,
        values: Vec<f64>,
        tag: ComponentTag,
        seed: u64,
        fingerprint: String,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values, tag, seed, fingerprint })
    }

    /// Value at the grid point nearest to `t` (exact lookup for grid points).
    pub fn value_at_index(&self, idx: &[usize]) -> f64 {
        self.values[self.grid.flat_index(idx)]
    }
}
