//! Exact evaluation of the truncated jump field.
//!
//! Each atom contributes `x·1{rho < ⟨s,t⟩}` with the inner product taken by
//! [`dot`]. Bands `j ≥ 1` are accumulated in fixed point (`x·2^96` rounded to
//! an integer, exact for the first 43 bands), which makes the result
//! independent of summation order and lets the grid path use per-row
//! difference arrays. Band-0 jumps are summed in floating point in the
//! canonical atom order.

use crate::error::{Error, Result};
use crate::grid::{ComponentTag, FieldSample, GridSpec};
use crate::measure::sphere::dot;
use crate::measure::JumpMeasure;

use super::atoms::{AtomSet, Band};

const FIX_SHIFT: i32 = 96;

#[inline]
fn to_fixed(x: f64) -> i128 {
    (x * (FIX_SHIFT as f64).exp2()).round() as i128
}

#[inline]
fn from_fixed(v: i128) -> f64 {
    v as f64 * (-(FIX_SHIFT as f64)).exp2()
}

/// Compensator vectors `b_j`, `j = 0..=j_trunc` (`b_0 = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorTable {
    bands: Vec<Vec<f64>>,
}

impl CompensatorTable {
    pub fn zeros(dim: usize, j_trunc: usize) -> Self {
        Self { bands: vec![vec![0.0; dim]; j_trunc + 1] }
    }

    pub fn band(&self, j: usize) -> &[f64] {
        &self.bands[j]
    }

    pub fn j_trunc(&self) -> usize {
        self.bands.len() - 1
    }

    /// `Σ_{j=1}^{up_to} b_j`, summed in band order.
    pub fn total(&self, up_to: usize) -> Vec<f64> {
        let mut acc = vec![0.0; self.bands[0].len()];
        for b in &self.bands[1..=up_to] {
            for (a, v) in acc.iter_mut().zip(b) {
                *a += v;
            }
        }
        acc
    }
}

pub fn compensator_table(nu: &JumpMeasure, j_trunc: usize) -> CompensatorTable {
    CompensatorTable { bands: (0..=j_trunc).map(|j| nu.compensator(j)).collect() }
}

fn check_comp(atoms: &AtomSet, comp: &CompensatorTable) -> Result<Vec<f64>> {
    if comp.j_trunc() < atoms.j_trunc() {
        return Err(Error::InvalidArgument(format!(
            "compensator covers {} bands, atoms reach band {}",
            comp.j_trunc(),
            atoms.j_trunc()
        )));
    }
    if comp.band(0).len() != atoms.dim() {
        return Err(Error::DimMismatch { expected: atoms.dim(), got: comp.band(0).len() });
    }
    Ok(comp.total(atoms.j_trunc()))
}

fn band0_sum(band: &Band, dim: usize, t: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..band.len() {
        if band.rho[i] < dot(band.direction(i, dim), t) {
            acc += band.x[i];
        }
    }
    acc
}

/// Field value at a single point `t` (no ball check).
pub fn evaluate_at(atoms: &AtomSet, comp: &CompensatorTable, t: &[f64]) -> Result<f64> {
    let b = check_comp(atoms, comp)?;
    let dim = atoms.dim();
    let mut fixed = 0i128;
    for band in &atoms.bands()[1..] {
        for i in 0..band.len() {
            if band.rho[i] < dot(band.direction(i, dim), t) {
                fixed += to_fixed(band.x[i]);
            }
        }
    }
    Ok(band0_sum(atoms.band(0), dim, t) + from_fixed(fixed) - dot(&b, t))
}

/// Partial field of band `j` alone at `t`, compensated when `j ≥ 1`.
pub fn band_value_at(atoms: &AtomSet, comp: &CompensatorTable, j: usize, t: &[f64]) -> f64 {
    let band = atoms.band(j);
    let dim = atoms.dim();
    let raw = if j == 0 {
        band0_sum(band, dim, t)
    } else {
        let mut fixed = 0i128;
        for i in 0..band.len() {
            if band.rho[i] < dot(band.direction(i, dim), t) {
                fixed += to_fixed(band.x[i]);
            }
        }
        from_fixed(fixed)
    };
    raw - dot(comp.band(j), t)
}

/// Evaluates the truncated, compensated jump field on `grid`, which must lie in
/// the closed ball of radius `atoms.radius()`.
pub fn evaluate_jump_field(
    atoms: &AtomSet,
    comp: &CompensatorTable,
    grid: &GridSpec,
) -> Result<FieldSample> {
    if grid.dim() != atoms.dim() {
        return Err(Error::DimMismatch { expected: atoms.dim(), got: grid.dim() });
    }
    grid.ensure_in_ball(atoms.radius())?;
    let b = check_comp(atoms, comp)?;
    let dim = grid.dim();
    let ax0 = grid.axes()[0];
    let n0 = ax0.count;
    let t0: Vec<f64> = (0..n0).map(|i| ax0.coord(i)).collect();
    let mut values = vec![0.0; grid.len()];
    let mut diff = vec![0i128; n0 + 1];
    let mut t = vec![0.0; dim];
    let band0 = atoms.band(0);

    for row in 0..grid.rows() {
        let base = row * n0;
        let idx = grid.multi_index(base);
        for k in 1..dim {
            t[k] = grid.axes()[k].coord(idx[k]);
        }
        diff.iter_mut().for_each(|v| *v = 0);
        for band in &atoms.bands()[1..] {
            for i in 0..band.len() {
                let s = band.direction(i, dim);
                accumulate_row(&mut diff, &t0, &t, s, band.rho[i], to_fixed(band.x[i]));
            }
        }
        let mut run = 0i128;
        for (i, &ti) in t0.iter().enumerate() {
            run += diff[i];
            t[0] = ti;
            values[base + i] = band0_sum(band0, dim, &t) + from_fixed(run) - dot(&b, &t);
        }
    }
    FieldSample::new(grid.clone(), values, ComponentTag::Jump, atoms.seed(), String::new())
}

/// Adds `w` to `diff` on the row positions where `rho < ⟨s, t⟩`, with `t[0]`
/// ranging over `t0` and the other coordinates fixed. The predicate is
/// monotone in `t[0]`, so one boundary index is located: first from an
/// approximate solve, then corrected by evaluating the exact predicate.
fn accumulate_row(diff: &mut [i128], t0: &[f64], rest: &[f64], s: &[f64], rho: f64, w: i128) {
    let n = t0.len();
    let pred = |i: usize| {
        let mut acc = s[0] * t0[i];
        for k in 1..s.len() {
            acc += s[k] * rest[k];
        }
        rho < acc
    };
    let s0 = s[0];
    if s0 == 0.0 {
        if pred(0) {
            diff[0] += w;
            diff[n] -= w;
        }
        return;
    }
    let mut other = 0.0;
    for k in 1..s.len() {
        other += s[k] * rest[k];
    }
    let h = (t0[n - 1] - t0[0]) / (n - 1) as f64;
    let guess = ((rho - other) / s0 - t0[0]) / h;
    let mut i = if guess.is_nan() || guess <= 0.0 {
        0
    } else if guess >= n as f64 {
        n
    } else {
        guess.ceil() as usize
    };
    if s0 > 0.0 {
        // predicate false...true: find the first true index
        while i > 0 && pred(i - 1) {
            i -= 1;
        }
        while i < n && !pred(i) {
            i += 1;
        }
        diff[i] += w;
        diff[n] -= w;
    } else {
        // predicate true...false: find the first false index
        while i > 0 && !pred(i - 1) {
            i -= 1;
        }
        while i < n && pred(i) {
            i += 1;
        }
        diff[0] += w;
        diff[i] -= w;
    }
}
