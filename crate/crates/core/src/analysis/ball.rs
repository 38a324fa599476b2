//! Extrema of grid values over Euclidean balls around every grid point.
//!
//! A ball is a union of axis-0 segments, one per offset in the remaining
//! axes, each symmetric with some half-width `w`. For every distinct `w` the
//! windowed row extrema are computed once with a monotone deque, and each
//! point then combines one windowed value per segment.

use std::collections::{BTreeMap, VecDeque};

use crate::grid::GridSpec;

/// Segment offsets of the ball stencil grouped by axis-0 half-width.
fn segments(grid: &GridSpec, radius: f64) -> BTreeMap<isize, Vec<Vec<isize>>> {
    let mut by_rest: BTreeMap<Vec<isize>, isize> = BTreeMap::new();
    for o in grid.ball_offsets(radius) {
        let w = by_rest.entry(o[1..].to_vec()).or_insert(0);
        *w = (*w).max(o[0].abs());
    }
    let mut out: BTreeMap<isize, Vec<Vec<isize>>> = BTreeMap::new();
    for (rest, w) in by_rest {
        out.entry(w).or_default().push(rest);
    }
    out
}

/// Min and max over `[i − w, i + w]` clipped to the row.
fn window_extrema(row: &[f64], w: usize, lo: &mut [f64], hi: &mut [f64]) {
    let n = row.len();
    let mut qmin: VecDeque<usize> = VecDeque::new();
    let mut qmax: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let right = (i + w).min(n - 1);
        while next <= right {
            while qmin.back().is_some_and(|&k| row[k] >= row[next]) {
                qmin.pop_back();
            }
            qmin.push_back(next);
            while qmax.back().is_some_and(|&k| row[k] <= row[next]) {
                qmax.pop_back();
            }
            qmax.push_back(next);
            next += 1;
        }
        let left = i.saturating_sub(w);
        while qmin.front().is_some_and(|&k| k < left) {
            qmin.pop_front();
        }
        while qmax.front().is_some_and(|&k| k < left) {
            qmax.pop_front();
        }
        lo[i] = row[qmin[0]];
        hi[i] = row[qmax[0]];
    }
}

/// Per-point `(min, max)` of `values` over the grid ball of `radius`.
pub fn ball_extrema(grid: &GridSpec, values: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>) {
    let n0 = grid.axes()[0].count;
    let rows = grid.rows();
    let mut mins = vec![f64::INFINITY; values.len()];
    let mut maxs = vec![f64::NEG_INFINITY; values.len()];
    let mut wlo = vec![0.0; values.len()];
    let mut whi = vec![0.0; values.len()];
    // row-level grid of the remaining axes
    let rest_counts: Vec<usize> = grid.counts()[1..].to_vec();
    let row_index = |r: usize| -> Vec<usize> {
        let mut r = r;
        rest_counts
            .iter()
            .map(|c| {
                let i = r % c;
                r /= c;
                i
            })
            .collect()
    };
    let row_offset = |idx: &[usize], off: &[isize]| -> Option<usize> {
        let mut flat = 0usize;
        for k in (0..idx.len()).rev() {
            let i = idx[k] as isize + off[k];
            if i < 0 || i >= rest_counts[k] as isize {
                return None;
            }
            flat = flat * rest_counts[k] + i as usize;
        }
        Some(flat)
    };
    let row_ids: Vec<Vec<usize>> = (0..rows).map(row_index).collect();
    for (w, rests) in segments(grid, radius) {
        for r in 0..rows {
            let s = r * n0..(r + 1) * n0;
            window_extrema(&values[s.clone()], w as usize, &mut wlo[s.clone()], &mut whi[s]);
        }
        for r in 0..rows {
            for rest in &rests {
                let Some(src) = row_offset(&row_ids[r], rest) else { continue };
                let (dst, src) = (r * n0, src * n0);
                for i in 0..n0 {
                    mins[dst + i] = mins[dst + i].min(wlo[src + i]);
                    maxs[dst + i] = maxs[dst + i].max(whi[src + i]);
                }
            }
        }
    }
    (mins, maxs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn brute(grid: &GridSpec, values: &[f64], radius: f64) -> (Vec<f64>, Vec<f64>) {
        let offs = grid.ball_offsets(radius);
        (0..grid.len())
            .map(|k| {
                let idx = grid.multi_index(k);
                offs.iter().filter_map(|o| grid.offset_index(&idx, o)).fold(
                    (f64::INFINITY, f64::NEG_INFINITY),
                    |(lo, hi), j| (lo.min(values[j]), hi.max(values[j])),
                )
            })
            .unzip()
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for (dim, n) in [(1, 50), (2, 23), (3, 9)] {
            let g = GridSpec::cube(dim, 0.0, 1.0, n).unwrap();
            let v: Vec<f64> = (0..g.len()).map(|_| rng.random::<f64>()).collect();
            for r in [0.05, 0.13, 0.3, 0.5] {
                assert_eq!(ball_extrema(&g, &v, r), brute(&g, &v, r), "dim {dim} r {r}");
            }
        }
    }
}
