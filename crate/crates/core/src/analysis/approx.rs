use serde::Serialize;

use super::PointFlag;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::jump::AtomSet;
use crate::measure::sphere::dot;

/// Distances to a hyperplane at or below this mark the point as lying on it.
pub const JUMP_LOCUS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    /// Critical exponents above this are not resolved: a band whose minimum
    /// exceeds the cap reports `+∞`. Only atoms within `|x|^{1/cap}` of a
    /// point are visited, which keeps the map affordable.
    pub alpha_cap: f64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        Self { alpha_cap: 2.0 }
    }
}

/// Hyperplane approximation exponents on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxExponentMap {
    pub grid: GridSpec,
    /// Minimum over bands `j_floor..=j_trunc`; `+∞` when no band resolves an
    /// exponent below the cap.
    pub a_hat: Vec<f64>,
    pub flag: Vec<PointFlag>,
    /// `band_minima[j − j_floor][point]`.
    pub band_minima: Vec<Vec<f64>>,
    pub j_floor: usize,
    pub j_trunc: usize,
    pub alpha_cap: f64,
}

impl ApproxExponentMap {
    /// `A_hat` recomputed from the band minima using bands `j_floor..=j`.
    pub fn a_hat_through(&self, j: usize) -> Vec<f64> {
        let top = j.min(self.j_trunc);
        (0..self.grid.len())
            .map(|p| {
                self.band_minima[..=top - self.j_floor]
                    .iter()
                    .fold(f64::INFINITY, |m, b| m.min(b[p]))
            })
            .collect()
    }
}

pub fn approx_exponent_map(atoms: &AtomSet, grid: &GridSpec, j_floor: usize) -> Result<ApproxExponentMap> {
    approx_exponent_map_with(atoms, grid, j_floor, &ApproxOptions::default())
}

/// For every grid point `t` and atom with `|x| ≤ 1` and `d = |rho − ⟨s,t⟩| < 1`
/// the critical exponent is `ln|x| / ln d`; band minima over
/// `j_floor..=j_trunc` are kept and `A_hat` is their minimum.
pub fn approx_exponent_map_with(
    atoms: &AtomSet,
    grid: &GridSpec,
    j_floor: usize,
    opts: &ApproxOptions,
) -> Result<ApproxExponentMap> {
    if grid.dim() != atoms.dim() {
        return Err(Error::DimMismatch { expected: atoms.dim(), got: grid.dim() });
    }
    if j_floor < 1 || atoms.j_trunc() < j_floor + 4 {
        return Err(Error::InvalidArgument(format!(
            "need 1 ≤ j_floor and j_floor + 4 ≤ J_trunc, got j_floor {j_floor}, J_trunc {}",
            atoms.j_trunc()
        )));
    }
    if !(opts.alpha_cap > 0.0) {
        return Err(Error::InvalidArgument("alpha_cap must be positive".into()));
    }
    let dim = grid.dim();
    let n = grid.len();
    let ax0 = grid.axes()[0];
    let n0 = ax0.count;
    let h0 = ax0.spacing();
    let t0: Vec<f64> = (0..n0).map(|i| ax0.coord(i)).collect();
    let rows: Vec<Vec<f64>> = (0..grid.rows())
        .map(|r| {
            let idx = grid.multi_index(r * n0);
            (0..dim).map(|k| grid.axes()[k].coord(idx[k])).collect()
        })
        .collect();
    let mut locus = vec![false; n];
    let mut band_minima = Vec::with_capacity(atoms.j_trunc() + 1 - j_floor);

    for (j, band) in atoms.bands().iter().enumerate() {
        let tracked = j >= j_floor;
        let mut minima = if tracked { vec![f64::INFINITY; n] } else { Vec::new() };
        for a in 0..band.len() {
            let s = band.direction(a, dim);
            let rho = band.rho[a];
            let lx = band.x[a].abs().ln();
            let width = if tracked { band.x[a].abs().powf(1.0 / opts.alpha_cap).min(1.0) } else { 0.0 };
            let reach = width.max(JUMP_LOCUS_TOL);
            for (r, rest) in rows.iter().enumerate() {
                let mut other = 0.0;
                for k in 1..dim {
                    other += s[k] * rest[k];
                }
                let (lo, hi) = if s[0] == 0.0 {
                    if (rho - other).abs() > reach {
                        continue;
                    }
                    (0, n0 - 1)
                } else {
                    let a1 = (rho - other - reach) / s[0];
                    let a2 = (rho - other + reach) / s[0];
                    let (u, v) = if a1 < a2 { (a1, a2) } else { (a2, a1) };
                    let lo = ((u - t0[0]) / h0).floor() - 1.0;
                    let hi = ((v - t0[0]) / h0).ceil() + 1.0;
                    if hi < 0.0 || lo > (n0 - 1) as f64 {
                        continue;
                    }
                    (lo.max(0.0) as usize, (hi as usize).min(n0 - 1))
                };
                let mut t = rest.clone();
                for i in lo..=hi {
                    t[0] = t0[i];
                    let d = (rho - dot(s, &t)).abs();
                    let p = r * n0 + i;
                    if d <= JUMP_LOCUS_TOL {
                        locus[p] = true;
                    } else if tracked && d < width {
                        let alpha = lx / d.ln();
                        if alpha < minima[p] {
                            minima[p] = alpha;
                        }
                    }
                }
            }
        }
        if tracked {
            for m in minima.iter_mut() {
                if *m > opts.alpha_cap {
                    *m = f64::INFINITY;
                }
            }
            band_minima.push(minima);
        }
    }
    let a_hat: Vec<f64> =
        (0..n).map(|p| band_minima.iter().fold(f64::INFINITY, |m, b| m.min(b[p]))).collect();
    let flag = locus.iter().map(|l| if *l { PointFlag::JumpLocus } else { PointFlag::Ok }).collect();
    Ok(ApproxExponentMap {
        grid: grid.clone(),
        a_hat,
        flag,
        band_minima,
        j_floor,
        j_trunc: atoms.j_trunc(),
        alpha_cap: opts.alpha_cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::{sample_atoms, HyperplaneAtom};
    use crate::measure::{band_of, Direction, JumpMeasure, RadialFamily, SphericalMeasure};

    fn brute(atoms: &AtomSet, grid: &GridSpec, j_floor: usize, cap: f64) -> (Vec<f64>, Vec<bool>) {
        let mut a_hat = vec![f64::INFINITY; grid.len()];
        let mut locus = vec![false; grid.len()];
        for (p, t) in grid.points().enumerate() {
            for j in j_floor..=atoms.j_trunc() {
                let mut m = f64::INFINITY;
                for a in atoms.iter().filter(|a| a.band == j) {
                    let d = (a.rho - a.s.dot(&t)).abs();
                    if d > JUMP_LOCUS_TOL && d < 1.0 {
                        m = m.min(a.x.abs().ln() / d.ln());
                    }
                }
                if m <= cap {
                    a_hat[p] = a_hat[p].min(m);
                }
            }
            locus[p] = atoms.iter().any(|a| (a.rho - a.s.dot(&t)).abs() <= JUMP_LOCUS_TOL);
        }
        (a_hat, locus)
    }

    #[test]
    fn matches_brute_force() {
        for dim in 1..=3 {
            let nu = JumpMeasure::product(
                SphericalMeasure::isotropic(dim, 1.0).unwrap(),
                RadialFamily::Stable { alpha: 1.2, scale: 1.0 },
            )
            .unwrap();
            let set = sample_atoms(&nu, 1.8, 8, 5).unwrap();
            let g = GridSpec::cube(dim, -1.0, 1.0, if dim == 3 { 7 } else { 21 }).unwrap();
            let m = approx_exponent_map(&set, &g, 3).unwrap();
            let (want, locus) = brute(&set, &g, 3, 2.0);
            for p in 0..g.len() {
                assert!(
                    m.a_hat[p] == want[p] || (m.a_hat[p] - want[p]).abs() < 1e-12,
                    "dim {dim} point {p}: {} vs {}",
                    m.a_hat[p],
                    want[p]
                );
                assert_eq!(m.flag[p] == PointFlag::JumpLocus, locus[p]);
            }
        }
    }

    #[test]
    fn finite_measure_gives_infinite_exponents() {
        let nu = JumpMeasure::product(
            SphericalMeasure::isotropic(2, 1.0).unwrap(),
            RadialFamily::FiniteAtoms { atoms: vec![(1.5, 1.0), (0.4, 0.5)] },
        )
        .unwrap();
        let set = sample_atoms(&nu, 1.5, 8, 2).unwrap();
        let g = GridSpec::cube(2, -1.0, 1.0, 21).unwrap();
        let m = approx_exponent_map(&set, &g, 3).unwrap();
        assert!(m.a_hat.iter().all(|a| *a == f64::INFINITY));
    }

    #[test]
    fn point_on_hyperplane_is_flagged() {
        let x = 0.01;
        let a = HyperplaneAtom { rho: 0.5, s: Direction::axis(1, 0), x, band: band_of(x) };
        let set = AtomSet::from_atoms(1, 1.0, 12, 0, String::new(), vec![a]).unwrap();
        let g = GridSpec::cube(1, 0.0, 1.0, 11).unwrap();
        let m = approx_exponent_map(&set, &g, 2).unwrap();
        assert_eq!(m.flag[5], PointFlag::JumpLocus);
        assert_eq!(m.flag[4], PointFlag::Ok);
        // at distance 0.1 from the plane: ln 0.01 / ln 0.1 = 2
        assert!((m.a_hat[4] - 2.0).abs() < 1e-12);
        assert!(approx_exponent_map(&set, &g, 9).is_err());
    }

    #[test]
    fn a_hat_nonincreasing_in_truncation() {
        let nu = JumpMeasure::product(
            SphericalMeasure::isotropic(2, 1.0).unwrap(),
            RadialFamily::Stable { alpha: 0.9, scale: 1.0 },
        )
        .unwrap();
        let set = sample_atoms(&nu, 1.5, 12, 8).unwrap();
        let g = GridSpec::cube(2, -1.0, 1.0, 17).unwrap();
        let m = approx_exponent_map(&set, &g, 4).unwrap();
        let a8 = m.a_hat_through(8);
        let a12 = m.a_hat_through(12);
        assert!(a8.iter().zip(&a12).all(|(x, y)| y <= x));
        assert_eq!(a12, m.a_hat);
    }
}
