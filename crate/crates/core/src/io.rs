//! CSV and JSON artifacts.
//!
//! CSV files have a header row, `.` decimals and LF line endings. Floats are
//! written in Rust's shortest round-trip form, so reading a file back yields
//! the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{ApproxExponentMap, HolderMap, SpectrumEstimate};
use crate::error::{Error, Result};
use crate::grid::{ComponentTag, FieldSample, GridSpec};
use crate::jump::{AtomSet, CfReport, HyperplaneAtom};
use crate::measure::Direction;

/// Sidecar of a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub fingerprint: String,
    pub component: ComponentTag,
    pub seed: u64,
    pub points: usize,
    pub grid: GridSpec,
}

/// Sidecar of an atoms CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomsMeta {
    /// Fingerprint of the triple the atoms were drawn for.
    pub fingerprint: String,
    /// Fingerprint of the jump measure alone.
    pub measure_fingerprint: String,
    #[serde(rename = "A")]
    pub radius: f64,
    #[serde(rename = "J_trunc")]
    pub j_trunc: usize,
    pub seed: u64,
    pub dim: usize,
    pub count: usize,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn coord_header(dim: usize) -> String {
    (1..=dim).map(|k| format!("t{k}")).collect::<Vec<_>>().join(",")
}

fn push_point(out: &mut String, grid: &GridSpec, p: usize) {
    for (k, v) in grid.point(p).iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
}

/// `t1,..,td,value` rows in grid order.
pub fn field_csv(sample: &FieldSample) -> String {
    let mut out = format!("{},value\n", coord_header(sample.grid.dim()));
    for (p, v) in sample.values.iter().enumerate() {
        push_point(&mut out, &sample.grid, p);
        writeln!(out, ",{v}").unwrap();
    }
    out
}

pub fn field_meta(sample: &FieldSample) -> FieldMeta {
    FieldMeta {
        fingerprint: sample.fingerprint.clone(),
        component: sample.tag,
        seed: sample.seed,
        points: sample.values.len(),
        grid: sample.grid.clone(),
    }
}

/// Writes `<stem>.csv` and `<stem>.json`.
pub fn write_field(dir: &Path, stem: &str, sample: &FieldSample) -> Result<()> {
    fs::write(dir.join(format!("{stem}.csv")), field_csv(sample))?;
    write_json(&dir.join(format!("{stem}.json")), &field_meta(sample))
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Config(format!("cannot parse {what} from {s:?}")))
}

/// Reads a field written by [`write_field`].
pub fn read_field(dir: &Path, stem: &str) -> Result<FieldSample> {
    let meta: FieldMeta = read_json(&dir.join(format!("{stem}.json")))?;
    let grid = GridSpec::new(meta.grid.axes().to_vec())?;
    let text = fs::read_to_string(dir.join(format!("{stem}.csv")))?;
    let dim = grid.dim();
    let values = text
        .lines()
        .skip(1)
        .map(|line| {
            let last = line.split(',').nth(dim).ok_or_else(|| Error::Config(format!("short row {line:?}")))?;
            parse_f64(last, "field value")
        })
        .collect::<Result<Vec<_>>>()?;
    FieldSample::new(grid, values, meta.component, meta.seed, meta.fingerprint)
}

/// `band,rho,s1..sd,x` rows in canonical order.
pub fn atoms_csv(atoms: &AtomSet) -> String {
    let dims: Vec<String> = (1..=atoms.dim()).map(|k| format!("s{k}")).collect();
    let mut out = format!("band,rho,{},x\n", dims.join(","));
    for a in atoms.iter() {
        write!(out, "{},{}", a.band, a.rho).unwrap();
        for c in a.s.coords() {
            write!(out, ",{c}").unwrap();
        }
        writeln!(out, ",{}", a.x).unwrap();
    }
    out
}

pub fn write_atoms(dir: &Path, atoms: &AtomSet, triple_fingerprint: &str) -> Result<()> {
    fs::write(dir.join("atoms.csv"), atoms_csv(atoms))?;
    let meta = AtomsMeta {
        fingerprint: triple_fingerprint.to_string(),
        measure_fingerprint: atoms.fingerprint().to_string(),
        radius: atoms.radius(),
        j_trunc: atoms.j_trunc(),
        seed: atoms.seed(),
        dim: atoms.dim(),
        count: atoms.len(),
    };
    write_json(&dir.join("atoms.json"), &meta)
}

/// Reads `atoms.csv` and `atoms.json` from `dir`.
pub fn read_atoms(dir: &Path) -> Result<(AtomSet, AtomsMeta)> {
    let meta: AtomsMeta = read_json(&dir.join("atoms.json"))?;
    let text = fs::read_to_string(dir.join("atoms.csv"))?;
    let mut atoms = Vec::with_capacity(meta.count);
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != meta.dim + 3 {
            return Err(Error::Config(format!("atoms row {line:?} has {} fields", f.len())));
        }
        let band = f[0].parse().map_err(|_| Error::Config(format!("bad band in {line:?}")))?;
        let s = f[2..2 + meta.dim].iter().map(|c| parse_f64(c, "direction")).collect::<Result<Vec<_>>>()?;
        atoms.push(HyperplaneAtom {
            rho: parse_f64(f[1], "rho")?,
            s: Direction::new(s)?,
            x: parse_f64(f[meta.dim + 2], "x")?,
            band,
        });
    }
    let set = AtomSet::from_atoms(
        meta.dim,
        meta.radius,
        meta.j_trunc,
        meta.seed,
        meta.measure_fingerprint.clone(),
        atoms,
    )?;
    Ok((set, meta))
}

pub fn cf_csv(report: &CfReport) -> String {
    let mut out = String::from("theta,analytic_re,analytic_im,empirical_re,empirical_im,stderr,z\n");
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.theta,
            r.analytic_re,
            r.analytic_im,
            r.empirical_re,
            r.empirical_im,
            r.stderr,
            r.z()
        )
        .unwrap();
    }
    out
}

/// `t1,..,td,exponent,flag,r2`.
pub fn holder_csv(map: &HolderMap) -> String {
    let mut out = format!("{},exponent,flag,r2\n", coord_header(map.grid.dim()));
    for p in 0..map.grid.len() {
        push_point(&mut out, &map.grid, p);
        writeln!(out, ",{},{},{}", map.exponent[p], map.flag[p].as_str(), map.r2[p]).unwrap();
    }
    out
}

/// `t1,..,td,exponent,flag,r2` (the `r2` column is empty) followed by the
/// per-band minima.
pub fn approx_csv(map: &ApproxExponentMap) -> String {
    let bands: Vec<String> =
        (map.j_floor..=map.j_trunc).map(|j| format!("band_{j}")).collect();
    let mut out = format!("{},exponent,flag,r2,{}\n", coord_header(map.grid.dim()), bands.join(","));
    for p in 0..map.grid.len() {
        push_point(&mut out, &map.grid, p);
        write!(out, ",{},{},", map.a_hat[p], map.flag[p].as_str()).unwrap();
        for b in &map.band_minima {
            write!(out, ",{}", b[p]).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One row per bin: `h,dimension,r2,finest_fraction,theoretical`; an absent
/// bin has `ABSENT` in the dimension column.
pub fn spectrum_csv(est: &SpectrumEstimate, theoretical: &[Option<f64>]) -> String {
    let mut out = String::from("h,dimension,r2,finest_fraction,theoretical\n");
    for (b, h) in est.bins.centers.iter().enumerate() {
        let d = est.dimension[b].map_or("ABSENT".to_string(), |d| d.to_string());
        let th = theoretical.get(b).copied().flatten().map_or(String::new(), |v| v.to_string());
        writeln!(out, "{h},{d},{},{},{th}", est.r2[b], est.finest_fraction(b)).unwrap();
    }
    out
}

/// Box counts: one row per level, one column per bin.
pub fn spectrum_counts_csv(est: &SpectrumEstimate) -> String {
    let bins: Vec<String> = est.bins.centers.iter().map(|h| format!("h_{h}")).collect();
    let mut out = format!("box_side,radius,total,saturated,{}\n", bins.join(","));
    for (l, counts) in est.counts.iter().enumerate() {
        write!(out, "{},{},{},{}", est.box_sides[l], est.radii[l], est.total_boxes[l], est.saturated[l]).unwrap();
        for c in counts {
            write!(out, ",{c}").unwrap();
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jump::sample_atoms;
    use crate::measure::{JumpMeasure, RadialFamily, SphericalMeasure};

    #[test]
    fn field_round_trips_bitwise() {
        let grid = GridSpec::cube(2, -0.5, 0.5, 5).unwrap();
        let values: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).sin() / 3.0).collect();
        let sample = FieldSample::new(grid, values, ComponentTag::Jump, 11, "abc".into()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_field(dir.path(), "field_jump", &sample).unwrap();
        let back = read_field(dir.path(), "field_jump").unwrap();
        assert_eq!(back, sample);
        let text = fs::read_to_string(dir.path().join("field_jump.csv")).unwrap();
        assert!(text.starts_with("t1,t2,value\n") && !text.contains('\r'));
    }

    #[test]
    fn atoms_round_trip() {
        let nu = JumpMeasure::product(
            SphericalMeasure::isotropic(3, 1.0).unwrap(),
            RadialFamily::Stable { alpha: 1.1, scale: 1.0 },
        )
        .unwrap();
        let set = sample_atoms(&nu, 1.0, 6, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_atoms(dir.path(), &set, "triple").unwrap();
        let (back, meta) = read_atoms(dir.path()).unwrap();
        assert_eq!(meta.fingerprint, "triple");
        assert_eq!(back.len(), set.len());
        assert!(back.iter().zip(set.iter()).all(|(a, b)| a == b));
    }
}
