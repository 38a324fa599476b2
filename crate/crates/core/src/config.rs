//! Experiment configuration in TOML.
//!
//! Every run is described by five required sections: `[triple]`, `[grid]`,
//! `[sim]`, `[analysis]` and `[outputs]`. The simulation seed, ball radius and
//! truncation level have no defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::SpectrumBins;
use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec};
use crate::measure::{CharTriple, Direction, JumpAtom, JumpMeasure, RadialFamily, SphericalMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionalAtom {
    pub direction: Vec<f64>,
    pub weight: f64,
}

/// Finite symmetric spherical measure as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphericalSection {
    pub isotropic_mass: f64,
    #[serde(default)]
    pub atoms: Vec<DirectionalAtom>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpAtomSection {
    pub direction: Vec<f64>,
    pub x: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "coupling", rename_all = "snake_case")]
pub enum JumpSection {
    Product { directional: SphericalSection, radial: RadialFamily },
    #[serde(rename = "atomlist")]
    AtomList { atoms: Vec<JumpAtomSection> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TripleSection {
    pub dim: usize,
    pub drift: Vec<f64>,
    pub gaussian: SphericalSection,
    pub jump: JumpSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub axes: Vec<Axis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Radius of the ball in which hyperplanes are sampled.
    #[serde(rename = "A")]
    pub radius: f64,
    #[serde(rename = "J_trunc")]
    pub j_trunc: usize,
    pub seed: u64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_min: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    pub h_max: f64,
    /// Bin centers of the spectrum estimate.
    pub bins: Vec<f64>,
    pub delta_h: f64,
    /// Lowest band entering the approximation exponent; `J_trunc − 8` when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j_floor: Option<usize>,
}

impl AnalysisSection {
    pub fn j_floor_for(&self, j_trunc: usize) -> usize {
        self.j_floor.unwrap_or(j_trunc.saturating_sub(8).max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    pub directory: PathBuf,
}

/// Raw file layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    triple: TripleSection,
    grid: GridSection,
    sim: SimSection,
    analysis: AnalysisSection,
    outputs: OutputsSection,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub triple: CharTriple,
    pub grid: GridSpec,
    pub sim: SimSection,
    pub analysis: AnalysisSection,
    pub outputs: OutputsSection,
}

impl ExperimentConfig {
    pub fn new(
        triple: CharTriple,
        grid: GridSpec,
        sim: SimSection,
        analysis: AnalysisSection,
        outputs: OutputsSection,
    ) -> Result<Self> {
        if grid.dim() != triple.dim() {
            return Err(Error::Config(format!(
                "grid has dimension {} but the triple has dimension {}",
                grid.dim(),
                triple.dim()
            )));
        }
        if !(sim.radius.is_finite() && sim.radius > 0.0) {
            return Err(Error::Config(format!("sim.A must be positive, got {}", sim.radius)));
        }
        grid.ensure_in_ball(sim.radius)?;
        if sim.replicas == 0 {
            return Err(Error::Config("sim.replicas must be positive".into()));
        }
        if !(analysis.h_max > 0.0) {
            return Err(Error::Config("analysis.h_max must be positive".into()));
        }
        if let (Some(lo), Some(hi)) = (analysis.k_min, analysis.k_max) {
            if lo >= hi {
                return Err(Error::Config("analysis.k_min must be below analysis.k_max".into()));
            }
        }
        SpectrumBins::new(analysis.bins.clone(), analysis.delta_h)?;
        Ok(Self { triple, grid, sim, analysis, outputs })
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let triple = file.triple.to_triple().map_err(as_config)?;
        let grid = GridSpec::new(file.grid.axes).map_err(as_config)?;
        Self::new(triple, grid, file.sim, file.analysis, file.outputs).map_err(as_config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = ConfigFile {
            triple: TripleSection::from_triple(&self.triple),
            grid: GridSection { axes: self.grid.axes().to_vec() },
            sim: self.sim,
            analysis: self.analysis.clone(),
            outputs: self.outputs.clone(),
        };
        toml::to_string(&file).expect("config serializes")
    }

    pub fn bins(&self) -> SpectrumBins {
        SpectrumBins::new(self.analysis.bins.clone(), self.analysis.delta_h).expect("validated")
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

impl SphericalSection {
    fn to_measure(&self, dim: usize) -> Result<SphericalMeasure> {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Ok((Direction::new(a.direction.clone())?, a.weight)))
            .collect::<Result<Vec<_>>>()?;
        SphericalMeasure::new(dim, self.isotropic_mass, atoms)
    }

    fn from_measure(mu: &SphericalMeasure) -> Self {
        Self {
            isotropic_mass: mu.isotropic_mass(),
            atoms: mu
                .atoms()
                .iter()
                .map(|(s, w)| DirectionalAtom { direction: s.coords().to_vec(), weight: *w })
                .collect(),
        }
    }
}

impl TripleSection {
    pub fn to_triple(&self) -> Result<CharTriple> {
        if self.drift.len() != self.dim {
            return Err(Error::DimMismatch { expected: self.dim, got: self.drift.len() });
        }
        let gaussian = self.gaussian.to_measure(self.dim)?;
        let jump = match &self.jump {
            JumpSection::Product { directional, radial } => {
                JumpMeasure::product(directional.to_measure(self.dim)?, radial.clone())?
            }
            JumpSection::AtomList { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        Ok(JumpAtom { direction: Direction::new(a.direction.clone())?, x: a.x, weight: a.weight })
                    })
                    .collect::<Result<Vec<_>>>()?;
                JumpMeasure::atom_list(self.dim, atoms)?
            }
        };
        CharTriple::new(self.drift.clone(), gaussian, jump)
    }

    pub fn from_triple(triple: &CharTriple) -> Self {
        let jump = match triple.jump() {
            JumpMeasure::Product { directional, radial } => JumpSection::Product {
                directional: SphericalSection::from_measure(directional),
                radial: radial.clone(),
            },
            JumpMeasure::AtomList { atoms, .. } => JumpSection::AtomList {
                atoms: atoms
                    .iter()
                    .map(|a| JumpAtomSection { direction: a.direction.coords().to_vec(), x: a.x, weight: a.weight })
                    .collect(),
            },
        };
        Self {
            dim: triple.dim(),
            drift: triple.drift().to_vec(),
            gaussian: SphericalSection::from_measure(triple.gaussian()),
            jump,
        }
    }
}

/// A standalone `[triple]` document, as emitted by traces.
pub fn triple_to_toml(triple: &CharTriple) -> String {
    #[derive(Serialize)]
    struct Doc {
        triple: TripleSection,
    }
    toml::to_string(&Doc { triple: TripleSection::from_triple(triple) }).expect("triple serializes")
}

pub fn triple_from_toml(text: &str) -> Result<CharTriple> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Doc {
        triple: TripleSection,
    }
    let doc: Doc = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    doc.triple.to_triple().map_err(as_config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STABLE: &str = r#"
[triple]
dim = 2
drift = [0.0, 0.0]

[triple.gaussian]
isotropic_mass = 0.0

[triple.jump]
coupling = "product"

[triple.jump.directional]
isotropic_mass = 1.0
atoms = [{ direction = [0.6, 0.8], weight = 0.25 }]

[triple.jump.radial]
kind = "stable"
alpha = 1.2
scale = 1.0

[grid]
axes = [{ min = -0.5, max = 0.5, count = 9 }, { min = -0.5, max = 0.5, count = 9 }]

[sim]
A = 0.75
J_trunc = 10
seed = 7
replicas = 100

[analysis]
h_max = 2.0
bins = [0.1, 0.3, 0.5]
delta_h = 0.1
j_floor = 4

[outputs]
directory = "out"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(STABLE).unwrap();
        assert_eq!(cfg.sim.seed, 7);
        assert_eq!(cfg.grid.len(), 81);
        let once = cfg.to_toml_string();
        let again = ExperimentConfig::from_toml_str(&once).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml_string(), once);
    }

    #[test]
    fn seed_radius_and_truncation_are_required() {
        for key in ["seed = 7", "A = 0.75", "J_trunc = 10"] {
            let text = STABLE.replace(key, "");
            assert!(matches!(ExperimentConfig::from_toml_str(&text), Err(Error::Config(_))), "{key}");
        }
    }

    #[test]
    fn rejects_grid_outside_ball() {
        let text = STABLE.replace("A = 0.75", "A = 0.5");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_non_levy_measure_and_unknown_keys() {
        let text = STABLE.replace("alpha = 1.2", "alpha = 2.5");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
        let text = STABLE.replace("replicas = 100", "replicas = 100\ncolour = 3");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn atomlist_and_bandtable_round_trip() {
        let text = STABLE
            .replace(
                "[triple.jump]\ncoupling = \"product\"",
                "[triple.jump]\ncoupling = \"atomlist\"\natoms = [{ direction = [1.0, 0.0], x = 2.0, weight = 0.5 }]",
            )
            .replace("[triple.jump.directional]\nisotropic_mass = 1.0\natoms = [{ direction = [0.6, 0.8], weight = 0.25 }]\n", "")
            .replace("[triple.jump.radial]\nkind = \"stable\"\nalpha = 1.2\nscale = 1.0\n", "");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(matches!(cfg.triple.jump(), JumpMeasure::AtomList { .. }));
        let s = cfg.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&s).unwrap().to_toml_string(), s);

        let text = STABLE.replace(
            "kind = \"stable\"\nalpha = 1.2\nscale = 1.0",
            "kind = \"bandtable\"\nnu0 = 1.0\nnu = [2.0, 4.0, 8.0, 16.0]\ncontinuation = \"geometric\"",
        );
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        let s = cfg.to_toml_string();
        assert_eq!(ExperimentConfig::from_toml_str(&s).unwrap().to_toml_string(), s);
    }

    #[test]
    fn triple_document_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(STABLE).unwrap();
        let doc = triple_to_toml(&cfg.triple);
        assert_eq!(triple_from_toml(&doc).unwrap(), cfg.triple);
    }
}
