//! Command-line orchestration: simulate, analyze, trace, validate-cf and
//! report. Every artifact carries the fingerprint of the triple it was
//! produced from.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    approx_exponent_map, default_levels, default_scales, exponent_agreement, exponent_agreement_combined, holder_map,
    median, quantile, spectrum_estimate, AgreementReport, PointFlag,
};
use crate::config::{triple_to_toml, ExperimentConfig};
use crate::error::{Error, Result};
use crate::gaussian::sample_gaussian;
use crate::grid::{ComponentTag, FieldSample};
use crate::io;
use crate::jump::{
    cf_validate, compensator_table, evaluate_jump_field, sample_atoms, suggest_truncation, truncation_error_std,
    AtomSet,
};
use crate::measure::sphere::dot;
use crate::measure::{admissibility_chi, index_beta, theoretical_spectrum, trace_triple, Basis, TraceOptions};

#[derive(Debug, Parser)]
#[command(name = "levyfield", version, about = "Simulate and analyze multivariate Lévy fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to `outputs.directory` of the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a field on the configured grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Which::Combined)]
        which: Which,
    },
    /// Estimate exponents and spectrum of a simulated field.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Which::Combined)]
        which: Which,
    },
    /// Restrict the field to the span of an orthonormal basis.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Basis vectors separated by `;`, coordinates by `,`.
        #[arg(long)]
        basis: String,
    },
    /// Compare the empirical characteristic function of the jump part with
    /// its closed form.
    ValidateCf {
        #[command(flatten)]
        common: Common,
        /// Evaluation point, coordinates separated by `,` (default e_1).
        #[arg(long)]
        point: Option<String>,
    },
    /// Deterministic summary of the configured triple.
    Report {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Gaussian,
    Jump,
    Combined,
}

impl Which {
    fn tag(self) -> ComponentTag {
        match self {
            Which::Gaussian => ComponentTag::Gaussian,
            Which::Jump => ComponentTag::Jump,
            Which::Combined => ComponentTag::Combined,
        }
    }

    fn stem(self) -> String {
        format!("field_{}", self.tag().as_str())
    }
}

/// Loads the config named in `common`, applying the seed override.
pub fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| cfg.outputs.directory.clone());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

/// Runs a parsed command and returns the files it wrote.
pub fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    match cli.command {
        Command::Simulate { common, which } => {
            let cfg = load_config(&common)?;
            run_simulate(&cfg, which, &out_dir(&common, &cfg)?)
        }
        Command::Analyze { common, which } => {
            let cfg = load_config(&common)?;
            run_analyze(&cfg, which, &out_dir(&common, &cfg)?)
        }
        Command::Trace { common, basis } => {
            let cfg = load_config(&common)?;
            run_trace(&cfg, &parse_basis(&basis)?, &out_dir(&common, &cfg)?)
        }
        Command::ValidateCf { common, point } => {
            let cfg = load_config(&common)?;
            let t = match point {
                Some(p) => parse_vector(&p)?,
                None => {
                    let mut e = vec![0.0; cfg.triple.dim()];
                    e[0] = 1.0;
                    e
                }
            };
            run_validate_cf(&cfg, &t, &out_dir(&common, &cfg)?)
        }
        Command::Report { common } => {
            let cfg = load_config(&common)?;
            run_report(&cfg, &out_dir(&common, &cfg)?)
        }
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| Error::Config(format!("cannot parse {c:?} as a number"))))
        .collect()
}

/// Parses `"e11,e12;e21,e22"` into an orthonormal basis.
pub fn parse_basis(text: &str) -> Result<Basis> {
    let vectors = text.split(';').map(parse_vector).collect::<Result<Vec<_>>>()?;
    Basis::new(vectors)
}

/// Samples the requested component. The Gaussian and jump parts draw from
/// independent substreams of the same seed, so each part of a combined field
/// equals the corresponding single-component run.
pub fn simulate_field(cfg: &ExperimentConfig, which: Which) -> Result<(FieldSample, Option<AtomSet>)> {
    let triple = &cfg.triple;
    let grid = &cfg.grid;
    let seed = cfg.sim.seed;
    let gaussian = match which {
        Which::Jump => None,
        _ => Some(sample_gaussian(triple.gaussian(), grid, seed)?),
    };
    let atoms = match which {
        Which::Gaussian => None,
        _ => Some(sample_atoms(triple.jump(), cfg.sim.radius, cfg.sim.j_trunc, seed)?),
    };
    let jump = match &atoms {
        Some(set) => Some(evaluate_jump_field(set, &compensator_table(triple.jump(), cfg.sim.j_trunc), grid)?),
        None => None,
    };
    let values = match which {
        Which::Gaussian => gaussian.expect("sampled").values,
        Which::Jump => jump.expect("sampled").values,
        Which::Combined => {
            let (g, j) = (gaussian.expect("sampled"), jump.expect("sampled"));
            grid.points()
                .zip(g.values.iter().zip(&j.values))
                .map(|(t, (gv, jv))| dot(triple.drift(), &t) + gv + jv)
                .collect()
        }
    };
    let sample = FieldSample::new(grid.clone(), values, which.tag(), seed, triple.fingerprint())?;
    Ok((sample, atoms))
}

pub fn run_simulate(cfg: &ExperimentConfig, which: Which, dir: &Path) -> Result<Vec<PathBuf>> {
    let (sample, atoms) = simulate_field(cfg, which)?;
    let stem = which.stem();
    io::write_field(dir, &stem, &sample)?;
    let mut written = vec![dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json"))];
    if let Some(set) = atoms {
        io::write_atoms(dir, &set, &sample.fingerprint)?;
        written.extend([dir.join("atoms.csv"), dir.join("atoms.json")]);
    }
    let config_path = dir.join("config.toml");
    fs::write(&config_path, cfg.to_toml_string())?;
    written.push(config_path);
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExponentSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub ok: usize,
    pub saturated: usize,
    pub jump_locus: usize,
}

impl ExponentSummary {
    fn new(values: &[f64], flags: &[PointFlag]) -> Self {
        let ok: Vec<f64> =
            values.iter().zip(flags).filter(|(_, f)| **f == PointFlag::Ok).map(|(v, _)| *v).collect();
        let count = |g: PointFlag| flags.iter().filter(|f| **f == g).count();
        Self {
            median: median(&ok),
            q1: quantile(&ok, 0.25),
            q3: quantile(&ok, 0.75),
            ok: ok.len(),
            saturated: count(PointFlag::Saturated),
            jump_locus: count(PointFlag::JumpLocus),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurvePoint {
    pub h: f64,
    /// `None` where the predicted dimension is `−∞`.
    pub dimension: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementStats {
    pub median_abs_diff: f64,
    pub fraction_within: f64,
    pub tolerance: f64,
    pub eligible: usize,
}

impl From<&AgreementReport> for AgreementStats {
    fn from(r: &AgreementReport) -> Self {
        Self {
            median_abs_diff: r.median_abs_diff,
            fraction_within: r.fraction_within,
            tolerance: r.tolerance,
            eligible: r.pairs.len(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisSummary {
    pub fingerprint: String,
    pub component: ComponentTag,
    pub k_min: u32,
    pub k_max: u32,
    pub holder: ExponentSummary,
    pub approx: Option<ExponentSummary>,
    /// `None` when the jump measure has index zero.
    pub beta_used: Option<f64>,
    pub theoretical_curve_points: Vec<CurvePoint>,
    pub agreement_stats: Option<AgreementStats>,
}

pub fn run_analyze(cfg: &ExperimentConfig, which: Which, dir: &Path) -> Result<Vec<PathBuf>> {
    let fingerprint = cfg.triple.fingerprint();
    let sample = io::read_field(dir, &which.stem())?;
    if sample.fingerprint != fingerprint {
        return Err(Error::FingerprintMismatch(format!(
            "sample was produced by triple {} but the config describes {fingerprint}",
            sample.fingerprint
        )));
    }
    let atoms = if which != Which::Gaussian && dir.join("atoms.json").exists() {
        let (set, meta) = io::read_atoms(dir)?;
        if meta.fingerprint != fingerprint || meta.seed != sample.seed {
            return Err(Error::FingerprintMismatch(format!(
                "atoms (triple {}, seed {}) do not belong to the sample (triple {fingerprint}, seed {})",
                meta.fingerprint, meta.seed, sample.seed
            )));
        }
        Some(set)
    } else {
        None
    };

    let (dk_min, dk_max) = default_scales(&sample.grid);
    let k_min = cfg.analysis.k_min.unwrap_or(dk_min);
    let k_max = cfg.analysis.k_max.unwrap_or(dk_max);
    let holder = holder_map(&sample, k_min, k_max, cfg.analysis.h_max)?;
    let bins = cfg.bins();
    let spectrum = spectrum_estimate(&sample, &bins, &default_levels(&sample))?;

    let beta_used = match index_beta(cfg.triple.jump())? {
        b if b > 0.0 => Some(b),
        _ => None,
    };
    let curve: Vec<CurvePoint> = match beta_used {
        Some(_) => bins
            .centers
            .iter()
            .map(|h| {
                let d = theoretical_spectrum(&cfg.triple, *h)?;
                Ok(CurvePoint { h: *h, dimension: d.is_finite().then_some(d) })
            })
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };

    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, text)?;
        written.push(path);
        Ok(())
    };
    put("holder.csv", io::holder_csv(&holder))?;
    let theoretical: Vec<Option<f64>> = curve.iter().map(|c| c.dimension).collect();
    put("spectrum.csv", io::spectrum_csv(&spectrum, &theoretical))?;
    put("spectrum_counts.csv", io::spectrum_counts_csv(&spectrum))?;

    let (approx_summary, agreement) = match &atoms {
        Some(set) => {
            let approx = approx_exponent_map(set, &sample.grid, cfg.analysis.j_floor_for(set.j_trunc()))?;
            put("approx.csv", io::approx_csv(&approx))?;
            let report = if which == Which::Combined && !cfg.triple.gaussian().is_zero() {
                exponent_agreement_combined(&holder, &approx)?
            } else {
                exponent_agreement(&holder, &approx)?
            };
            (Some(ExponentSummary::new(&approx.a_hat, &approx.flag)), Some(AgreementStats::from(&report)))
        }
        None => (None, None),
    };

    let summary = AnalysisSummary {
        fingerprint,
        component: sample.tag,
        k_min,
        k_max,
        holder: ExponentSummary::new(&holder.exponent, &holder.flag),
        approx: approx_summary,
        beta_used,
        theoretical_curve_points: curve,
        agreement_stats: agreement,
    };
    let path = dir.join("analysis.json");
    io::write_json(&path, &summary)?;
    written.push(path);
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceReport {
    pub fingerprint: String,
    pub trace_fingerprint: String,
    pub beta_original: f64,
    pub beta_trace: f64,
}

pub fn run_trace(cfg: &ExperimentConfig, basis: &Basis, dir: &Path) -> Result<Vec<PathBuf>> {
    let traced = trace_triple(&cfg.triple, basis, &TraceOptions::default())?;
    let report = TraceReport {
        fingerprint: cfg.triple.fingerprint(),
        trace_fingerprint: traced.fingerprint(),
        beta_original: index_beta(cfg.triple.jump())?,
        beta_trace: index_beta(traced.jump())?,
    };
    if report.beta_trace > report.beta_original {
        return Err(Error::InvalidMeasure(format!(
            "trace index {} exceeds the original {}",
            report.beta_trace, report.beta_original
        )));
    }
    let triple_path = dir.join("trace.toml");
    fs::write(&triple_path, triple_to_toml(&traced))?;
    let report_path = dir.join("trace.json");
    io::write_json(&report_path, &report)?;
    Ok(vec![triple_path, report_path])
}

/// Number of θ values in the characteristic-function check.
pub const CF_THETAS: usize = 41;

/// The θ grid: `CF_THETAS` equally spaced values on `[−5, 5]`.
pub fn cf_thetas() -> Vec<f64> {
    (0..CF_THETAS).map(|i| -5.0 + 10.0 * i as f64 / (CF_THETAS - 1) as f64).collect()
}

#[derive(Debug, Clone, Serialize)]
struct CfSummary<'a> {
    fingerprint: String,
    point: &'a [f64],
    replicas: usize,
    #[serde(rename = "J_trunc")]
    j_trunc: usize,
    fraction_within_4se: f64,
}

pub fn run_validate_cf(cfg: &ExperimentConfig, t: &[f64], dir: &Path) -> Result<Vec<PathBuf>> {
    let report = cf_validate(cfg.triple.jump(), t, &cf_thetas(), cfg.sim.replicas, cfg.sim.seed)?;
    let csv_path = dir.join("cf.csv");
    fs::write(&csv_path, io::cf_csv(&report))?;
    let json_path = dir.join("cf.json");
    io::write_json(
        &json_path,
        &CfSummary {
            fingerprint: cfg.triple.fingerprint(),
            point: t,
            replicas: report.replicas,
            j_trunc: report.j_trunc,
            fraction_within_4se: report.fraction_within(4.0),
        },
    )?;
    Ok(vec![csv_path, json_path])
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleReport {
    pub fingerprint: String,
    pub dim: usize,
    pub beta: f64,
    pub chi: f64,
    pub chi_converges: bool,
    pub gaussian_constant: f64,
    pub band_masses: Vec<f64>,
    /// Standard deviation of the discarded bands at the farthest grid point.
    pub truncation_error_std: f64,
    /// Smallest truncation whose discarded part has relative standard
    /// deviation below 1e-2 at the farthest grid point.
    pub suggested_j_trunc: Option<usize>,
}

pub fn triple_report(cfg: &ExperimentConfig) -> Result<TripleReport> {
    let nu = cfg.triple.jump();
    let far = cfg
        .grid
        .points()
        .max_by(|a, b| dot(a, a).total_cmp(&dot(b, b)))
        .expect("grid is nonempty");
    let (chi, chi_converges) = admissibility_chi(nu, 64)?;
    Ok(TripleReport {
        fingerprint: cfg.triple.fingerprint(),
        dim: cfg.triple.dim(),
        beta: index_beta(nu)?,
        chi,
        chi_converges,
        gaussian_constant: cfg.triple.gaussian().c_mu(),
        band_masses: (0..=cfg.sim.j_trunc).map(|j| nu.band_mass(j)).collect(),
        truncation_error_std: truncation_error_std(nu, cfg.sim.radius, cfg.sim.j_trunc, &far)?,
        suggested_j_trunc: suggest_truncation(nu, &far, 1e-2, 60),
    })
}

pub fn run_report(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    let path = dir.join("report.json");
    io::write_json(&path, &triple_report(cfg)?)?;
    Ok(vec![path])
}

/// Machine-readable error record printed on failure.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorRecord {
    fn from(e: &Error) -> Self {
        Self { error: e.kind(), message: e.to_string(), exit_code: e.exit_code() }
    }
}
