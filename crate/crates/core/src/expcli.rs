//! Sweep configuration, the far-field and near-field capacity experiments,
//! and CSV output.
//!
//! A config is a flat TOML file:
//!
//! ```toml
//! experiment = "farfield"      # or "nearfield"
//! aperture = 5.0               # array side, wavelengths
//! sweep = [2, 4, 8, 10, 16]    # elements per side (farfield) or separation D in wavelengths (nearfield)
//! systems = ["rydberg", "dipole-1pol", "dipole-2pol"]
//! snr_db = 10.0
//! seed = 1
//! trials = 2000
//! ```
//!
//! Optional keys: `rydberg_snr_db`, `theta_nodes`, `phi_nodes`,
//! `atomic_efficiency` (`"hannan"` or `"ideal"`), `elements_per_side`
//! (nearfield only).

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Deserialize;

use crate::arraygeom::{uniform_planar_array, PatternKind};
use crate::capacity::{det_capacity, ergodic_capacity, normalize, NormalizationPolicy, SnrSpec};
use crate::error::{Error, Result};
use crate::ffchannel::{
    correlation_matrix, hannan_efficiency, ChannelEnsembleSpec, CorrelationMatrix, EfficiencyKind,
};
use crate::nfchannel::{
    classical_channel, rydberg_channel, NearFieldScenario, Polarization, PolarizationSet,
};
use crate::quadrature::{SphereQuadrature, DEFAULT_PHI_NODES, DEFAULT_THETA_NODES};

pub const DEFAULT_APERTURE: f64 = 5.0;
pub const DEFAULT_SNR_DB: f64 = 10.0;
pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_ELEMENTS_PER_SIDE: usize = 10;

pub const CSV_HEADER: &str = "sweep,system,capacity_bits,stderr";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    FarField,
    NearField,
}

impl Experiment {
    pub fn label(self) -> &'static str {
        match self {
            Experiment::FarField => "farfield",
            Experiment::NearField => "nearfield",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "farfield" => Ok(Experiment::FarField),
            "nearfield" => Ok(Experiment::NearField),
            _ => Err(format!("expected `farfield` or `nearfield`, got `{s}`")),
        }
    }
}

/// Receiver technology compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum System {
    /// Atomic receivers: isotropic, polarization-blind elements.
    #[serde(rename = "rydberg")]
    Rydberg,
    /// Classical dipoles, one polarization.
    #[serde(rename = "dipole-1pol")]
    DipoleSingle,
    /// Classical dipoles on two orthogonal polarizations.
    #[serde(rename = "dipole-2pol")]
    DipoleDual,
}

impl System {
    pub fn label(self) -> &'static str {
        match self {
            System::Rydberg => "rydberg",
            System::DipoleSingle => "dipole-1pol",
            System::DipoleDual => "dipole-2pol",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Radiation efficiency applied to atomic elements in the far field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomicEfficiency {
    /// `min(1, 4πS/λ²)`.
    #[default]
    Hannan,
    /// Always 1.
    Ideal,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Experiment,
    aperture: Option<f64>,
    sweep: Vec<f64>,
    systems: Vec<System>,
    snr_db: Option<f64>,
    rydberg_snr_db: Option<f64>,
    seed: Option<u64>,
    trials: Option<usize>,
    theta_nodes: Option<usize>,
    phi_nodes: Option<usize>,
    atomic_efficiency: Option<AtomicEfficiency>,
    elements_per_side: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub experiment: Experiment,
    /// Array side length in wavelengths.
    pub aperture: f64,
    /// Elements per side (farfield) or array separation in wavelengths
    /// (nearfield).
    pub sweep: Vec<f64>,
    pub systems: Vec<System>,
    pub snr_db: f64,
    /// Overrides `snr_db` for the atomic receiver when set.
    pub rydberg_snr_db: Option<f64>,
    pub seed: u64,
    pub trials: usize,
    pub theta_nodes: usize,
    pub phi_nodes: usize,
    pub atomic_efficiency: AtomicEfficiency,
    /// Near-field array size; `None` means the default of 10.
    pub elements_per_side: Option<usize>,
}

fn config_error(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

/// 1-based line of the first `key = ...` assignment in `src`.
fn line_of_key(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| l.split('=').next().is_some_and(|k| k.trim() == key) && l.contains('='))
        .map(|i| i + 1)
}

fn with_line(err: Error, src: &str) -> Error {
    match err {
        Error::Config { key, message } => match line_of_key(src, &key) {
            Some(line) => Error::Config {
                message: format!("{message} (line {line})"),
                key,
            },
            None => Error::Config { key, message },
        },
        other => other,
    }
}

fn from_parse_error(err: toml::de::Error, src: &str) -> Error {
    let message = err.message().trim().to_string();
    let Some(span) = err.span() else {
        return config_error("<file>", message);
    };
    let start = span.start.min(src.len());
    let line_no = src[..start].matches('\n').count() + 1;
    let line = src.lines().nth(line_no - 1).unwrap_or("");
    let key = if let Some(name) = message
        .strip_prefix("unknown field `")
        .and_then(|m| m.split('`').next())
    {
        name.to_string()
    } else if let Some((k, _)) = line.split_once('=') {
        k.trim().to_string()
    } else {
        "<file>".to_string()
    };
    config_error(&key, format!("{message} (line {line_no})"))
}

impl SweepConfig {
    /// Parses and validates a TOML config. Unknown keys are rejected.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(src).map_err(|e| from_parse_error(e, src))?;
        let cfg = SweepConfig {
            experiment: raw.experiment,
            aperture: raw.aperture.unwrap_or(DEFAULT_APERTURE),
            sweep: raw.sweep,
            systems: raw.systems,
            snr_db: raw.snr_db.unwrap_or(DEFAULT_SNR_DB),
            rydberg_snr_db: raw.rydberg_snr_db,
            seed: raw.seed.unwrap_or(0),
            trials: raw.trials.unwrap_or(DEFAULT_TRIALS),
            theta_nodes: raw.theta_nodes.unwrap_or(DEFAULT_THETA_NODES),
            phi_nodes: raw.phi_nodes.unwrap_or(DEFAULT_PHI_NODES),
            atomic_efficiency: raw.atomic_efficiency.unwrap_or_default(),
            elements_per_side: raw.elements_per_side,
        };
        cfg.validate().map_err(|e| with_line(e, src))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&src)
    }

    /// Checks every field; call again after changing fields by hand.
    pub fn validate(&self) -> Result<()> {
        if !(self.aperture.is_finite() && self.aperture > 0.0) {
            return Err(config_error(
                "aperture",
                format!("must be finite and > 0, got {}", self.aperture),
            ));
        }
        if self.sweep.is_empty() {
            return Err(config_error("sweep", "sweep list is empty"));
        }
        for &v in &self.sweep {
            match self.experiment {
                Experiment::FarField => {
                    if !(v >= 1.0 && v.fract() == 0.0 && v <= u16::MAX as f64) {
                        return Err(config_error(
                            "sweep",
                            format!(
                                "farfield values are elements per side (integer >= 1), got {v}"
                            ),
                        ));
                    }
                }
                Experiment::NearField => {
                    if !(v.is_finite() && v > 0.0) {
                        return Err(config_error(
                            "sweep",
                            format!("nearfield separations must be finite and > 0, got {v}"),
                        ));
                    }
                }
            }
        }
        let mut sorted = self.sweep.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_error("sweep", "duplicate sweep value"));
        }
        if self.systems.is_empty() {
            return Err(config_error("systems", "systems list is empty"));
        }
        for (i, s) in self.systems.iter().enumerate() {
            if self.systems[..i].contains(s) {
                return Err(config_error("systems", format!("duplicate system `{s}`")));
            }
        }
        if !self.snr_db.is_finite() {
            return Err(config_error("snr_db", "must be finite"));
        }
        if self.rydberg_snr_db.is_some_and(|s| !s.is_finite()) {
            return Err(config_error("rydberg_snr_db", "must be finite"));
        }
        if self.trials == 0 {
            return Err(config_error("trials", "must be >= 1"));
        }
        if self.theta_nodes == 0 {
            return Err(config_error("theta_nodes", "must be >= 1"));
        }
        if self.phi_nodes == 0 {
            return Err(config_error("phi_nodes", "must be >= 1"));
        }
        match (self.experiment, self.elements_per_side) {
            (Experiment::FarField, Some(_)) => {
                return Err(config_error(
                    "elements_per_side",
                    "only used by the nearfield experiment",
                ))
            }
            (Experiment::NearField, Some(0)) => {
                return Err(config_error("elements_per_side", "must be >= 1"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Sweep values in ascending order.
    pub fn sorted_sweep(&self) -> Vec<f64> {
        let mut v = self.sweep.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn snr_db_for(&self, system: System) -> f64 {
        match system {
            System::Rydberg => self.rydberg_snr_db.unwrap_or(self.snr_db),
            _ => self.snr_db,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sweep: f64,
    pub system: System,
    pub capacity_bits: f64,
    /// Monte Carlo standard error; 0 for deterministic channels.
    pub stderr: f64,
}

/// Rows ordered by sweep value, then by the configured system order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn get(&self, sweep: f64, system: System) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.sweep == sweep && r.system == system)
    }

    /// Rows of one system in sweep order.
    pub fn series(&self, system: System) -> Vec<SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.system == system)
            .copied()
            .collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{}",
                r.sweep, r.system, r.capacity_bits, r.stderr
            )?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ASCII output")
    }
}

fn sweep_points<F>(cfg: &SweepConfig, point: F) -> Result<SweepResult>
where
    F: Fn(f64) -> Result<Vec<SweepRow>> + Sync + Send,
{
    cfg.validate()?;
    let per_point = cfg
        .sorted_sweep()
        .into_par_iter()
        .map(point)
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows: per_point.into_iter().flatten().collect(),
    })
}

/// Far-field spacing sweep.
///
/// For each `N`, an `N × N` array fills the `L × L` aperture. Each system gets
/// its correlation matrix (isotropic patterns for atoms, dipole patterns for
/// classical elements), its radiation efficiency, and an ergodic capacity with
/// as many transmit ports as receive ports. Dual polarization doubles the
/// port count with uncorrelated polarization blocks. Every point reuses the
/// configured seed.
pub fn run_farfield(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.experiment != Experiment::FarField {
        return Err(config_error(
            "experiment",
            "run_farfield needs experiment = \"farfield\"",
        ));
    }
    let quad = SphereQuadrature::new(cfg.theta_nodes, cfg.phi_nodes)?;
    sweep_points(cfg, |v| farfield_point(cfg, &quad, v))
}

fn farfield_point(
    cfg: &SweepConfig,
    quad: &SphereQuadrature<f64>,
    value: f64,
) -> Result<Vec<SweepRow>> {
    let n = value as usize;
    let arr = uniform_planar_array(cfg.aperture, n, 0.0)?;
    let area = arr.element_area();
    let needs = |pred: fn(&System) -> bool| cfg.systems.iter().any(pred);
    let iso = if needs(|s| *s == System::Rydberg) {
        Some(correlation_matrix(&arr, PatternKind::Isotropic, quad)?)
    } else {
        None
    };
    let dip = if needs(|s| *s != System::Rydberg) {
        Some(correlation_matrix(&arr, PatternKind::Dipole, quad)?)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(cfg.systems.len());
    for &system in &cfg.systems {
        let (r, efficiency): (CorrelationMatrix<f64>, f64) = match system {
            System::Rydberg => {
                let e = match cfg.atomic_efficiency {
                    AtomicEfficiency::Hannan => hannan_efficiency(area, EfficiencyKind::Atomic)?,
                    AtomicEfficiency::Ideal => 1.0,
                };
                (iso.clone().expect("computed above"), e)
            }
            System::DipoleSingle => (
                dip.clone().expect("computed above"),
                hannan_efficiency(area, EfficiencyKind::Dipole)?,
            ),
            System::DipoleDual => (
                dip.as_ref().expect("computed above").dual_polarized(),
                hannan_efficiency(area, EfficiencyKind::Dipole)?,
            ),
        };
        let ports = r.len();
        let spec = ChannelEnsembleSpec::new(r, efficiency, ports, cfg.seed, cfg.trials)?;
        let est = ergodic_capacity(&spec, &SnrSpec::from_db(cfg.snr_db_for(system), ports)?)?;
        rows.push(SweepRow {
            sweep: value,
            system,
            capacity_bits: est.mean,
            stderr: est.std_error,
        });
    }
    Ok(rows)
}

/// Near-field distance sweep.
///
/// For each separation `D`, two coaxial `N × N` arrays (default `N = 10`) face
/// each other. Classical systems use the dyadic channel (`x`-polarized, or
/// `{x, y}` for dual polarization); the atomic system uses the total-field
/// element channel with `x`-polarized transmitters. All matrices at one `D`
/// are scaled by the single constant that gives the classical `x`-`x` channel
/// unit mean entry power, then evaluated with the deterministic log-det.
pub fn run_nearfield(cfg: &SweepConfig) -> Result<SweepResult> {
    if cfg.experiment != Experiment::NearField {
        return Err(config_error(
            "experiment",
            "run_nearfield needs experiment = \"nearfield\"",
        ));
    }
    sweep_points(cfg, |d| nearfield_point(cfg, d))
}

fn nearfield_point(cfg: &SweepConfig, distance: f64) -> Result<Vec<SweepRow>> {
    let n = cfg.elements_per_side.unwrap_or(DEFAULT_ELEMENTS_PER_SIDE);
    let x = PolarizationSet::single(Polarization::X);
    let xy = PolarizationSet::new(vec![Polarization::X, Polarization::Y])?;
    let single = NearFieldScenario::coaxial(cfg.aperture, n, distance, x.clone(), x)?;
    let reference = classical_channel(&single)?;
    let policy = NormalizationPolicy::ReferenceChannel(&reference);

    let mut rows = Vec::with_capacity(cfg.systems.len());
    for &system in &cfg.systems {
        let h = match system {
            System::Rydberg => rydberg_channel(&single)?,
            System::DipoleSingle => reference.clone(),
            System::DipoleDual => classical_channel(&NearFieldScenario::coaxial(
                cfg.aperture,
                n,
                distance,
                xy.clone(),
                xy.clone(),
            )?)?,
        };
        let h = normalize(&h, &policy)?;
        let snr = SnrSpec::from_db(cfg.snr_db_for(system), h.n_tx())?;
        let capacity_bits = det_capacity(&h, &snr)?;
        rows.push(SweepRow {
            sweep: distance,
            system,
            capacity_bits,
            stderr: 0.0,
        });
    }
    Ok(rows)
}

/// Runs whichever experiment `cfg` names.
pub fn run(cfg: &SweepConfig) -> Result<SweepResult> {
    match cfg.experiment {
        Experiment::FarField => run_farfield(cfg),
        Experiment::NearField => run_nearfield(cfg),
    }
}

/// Writes `res` as CSV to `path`, replacing any existing file.
pub fn emit_csv(res: &SweepResult, path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    res.write_csv(std::io::BufWriter::new(file)).map_err(io)
}
