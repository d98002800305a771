//! Run configuration for the command-line workbench.
//!
//! A run is described by a sectioned TOML file. Every section has defaults, so
//! an empty file is a valid (pure-capillary) configuration; unknown keys are
//! rejected. `--set section.key=value` overrides are applied to the parsed
//! table before it is typed, so they go through the same validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::certificate::CutoffFamily;
use crate::continuation::ContinuationConfig;
use crate::error::{Error, Result};
use crate::selftest::SelftestConfig;
use crate::solver::NewtonConfig;
use crate::spectral::PeriodicGrid;
use crate::steady::{ResidualKind, WaveParameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Directory receiving the config snapshot, report and data files.
    pub output_dir: PathBuf,
    /// Seed for every randomized input (self-test samples, search seeds).
    pub seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("run"),
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            n: 128,
            length: 2.0 * std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CutoffSection {
    pub r: f64,
}

impl Default for CutoffSection {
    fn default() -> Self {
        Self { r: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionSection {
    pub k_min: f64,
    pub k_max: f64,
    pub count: usize,
}

impl Default for DispersionSection {
    fn default() -> Self {
        Self {
            k_min: 0.25,
            k_max: 8.0,
            count: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guess {
    Zero,
    /// `amplitude cos(k a)` at the linear speed of mode `k`.
    Dispersion,
    /// `amplitude exp(-(a / width)^2)` at the configured speed.
    Bump,
    /// KdV solitary wave of height `amplitude` (gravity, full residual).
    Kdv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub kind: ResidualKind,
    pub guess: Guess,
    pub k: f64,
    pub amplitude: f64,
    pub width: f64,
    /// Free the speed and pin the crest `u(0)` to its value in the guess.
    pub pin_crest: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            kind: ResidualKind::Sinh,
            guess: Guess::Dispersion,
            k: 1.0,
            amplitude: 1e-3,
            width: 2.0,
            pin_crest: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifySection {
    /// Branch JSONL to read; without it the `[solve]` bump is certified.
    pub input: Option<PathBuf>,
    /// Point index in the input (last point when absent).
    pub point: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub lengths: Vec<f64>,
    /// Grid points per unit length.
    pub resolution: usize,
    pub seeds: usize,
    pub amplitude: [f64; 2],
    pub width: [f64; 2],
    /// Wavenumber of the periodic existence control (none when absent).
    pub periodic_control_k: Option<f64>,
}

impl Default for SearchSection {
    fn default() -> Self {
        Self {
            lengths: vec![64.0, 128.0, 256.0],
            resolution: 4,
            seeds: 10,
            amplitude: [0.1, 1.5],
            width: [1.0, 8.0],
            periodic_control_k: Some(1.0),
        }
    }
}

fn default_params() -> WaveParameters {
    WaveParameters::new(0.0, 1.0, 1.0, 0.8).expect("default parameters are admissible")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunSection,
    pub params: WaveParameters,
    pub grid: GridSection,
    pub newton: NewtonConfig,
    pub continuation: ContinuationConfig,
    pub cutoff: CutoffSection,
    pub selftest: SelftestConfig,
    pub dispersion: DispersionSection,
    pub solve: SolveSection,
    pub certify: CertifySection,
    pub search: SearchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            run: RunSection::default(),
            params: default_params(),
            grid: GridSection::default(),
            newton: NewtonConfig {
                max_iters: 60,
                ..Default::default()
            },
            continuation: ContinuationConfig::default(),
            cutoff: CutoffSection::default(),
            selftest: SelftestConfig::default(),
            dispersion: DispersionSection::default(),
            solve: SolveSection::default(),
            certify: CertifySection::default(),
            search: SearchSection::default(),
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Consistency of `[solve]` with `[params]`, checked by the commands that
    /// solve (other commands ignore the section).
    pub fn validate_solve(&self) -> Result<()> {
        let s = &self.solve;
        if s.guess == Guess::Kdv && (s.kind != ResidualKind::Full || self.params.g() <= 0.0) {
            return Err(Error::Usage("kdv guesses need kind = \"full\" and g > 0".into()));
        }
        if s.kind == ResidualKind::Sinh && self.params.g() != 0.0 {
            return Err(Error::Usage("the sinh residual needs g = 0".into()));
        }
        Ok(())
    }

    /// Parses TOML text, applies `section.key=value` overrides and validates.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let file: toml::Table = toml::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))?;
        // Layer the file over the defaults so that sections may be partial.
        let mut table = toml::Table::try_from(RunConfig::default()).expect("defaults serialize");
        merge(&mut table, file);
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| Error::Usage(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    pub fn grid(&self) -> Result<PeriodicGrid> {
        PeriodicGrid::new(self.grid.n, self.grid.length)
    }

    /// Checks every section, whichever command will run.
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.newton.validate()?;
        self.continuation.validate()?;
        CutoffFamily::new(self.cutoff.r)?;
        self.selftest.validate()?;

        let d = &self.dispersion;
        if d.count == 0 || !(d.k_min > 0.0 && d.k_min <= d.k_max && d.k_max.is_finite()) {
            return Err(Error::Usage(format!(
                "empty wavenumber range: k_min = {}, k_max = {}, count = {}",
                d.k_min, d.k_max, d.count
            )));
        }

        let s = &self.solve;
        positive("solve.k", s.k)?;
        positive("solve.width", s.width)?;
        if !s.amplitude.is_finite() {
            return Err(Error::Parameter("solve.amplitude must be finite".into()));
        }

        let q = &self.search;
        if q.lengths.is_empty() || q.lengths.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::Parameter("search.lengths must be positive".into()));
        }
        if q.lengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("search.lengths must increase".into()));
        }
        if q.resolution == 0 || q.seeds == 0 {
            return Err(Error::Parameter("search.resolution and search.seeds must be positive".into()));
        }
        for (name, r) in [("search.amplitude", q.amplitude), ("search.width", q.width)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
                return Err(Error::Parameter(format!("{name} must be an ordered range")));
            }
        }
        positive("search.width[0]", q.width[0])?;
        if let Some(k) = q.periodic_control_k {
            positive("search.periodic_control_k", k)?;
        }
        Ok(())
    }
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Sets `section.key` in `table` to `value`, read as a TOML value when it
/// parses as one and as a bare string otherwise.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override `{spec}` is not section.key=value")))?;
    let (section, field) = key
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::Usage(format!("override key `{key}` is not section.key")))?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {}", raw.trim())) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    match entry {
        toml::Value::Table(t) => {
            t.insert(field.to_string(), value);
            Ok(())
        }
        _ => Err(Error::Usage(format!("`{section}` is not a section"))),
    }
}
