//! The workbench subcommands.
//!
//! Each command validates its [`RunConfig`], computes, and writes into
//! `run.output_dir`: `config.toml` (the effective configuration), `report.json`
//! and command-specific data files. Nothing time- or host-dependent is
//! written, so equal configurations give byte-identical directories.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::certificate::{
    decay_scan, nonexistence_certificate, truncated_energy_identity, CertificateReport, CutoffFamily,
    DecayScan, EnergyIdentity,
};
use crate::config::{Guess, RunConfig};
use crate::continuation::{continue_branch, kdv_seed, Branch, SeedInfo, Termination};
use crate::error::Error;
use crate::search::{seed_family, solitary_search, SearchConfig, SearchReport, SeedSpec};
use crate::selftest::{run_selftest, SelftestConfig, SelftestReport};
use crate::solver::{
    newton_solve, newton_solve_fixed_crest, seed_from_dispersion, BranchPoint, NewtonFailure, SolveError,
};
use crate::spectral::RealField;
use crate::steady::{dispersion_speed, reconstruct_surface, ResidualKind, WaveParameters};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERACY: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_SELFTEST: i32 = 5;

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("config error: {0}")]
    Config(Error),
    #[error(transparent)]
    Numeric(Error),
    #[error("convergence failure: {0}")]
    Convergence(NewtonFailure),
    #[error("self-test failed: {}", .0.join(", "))]
    Selftest(Vec<String>),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Numeric(Error::Degeneracy { .. } | Error::LogBranch(_)) => EXIT_DEGENERACY,
            Self::Numeric(Error::Parameter(_) | Error::Usage(_)) => EXIT_CONFIG,
            Self::Numeric(_) | Self::Io { .. } => EXIT_OTHER,
            Self::Convergence(_) => EXIT_CONVERGENCE,
            Self::Selftest(_) => EXIT_SELFTEST,
        }
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        Self::Numeric(e)
    }
}

impl From<SolveError> for CommandError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Invalid(e) => Self::Numeric(e),
            SolveError::Failed(f) => Self::Convergence(f),
        }
    }
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

/// Files written by one command, plus the one-line summary it prints.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct RunDir {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl RunDir {
    fn create(cfg: &RunConfig) -> CommandResult<Self> {
        let dir = cfg.run.output_dir.clone();
        fs::create_dir_all(&dir).map_err(|source| CommandError::Io {
            path: dir.clone(),
            source,
        })?;
        let mut run = Self { dir, files: Vec::new() };
        run.write("config.toml", &cfg.to_toml())?;
        Ok(run)
    }

    fn write(&mut self, name: &str, contents: &str) -> CommandResult<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| CommandError::Io {
            path: path.clone(),
            source,
        })?;
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> CommandResult<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Shape(e.to_string()))?;
        text.push('\n');
        self.write(name, &text)
    }

    fn finish(self, summary: String) -> RunOutput {
        RunOutput {
            dir: self.dir,
            files: self.files,
            summary,
        }
    }
}

/// Self-test output: the report is written even when checks fail.
pub fn cmd_selftest(cfg: &RunConfig) -> CommandResult<(RunOutput, SelftestReport)> {
    let st = SelftestConfig {
        seed: cfg.run.seed,
        ..cfg.selftest
    };
    let report = run_selftest(&st)?;
    let mut run = RunDir::create(cfg)?;
    run.write_json("report.json", &report)?;
    let failed = report.failed().len();
    let summary = format!(
        "selftest: {} of {} checks passed",
        report.checks.len() - failed,
        report.checks.len()
    );
    Ok((run.finish(summary), report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DispersionReport {
    params: WaveParameters,
    rows: usize,
    k_min: f64,
    k_max: f64,
}

pub fn cmd_dispersion(cfg: &RunConfig) -> CommandResult<RunOutput> {
    let d = cfg.dispersion;
    let ks: Vec<f64> = if d.count == 1 {
        vec![d.k_min]
    } else {
        (0..d.count)
            .map(|i| d.k_min + (d.k_max - d.k_min) * i as f64 / (d.count - 1) as f64)
            .collect()
    };
    let mut csv = String::from("k,c2\n");
    for &k in &ks {
        csv.push_str(&format!("{k:?},{:?}\n", dispersion_speed(k, &cfg.params)?));
    }
    let mut run = RunDir::create(cfg)?;
    run.write("dispersion.csv", &csv)?;
    run.write_json(
        "report.json",
        &DispersionReport {
            params: cfg.params,
            rows: ks.len(),
            k_min: d.k_min,
            k_max: d.k_max,
        },
    )?;
    Ok(run.finish(format!("dispersion: {} rows", ks.len())))
}

/// The initial guess of `[solve]` with the parameters Newton should start from
/// (the speed of the residual kind) and the crest to pin, if any.
fn initial_guess(cfg: &RunConfig) -> CommandResult<(RealField, WaveParameters, Option<f64>, SeedInfo)> {
    let grid = cfg.grid()?;
    let s = cfg.solve;
    let info = SeedInfo {
        k: (s.guess == Guess::Dispersion).then_some(s.k),
        amplitude: s.amplitude,
    };
    let (guess, params) = match s.guess {
        Guess::Zero => (RealField::zeros(grid), cfg.params),
        Guess::Bump => (
            SeedSpec {
                amplitude: s.amplitude,
                width: s.width,
            }
            .sample(grid),
            cfg.params,
        ),
        Guess::Dispersion => {
            let seed = seed_from_dispersion(grid, s.k, s.amplitude, &cfg.params)?;
            match s.kind {
                ResidualKind::Sinh => seed.for_sinh(),
                ResidualKind::Full => (seed.field, seed.params),
            }
        }
        Guess::Kdv => {
            let (re, c) = kdv_seed(grid, &cfg.params, s.amplitude)?;
            (re, cfg.params.with_speed(c))
        }
    };
    let crest = (s.pin_crest && s.guess != Guess::Zero).then(|| guess.samples()[0]);
    Ok((guess, params, crest, info))
}

fn solve_seed(cfg: &RunConfig) -> CommandResult<(BranchPoint, SeedInfo)> {
    cfg.validate_solve().map_err(CommandError::Config)?;
    let (guess, params, crest, info) = initial_guess(cfg)?;
    let point = match crest {
        Some(a) => newton_solve_fixed_crest(cfg.solve.kind, &guess, &params, a, &cfg.newton)?,
        None => newton_solve(cfg.solve.kind, &guess, &params, &cfg.newton)?,
    };
    Ok((point, info))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct SolveReport {
    kind: ResidualKind,
    params: WaveParameters,
    iterations: usize,
    residual_norm: f64,
    crest: f64,
    amplitude: f64,
    overhang: bool,
    certificate: Option<CertificateReport>,
}

fn branch_line(point: &BranchPoint) -> CommandResult<String> {
    let mut line = serde_json::to_string(&point.to_record()?).map_err(|e| Error::Shape(e.to_string()))?;
    line.push('\n');
    Ok(line)
}

pub fn cmd_solve(cfg: &RunConfig) -> CommandResult<RunOutput> {
    let (point, _) = solve_seed(cfg)?;
    let mut run = RunDir::create(cfg)?;
    run.write("point.jsonl", &branch_line(&point)?)?;
    run.write("surface.csv", &reconstruct_surface(&point.steady_profile()?).to_csv())?;
    run.write_json(
        "report.json",
        &SolveReport {
            kind: point.kind,
            params: point.params,
            iterations: point.iterations,
            residual_norm: point.residual_norm,
            crest: point.crest(),
            amplitude: point.amplitude,
            overhang: point.overhang,
            certificate: point.certificate.clone(),
        },
    )?;
    Ok(run.finish(format!(
        "solve: c = {:?}, |R| = {:e}, amplitude = {:?}, {} iterations",
        point.params.c(),
        point.residual_norm,
        point.amplitude,
        point.iterations
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct ContinueReport {
    seed: SeedInfo,
    termination: Termination,
    detail: String,
    points: usize,
    folds: usize,
    overhang_onset: Option<usize>,
    max_residual_norm: f64,
    final_speed: f64,
    final_amplitude: f64,
}

fn branch_csv(branch: &Branch) -> String {
    let mut out = String::from("index,crest,c,amplitude,residual_norm,overhang,iterations\n");
    for (i, p) in branch.points.iter().enumerate() {
        out.push_str(&format!(
            "{i},{:?},{:?},{:?},{:?},{},{}\n",
            p.crest(),
            p.params.c(),
            p.amplitude,
            p.residual_norm,
            p.overhang,
            p.iterations
        ));
    }
    out
}

pub fn cmd_continue(cfg: &RunConfig) -> CommandResult<RunOutput> {
    let (seed, info) = solve_seed(cfg)?;
    let mut branch = continue_branch(&seed, &cfg.continuation, &cfg.newton)?;
    branch.seed = info;
    let last = branch.points.last().expect("a branch holds its seed");
    let mut run = RunDir::create(cfg)?;
    run.write("branch.jsonl", &branch.to_jsonl()?)?;
    run.write("branch.csv", &branch_csv(&branch))?;
    run.write("surface.csv", &reconstruct_surface(&last.steady_profile()?).to_csv())?;
    let report = ContinueReport {
        seed: branch.seed.clone(),
        termination: branch.termination,
        detail: branch.detail.clone(),
        points: branch.points.len(),
        folds: branch.folds,
        overhang_onset: branch.overhang_onset,
        max_residual_norm: branch.points.iter().map(|p| p.residual_norm).fold(0.0, f64::max),
        final_speed: last.params.c(),
        final_amplitude: last.amplitude,
    };
    run.write_json("report.json", &report)?;
    Ok(run.finish(format!(
        "continue: {} points, termination {:?}, final amplitude {:?}",
        report.points, report.termination, report.final_amplitude
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct CertifyReport {
    source: String,
    params: WaveParameters,
    certificate: CertificateReport,
    truncated_identity: Option<EnergyIdentity>,
    decay_scan: Option<DecayScan>,
}

fn load_point(path: &Path, index: Option<usize>) -> CommandResult<BranchPoint> {
    let text = fs::read_to_string(path).map_err(|source| CommandError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut points = Branch::from_jsonl(&text)?;
    let i = index.unwrap_or(points.len().saturating_sub(1));
    if i >= points.len() {
        return Err(CommandError::Config(Error::Usage(format!(
            "{} holds {} points, no index {i}",
            path.display(),
            points.len()
        ))));
    }
    Ok(points.swap_remove(i))
}

pub fn cmd_certify(cfg: &RunConfig) -> CommandResult<RunOutput> {
    let (source, u, params) = match &cfg.certify.input {
        Some(path) => {
            let point = load_point(path, cfg.certify.point)?;
            let (u, params) = point.sinh_form()?.ok_or_else(|| {
                Error::Usage("the certificate needs a pure-capillary profile (g = 0, sigma > 0)".into())
            })?;
            (path.display().to_string(), u, params)
        }
        None => {
            let spec = SeedSpec {
                amplitude: cfg.solve.amplitude,
                width: cfg.solve.width,
            };
            ("solve.bump".to_string(), spec.sample(cfg.grid()?), cfg.params)
        }
    };
    let certificate = nonexistence_certificate(&u, &params)?;
    let grid = u.grid();
    let cut = CutoffFamily::new(cfg.cutoff.r)?;
    let truncated_identity = match cut.check_grid(grid) {
        Ok(()) => Some(truncated_energy_identity(&u, &cut, &params)?),
        Err(_) => None,
    };
    let l = grid.length();
    let radii = [l / 64.0, l / 32.0, l / 16.0, l / 8.0];
    let decay = decay_scan(&u, &radii, &params).ok();
    let mut run = RunDir::create(cfg)?;
    run.write_json(
        "report.json",
        &CertifyReport {
            source,
            params,
            certificate: certificate.clone(),
            truncated_identity,
            decay_scan: decay,
        },
    )?;
    Ok(run.finish(format!(
        "certify: verdict {:?}, cosh energy {:?}, sech energy {:?}",
        certificate.verdict, certificate.cosh_energy, certificate.sech_energy
    )))
}

/// The search the `[search]` section describes.
pub fn search_config(cfg: &RunConfig) -> SearchConfig {
    let q = &cfg.search;
    SearchConfig {
        lengths: q.lengths.clone(),
        resolution: q.resolution,
        seeds: seed_family(
            cfg.run.seed,
            q.seeds,
            (q.amplitude[0], q.amplitude[1]),
            (q.width[0], q.width[1]),
        ),
        newton: cfg.newton,
        periodic_control_k: q.periodic_control_k,
    }
}

pub fn cmd_search(cfg: &RunConfig) -> CommandResult<(RunOutput, SearchReport)> {
    let report = solitary_search(&cfg.params, &search_config(cfg))?;
    let mut run = RunDir::create(cfg)?;
    run.write_json("report.json", &report)?;
    run.write("cells.jsonl", &report.cells_jsonl()?)?;
    let summary = format!(
        "search: {} cells, max amplitudes {:?}, consistent with nonexistence: {}",
        report.cells.len(),
        report.summaries.iter().map(|s| s.max_amplitude).collect::<Vec<_>>(),
        report.consistent_with_nonexistence
    );
    Ok((run.finish(summary), report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, extra: &[&str]) -> RunConfig {
        let mut o = vec![format!("run.output_dir={:?}", dir.display().to_string())];
        o.extend(extra.iter().map(|s| s.to_string()));
        RunConfig::from_toml("", &o).unwrap()
    }

    #[test]
    fn dispersion_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), &["dispersion.k_min=1.0", "dispersion.k_max=2.0", "dispersion.count=2"]);
        cmd_dispersion(&cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("dispersion.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "k,c2");
        let c2: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
        assert!((c2 - 1f64.tanh()).abs() < 1e-15);
    }

    #[test]
    fn zero_guess_gives_trivial_point() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = config(dir.path(), &["solve.guess=\"zero\"", "grid.n=32"]);
        cmd_solve(&cfg).unwrap();
        let text = fs::read_to_string(dir.path().join("point.jsonl")).unwrap();
        let points = Branch::from_jsonl(&text).unwrap();
        assert_eq!(points.len(), 1);
        assert!(points[0].field().sup_norm() == 0.0);
        assert_eq!(
            points[0].certificate.as_ref().unwrap().verdict,
            crate::certificate::Verdict::Trivial
        );
    }

    #[test]
    fn exit_codes() {
        let deg = CommandError::from(Error::Degeneracy {
            min_modulus: 0.0,
            delta: 0.1,
        });
        assert_eq!(deg.exit_code(), EXIT_DEGENERACY);
        assert_eq!(CommandError::Config(Error::Usage("x".into())).exit_code(), EXIT_CONFIG);
        assert_eq!(CommandError::Selftest(vec!["a".into()]).exit_code(), EXIT_SELFTEST);
    }
}
