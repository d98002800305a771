//! Falsification harness for pure-capillary solitary waves.
//!
//! Localized seeds are handed to Newton on the sinh residual over tori of
//! growing length. A solitary wave would show up as converged nonzero profiles
//! whose amplitude persists as `L` doubles; the theorem says there is none.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{nonexistence_certificate, CertificateReport, Verdict, TRIVIAL_THRESHOLD};
use crate::error::{Error, Result};
use crate::solver::{
    cosine_field, newton_solve, newton_solve_fixed_crest, seed_from_dispersion, FailureKind,
    NewtonConfig, SolveError,
};
use crate::spectral::{PeriodicGrid, RealField};
use crate::steady::{ResidualKind, WaveParameters};

/// Relative slack in the "non-increasing under doubling" test.
pub const MONOTONE_SLACK: f64 = 0.1;

/// Gaussian bump `amplitude * exp(-(a / width)^2)` centred on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub amplitude: f64,
    pub width: f64,
}

impl SeedSpec {
    pub fn sample(&self, grid: PeriodicGrid) -> RealField {
        RealField::from_centered_fn(grid, |a| self.amplitude * (-(a / self.width).powi(2)).exp())
    }
}

/// `count` seeds drawn uniformly from the given amplitude and width ranges.
pub fn seed_family(rng_seed: u64, count: usize, amplitude: (f64, f64), width: (f64, f64)) -> Vec<SeedSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    (0..count)
        .map(|_| SeedSpec {
            amplitude: rng.gen_range(amplitude.0..=amplitude.1),
            width: rng.gen_range(width.0..=width.1),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    CollapsedToZero,
    ConvergedNonzero,
    Diverged,
    Stagnated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchCell {
    pub length: f64,
    pub n: usize,
    pub seed_index: usize,
    pub seed: SeedSpec,
    pub outcome: Outcome,
    pub iterations: usize,
    pub residual_norm: f64,
    /// `sup |u|` of the final iterate.
    pub amplitude: f64,
    pub certificate: Option<CertificateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSummary {
    pub length: f64,
    /// Largest `sup |u|` among converged nonzero outcomes (0 if none).
    pub max_amplitude: f64,
    pub collapsed: usize,
    pub converged_nonzero: usize,
    pub diverged: usize,
    pub stagnated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicControl {
    pub length: f64,
    pub outcome: Outcome,
    pub amplitude: f64,
    pub c: f64,
    pub residual_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub params: WaveParameters,
    pub seeds: Vec<SeedSpec>,
    pub summaries: Vec<LengthSummary>,
    /// Max accepted amplitude non-increasing (within 10%) as `L` doubles.
    pub amplitude_non_increasing: bool,
    /// Every nontrivial stagnated profile is certified inconsistent with a solution.
    pub stagnated_certified: bool,
    pub consistent_with_nonexistence: bool,
    pub periodic_control: Option<PeriodicControl>,
    #[serde(skip)]
    pub cells: Vec<SearchCell>,
}

impl SearchReport {
    /// Per-cell JSONL.
    pub fn cells_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for cell in &self.cells {
            out.push_str(&serde_json::to_string(cell).map_err(|e| Error::Shape(e.to_string()))?);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub lengths: Vec<f64>,
    /// Grid points per unit length.
    pub resolution: usize,
    pub seeds: Vec<SeedSpec>,
    pub newton: NewtonConfig,
    /// Also solve a periodic wave on `L = 2 pi / k` with this `k`.
    pub periodic_control_k: Option<f64>,
}

fn run_cell(
    params: &WaveParameters,
    length: f64,
    n: usize,
    seed_index: usize,
    seed: SeedSpec,
    newton: &NewtonConfig,
) -> Result<SearchCell> {
    let grid = PeriodicGrid::new(n, length)?;
    let guess = seed.sample(grid);
    let mut cell = SearchCell {
        length,
        n,
        seed_index,
        seed,
        outcome: Outcome::Stagnated,
        iterations: 0,
        residual_norm: f64::NAN,
        amplitude: f64::NAN,
        certificate: None,
    };
    let last = match newton_solve(ResidualKind::Sinh, &guess, params, newton) {
        Ok(point) => {
            cell.iterations = point.iterations;
            cell.residual_norm = point.residual_norm;
            let u = point.field();
            cell.amplitude = u.sup_norm();
            cell.outcome = if cell.amplitude < TRIVIAL_THRESHOLD {
                Outcome::CollapsedToZero
            } else {
                Outcome::ConvergedNonzero
            };
            u
        }
        Err(SolveError::Failed(f)) => {
            cell.iterations = f.iterations;
            cell.residual_norm = f.residual_norm;
            cell.outcome = match f.kind {
                FailureKind::Diverged => Outcome::Diverged,
                FailureKind::Stagnated | FailureKind::DegenerateProfile => Outcome::Stagnated,
            };
            let u = cosine_field(grid, &f.coeffs);
            cell.amplitude = u.sup_norm();
            u
        }
        Err(SolveError::Invalid(e)) => return Err(e),
    };
    let nontrivial = cell.amplitude.is_finite() && cell.amplitude >= TRIVIAL_THRESHOLD;
    if nontrivial && matches!(cell.outcome, Outcome::ConvergedNonzero | Outcome::Stagnated) {
        cell.certificate = nonexistence_certificate(&last, params).ok();
    }
    Ok(cell)
}

pub fn solitary_search(params: &WaveParameters, cfg: &SearchConfig) -> Result<SearchReport> {
    if params.g() != 0.0 || params.sigma() <= 0.0 {
        return Err(Error::Usage("solitary search needs g = 0 and sigma > 0".into()));
    }
    if cfg.lengths.is_empty() || cfg.lengths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("lengths must be nonempty and increasing".into()));
    }
    if cfg.resolution == 0 {
        return Err(Error::Parameter("resolution must be positive".into()));
    }
    cfg.newton.validate()?;
    let jobs: Vec<(f64, usize, usize, SeedSpec)> = cfg
        .lengths
        .iter()
        .flat_map(|&l| {
            let n = ((l * cfg.resolution as f64).round() as usize).max(8);
            let n = n + n % 2;
            cfg.seeds.iter().enumerate().map(move |(i, s)| (l, n, i, *s))
        })
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(l, n, i, s)| run_cell(params, l, n, i, s, &cfg.newton))
        .collect::<Result<Vec<_>>>()?;

    let summaries: Vec<LengthSummary> = cfg
        .lengths
        .iter()
        .map(|&l| {
            let at: Vec<&SearchCell> = cells.iter().filter(|c| c.length == l).collect();
            let count = |o: Outcome| at.iter().filter(|c| c.outcome == o).count();
            LengthSummary {
                length: l,
                max_amplitude: at
                    .iter()
                    .filter(|c| c.outcome == Outcome::ConvergedNonzero)
                    .map(|c| c.amplitude)
                    .fold(0.0, f64::max),
                collapsed: count(Outcome::CollapsedToZero),
                converged_nonzero: count(Outcome::ConvergedNonzero),
                diverged: count(Outcome::Diverged),
                stagnated: count(Outcome::Stagnated),
            }
        })
        .collect();
    let amplitude_non_increasing = summaries
        .windows(2)
        .all(|w| w[1].max_amplitude <= (1.0 + MONOTONE_SLACK) * w[0].max_amplitude);
    let stagnated_certified = cells
        .iter()
        .filter(|c| c.outcome == Outcome::Stagnated && c.amplitude >= TRIVIAL_THRESHOLD)
        .all(|c| {
            c.certificate
                .as_ref()
                .is_some_and(|r| r.verdict == Verdict::InconsistentWithSolution)
        });
    let periodic_control = match cfg.periodic_control_k {
        Some(k) => Some(periodic_control(params, k, &cfg.newton)?),
        None => None,
    };
    Ok(SearchReport {
        params: *params,
        seeds: cfg.seeds.clone(),
        summaries,
        amplitude_non_increasing,
        stagnated_certified,
        consistent_with_nonexistence: amplitude_non_increasing && stagnated_certified,
        periodic_control,
        cells,
    })
}

/// A small periodic wave on `L = 2 pi / k`: such waves exist, so the harness
/// must find a converged nonzero profile here.
pub fn periodic_control(params: &WaveParameters, k: f64, newton: &NewtonConfig) -> Result<PeriodicControl> {
    let length = 2.0 * std::f64::consts::PI / k;
    let grid = PeriodicGrid::new(64, length)?;
    let crest = 0.05;
    let seed = seed_from_dispersion(grid, k, crest, &params.with_speed(0.0))?;
    let (u, sinh_params) = seed.for_sinh();
    Ok(
        match newton_solve_fixed_crest(ResidualKind::Sinh, &u, &sinh_params, crest, newton) {
            Ok(p) => PeriodicControl {
                length,
                outcome: Outcome::ConvergedNonzero,
                amplitude: p.field().sup_norm(),
                c: p.params.c(),
                residual_norm: p.residual_norm,
            },
            Err(SolveError::Failed(f)) => PeriodicControl {
                length,
                outcome: match f.kind {
                    FailureKind::Diverged => Outcome::Diverged,
                    _ => Outcome::Stagnated,
                },
                amplitude: cosine_field(grid, &f.coeffs).sup_norm(),
                c: f.c,
                residual_norm: f.residual_norm,
            },
            Err(SolveError::Invalid(e)) => return Err(e),
        },
    )
}
