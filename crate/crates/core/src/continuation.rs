//! Pseudo-arclength continuation of even travelling waves.
//!
//! Arclength is measured in the plane `(u(0), c / c_ref)` of the crest value
//! of the solver unknown and the nondimensional speed,
//! `c_ref = sqrt(sigma / h + g h)`. The predictor is the secant through the
//! last two points (in the full coefficient space), the corrector Newton's
//! method with the arclength hyperplane as extra equation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{
    crest, crest_weights, solve, BranchPoint, BranchPointRecord, Constraint, FailureKind,
    NewtonConfig, Problem, SolveError,
};
use crate::spectral::{self, PeriodicGrid, RealField};
use crate::steady::{ResidualKind, WaveParameters};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuationConfig {
    pub ds: f64,
    pub ds_min: f64,
    pub ds_max: f64,
    /// Total points including the seed.
    pub max_points: usize,
    /// Stop once the surface amplitude `sup |Im W|` reaches this value.
    pub target_amplitude: Option<f64>,
    /// Stop once the speed crosses this value.
    pub target_speed: Option<f64>,
    pub stop_on_overhang: bool,
    pub detect_folds: bool,
    /// Number of folds in `c` after which the branch is abandoned.
    pub max_folds: usize,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            ds: 0.02,
            ds_min: 1e-5,
            ds_max: 0.1,
            max_points: 200,
            target_amplitude: None,
            target_speed: None,
            stop_on_overhang: false,
            detect_folds: true,
            max_folds: 3,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ds_min > 0.0 && self.ds_min <= self.ds && self.ds <= self.ds_max && self.ds_max.is_finite()) {
            return Err(Error::Parameter(format!(
                "need 0 < ds_min <= ds <= ds_max, got {} {} {}",
                self.ds_min, self.ds, self.ds_max
            )));
        }
        if self.max_points < 1 {
            return Err(Error::Parameter("max_points must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    PointCap,
    TargetAmplitude,
    TargetSpeed,
    Overhang,
    FoldAccumulation,
    DeltaViolation,
    CorrectorFailure,
    ZeroTangent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedInfo {
    pub k: Option<f64>,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub seed: SeedInfo,
    pub termination: Termination,
    pub detail: String,
    pub folds: usize,
    /// Pseudo-arclength step that produced each point after the seed: the
    /// tangent component of the chord in the `(u(0), c / c_ref)` plane (the
    /// first step is the crest increment).
    pub steps: Vec<f64>,
    /// Index of the first point with an overhanging surface.
    pub overhang_onset: Option<usize>,
}

impl Branch {
    /// One JSON object per point.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for p in &self.points {
            let line = serde_json::to_string(&p.to_record()?)
                .map_err(|e| Error::Shape(e.to_string()))?;
            out.push_str(&line);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Vec<BranchPoint>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let rec: BranchPointRecord =
                    serde_json::from_str(l).map_err(|e| Error::Shape(e.to_string()))?;
                BranchPoint::from_record(&rec)
            })
            .collect()
    }
}

/// Speed scale `sqrt(sigma / h + g h)`.
pub fn reference_speed(params: &WaveParameters) -> f64 {
    (params.sigma() / params.h() + params.g() * params.h()).sqrt()
}

fn projected(point: &BranchPoint, c_ref: f64) -> (f64, f64) {
    (point.crest(), point.params.c() / c_ref)
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Continues the branch through `seed`, a converged point.
pub fn continue_branch(
    seed: &BranchPoint,
    cfg: &ContinuationConfig,
    newton: &NewtonConfig,
) -> Result<Branch> {
    cfg.validate()?;
    newton.validate()?;
    let replay = seed.replay_residual_norm(newton.delta)?;
    if replay > newton.abs_tol {
        return Err(Error::Usage(format!(
            "seed is not converged: |R| = {replay:e} > {:e}",
            newton.abs_tol
        )));
    }
    let problem = Problem::new(seed.kind, seed.grid, seed.params, newton.delta)?;
    let c_ref = reference_speed(&seed.params);
    let mut branch = Branch {
        points: vec![seed.clone()],
        seed: SeedInfo {
            k: None,
            amplitude: seed.crest(),
        },
        termination: Termination::PointCap,
        detail: String::new(),
        folds: 0,
        steps: Vec::new(),
        overhang_onset: seed.overhang.then_some(0),
    };
    let crest0 = seed.crest();
    if crest0 == 0.0 || seed.coeffs.iter().all(|&a| a == 0.0) {
        branch.termination = Termination::ZeroTangent;
        branch.detail = "seed has no amplitude to scale along".into();
        return Ok(branch);
    }

    let mut ds = cfg.ds;
    let mut last_failure: Option<FailureKind>;
    let mut last_dc: f64 = 0.0;
    while branch.points.len() < cfg.max_points {
        let current = branch.points.last().expect("nonempty");
        let (constraint, guess, guess_c) = if branch.points.len() == 1 {
            // Natural step in the crest value.
            let target = crest0 + ds * crest0.signum();
            let scale = target / crest0;
            let guess: Vec<f64> = current.coeffs.iter().map(|a| a * scale).collect();
            (
                Constraint::Linear {
                    coeff_weights: crest_weights(seed.grid),
                    speed_weight: 0.0,
                    target,
                },
                guess,
                current.params.c(),
            )
        } else {
            let prev = &branch.points[branch.points.len() - 2];
            let (p0, p1) = (projected(prev, c_ref), projected(current, c_ref));
            let norm = distance(p0, p1);
            if norm == 0.0 {
                branch.termination = Termination::ZeroTangent;
                branch.detail = "consecutive points coincide".into();
                return Ok(branch);
            }
            let scale = ds / norm;
            let guess: Vec<f64> = current
                .coeffs
                .iter()
                .zip(&prev.coeffs)
                .map(|(a, b)| a + scale * (a - b))
                .collect();
            let guess_c = current.params.c() + scale * (current.params.c() - prev.params.c());
            let (ta, tc) = ((p1.0 - p0.0) / norm, (p1.1 - p0.1) / norm);
            let weights: Vec<f64> = crest_weights(seed.grid).iter().map(|w| w * ta).collect();
            let speed_weight = tc / c_ref;
            let target = ta * crest(&guess) + speed_weight * guess_c;
            (
                Constraint::Linear {
                    coeff_weights: weights,
                    speed_weight,
                    target,
                },
                guess,
                guess_c,
            )
        };

        match solve(&problem, &constraint, guess, guess_c, newton) {
            Ok(solved) => {
                let iterations = solved.iterations;
                let point = BranchPoint::evaluate(
                    problem.kind,
                    problem.grid,
                    problem.params.with_speed(solved.c),
                    solved.coeffs,
                    problem.delta,
                    iterations,
                )?;
                if point.residual_norm > newton.abs_tol {
                    last_failure = Some(FailureKind::Stagnated);
                    ds *= 0.5;
                } else {
                    let current = branch.points.last().expect("nonempty");
                    let dc = point.params.c() - current.params.c();
                    branch.steps.push(ds);
                    if cfg.detect_folds && last_dc != 0.0 && dc != 0.0 && dc.signum() != last_dc.signum() {
                        branch.folds += 1;
                    }
                    if dc != 0.0 {
                        last_dc = dc;
                    }
                    let previous_c = current.params.c();
                    let overhang = point.overhang;
                    let amplitude = point.amplitude;
                    let c = point.params.c();
                    branch.points.push(point);
                    if overhang && branch.overhang_onset.is_none() {
                        branch.overhang_onset = Some(branch.points.len() - 1);
                    }
                    if iterations <= 3 {
                        ds = (ds * 1.5).min(cfg.ds_max);
                    }
                    if overhang && cfg.stop_on_overhang {
                        branch.termination = Termination::Overhang;
                        return Ok(branch);
                    }
                    if cfg.target_amplitude.is_some_and(|t| amplitude >= t) {
                        branch.termination = Termination::TargetAmplitude;
                        return Ok(branch);
                    }
                    if cfg
                        .target_speed
                        .is_some_and(|t| (previous_c - t) * (c - t) <= 0.0)
                    {
                        branch.termination = Termination::TargetSpeed;
                        return Ok(branch);
                    }
                    if cfg.detect_folds && branch.folds >= cfg.max_folds {
                        branch.termination = Termination::FoldAccumulation;
                        return Ok(branch);
                    }
                    continue;
                }
            }
            Err(SolveError::Failed(f)) => {
                last_failure = Some(f.kind);
                branch.detail = f.to_string();
                ds *= 0.5;
            }
            Err(SolveError::Invalid(e)) => return Err(e),
        }
        if ds < cfg.ds_min {
            branch.termination = if last_failure == Some(FailureKind::DegenerateProfile) {
                Termination::DeltaViolation
            } else {
                Termination::CorrectorFailure
            };
            return Ok(branch);
        }
    }
    branch.termination = Termination::PointCap;
    Ok(branch)
}

/// KdV solitary-wave guess for pure gravity: elevation `A sech^2(kappa a)`,
/// `kappa = sqrt(3A / 4h^3)`, `c^2 = g (h + A)`. Returns `Re W_alpha` and `c`.
pub fn kdv_seed(grid: PeriodicGrid, params: &WaveParameters, amplitude: f64) -> Result<(RealField, f64)> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::Parameter(format!("amplitude must be positive, got {amplitude}")));
    }
    if params.g() <= 0.0 {
        return Err(Error::Usage("KdV seeds need g > 0".into()));
    }
    let h = params.h();
    let kappa = (3.0 * amplitude / (4.0 * h.powi(3))).sqrt();
    let eta = RealField::from_centered_fn(grid, |a| amplitude / (kappa * a).cosh().powi(2));
    // Im W = eta and Im W_a = -T_h Re W_a, so Re W_a = -T_h^{-1} eta_a.
    let re = spectral::tilbert_inverse(&spectral::derivative(&eta), h)?.scale(-1.0);
    Ok((re, (params.g() * (h + amplitude)).sqrt()))
}

/// Fixed-speed Newton solve from [`kdv_seed`].
pub fn solve_gravity_solitary(
    grid: PeriodicGrid,
    params: &WaveParameters,
    amplitude: f64,
    newton: &NewtonConfig,
) -> std::result::Result<BranchPoint, SolveError> {
    let (guess, c) = kdv_seed(grid, params, amplitude)?;
    crate::solver::newton_solve(ResidualKind::Full, &guess, &params.with_speed(c), newton)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{newton_solve, newton_solve_fixed_crest, seed_from_dispersion};
    use std::f64::consts::PI;

    #[test]
    fn zero_seed_terminates() {
        let g = PeriodicGrid::new(32, 2.0 * PI).unwrap();
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.5).unwrap();
        let seed = newton_solve(ResidualKind::Sinh, &RealField::zeros(g), &params, &NewtonConfig::default()).unwrap();
        let branch = continue_branch(&seed, &ContinuationConfig::default(), &NewtonConfig::default()).unwrap();
        assert_eq!(branch.termination, Termination::ZeroTangent);
        assert_eq!(branch.points.len(), 1);
    }

    #[test]
    fn config_validation() {
        let bad = ContinuationConfig {
            ds: 1.0,
            ds_max: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(ContinuationConfig::default().validate().is_ok());
    }

    #[test]
    fn short_capillary_branch() {
        let g = PeriodicGrid::new(64, 2.0 * PI).unwrap();
        let base = WaveParameters::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let (u, params) = seed_from_dispersion(g, 1.0, 1e-3, &base).unwrap().for_sinh();
        let newton = NewtonConfig::default();
        let seed = newton_solve_fixed_crest(ResidualKind::Sinh, &u, &params, 1e-3, &newton).unwrap();
        let cfg = ContinuationConfig {
            max_points: 6,
            ..Default::default()
        };
        let branch = continue_branch(&seed, &cfg, &newton).unwrap();
        assert_eq!(branch.termination, Termination::PointCap);
        assert_eq!(branch.points.len(), 6);
        for p in &branch.points {
            assert!(p.replay_residual_norm(newton.delta).unwrap() <= newton.abs_tol);
        }
        let crests: Vec<f64> = branch.points.iter().map(|p| p.crest()).collect();
        assert!(crests.windows(2).all(|w| w[1] > w[0]), "{crests:?}");
        let text = branch.to_jsonl().unwrap();
        assert_eq!(Branch::from_jsonl(&text).unwrap(), branch.points);
    }

    #[test]
    fn kdv_seed_shape() {
        let g = PeriodicGrid::new(256, 64.0).unwrap();
        let params = WaveParameters::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let (re, c) = kdv_seed(g, &params, 0.1).unwrap();
        assert!((c * c - 1.1).abs() < 1e-14);
        let profile = crate::steady::SteadyProfile::from_re_w_alpha(&re, 1.0, 0.01).unwrap();
        let eta = profile.im_w();
        // Im W has zero mean; compare peak-to-trough with the sech^2 height.
        let spread = eta.samples().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - eta.samples().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((spread - 0.1).abs() < 1e-3, "{spread}");
    }
}
