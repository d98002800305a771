//! Damped Newton iteration for even travelling waves.
//!
//! Unknowns are the cosine coefficients `a_0..a_N` (`N = n/2`) of either
//! `Re W_alpha` (full residual) or `U` (sinh residual), i.e. the real Fourier
//! coefficients with `c_{+m} = c_{-m} = a_m`. Evenness removes the translation
//! invariance. Equations are the same cosine coefficients of the residual.
//! An optional linear constraint frees the speed as one extra unknown.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::certificate::{nonexistence_certificate, CertificateReport};
use crate::error::{Error, Result};
use crate::spectral::{norm_l2, PeriodicGrid, RealField, SpectralField};
use crate::steady::{
    self, dispersion_speed, has_overhang, log_reduce, residual_full, residual_sinh,
    sinh_equation_speed, surface_amplitude, LogProfile, ProfileRecord, ResidualKind,
    SteadyProfile, WaveParameters, DEFAULT_DELTA,
};

/// Grid size above which [`LinearSolver::Auto`] switches to GMRES.
pub const DENSE_LIMIT: usize = 1024;

/// Relative step length beyond which a rejected Newton step counts as divergence.
const DIVERGENCE_FACTOR: f64 = 1e3;

/// Smallest line-search factor tried before giving up.
const MIN_LAMBDA: f64 = 1.0 / 1048576.0;

/// Iterates whose unknown exceeds this in sup-norm are treated as diverged
/// (the sinh residual overflows long before `|u| ~ 700`).
const BLOWUP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinearSolver {
    /// Dense LU for `n <= 1024`, GMRES above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Convergence: `||R||_2 <= abs_tol` (and the constraint residual as well).
    pub abs_tol: f64,
    /// Stagnation: a Newton step shorter than `rel_tol * (1 + ||x||)` without convergence.
    pub rel_tol: f64,
    /// Initial line-search factor.
    pub damping: f64,
    pub linear_solver: LinearSolver,
    pub gmres_max_iters: usize,
    pub gmres_tol: f64,
    /// Admissibility bound on `|1 + W_alpha|` for the full residual.
    pub delta: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iters: 40,
            abs_tol: 1e-10,
            rel_tol: 1e-14,
            damping: 1.0,
            linear_solver: LinearSolver::Auto,
            gmres_max_iters: 400,
            gmres_tol: 1e-13,
            delta: DEFAULT_DELTA,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Parameter("max_iters must be >= 1".into()));
        }
        for (name, v) in [
            ("abs_tol", self.abs_tol),
            ("rel_tol", self.rel_tol),
            ("gmres_tol", self.gmres_tol),
            ("delta", self.delta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Parameter(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.gmres_max_iters < 1 {
            return Err(Error::Parameter("gmres_max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Diverged,
    Stagnated,
    DegenerateProfile,
}

/// A Newton run that did not reach `abs_tol`, with its last admissible iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonFailure {
    pub kind: FailureKind,
    pub iterations: usize,
    pub residual_norm: f64,
    pub coeffs: Vec<f64>,
    pub c: f64,
    pub message: String,
}

impl std::fmt::Display for NewtonFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "newton {:?} after {} iterations (|R| = {:e}): {}",
            self.kind, self.iterations, self.residual_norm, self.message
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("{0}")]
    Failed(NewtonFailure),
}

/// Constraint closing the system when the speed is unknown.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Constraint {
    FixedSpeed,
    /// `coeff_weights . a + speed_weight * c = target`.
    Linear {
        coeff_weights: Vec<f64>,
        speed_weight: f64,
        target: f64,
    },
}

impl Constraint {
    fn value(&self, coeffs: &[f64], c: f64) -> f64 {
        match self {
            Constraint::FixedSpeed => 0.0,
            Constraint::Linear {
                coeff_weights,
                speed_weight,
                target,
            } => dot(coeff_weights, coeffs) + speed_weight * c - target,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of cosine unknowns, `n/2 + 1`.
pub fn cosine_len(grid: PeriodicGrid) -> usize {
    grid.n_points() / 2 + 1
}

/// Even field with real Fourier coefficients `c_{±m} = coeffs[m]`.
pub fn cosine_field(grid: PeriodicGrid, coeffs: &[f64]) -> RealField {
    let n = grid.n_points();
    let half = n / 2;
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    for (m, &a) in coeffs.iter().enumerate().take(half + 1) {
        full[m] = Complex64::new(a, 0.0);
        if m != 0 && m != half {
            full[n - m] = Complex64::new(a, 0.0);
        }
    }
    SpectralField::new(grid, full)
        .expect("coefficient count matches grid")
        .to_real()
}

/// Cosine coefficients of the even part of `u`.
pub fn cosine_coeffs(u: &RealField) -> Vec<f64> {
    let spec = u.spectrum();
    let n = u.grid().n_points();
    (0..=n / 2)
        .map(|m| {
            if m == 0 || m == n / 2 {
                spec.coeffs()[m].re
            } else {
                0.5 * (spec.coeffs()[m].re + spec.coeffs()[n - m].re)
            }
        })
        .collect()
}

/// `u(0) = sum_m w_m a_m`: weights of the crest value in cosine coordinates.
pub fn crest_weights(grid: PeriodicGrid) -> Vec<f64> {
    let half = grid.n_points() / 2;
    (0..=half)
        .map(|m| if m == 0 || m == half { 1.0 } else { 2.0 })
        .collect()
}

/// Value of the even field at `alpha = 0`.
pub fn crest(coeffs: &[f64]) -> f64 {
    let last = coeffs.len() - 1;
    coeffs
        .iter()
        .enumerate()
        .map(|(m, a)| if m == 0 || m == last { *a } else { 2.0 * a })
        .sum()
}

/// The discretized problem for one residual kind at fixed `(g, sigma, h)`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Problem {
    pub kind: ResidualKind,
    pub grid: PeriodicGrid,
    pub params: WaveParameters,
    pub delta: f64,
}

impl Problem {
    pub fn new(kind: ResidualKind, grid: PeriodicGrid, params: WaveParameters, delta: f64) -> Result<Self> {
        if kind == ResidualKind::Sinh && params.g() != 0.0 {
            return Err(Error::Usage("the sinh residual requires g = 0".into()));
        }
        Ok(Self {
            kind,
            grid,
            params,
            delta,
        })
    }

    fn at(&self, c: f64) -> WaveParameters {
        self.params.with_speed(c)
    }

    fn profile(&self, field: &RealField) -> Result<SteadyProfile> {
        SteadyProfile::from_re_w_alpha(field, self.params.h(), self.delta)
    }

    pub fn residual(&self, coeffs: &[f64], c: f64) -> Result<RealField> {
        let field = cosine_field(self.grid, coeffs);
        match self.kind {
            ResidualKind::Sinh => Ok(residual_sinh(&field, &self.at(c))),
            ResidualKind::Full => residual_full(&self.profile(&field)?, &self.at(c)),
        }
    }

    /// Jacobian columns for the coefficient directions plus `dR/dc`.
    fn jacobian(&self, coeffs: &[f64], c: f64) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let field = cosine_field(self.grid, coeffs);
        let params = self.at(c);
        let dirs: Vec<RealField> = (0..coeffs.len())
            .map(|m| {
                let mut e = vec![0.0; coeffs.len()];
                e[m] = 1.0;
                cosine_field(self.grid, &e)
            })
            .collect();
        let (cols, dc) = match self.kind {
            ResidualKind::Sinh => (
                dirs.iter()
                    .map(|d| steady::sinh_jacobian_apply(&field, d, &params))
                    .collect::<Vec<_>>(),
                steady::sinh_speed_derivative(&field, &params),
            ),
            ResidualKind::Full => {
                let profile = self.profile(&field)?;
                (
                    steady::full_jacobian_columns(&profile, &params, &dirs)?,
                    steady::full_speed_derivative(&profile, &params),
                )
            }
        };
        Ok((cols.iter().map(cosine_coeffs).collect(), cosine_coeffs(&dc)))
    }

    fn jvp(&self, coeffs: &[f64], c: f64, dir: &[f64], dc: f64) -> Result<Vec<f64>> {
        let field = cosine_field(self.grid, coeffs);
        let d = cosine_field(self.grid, dir);
        let params = self.at(c);
        let (mut out, speed) = match self.kind {
            ResidualKind::Sinh => (
                steady::sinh_jacobian_apply(&field, &d, &params),
                steady::sinh_speed_derivative(&field, &params),
            ),
            ResidualKind::Full => {
                let profile = self.profile(&field)?;
                (
                    steady::full_jacobian_apply(&profile, &params, &d)?,
                    steady::full_speed_derivative(&profile, &params),
                )
            }
        };
        if dc != 0.0 {
            out = &out + &speed.scale(dc);
        }
        Ok(cosine_coeffs(&out))
    }

    /// Diagonal of the linearization at the flat state, used as preconditioner.
    fn flat_symbol(&self, c: f64) -> Vec<f64> {
        let (g, sigma, h) = (self.params.g(), self.params.sigma(), self.params.h());
        (0..cosine_len(self.grid))
            .map(|m| {
                let k = self.grid.wavenumber(m);
                let t = (h * k).tanh();
                let gravity = if k == 0.0 { g * h } else { g * t / k };
                match self.kind {
                    ResidualKind::Sinh => sigma * k * t + 2.0 * c * c,
                    ResidualKind::Full => sigma * k * t + gravity + c * c,
                }
            })
            .map(|d: f64| d.max(1e-12))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Solved {
    pub coeffs: Vec<f64>,
    pub c: f64,
    pub residual_norm: f64,
    pub iterations: usize,
    pub step_norms: Vec<f64>,
}

struct Eval {
    residual: Vec<f64>,
    norm: f64,
    merit: f64,
}

fn evaluate(problem: &Problem, constraint: &Constraint, coeffs: &[f64], c: f64) -> Result<Eval> {
    let r = problem.residual(coeffs, c)?;
    let norm = norm_l2(&r);
    let g = constraint.value(coeffs, c);
    let mut residual = cosine_coeffs(&r);
    if !matches!(constraint, Constraint::FixedSpeed) {
        residual.push(g);
    }
    Ok(Eval {
        residual,
        norm,
        merit: norm.hypot(g),
    })
}

fn use_dense(problem: &Problem, cfg: &NewtonConfig) -> bool {
    match cfg.linear_solver {
        LinearSolver::Dense => true,
        LinearSolver::Iterative => false,
        LinearSolver::Auto => problem.grid.n_points() <= DENSE_LIMIT,
    }
}

/// Solves `J step = -residual` for the (possibly augmented) system.
fn newton_step(
    problem: &Problem,
    constraint: &Constraint,
    coeffs: &[f64],
    c: f64,
    residual: &[f64],
    cfg: &NewtonConfig,
) -> Result<Option<Vec<f64>>> {
    let m = coeffs.len();
    let augmented = !matches!(constraint, Constraint::FixedSpeed);
    let size = if augmented { m + 1 } else { m };
    let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
    if use_dense(problem, cfg) {
        let (cols, dc) = problem.jacobian(coeffs, c)?;
        let mut jac = DMatrix::<f64>::zeros(size, size);
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                jac[(i, j)] = *v;
            }
        }
        if let Constraint::Linear {
            coeff_weights,
            speed_weight,
            ..
        } = constraint
        {
            for i in 0..m {
                jac[(i, m)] = dc[i];
                jac[(m, i)] = coeff_weights[i];
            }
            jac[(m, m)] = *speed_weight;
        }
        let step = jac.lu().solve(&DVector::from_vec(rhs));
        Ok(step.map(|s| s.iter().copied().collect()))
    } else {
        let diag = problem.flat_symbol(c);
        let apply = |v: &[f64]| -> Result<Vec<f64>> {
            let dc = if augmented { v[m] } else { 0.0 };
            let mut out = problem.jvp(coeffs, c, &v[..m], dc)?;
            if let Constraint::Linear {
                coeff_weights,
                speed_weight,
                ..
            } = constraint
            {
                out.push(dot(coeff_weights, &v[..m]) + speed_weight * v[m]);
            }
            Ok(out)
        };
        let precond = |v: &[f64]| -> Vec<f64> {
            v.iter()
                .enumerate()
                .map(|(i, x)| if i < m { x / diag[i] } else { *x })
                .collect()
        };
        gmres(apply, precond, &rhs, cfg.gmres_tol, cfg.gmres_max_iters, 60)
    }
}

/// Restarted, right-preconditioned GMRES; `None` if it fails to reduce the
/// residual to `tol` relative within `max_iters` inner iterations.
pub(crate) fn gmres(
    apply: impl Fn(&[f64]) -> Result<Vec<f64>>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iters: usize,
    restart: usize,
) -> Result<Option<Vec<f64>>> {
    let n = b.len();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(Some(x));
    }
    let mut total = 0;
    while total < max_iters {
        let ax = apply(&x)?;
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= tol * b_norm {
            return Ok(Some(x));
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        let mut k = 0;
        while k < restart && total < max_iters {
            let z = precond(&basis[k]);
            let mut w = apply(&z)?;
            let mut col = vec![0.0; k + 2];
            for (i, q) in basis.iter().enumerate() {
                col[i] = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= col[i] * qi);
            }
            col[k + 1] = norm(&w);
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c_k, s_k) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / denom, col[k + 1] / denom)
            };
            let next_norm = col[k + 1];
            col[k] = denom;
            col[k + 1] = 0.0;
            cs.push(c_k);
            sn.push(s_k);
            g.push(-s_k * g[k]);
            g[k] *= c_k;
            hess.push(col);
            if next_norm != 0.0 {
                basis.push(w.iter().map(|v| v / next_norm).collect());
            }
            k += 1;
            total += 1;
            if g[k].abs() <= tol * b_norm || next_norm == 0.0 {
                break;
            }
        }
        // Back substitution for y, then x += M^{-1} V y.
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = ((i + 1)..k).map(|j| hess[j][i] * y[j]).sum();
            if hess[i][i] == 0.0 {
                return Ok(None);
            }
            y[i] = (g[i] - s) / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (i, yi) in y.iter().enumerate() {
            update.iter_mut().zip(&basis[i]).for_each(|(u, q)| *u += yi * q);
        }
        let dx = precond(&update);
        x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
        if g[k].abs() <= tol * b_norm {
            let ax = apply(&x)?;
            let res = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
            if res <= 10.0 * tol * b_norm {
                return Ok(Some(x));
            }
        }
    }
    Ok(None)
}

fn failure(kind: FailureKind, iterations: usize, norm: f64, coeffs: &[f64], c: f64, message: impl Into<String>) -> SolveError {
    SolveError::Failed(NewtonFailure {
        kind,
        iterations,
        residual_norm: norm,
        coeffs: coeffs.to_vec(),
        c,
        message: message.into(),
    })
}

/// Cheap upper bound on the sup-norm of an even field.
fn crest_bound(coeffs: &[f64]) -> f64 {
    2.0 * coeffs.iter().map(|a| a.abs()).sum::<f64>()
}

/// Damped Newton iteration from `(coeffs, c)`.
pub(crate) fn solve(
    problem: &Problem,
    constraint: &Constraint,
    coeffs0: Vec<f64>,
    c0: f64,
    cfg: &NewtonConfig,
) -> std::result::Result<Solved, SolveError> {
    cfg.validate()?;
    if coeffs0.len() != cosine_len(problem.grid) {
        return Err(Error::Shape(format!(
            "expected {} cosine coefficients, got {}",
            cosine_len(problem.grid),
            coeffs0.len()
        ))
        .into());
    }
    let augmented = !matches!(constraint, Constraint::FixedSpeed);
    let (mut coeffs, mut c) = (coeffs0, c0);
    let mut current = match evaluate(problem, constraint, &coeffs, c) {
        Ok(e) => e,
        Err(Error::Degeneracy { min_modulus, delta }) => {
            return Err(failure(
                FailureKind::DegenerateProfile,
                0,
                f64::NAN,
                &coeffs,
                c,
                format!("guess violates delta: min |1 + W_alpha| = {min_modulus:e} < {delta:e}"),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let mut step_norms = Vec::new();
    let converged = |e: &Eval| e.norm <= cfg.abs_tol && (e.merit <= cfg.abs_tol * std::f64::consts::SQRT_2);
    for iteration in 0..=cfg.max_iters {
        if !current.merit.is_finite() {
            return Err(failure(FailureKind::Diverged, iteration, current.norm, &coeffs, c, "non-finite residual"));
        }
        if converged(&current) {
            return Ok(Solved {
                coeffs,
                c,
                residual_norm: current.norm,
                iterations: iteration,
                step_norms,
            });
        }
        if iteration == cfg.max_iters {
            break;
        }
        let step = match newton_step(problem, constraint, &coeffs, c, &current.residual, cfg)? {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => {
                return Err(failure(
                    FailureKind::Stagnated,
                    iteration,
                    current.norm,
                    &coeffs,
                    c,
                    "singular Jacobian",
                ))
            }
        };
        let m = coeffs.len();
        let step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        let x_norm = (coeffs.iter().map(|v| v * v).sum::<f64>() + if augmented { c * c } else { 0.0 }).sqrt();
        if step_norm <= cfg.rel_tol * (1.0 + x_norm) {
            return Err(failure(
                FailureKind::Stagnated,
                iteration,
                current.norm,
                &coeffs,
                c,
                "Newton step below rel_tol without convergence",
            ));
        }
        let mut lambda = cfg.damping;
        let mut saw_degenerate = false;
        let mut accepted = None;
        while lambda >= MIN_LAMBDA {
            let trial: Vec<f64> = coeffs.iter().zip(&step).map(|(a, d)| a + lambda * d).collect();
            let trial_c = if augmented { c + lambda * step[m] } else { c };
            match evaluate(problem, constraint, &trial, trial_c) {
                Ok(e) if e.merit.is_finite() && e.merit <= (1.0 - 1e-4 * lambda) * current.merit => {
                    accepted = Some((trial, trial_c, e));
                    break;
                }
                Ok(_) => {}
                Err(Error::Degeneracy { .. }) => saw_degenerate = true,
                Err(e) => return Err(e.into()),
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((trial, trial_c, e)) => {
                step_norms.push(lambda * step_norm);
                coeffs = trial;
                c = trial_c;
                current = e;
                if crest_bound(&coeffs) > BLOWUP && cosine_field(problem.grid, &coeffs).sup_norm() > BLOWUP {
                    return Err(failure(FailureKind::Diverged, iteration + 1, current.norm, &coeffs, c, "iterate blew up"));
                }
            }
            None => {
                let kind = if !step_norm.is_finite() || step_norm > DIVERGENCE_FACTOR * (1.0 + x_norm) {
                    FailureKind::Diverged
                } else if saw_degenerate {
                    FailureKind::DegenerateProfile
                } else {
                    FailureKind::Stagnated
                };
                return Err(failure(kind, iteration, current.norm, &coeffs, c, "line search failed"));
            }
        }
    }
    Err(failure(
        FailureKind::Stagnated,
        cfg.max_iters,
        current.norm,
        &coeffs,
        c,
        "iteration cap reached",
    ))
}

/// A converged (or stored) even travelling wave with diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub kind: ResidualKind,
    pub grid: PeriodicGrid,
    /// `c` is the speed of `kind`'s residual.
    pub params: WaveParameters,
    /// Cosine coefficients of the solver unknown.
    pub coeffs: Vec<f64>,
    pub residual_norm: f64,
    /// `sup |Im W|`, the elevation about the mean level.
    pub amplitude: f64,
    pub overhang: bool,
    pub certificate: Option<CertificateReport>,
    pub iterations: usize,
}

impl BranchPoint {
    /// Builds a point from coefficients, re-evaluating every diagnostic.
    pub fn evaluate(
        kind: ResidualKind,
        grid: PeriodicGrid,
        params: WaveParameters,
        coeffs: Vec<f64>,
        delta: f64,
        iterations: usize,
    ) -> Result<Self> {
        let problem = Problem::new(kind, grid, params, delta)?;
        let residual_norm = norm_l2(&problem.residual(&coeffs, params.c())?);
        let mut point = Self {
            kind,
            grid,
            params,
            coeffs,
            residual_norm,
            amplitude: 0.0,
            overhang: false,
            certificate: None,
            iterations,
        };
        let profile = point.steady_profile()?;
        point.amplitude = surface_amplitude(&profile);
        point.overhang = has_overhang(&profile);
        point.certificate = match point.sinh_form()? {
            Some((u, p)) => Some(nonexistence_certificate(&u, &p)?),
            None => None,
        };
        Ok(point)
    }

    /// The pure-capillary unknown `u` with its sinh-equation parameters, the
    /// input of the certificate; `None` with gravity, without surface tension
    /// or when `1 + W_alpha` has no zero-winding logarithm.
    pub fn sinh_form(&self) -> Result<Option<(RealField, WaveParameters)>> {
        let params = self.params;
        if params.g() != 0.0 || params.sigma() <= 0.0 {
            return Ok(None);
        }
        Ok(match self.kind {
            ResidualKind::Sinh => Some((self.field(), params)),
            ResidualKind::Full => log_reduce(&self.steady_profile()?)
                .ok()
                .map(|log| (log.u, params.with_speed(sinh_equation_speed(params.c())))),
        })
    }

    /// The solver unknown on the grid.
    pub fn field(&self) -> RealField {
        cosine_field(self.grid, &self.coeffs)
    }

    pub fn crest(&self) -> f64 {
        crest(&self.coeffs)
    }

    /// `W_alpha`; for the sinh kind, `exp(U - i T_h U) - 1`.
    pub fn steady_profile(&self) -> Result<SteadyProfile> {
        let h = self.params.h();
        match self.kind {
            ResidualKind::Full => SteadyProfile::from_re_w_alpha(&self.field(), h, f64::MIN_POSITIVE),
            ResidualKind::Sinh => LogProfile::from_u(&self.field(), h)?.to_steady_profile(f64::MIN_POSITIVE),
        }
    }

    /// Recomputes `||R||_2` from the stored coefficients.
    pub fn replay_residual_norm(&self, delta: f64) -> Result<f64> {
        let problem = Problem::new(self.kind, self.grid, self.params, delta)?;
        Ok(norm_l2(&problem.residual(&self.coeffs, self.params.c())?))
    }

    pub fn to_record(&self) -> Result<BranchPointRecord> {
        let mut profile = ProfileRecord::new(&self.steady_profile()?, &self.params);
        profile.residual_kind = Some(self.kind);
        profile.solver_coeffs = Some(self.coeffs.clone());
        Ok(BranchPointRecord {
            profile,
            residual_norm: self.residual_norm,
            amplitude: self.amplitude,
            overhang: self.overhang,
            certificate: self.certificate.clone(),
            iterations: self.iterations,
        })
    }

    pub fn from_record(record: &BranchPointRecord) -> Result<Self> {
        let p = &record.profile;
        let (kind, coeffs) = match (&p.residual_kind, &p.solver_coeffs) {
            (Some(kind), Some(coeffs)) => (*kind, coeffs.clone()),
            _ => return Err(Error::Shape("branch point lacks solver coefficients".into())),
        };
        if coeffs.len() != cosine_len(p.grid) {
            return Err(Error::Shape("solver coefficient count does not match grid".into()));
        }
        Ok(Self {
            kind,
            grid: p.grid,
            params: p.params,
            coeffs,
            residual_norm: record.residual_norm,
            amplitude: record.amplitude,
            overhang: record.overhang,
            certificate: record.certificate.clone(),
            iterations: record.iterations,
        })
    }
}

/// One line of a branch JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPointRecord {
    #[serde(flatten)]
    pub profile: ProfileRecord,
    pub residual_norm: f64,
    pub amplitude: f64,
    pub overhang: bool,
    pub certificate: Option<CertificateReport>,
    pub iterations: usize,
}

fn finish(problem: &Problem, solved: Solved) -> std::result::Result<BranchPoint, SolveError> {
    let point = BranchPoint::evaluate(
        problem.kind,
        problem.grid,
        problem.params.with_speed(solved.c),
        solved.coeffs,
        problem.delta,
        solved.iterations,
    )?;
    Ok(point)
}

/// Newton at fixed speed from an arbitrary guess (its even part is used).
pub fn newton_solve(
    kind: ResidualKind,
    guess: &RealField,
    params: &WaveParameters,
    cfg: &NewtonConfig,
) -> std::result::Result<BranchPoint, SolveError> {
    newton_solve_traced(kind, guess, params, cfg).map(|(p, _)| p)
}

/// As [`newton_solve`], also returning the accepted step lengths.
pub fn newton_solve_traced(
    kind: ResidualKind,
    guess: &RealField,
    params: &WaveParameters,
    cfg: &NewtonConfig,
) -> std::result::Result<(BranchPoint, Vec<f64>), SolveError> {
    let problem = Problem::new(kind, guess.grid(), *params, cfg.delta)?;
    let solved = solve(&problem, &Constraint::FixedSpeed, cosine_coeffs(guess), params.c(), cfg)?;
    let steps = solved.step_norms.clone();
    Ok((finish(&problem, solved)?, steps))
}

/// Newton with the speed free and the crest value `u(0)` pinned.
pub fn newton_solve_fixed_crest(
    kind: ResidualKind,
    guess: &RealField,
    params: &WaveParameters,
    crest_value: f64,
    cfg: &NewtonConfig,
) -> std::result::Result<BranchPoint, SolveError> {
    let problem = Problem::new(kind, guess.grid(), *params, cfg.delta)?;
    let constraint = Constraint::Linear {
        coeff_weights: crest_weights(guess.grid()),
        speed_weight: 0.0,
        target: crest_value,
    };
    let solved = solve(&problem, &constraint, cosine_coeffs(guess), params.c(), cfg)?;
    finish(&problem, solved)
}

/// Linear seed `a cos(k alpha)` for `Re W_alpha` with `c = sqrt(c^2(k))` from
/// the dispersion relation (full-residual speed).
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionSeed {
    pub field: RealField,
    pub params: WaveParameters,
    pub k: f64,
    pub amplitude: f64,
}

impl DispersionSeed {
    /// The same seed for the sinh residual: `U ~ Re W_alpha` to first order and
    /// `c_sinh = c / sqrt 2`.
    pub fn for_sinh(&self) -> (RealField, WaveParameters) {
        (
            self.field.clone(),
            self.params.with_speed(sinh_equation_speed(self.params.c())),
        )
    }
}

pub fn seed_from_dispersion(
    grid: PeriodicGrid,
    k: f64,
    a: f64,
    params: &WaveParameters,
) -> Result<DispersionSeed> {
    let m = grid
        .mode_of_wavenumber(k)
        .filter(|&m| m > 0 && m < grid.n_points() / 2)
        .ok_or_else(|| Error::Parameter(format!("k = {k} is not a resolved grid wavenumber")))?;
    let _ = m;
    if !a.is_finite() {
        return Err(Error::Parameter(format!("amplitude must be finite, got {a}")));
    }
    let c2 = dispersion_speed(k, params)?;
    Ok(DispersionSeed {
        field: RealField::from_fn(grid, |x| a * (k * x).cos()),
        params: params.with_speed(c2.sqrt()),
        k,
        amplitude: a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> PeriodicGrid {
        PeriodicGrid::new(n, l).unwrap()
    }

    #[test]
    fn cosine_roundtrip() {
        let g = grid(16, 3.0);
        let coeffs: Vec<f64> = (0..9).map(|m| 0.1 * m as f64 - 0.3).collect();
        let u = cosine_field(g, &coeffs);
        let back = cosine_coeffs(&u);
        for (a, b) in coeffs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((crest(&coeffs) - u.samples()[0]).abs() < 1e-14);
        assert!((&u - &u.reflect()).sup_norm() < 1e-15);
    }

    #[test]
    fn zero_guess_is_immediate() {
        let g = grid(32, 2.0 * PI);
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.4).unwrap();
        let cfg = NewtonConfig::default();
        for kind in [ResidualKind::Sinh, ResidualKind::Full] {
            let p = newton_solve(kind, &RealField::zeros(g), &params, &cfg).unwrap();
            assert!(p.iterations <= 1 && p.residual_norm == 0.0);
            assert_eq!(p.certificate.unwrap().verdict, crate::certificate::Verdict::Trivial);
        }
    }

    #[test]
    fn degenerate_guess() {
        let g = grid(32, 2.0 * PI);
        let params = WaveParameters::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let guess = RealField::constant(g, -0.995);
        match newton_solve(ResidualKind::Full, &guess, &params, &NewtonConfig::default()) {
            Err(SolveError::Failed(f)) => assert_eq!(f.kind, FailureKind::DegenerateProfile),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn seed_examples() {
        let g = grid(64, 2.0 * PI);
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let s = seed_from_dispersion(g, 1.0, 1e-3, &params).unwrap();
        assert!((s.params.c().powi(2) - 1f64.tanh()).abs() < 1e-15);
        let res = |a: f64| {
            let s = seed_from_dispersion(g, 1.0, a, &params).unwrap();
            let profile = SteadyProfile::from_re_w_alpha(&s.field, 1.0, DEFAULT_DELTA).unwrap();
            norm_l2(&residual_full(&profile, &s.params).unwrap())
        };
        let (r1, r2) = (res(1e-3), res(1e-4));
        assert!(r1 < 1e-6 && (r1 / r2 - 100.0).abs() < 1.0, "{r1} {r2}");
        assert!(seed_from_dispersion(g, 1.5, 1e-3, &params).is_err());
        assert!(seed_from_dispersion(g, 1.0, 0.0, &params).unwrap().field.is_zero());
    }

    #[test]
    fn periodic_capillary_wave_quadratic_tail() {
        let g = grid(64, 2.0 * PI);
        let base = WaveParameters::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let seed = seed_from_dispersion(g, 1.0, 0.05, &base).unwrap();
        let (u, params) = seed.for_sinh();
        let cfg = NewtonConfig::default();
        let point = newton_solve_fixed_crest(ResidualKind::Sinh, &u, &params, 0.05, &cfg).unwrap();
        assert!(point.residual_norm <= cfg.abs_tol);
        assert!((point.crest() - 0.05).abs() < 1e-12);
        // Nonlinear speed shift relative to linear theory.
        assert!((point.params.c() - params.c()).abs() > 1e-6);

        // Fixed speed from a perturbed guess: quadratic convergence.
        let guess = &point.field() + &RealField::from_fn(g, |x| 0.01 * (2.0 * x).cos());
        let (again, steps) = newton_solve_traced(ResidualKind::Sinh, &guess, &point.params, &cfg).unwrap();
        assert!((&again.field() - &point.field()).sup_norm() < 1e-9);
        let n = steps.len();
        assert!(n >= 3, "{steps:?}");
        assert!(steps[n - 1] <= 100.0 * steps[n - 2].powi(2), "{steps:?}");
    }

    #[test]
    fn gmres_matches_dense() {
        let g = grid(64, 2.0 * PI);
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let seed = seed_from_dispersion(g, 1.0, 0.05, &params).unwrap();
        let (u, params) = seed.for_sinh();
        let dense = newton_solve_fixed_crest(ResidualKind::Sinh, &u, &params, 0.05, &NewtonConfig::default()).unwrap();
        let cfg = NewtonConfig {
            linear_solver: LinearSolver::Iterative,
            ..Default::default()
        };
        let iter = newton_solve_fixed_crest(ResidualKind::Sinh, &u, &params, 0.05, &cfg).unwrap();
        assert!((dense.params.c() - iter.params.c()).abs() < 1e-10);

        let full_params = WaveParameters::new(1.0, 0.5, 1.0, 0.0).unwrap();
        let seed = seed_from_dispersion(g, 2.0, 0.02, &full_params).unwrap();
        let a = newton_solve_fixed_crest(ResidualKind::Full, &seed.field, &seed.params, 0.02, &NewtonConfig::default())
            .unwrap();
        let b = newton_solve_fixed_crest(ResidualKind::Full, &seed.field, &seed.params, 0.02, &cfg).unwrap();
        assert!((a.params.c() - b.params.c()).abs() < 1e-10);
    }

    #[test]
    fn record_replay() {
        let g = grid(32, 2.0 * PI);
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.0).unwrap();
        let seed = seed_from_dispersion(g, 1.0, 0.1, &params).unwrap();
        let (u, params) = seed.for_sinh();
        let p = newton_solve_fixed_crest(ResidualKind::Sinh, &u, &params, 0.1, &NewtonConfig::default()).unwrap();
        let text = serde_json::to_string(&p.to_record().unwrap()).unwrap();
        let back = BranchPoint::from_record(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.replay_residual_norm(DEFAULT_DELTA).unwrap(), p.residual_norm);
    }
}
