//! Non-existence diagnostics for pure-capillary solitary waves.
//!
//! For `g = 0` the log-reduced profile `u` solves `R(u) = sigma T_h u_a - 2c^2 sinh u = 0`.
//! Pairing `R` with a cutoff `chi_r u_a` and letting `r` grow yields
//!
//! ```text
//! 2c^2 ∫(cosh u - 1) + sigma (h/2) ∫ xi^2 sech^2(h xi) |û|^2 = 0,
//! ```
//!
//! whose two terms are non-negative, so `u = 0`. Here the cutoff identities
//! are evaluated on the torus, with `chi_r` periodized and its seam at `±L/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{
    self, besov_norm, derivative, integrate, multiply_even, norm_l2, tilbert, upsample,
    PeriodicGrid, RealField,
};
use crate::steady::{residual_sinh, WaveParameters};

/// Relative size of `u` (or `u_a`) on the outer quarter of the torus above
/// which the periodized cutoff is considered to see the seam.
pub const SEAM_TOLERANCE: f64 = 1e-8;

/// Default factor by which the energy sum must beat the residual bound.
pub const DEFAULT_MARGIN: f64 = 10.0;

/// `sup |u|` at or below which a profile is reported as trivial.
pub const TRIVIAL_THRESHOLD: f64 = 1e-8;

/// Quintic smoothstep cutoff `chi`, rescaled to `chi_r(a) = chi(a / r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffFamily {
    pub r: f64,
}

impl CutoffFamily {
    /// Lower bound of `chi'` on `(-1/2, 1/2)`.
    pub const KAPPA0: f64 = 0.52734375;

    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Parameter(format!("cutoff scale must be positive, got {r}")));
        }
        Ok(Self { r })
    }

    /// Rejects scales whose transition would not fit well inside the torus.
    pub fn check_grid(&self, grid: PeriodicGrid) -> Result<()> {
        if self.r > grid.length() / 8.0 * (1.0 + 1e-12) {
            return Err(Error::Parameter(format!(
                "cutoff scale {} exceeds L/8 = {}",
                self.r,
                grid.length() / 8.0
            )));
        }
        Ok(())
    }

    pub fn chi(x: f64) -> f64 {
        if x <= -1.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            let t = 0.5 * (x + 1.0);
            t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
        }
    }

    pub fn chi_prime(x: f64) -> f64 {
        if x.abs() >= 1.0 {
            0.0
        } else {
            let t = 0.5 * (x + 1.0);
            15.0 * t * t * (1.0 - t) * (1.0 - t)
        }
    }

    pub fn chi_second(x: f64) -> f64 {
        if x.abs() >= 1.0 {
            0.0
        } else {
            let t = 0.5 * (x + 1.0);
            15.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
        }
    }

    /// Periodized `chi_r` sampled on `grid`.
    pub fn sample(&self, grid: PeriodicGrid) -> RealField {
        RealField::from_centered_fn(grid, |a| Self::chi(a / self.r))
    }

    /// `chi'(a / r)` (not divided by `r`) sampled on `grid`.
    pub fn sample_prime(&self, grid: PeriodicGrid) -> RealField {
        RealField::from_centered_fn(grid, |a| Self::chi_prime(a / self.r))
    }
}

/// Whether `u` or `u_a` carries relative mass on the outer quarter `|a| >= 3L/8`.
pub fn seam_violation(u: &RealField) -> bool {
    let grid = u.grid();
    let scale = u.sup_norm();
    if scale == 0.0 {
        return false;
    }
    let ua = derivative(u);
    let ua_scale = ua.sup_norm().max(f64::MIN_POSITIVE);
    let edge = 0.375 * grid.length();
    (0..grid.n_points()).any(|j| {
        grid.centered_node(j).abs() >= edge
            && (u.samples()[j].abs() > SEAM_TOLERANCE * scale
                || ua.samples()[j].abs() > SEAM_TOLERANCE * ua_scale)
    })
}

/// `2c^2 ∫(cosh u - 1)`, with `cosh u - 1` evaluated as `2 sinh^2(u/2)`.
pub fn cosh_energy(u: &RealField, c: f64) -> Result<f64> {
    let mut sum = 0.0;
    for &v in u.samples() {
        let s = (0.5 * v).sinh();
        let term = 2.0 * s * s;
        if !term.is_finite() {
            return Err(Error::Magnitude(format!("cosh overflows at u = {v}")));
        }
        sum += term;
    }
    let out = 2.0 * c * c * sum * u.grid().spacing();
    if !out.is_finite() {
        return Err(Error::Magnitude("cosh energy overflows".into()));
    }
    Ok(out)
}

/// `(h/2) ∫ xi^2 sech^2(h xi) |û|^2`, summed over the grid spectrum.
pub fn sech_energy(u: &RealField, h: f64) -> f64 {
    let grid = u.grid();
    let spec = u.spectrum();
    let sum: f64 = spec
        .coeffs()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let xi = grid.wavenumber(j);
            let sech = 1.0 / (h * xi).cosh();
            xi * xi * sech * sech * c.norm_sqr()
        })
        .sum();
    0.5 * h * grid.length() * sum
}

/// Physical-space evaluation `(h/2) ∫ u M u` with `M` the multiplier
/// `xi^2 sech^2(h xi)`; equals [`sech_energy`] by Plancherel.
pub fn sech_energy_physical(u: &RealField, h: f64) -> f64 {
    let mu = multiply_even(u, |xi| {
        let s = 1.0 / (h * xi).cosh();
        xi * xi * s * s
    });
    0.5 * h * spectral::inner(u, &mu)
}

/// `|tanh(h xi) - h xi| / xi^2` and its bound `h^3 |xi| / 3`.
pub fn multiplier_gap(xi: f64, h: f64) -> (f64, f64) {
    if xi == 0.0 {
        return (0.0, 0.0);
    }
    (((h * xi).tanh() - h * xi).abs() / (xi * xi), h.powi(3) * xi.abs() / 3.0)
}

fn without_nyquist(u: &RealField) -> RealField {
    let grid = u.grid();
    let mut spec = u.spectrum();
    let mut coeffs = spec.coeffs().to_vec();
    coeffs[grid.nyquist_index()] = num_complex::Complex64::new(0.0, 0.0);
    spec = spectral::SpectralField::new(grid, coeffs).expect("same grid");
    spec.to_real()
}

/// Both sides of the cutoff commutator identity and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub defect: f64,
    pub seam_violation: bool,
}

/// `|-∫ chi_r u_a T u_a - (1/2) ∫ (u_a^2 - (T u_a)^2) T chi_r|`.
///
/// Products and pairings are taken on the doubled grid, which makes the
/// identity exact up to rounding for any band-limited `u`; the seam flag
/// reports when the periodized cutoff is not a faithful stand-in for `chi_r`.
pub fn commutator_identity_defect(
    u: &RealField,
    cut: &CutoffFamily,
    h: f64,
) -> Result<IdentityCheck> {
    let grid = u.grid();
    cut.check_grid(grid)?;
    let ua = derivative(&without_nyquist(u));
    let chi = without_nyquist(&cut.sample(grid));
    let f = upsample(&ua, 2);
    let g = upsample(&tilbert(&ua, h)?, 2);
    let chi_f = upsample(&chi, 2);
    let lhs = -integrate(&chi_f.pointwise_mul(&f.pointwise_mul(&g)));
    let d = f.zip_map(&g, |a, b| a * a - b * b);
    let rhs = 0.5 * integrate(&d.pointwise_mul(&tilbert(&chi_f, h)?));
    Ok(IdentityCheck {
        lhs,
        rhs,
        defect: (lhs - rhs).abs(),
        seam_violation: seam_violation(u),
    })
}

/// The truncated energy identity for a cutoff scale `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyIdentity {
    /// `2c^2 ∫ chi'(a/r)(cosh u - 1) + sigma (h/2) ∫ D chi'(a/r)`.
    pub lhs: f64,
    /// `sigma (r/2) ∫ D (T_h + h d/da) chi_r`.
    pub rhs: f64,
    /// `r ∫ chi_r u_a R(u)`, the amount by which `lhs - rhs` fails to vanish.
    pub residual_pairing: f64,
    pub seam_violation: bool,
}

impl EnergyIdentity {
    /// `|lhs - rhs - residual_pairing|`.
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs - self.residual_pairing).abs()
    }

    pub fn scale(&self) -> f64 {
        self.lhs.abs() + self.rhs.abs() + self.residual_pairing.abs()
    }
}

/// Evaluates the identity with `D = u_a^2 - (T_h u_a)^2`.
///
/// The periodized cutoff is sampled on the doubled grid and both its
/// derivative and `T_h chi_r` are taken spectrally there.
pub fn truncated_energy_identity(
    u: &RealField,
    cut: &CutoffFamily,
    params: &WaveParameters,
) -> Result<EnergyIdentity> {
    let grid = u.grid();
    cut.check_grid(grid)?;
    let (h, sigma, c) = (params.h(), params.sigma(), params.c());
    let r = cut.r;
    let ua = derivative(u);
    let fu = upsample(u, 2);
    let f = upsample(&ua, 2);
    let g = upsample(&tilbert(&ua, h)?, 2);
    let fine = f.grid();
    let d = f.zip_map(&g, |a, b| a * a - b * b);
    let chi = cut.sample(fine);
    // chi'(a/r) = r d/da chi_r, differentiated spectrally so that the
    // integrations by parts behind the identity hold on the grid.
    let chi_p = derivative(&chi).scale(r);

    let cosh_weighted = 2.0
        * c
        * c
        * integrate(&fu.zip_map(&chi_p, |v, w| {
            let s = (0.5 * v).sinh();
            2.0 * s * s * w
        }));
    if !cosh_weighted.is_finite() {
        return Err(Error::Magnitude("cosh energy overflows".into()));
    }
    let lhs = cosh_weighted + 0.5 * sigma * h * integrate(&d.pointwise_mul(&chi_p));

    let t_chi = tilbert(&chi, h)?;
    let corrected = t_chi.zip_map(&chi_p, |t, p| t + h * p / r);
    let rhs = 0.5 * sigma * r * integrate(&d.pointwise_mul(&corrected));

    let c2 = c * c;
    let res = g.zip_map(&fu, |t, v| sigma * t - 2.0 * c2 * v.sinh());
    let residual_pairing = r * integrate(&chi.pointwise_mul(&f.pointwise_mul(&res)));
    Ok(EnergyIdentity {
        lhs,
        rhs,
        residual_pairing,
        seam_violation: seam_violation(u),
    })
}

/// Least-squares fit of `log|rhs|` against `log r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayScan {
    pub radii: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `None` when every `rhs` vanishes exactly (the trivial profile).
    pub slope: Option<f64>,
    /// Root-mean-square misfit of the log-log line.
    pub fit_residual: f64,
}

pub fn decay_scan(u: &RealField, radii: &[f64], params: &WaveParameters) -> Result<DecayScan> {
    if radii.len() < 3 {
        return Err(Error::Usage(format!(
            "decay scan needs at least 3 radii, got {}",
            radii.len()
        )));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("radii must be strictly increasing".into()));
    }
    let rhs = radii
        .iter()
        .map(|&r| Ok(truncated_energy_identity(u, &CutoffFamily::new(r)?, params)?.rhs))
        .collect::<Result<Vec<f64>>>()?;
    let points: Vec<(f64, f64)> = radii
        .iter()
        .zip(&rhs)
        .filter(|(_, y)| **y != 0.0)
        .map(|(r, y)| (r.ln(), y.abs().ln()))
        .collect();
    if points.is_empty() {
        return Ok(DecayScan {
            radii: radii.to_vec(),
            rhs,
            slope: None,
            fit_residual: 0.0,
        });
    }
    if points.len() < 2 {
        return Err(Error::Usage("decay scan has fewer than 2 nonzero samples".into()));
    }
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let fit_residual = (points
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(DecayScan {
        radii: radii.to_vec(),
        rhs,
        slope: Some(slope),
        fit_residual,
    })
}

/// `∫ a u_a R(u)` with `a` the centered coordinate.
///
/// For decaying `u` this equals the energy sum
/// `cosh_energy + sigma * sech_energy`, so the energies of any profile are
/// bounded by `||a u_a||_2 ||R||_2`.
pub fn pohozaev_pairing(u: &RealField, params: &WaveParameters) -> f64 {
    let grid = u.grid();
    let ua = derivative(u);
    let weighted = RealField::from_centered_fn(grid, |a| a).pointwise_mul(&ua);
    let res = residual_sinh(u, params);
    spectral::inner(&weighted, &res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Trivial,
    InconsistentWithSolution,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub cosh_energy: f64,
    pub sech_energy: f64,
    pub residual_norm: f64,
    pub b32_norm: f64,
    /// `||R||_2 ||u_a||_2`, the bound the energy sum is compared with.
    pub pairing_bound: f64,
    pub verdict: Verdict,
    /// The profile does not decay towards the seam, so it is not a candidate
    /// solitary wave and the energy identity does not apply to it as a torus
    /// profile (periodic waves land here).
    pub seam_violation: bool,
}

impl CertificateReport {
    /// `cosh_energy + sigma * sech_energy`.
    pub fn energy_sum(&self, sigma: f64) -> f64 {
        self.cosh_energy + sigma * self.sech_energy
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateConfig {
    pub margin: f64,
    pub trivial_threshold: f64,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            trivial_threshold: TRIVIAL_THRESHOLD,
        }
    }
}

pub fn nonexistence_certificate(u: &RealField, params: &WaveParameters) -> Result<CertificateReport> {
    nonexistence_certificate_with(u, params, &CertificateConfig::default())
}

pub fn nonexistence_certificate_with(
    u: &RealField,
    params: &WaveParameters,
    cfg: &CertificateConfig,
) -> Result<CertificateReport> {
    if params.g() != 0.0 || params.sigma() <= 0.0 {
        return Err(Error::Usage(
            "the certificate applies to pure capillary flow (g = 0, sigma > 0)".into(),
        ));
    }
    let cosh = cosh_energy(u, params.c())?;
    let sech = sech_energy(u, params.h());
    let residual_norm = norm_l2(&residual_sinh(u, params));
    let pairing_bound = residual_norm * norm_l2(&derivative(u));
    let b32_norm = besov_norm(u, 1.5)?;
    let verdict = if u.sup_norm() <= cfg.trivial_threshold {
        Verdict::Trivial
    } else if cosh + params.sigma() * sech > cfg.margin * pairing_bound {
        Verdict::InconsistentWithSolution
    } else {
        Verdict::Inconclusive
    };
    Ok(CertificateReport {
        cosh_energy: cosh,
        sech_energy: sech,
        residual_norm,
        b32_norm,
        pairing_bound,
        verdict,
        seam_violation: seam_violation(u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> PeriodicGrid {
        PeriodicGrid::new(n, l).unwrap()
    }

    fn capillary(c: f64) -> WaveParameters {
        WaveParameters::new(0.0, 1.0, 1.0, c).unwrap()
    }

    fn bump(g: PeriodicGrid, a: f64, w: f64) -> RealField {
        RealField::from_centered_fn(g, |x| a * (-(x / w).powi(2)).exp())
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(CutoffFamily::chi(-2.0), 0.0);
        assert_eq!(CutoffFamily::chi(1.0), 1.0);
        assert!((CutoffFamily::chi(0.0) - 0.5).abs() < 1e-15);
        let kappa = (-499..500)
            .map(|j| CutoffFamily::chi_prime(j as f64 / 1000.0))
            .fold(f64::INFINITY, f64::min);
        assert!(kappa >= CutoffFamily::KAPPA0 && kappa - CutoffFamily::KAPPA0 < 2e-3);
        for x in [-0.7, -0.1, 0.3, 0.9] {
            let e = 1e-6;
            let d1 = (CutoffFamily::chi(x + e) - CutoffFamily::chi(x - e)) / (2.0 * e);
            let d2 = (CutoffFamily::chi_prime(x + e) - CutoffFamily::chi_prime(x - e)) / (2.0 * e);
            assert!((d1 - CutoffFamily::chi_prime(x)).abs() < 1e-8);
            assert!((d2 - CutoffFamily::chi_second(x)).abs() < 1e-8);
        }
        assert!(CutoffFamily::new(40.0).unwrap().check_grid(grid(64, 256.0)).is_err());
        assert!(CutoffFamily::new(0.0).is_err());
    }

    #[test]
    fn cosh_energy_examples() {
        let g = grid(64, 2.0 * PI);
        assert_eq!(cosh_energy(&RealField::zeros(g), 1.3).unwrap(), 0.0);
        let a = 1e-2;
        let c = 0.7;
        let u = RealField::from_fn(g, |x| a * x.cos());
        let e = cosh_energy(&u, c).unwrap();
        let taylor = c * c * PI * a * a;
        assert!(((e - taylor) / taylor).abs() < a * a);
        let big = RealField::constant(g, 800.0);
        assert!(matches!(cosh_energy(&big, 1.0), Err(Error::Magnitude(_))));
    }

    #[test]
    fn sech_energy_examples() {
        let l = 10.0;
        let g = grid(64, l);
        assert_eq!(sech_energy(&RealField::zeros(g), 1.0), 0.0);
        let (a, k, h) = (0.3, 2.0 * PI * 3.0 / l, 0.7);
        let u = RealField::from_fn(g, |x| a * (k * x).cos());
        let sech = 1.0 / (h * k).cosh();
        let expect = 0.5 * h * k * k * sech * sech * a * a * l / 2.0;
        assert!(((sech_energy(&u, h) - expect) / expect).abs() < 1e-13);
        let v = bump(g, 0.4, 1.5);
        let (s, p) = (sech_energy(&v, h), sech_energy_physical(&v, h));
        assert!(((s - p) / s).abs() < 1e-12);
    }

    #[test]
    fn multiplier_gap_bound() {
        let g = grid(256, 50.0);
        for h in [0.5, 1.0, 2.0] {
            for xi in g.wavenumbers() {
                let (gap, bound) = multiplier_gap(xi, h);
                assert!(gap <= bound * (1.0 + 1e-6));
            }
        }
    }

    #[test]
    fn commutator_identity_on_bump() {
        let l = 64.0;
        let g = grid(512, l);
        let u = bump(g, 0.5, 2.0);
        let cut = CutoffFamily::new(l / 16.0).unwrap();
        let check = commutator_identity_defect(&u, &cut, 1.0).unwrap();
        let scale = norm_l2(&derivative(&u)).powi(2);
        assert!(check.defect <= 1e-8 * scale, "{check:?}");
        assert!(!check.seam_violation);
        assert!(check.lhs.abs() > 1e-3 * scale);

        let zero = commutator_identity_defect(&RealField::zeros(g), &cut, 1.0).unwrap();
        assert_eq!(zero.defect, 0.0);

        let wave = RealField::from_fn(g, |x| (2.0 * PI * 4.0 * x / l).sin());
        assert!(commutator_identity_defect(&wave, &cut, 1.0).unwrap().seam_violation);
    }

    #[test]
    fn truncated_identity_bookkeeping() {
        let g = grid(1024, 128.0);
        let params = capillary(0.6);
        let u = &bump(g, 0.4, 3.0) + &RealField::from_centered_fn(g, |x| 0.1 * (-(x - 4.0).powi(2) / 2.0).exp());
        for r in [2.0, 6.0, 16.0] {
            let id = truncated_energy_identity(&u, &CutoffFamily::new(r).unwrap(), &params).unwrap();
            assert!(id.defect() <= 1e-8 * id.scale(), "r={r}: {} {id:?}", id.defect());
            assert!(id.residual_pairing.abs() > 1e-3);
        }
        let zero = truncated_energy_identity(&RealField::zeros(g), &CutoffFamily::new(4.0).unwrap(), &params)
            .unwrap();
        assert_eq!((zero.lhs, zero.rhs), (0.0, 0.0));
    }

    #[test]
    fn decay_scan_examples() {
        let g = grid(1024, 256.0);
        let params = capillary(0.5);
        let radii = [4.0, 8.0, 16.0, 32.0];
        let u = bump(g, 0.3, 2.0);
        let scan = decay_scan(&u, &radii, &params).unwrap();
        assert!(scan.slope.unwrap() <= -0.4, "{scan:?}");
        let zero = decay_scan(&RealField::zeros(g), &radii, &params).unwrap();
        assert_eq!(zero.slope, None);
        assert!(matches!(decay_scan(&u, &radii[..2], &params), Err(Error::Usage(_))));
    }

    #[test]
    fn pohozaev_identity() {
        let g = grid(1024, 128.0);
        let params = capillary(0.8);
        for (a, w) in [(0.2, 1.0), (0.5, 3.0), (1.0, 6.0)] {
            let u = bump(g, a, w);
            let e = cosh_energy(&u, 0.8).unwrap() + sech_energy(&u, 1.0);
            let p = pohozaev_pairing(&u, &params);
            assert!(((e - p) / e).abs() < 1e-9, "{e} {p}");
        }
    }

    #[test]
    fn certificate_examples() {
        let g = grid(512, 128.0);
        let params = capillary(0.5);
        let zero = nonexistence_certificate(&RealField::zeros(g), &params).unwrap();
        assert_eq!(zero.verdict, Verdict::Trivial);
        assert_eq!(
            (zero.cosh_energy, zero.sech_energy, zero.residual_norm),
            (0.0, 0.0, 0.0)
        );

        let narrow = nonexistence_certificate(&bump(g, 0.3, 1.0), &params).unwrap();
        assert!(narrow.cosh_energy > 0.0 && narrow.sech_energy > 0.0);

        let g = grid(1024, 512.0);
        let wide = nonexistence_certificate(&bump(g, 0.3, 40.0), &params).unwrap();
        assert_eq!(wide.verdict, Verdict::InconsistentWithSolution, "{wide:?}");

        let periodic = RealField::from_fn(g, |x| 0.1 * (2.0 * PI * x / 512.0).cos());
        assert!(nonexistence_certificate(&periodic, &params).unwrap().seam_violation);
        assert!(!wide.seam_violation);

        let json = serde_json::to_value(&wide).unwrap();
        assert_eq!(json["verdict"], "inconsistent-with-solution");
        let grav = WaveParameters::new(1.0, 1.0, 1.0, 0.5).unwrap();
        assert!(matches!(
            nonexistence_certificate(&bump(g, 0.3, 4.0), &grav),
            Err(Error::Usage(_))
        ));
    }
}
