//! Travelling-wave residuals in holomorphic coordinates.
//!
//! The steady problem is posed for the trace `W_alpha` (with `Q_alpha = c W_alpha`).
//! Its real residual is
//!
//! ```text
//! -(c^2/2) (W_a + conj W_a + |W_a|^2) / |1 + W_a|^2 + g Im W
//!     + Re[ i sigma / (1 + W_a) d/da ((1 + W_a) / |1 + W_a|) ]
//! ```
//!
//! For `g = 0` the substitution `1 + W_a = exp(U + iV)` turns this into
//! `exp(-U) [sigma T_h U_a - c^2 sinh U]`, so the full residual at speed `c`
//! equals `exp(-U)` times [`residual_sinh`] at speed `c / sqrt(2)`. Both
//! residuals keep their own speed parameter; [`sinh_equation_speed`] maps
//! between them.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holomorphic::{make_holomorphic, ComplexField, HolomorphicBoundaryFunction};
use crate::spectral::{
    self, antiderivative, downsample, multiply_even, norm_l2, upsample, PeriodicGrid, RealField,
    SpectralField,
};

/// Default admissibility bound `delta` for `|1 + W_alpha|`.
pub const DEFAULT_DELTA: f64 = 1e-2;

/// Gravity, surface tension, depth and wave speed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParameters", into = "RawParameters")]
pub struct WaveParameters {
    g: f64,
    sigma: f64,
    h: f64,
    c: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameters {
    g: f64,
    sigma: f64,
    h: f64,
    c: f64,
}

impl TryFrom<RawParameters> for WaveParameters {
    type Error = Error;
    fn try_from(r: RawParameters) -> Result<Self> {
        WaveParameters::new(r.g, r.sigma, r.h, r.c)
    }
}

impl From<WaveParameters> for RawParameters {
    fn from(p: WaveParameters) -> Self {
        RawParameters {
            g: p.g,
            sigma: p.sigma,
            h: p.h,
            c: p.c,
        }
    }
}

impl WaveParameters {
    pub fn new(g: f64, sigma: f64, h: f64, c: f64) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::Parameter(format!("g must be >= 0, got {g}")));
        }
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
        }
        if g == 0.0 && sigma == 0.0 {
            return Err(Error::Parameter("g and sigma cannot both vanish".into()));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Parameter(format!("depth must be positive, got {h}")));
        }
        if !c.is_finite() {
            return Err(Error::Parameter(format!("speed must be finite, got {c}")));
        }
        Ok(Self { g, sigma, h, c })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn with_speed(&self, c: f64) -> Self {
        Self { c, ..*self }
    }
}

/// Speed of the sinh equation equivalent to the full equation at speed `c`.
pub fn sinh_equation_speed(c: f64) -> f64 {
    c / SQRT_2
}

/// Inverse of [`sinh_equation_speed`].
pub fn full_equation_speed(c_sinh: f64) -> f64 {
    c_sinh * SQRT_2
}

/// The unknown `W_alpha` of the steady problem with its admissibility bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyProfile {
    w_alpha: HolomorphicBoundaryFunction,
    delta: f64,
}

impl SteadyProfile {
    /// Checks `min |1 + W_alpha| >= delta > 0`.
    pub fn new(w_alpha: HolomorphicBoundaryFunction, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Parameter(format!("delta must be positive, got {delta}")));
        }
        let min_modulus = min_modulus(&w_alpha.to_complex());
        if min_modulus < delta {
            return Err(Error::Degeneracy { min_modulus, delta });
        }
        Ok(Self { w_alpha, delta })
    }

    /// Profile whose `Re W_alpha` is `re`, completed holomorphically.
    pub fn from_re_w_alpha(re: &RealField, h: f64, delta: f64) -> Result<Self> {
        Self::new(make_holomorphic(re, h)?, delta)
    }

    pub fn flat(grid: PeriodicGrid, h: f64) -> Self {
        Self {
            w_alpha: HolomorphicBoundaryFunction::zeros(grid, h),
            delta: DEFAULT_DELTA,
        }
    }

    pub fn w_alpha(&self) -> &HolomorphicBoundaryFunction {
        &self.w_alpha
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.w_alpha.grid()
    }

    pub fn depth(&self) -> f64 {
        self.w_alpha.depth()
    }

    pub fn min_modulus(&self) -> f64 {
        min_modulus(&self.w_alpha.to_complex())
    }

    /// `J = |1 + W_alpha|^2`.
    pub fn jacobian_field(&self) -> RealField {
        let w = &self.w_alpha;
        w.re().zip_map(w.im(), |a, b| (1.0 + a).powi(2) + b * b)
    }

    /// `Im W`, the zero-mean antiderivative of `Im W_alpha`.
    pub fn im_w(&self) -> RealField {
        antiderivative(self.w_alpha.im())
    }
}

fn min_modulus(w: &ComplexField) -> f64 {
    w.re.samples()
        .iter()
        .zip(w.im.samples())
        .map(|(&a, &b)| (1.0 + a).hypot(b))
        .fold(f64::INFINITY, f64::min)
}

/// `T = log(1 + W_alpha) = U + iV` with `V = -T_h U` for holomorphic data.
#[derive(Debug, Clone, PartialEq)]
pub struct LogProfile {
    pub u: RealField,
    pub v: RealField,
    pub depth: f64,
}

impl LogProfile {
    /// Holomorphic completion `(u, -T_h u)`.
    pub fn from_u(u: &RealField, h: f64) -> Result<Self> {
        let hol = make_holomorphic(u, h)?;
        Ok(Self {
            u: hol.re().clone(),
            v: hol.im().clone(),
            depth: h,
        })
    }

    /// `||v + T_h u||_2`.
    pub fn holomorphy_defect(&self) -> Result<f64> {
        crate::holomorphic::holomorphy_defect(
            &ComplexField {
                re: self.u.clone(),
                im: self.v.clone(),
            },
            self.depth,
        )
    }

    /// `W_alpha = exp(U + iV) - 1`, sampled pointwise.
    pub fn exponentiate(&self) -> ComplexField {
        let grid = self.u.grid();
        let (re, im): (Vec<f64>, Vec<f64>) = self
            .u
            .samples()
            .iter()
            .zip(self.v.samples())
            .map(|(&u, &v)| {
                let z = Complex64::new(u, v).exp() - 1.0;
                (z.re, z.im)
            })
            .unzip();
        ComplexField {
            re: RealField::from_vec_unchecked(grid, re),
            im: RealField::from_vec_unchecked(grid, im),
        }
    }

    /// Steady profile with `1 + W_alpha = exp(U - i T_h U)`.
    ///
    /// The imaginary part is re-derived from the real part so that the result
    /// is holomorphic on the grid; for resolved `U` this differs from the
    /// pointwise exponential only by aliasing error.
    pub fn to_steady_profile(&self, delta: f64) -> Result<SteadyProfile> {
        let w = self.exponentiate();
        SteadyProfile::from_re_w_alpha(&w.re, self.depth, delta)
    }
}

/// Holomorphic pair `(W, Q)` of the dynamic system, each a periodic part plus
/// a linear drift `slope * alpha` (the real mean of the derivative).
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPair {
    pub w: HolomorphicBoundaryFunction,
    pub q: HolomorphicBoundaryFunction,
    pub w_slope: f64,
    pub q_slope: f64,
    pub delta: f64,
}

impl DynamicPair {
    /// Travelling pair with `Q = c W` built from a steady profile.
    pub fn from_profile(profile: &SteadyProfile, c: f64) -> Result<Self> {
        let wa = profile.w_alpha();
        let h = profile.depth();
        let w = make_holomorphic(&antiderivative(wa.re()), h)?;
        let slope = wa.re().mean();
        Ok(Self {
            q: w.combine(c, &w, 0.0),
            w,
            w_slope: slope,
            q_slope: c * slope,
            delta: profile.delta(),
        })
    }

    pub fn zeros(grid: PeriodicGrid, h: f64) -> Self {
        Self {
            w: HolomorphicBoundaryFunction::zeros(grid, h),
            q: HolomorphicBoundaryFunction::zeros(grid, h),
            w_slope: 0.0,
            q_slope: 0.0,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn w_alpha(&self) -> ComplexField {
        let d = self.w.derivative().to_complex();
        ComplexField {
            re: d.re.map(|v| v + self.w_slope),
            im: d.im,
        }
    }

    pub fn q_alpha(&self) -> ComplexField {
        let d = self.q.derivative().to_complex();
        ComplexField {
            re: d.re.map(|v| v + self.q_slope),
            im: d.im,
        }
    }

    fn check_delta(&self, w_alpha: &ComplexField) -> Result<()> {
        let min = min_modulus(w_alpha);
        if min < self.delta {
            Err(Error::Degeneracy {
                min_modulus: min,
                delta: self.delta,
            })
        } else {
            Ok(())
        }
    }
}

fn complex_pointwise(
    a: &ComplexField,
    b: &ComplexField,
    f: impl Fn(Complex64, Complex64) -> Complex64,
) -> ComplexField {
    let grid = a.grid();
    let values: Vec<Complex64> = a
        .values()
        .into_iter()
        .zip(b.values())
        .map(|(x, y)| f(x, y))
        .collect();
    let (re, im): (Vec<f64>, Vec<f64>) = values.iter().map(|z| (z.re, z.im)).unzip();
    ComplexField {
        re: RealField::from_vec_unchecked(grid, re),
        im: RealField::from_vec_unchecked(grid, im),
    }
}

fn upsample_complex(u: &ComplexField) -> ComplexField {
    ComplexField {
        re: upsample(&u.re, 2),
        im: upsample(&u.im, 2),
    }
}

fn downsample_complex(u: &ComplexField, grid: PeriodicGrid) -> ComplexField {
    ComplexField {
        re: downsample(&u.re, grid),
        im: downsample(&u.im, grid),
    }
}

/// `F = P_h[(Q_a - conj Q_a) / J]`.
pub fn compute_f(pair: &DynamicPair, params: &WaveParameters) -> Result<HolomorphicBoundaryFunction> {
    let wa = pair.w_alpha();
    pair.check_delta(&wa)?;
    let qa = pair.q_alpha();
    let grid = wa.grid();
    let fine_w = upsample_complex(&wa);
    let fine_q = upsample_complex(&qa);
    let quotient = complex_pointwise(&fine_q, &fine_w, |q, w| {
        Complex64::new(0.0, 2.0 * q.im) / (1.0 + w).norm_sqr()
    });
    crate::holomorphic::project_ph(&downsample_complex(&quotient, grid), params.h())
}

/// Real parts of the two travelling-wave equations obtained by substituting
/// `(W, Q)(alpha - ct)` into the holomorphic system.
pub fn traveling_system_residual(
    pair: &DynamicPair,
    params: &WaveParameters,
) -> Result<(RealField, RealField)> {
    let grid = pair.w.grid();
    let c = params.c();
    let f = compute_f(pair, params)?.to_complex();
    let wa = pair.w_alpha();
    let qa = pair.q_alpha();
    let waa = pair.w.derivative().derivative().to_complex();

    let (ff, fw, fq, fwaa) = (
        upsample_complex(&f),
        upsample_complex(&wa),
        upsample_complex(&qa),
        upsample_complex(&waa),
    );
    let fine = ff.grid();
    let values_f = ff.values();
    let values_w = fw.values();
    let values_q = fq.values();
    let values_waa = fwaa.values();
    let mut first = Vec::with_capacity(fine.n_points());
    let mut second = Vec::with_capacity(fine.n_points());
    for j in 0..fine.n_points() {
        let (fj, w, q, waa) = (values_f[j], values_w[j], values_q[j], values_waa[j]);
        let one_w = 1.0 + w;
        let jac = one_w.norm_sqr();
        first.push((-c * w + fj * one_w).re);
        let cap = waa / (jac.sqrt() * one_w);
        let r = (-c * q + fj * q).re + 0.5 * q.norm_sqr() / jac - params.sigma() * cap.im;
        second.push(r);
    }
    let first = downsample(&RealField::from_vec_unchecked(fine, first), grid);
    let mut second = downsample(&RealField::from_vec_unchecked(fine, second), grid);
    // Re(-g T_h[W]) = g Im W for holomorphic W; the drift alpha * slope is real
    // and contributes nothing to Im W.
    second = &second + &pair.w.im().scale(params.g());
    Ok((first, second))
}

/// `||Q_alpha - c W_alpha||_2`.
pub fn check_qw_relation(pair: &DynamicPair, c: f64) -> f64 {
    pair.q_alpha().sub(&pair.w_alpha().scale(c)).norm_l2()
}

/// Pointwise pieces of the full residual on the refined grid.
struct FineProfile {
    fine: PeriodicGrid,
    w: Vec<Complex64>,
    /// `(1 + w) / |1 + w|`.
    phase: Vec<Complex64>,
    /// Spectral derivative of `phase` on the fine grid.
    phase_alpha: Vec<Complex64>,
}

impl FineProfile {
    fn new(profile: &SteadyProfile) -> Self {
        let fw = upsample_complex(&profile.w_alpha.to_complex());
        let fine = fw.grid();
        let w = fw.values();
        let phase: Vec<Complex64> = w.iter().map(|&z| (1.0 + z) / (1.0 + z).norm()).collect();
        let phase_alpha = complex_derivative(fine, &phase);
        Self {
            fine,
            w,
            phase,
            phase_alpha,
        }
    }
}

fn complex_derivative(grid: PeriodicGrid, values: &[Complex64]) -> Vec<Complex64> {
    let re = RealField::from_vec_unchecked(grid, values.iter().map(|z| z.re).collect());
    let im = RealField::from_vec_unchecked(grid, values.iter().map(|z| z.im).collect());
    let (dre, dim) = (spectral::derivative(&re), spectral::derivative(&im));
    dre.samples()
        .iter()
        .zip(dim.samples())
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect()
}

/// Real residual of the steady equation for `W_alpha`.
pub fn residual_full(profile: &SteadyProfile, params: &WaveParameters) -> Result<RealField> {
    let grid = profile.grid();
    check_profile(profile)?;
    let fp = FineProfile::new(profile);
    let c2 = params.c() * params.c();
    let sigma = params.sigma();
    let samples: Vec<f64> = (0..fp.fine.n_points())
        .map(|j| {
            let one_w = 1.0 + fp.w[j];
            let jac = one_w.norm_sqr();
            let kinetic = -0.5 * c2 * (1.0 - 1.0 / jac);
            let cap = -sigma * (fp.phase_alpha[j] * one_w.conj()).im / jac;
            kinetic + cap
        })
        .collect();
    let mut out = downsample(&RealField::from_vec_unchecked(fp.fine, samples), grid);
    if params.g() != 0.0 {
        out = &out + &profile.im_w().scale(params.g());
    }
    Ok(out)
}

fn check_profile(profile: &SteadyProfile) -> Result<()> {
    let min = profile.min_modulus();
    if min < profile.delta {
        Err(Error::Degeneracy {
            min_modulus: min,
            delta: profile.delta,
        })
    } else {
        Ok(())
    }
}

/// Derivative of [`residual_full`] with respect to `Re W_alpha` in direction
/// `d_re` (the imaginary direction follows by holomorphy).
pub fn full_jacobian_apply(
    profile: &SteadyProfile,
    params: &WaveParameters,
    d_re: &RealField,
) -> Result<RealField> {
    let fp = FineProfile::new(profile);
    full_jacobian_apply_with(&fp, profile, params, d_re)
}

fn full_jacobian_apply_with(
    fp: &FineProfile,
    profile: &SteadyProfile,
    params: &WaveParameters,
    d_re: &RealField,
) -> Result<RealField> {
    let grid = profile.grid();
    let h = profile.depth();
    let dw_coarse = make_holomorphic(d_re, h)?;
    let dw = upsample_complex(&dw_coarse.to_complex()).values();
    let c2 = params.c() * params.c();
    let sigma = params.sigma();
    let n = fp.fine.n_points();

    let mut d_jac = vec![0.0; n];
    let mut d_phase = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let one_w = 1.0 + fp.w[j];
        let jac = one_w.norm_sqr();
        let sj = jac.sqrt();
        d_jac[j] = 2.0 * (one_w.conj() * dw[j]).re;
        d_phase[j] = dw[j] / sj - one_w * (d_jac[j] / (2.0 * jac * sj));
    }
    let d_phase_alpha = complex_derivative(fp.fine, &d_phase);
    let samples: Vec<f64> = (0..n)
        .map(|j| {
            let one_w = 1.0 + fp.w[j];
            let jac = one_w.norm_sqr();
            let kinetic = -0.5 * c2 * d_jac[j] / (jac * jac);
            let inner = d_phase_alpha[j] / one_w - fp.phase_alpha[j] * dw[j] / (one_w * one_w);
            kinetic - sigma * inner.im
        })
        .collect();
    let mut out = downsample(&RealField::from_vec_unchecked(fp.fine, samples), grid);
    if params.g() != 0.0 {
        out = &out + &antiderivative(dw_coarse.im()).scale(params.g());
    }
    let _ = &fp.phase;
    Ok(out)
}

/// Derivative of [`residual_full`] with respect to the speed `c`.
pub fn full_speed_derivative(profile: &SteadyProfile, params: &WaveParameters) -> RealField {
    let fp = FineProfile::new(profile);
    let c = params.c();
    let samples: Vec<f64> = fp
        .w
        .iter()
        .map(|&w| -c * (1.0 - 1.0 / (1.0 + w).norm_sqr()))
        .collect();
    downsample(&RealField::from_vec_unchecked(fp.fine, samples), profile.grid())
}

/// Batched Jacobian columns of [`residual_full`], sharing the fine-grid setup.
pub(crate) fn full_jacobian_columns(
    profile: &SteadyProfile,
    params: &WaveParameters,
    directions: &[RealField],
) -> Result<Vec<RealField>> {
    let fp = FineProfile::new(profile);
    directions
        .iter()
        .map(|d| full_jacobian_apply_with(&fp, profile, params, d))
        .collect()
}

/// Complex residual `i sigma d/da((1+W_a)/|1+W_a|) - c^2 [W_a + conj W_a / (1 + conj W_a)]`
/// of the rescaled pure-capillary equation.
pub fn residual_scaled(profile: &SteadyProfile, params: &WaveParameters) -> Result<ComplexField> {
    if params.g() != 0.0 {
        return Err(Error::Usage(
            "the rescaled residual is only defined for g = 0".into(),
        ));
    }
    check_profile(profile)?;
    let fp = FineProfile::new(profile);
    let c2 = params.c() * params.c();
    let sigma = params.sigma();
    let values: Vec<Complex64> = (0..fp.fine.n_points())
        .map(|j| {
            let w = fp.w[j];
            let wc = w.conj();
            Complex64::new(0.0, sigma) * fp.phase_alpha[j] - c2 * (w + wc / (1.0 + wc))
        })
        .collect();
    let fine = ComplexField::from_values(fp.fine, &values)?;
    Ok(downsample_complex(&fine, profile.grid()))
}

/// Holomorphic logarithm `log(1 + W_alpha) = U + iV` with a continuous,
/// zero-winding branch whose mean imaginary part is closest to zero.
pub fn log_reduce(profile: &SteadyProfile) -> Result<LogProfile> {
    check_profile(profile).map_err(|e| Error::LogBranch(e.to_string()))?;
    let grid = profile.grid();
    let values = profile.w_alpha.values();
    let n = values.len();
    let u: Vec<f64> = values.iter().map(|w| (1.0 + w).norm().ln()).collect();
    let args: Vec<f64> = values.iter().map(|w| (1.0 + w).arg()).collect();
    let wrap = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();
    let mut v = Vec::with_capacity(n);
    v.push(args[0]);
    for j in 1..n {
        let prev = v[j - 1];
        v.push(prev + wrap(args[j] - args[j - 1]));
    }
    let closing = v[n - 1] + wrap(args[0] - args[n - 1]) - v[0];
    let winding = (closing / (2.0 * PI)).round() as i64;
    if winding != 0 {
        return Err(Error::LogBranch(format!(
            "1 + W_alpha winds {winding} times around the origin"
        )));
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    let shift = 2.0 * PI * (mean / (2.0 * PI)).round();
    v.iter_mut().for_each(|x| *x -= shift);
    Ok(LogProfile {
        u: RealField::from_vec_unchecked(grid, u),
        v: RealField::from_vec_unchecked(grid, v),
        depth: profile.depth(),
    })
}

/// `T_h d/da` as the even multiplier `xi tanh(h xi)`.
pub(crate) fn tilbert_derivative(u: &RealField, h: f64) -> RealField {
    multiply_even(u, |xi| xi * (h * xi).tanh())
}

/// `sigma T_h(u_alpha) - 2 c^2 sinh(u)`, sinh evaluated pointwise.
pub fn residual_sinh(u: &RealField, params: &WaveParameters) -> RealField {
    let lin = tilbert_derivative(u, params.h());
    let c2 = params.c() * params.c();
    let sigma = params.sigma();
    lin.zip_map(u, |l, v| sigma * l - 2.0 * c2 * v.sinh())
}

/// Directional derivative `sigma T_h(du_alpha) - 2 c^2 cosh(u) du`.
pub fn sinh_jacobian_apply(u: &RealField, du: &RealField, params: &WaveParameters) -> RealField {
    let lin = tilbert_derivative(du, params.h());
    let c2 = params.c() * params.c();
    let sigma = params.sigma();
    let weighted = u.zip_map(du, |a, b| a.cosh() * b);
    lin.zip_map(&weighted, |l, w| sigma * l - 2.0 * c2 * w)
}

/// Derivative of [`residual_sinh`] with respect to `c`.
pub fn sinh_speed_derivative(u: &RealField, params: &WaveParameters) -> RealField {
    let c = params.c();
    u.map(|v| -4.0 * c * v.sinh())
}

/// Squared phase speed `c^2(k) = (g/k + sigma k) tanh(h k)` of the linearized problem.
pub fn dispersion_speed(k: f64, params: &WaveParameters) -> Result<f64> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::Parameter(format!("wavenumber must be positive, got {k}")));
    }
    Ok((params.g() / k + params.sigma() * k) * (params.h() * k).tanh())
}

/// Free surface `Z = alpha + W` in centered order.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub alpha: Vec<f64>,
    pub z: Vec<Complex64>,
    pub overhang: bool,
}

impl Surface {
    /// CSV with header `alpha,re_Z,im_Z`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,re_Z,im_Z\n");
        for (a, z) in self.alpha.iter().zip(&self.z) {
            out.push_str(&format!("{a:?},{:?},{:?}\n", z.re, z.im));
        }
        out
    }
}

/// Reconstructs `Z(alpha) = alpha + W(alpha)` with `W` the zero-mean
/// antiderivative of `W_alpha` plus the drift `mean(Re W_alpha) alpha`.
pub fn reconstruct_surface(profile: &SteadyProfile) -> Surface {
    let grid = profile.grid();
    let wa = profile.w_alpha();
    let slope = wa.re().mean();
    let re_w = antiderivative(wa.re());
    let im_w = antiderivative(wa.im());
    let n = grid.n_points();
    let order = (n / 2..n).chain(0..n / 2);
    let mut alpha = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    for j in order {
        let a = grid.centered_node(j);
        alpha.push(a);
        z.push(Complex64::new(
            a * (1.0 + slope) + re_w.samples()[j],
            im_w.samples()[j],
        ));
    }
    Surface {
        alpha,
        z,
        overhang: has_overhang(profile),
    }
}

/// `1 + Re W_alpha` changes sign: the surface is not a graph over the horizontal.
pub fn has_overhang(profile: &SteadyProfile) -> bool {
    let s = profile.w_alpha().re().samples();
    let min = s.iter().fold(f64::INFINITY, |m, &v| m.min(1.0 + v));
    let max = s.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(1.0 + v));
    min < 0.0 && max > 0.0
}

/// `sup |Im W|`.
pub fn surface_amplitude(profile: &SteadyProfile) -> f64 {
    profile.im_w().sup_norm()
}

/// JSON form of a steady profile: `{params, grid, re_w_alpha_coeffs}`.
///
/// Coefficients of `Re W_alpha` are listed in ascending wavenumber order
/// `m = -n/2+1, ..., n/2` as `[re, im]` pairs, normalized by `1/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRecord {
    pub params: WaveParameters,
    pub grid: PeriodicGrid,
    pub re_w_alpha_coeffs: Vec<[f64; 2]>,
    /// Residual the profile was solved for; `params.c` is that residual's speed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_kind: Option<ResidualKind>,
    /// Cosine coefficients of the solver unknown (`Re W_alpha` or `U`), for exact replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_coeffs: Option<Vec<f64>>,
}

/// Which steady residual a solver works with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualKind {
    /// [`residual_full`] in the unknown `Re W_alpha`.
    Full,
    /// [`residual_sinh`] in the unknown `U = log|1 + W_alpha|` (requires `g = 0`).
    Sinh,
}

impl ProfileRecord {
    pub fn new(profile: &SteadyProfile, params: &WaveParameters) -> Self {
        let coeffs = profile
            .w_alpha()
            .re()
            .spectrum()
            .ascending()
            .into_iter()
            .map(|c| [c.re, c.im])
            .collect();
        Self {
            params: *params,
            grid: profile.grid(),
            re_w_alpha_coeffs: coeffs,
            residual_kind: None,
            solver_coeffs: None,
        }
    }

    pub fn to_profile(&self, delta: f64) -> Result<SteadyProfile> {
        let ascending: Vec<Complex64> = self
            .re_w_alpha_coeffs
            .iter()
            .map(|&[a, b]| Complex64::new(a, b))
            .collect();
        let spec = SpectralField::from_ascending(self.grid, &ascending)?;
        let re = spec.to_real();
        SteadyProfile::from_re_w_alpha(&re, self.params.h(), delta)
    }
}

/// `||.||_2` of a residual field.
pub fn residual_norm(r: &RealField) -> f64 {
    norm_l2(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64) -> PeriodicGrid {
        PeriodicGrid::new(n, l).unwrap()
    }

    fn capillary(c: f64) -> WaveParameters {
        WaveParameters::new(0.0, 1.0, 1.0, c).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(WaveParameters::new(-1.0, 1.0, 1.0, 1.0).is_err());
        assert!(WaveParameters::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(WaveParameters::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(WaveParameters::new(1.0, 0.0, 1.0, f64::NAN).is_err());
        let p: std::result::Result<WaveParameters, _> =
            serde_json::from_str(r#"{"g":0,"sigma":0,"h":1,"c":1}"#);
        assert!(p.is_err());
        let p: std::result::Result<WaveParameters, _> =
            serde_json::from_str(r#"{"g":0,"sigma":1,"h":1,"c":1,"x":2}"#);
        assert!(p.is_err());
    }

    #[test]
    fn flat_state_is_a_solution() {
        let g = grid(32, 2.0 * PI);
        let flat = SteadyProfile::flat(g, 1.0);
        for params in [
            WaveParameters::new(1.0, 0.0, 1.0, 0.9).unwrap(),
            WaveParameters::new(1.0, 1.0, 0.5, 2.0).unwrap(),
            capillary(0.3),
        ] {
            assert_eq!(residual_full(&flat, &params).unwrap().sup_norm(), 0.0);
        }
        assert_eq!(
            residual_scaled(&flat, &capillary(1.0)).unwrap().norm_l2(),
            0.0
        );
        assert!(residual_sinh(&RealField::zeros(g), &capillary(1.0)).is_zero());
        let log = log_reduce(&flat).unwrap();
        assert!(log.u.is_zero() && log.v.sup_norm() == 0.0);
    }

    #[test]
    fn degenerate_profile_rejected() {
        let g = grid(32, 2.0 * PI);
        let re = RealField::from_fn(g, |a| -1.0 + 0.001 * a.cos());
        let err = SteadyProfile::from_re_w_alpha(&re, 1.0, 0.01);
        assert!(matches!(err, Err(Error::Degeneracy { .. })));
    }

    #[test]
    fn dispersion_examples() {
        let p = capillary(0.0);
        assert!((dispersion_speed(1.0, &p).unwrap() - 1f64.tanh()).abs() < 1e-15);
        assert!(dispersion_speed(0.0, &p).is_err());
        let grav = WaveParameters::new(1.0, 0.0, 1.0, 0.0).unwrap();
        let long = dispersion_speed(1e-6, &grav).unwrap();
        assert!((long - 1.0).abs() < 1e-11);
        let grav = WaveParameters::new(2.0, 0.0, 0.5, 0.0).unwrap();
        let k = 1.7;
        assert!(
            (dispersion_speed(k, &grav).unwrap() - 2.0 / k * (0.5 * k).tanh()).abs() < 1e-15
        );
    }

    #[test]
    fn sinh_linearization() {
        let g = grid(64, 2.0 * PI);
        let a = 1e-3;
        let k = 2.0;
        let params = WaveParameters::new(0.0, 1.3, 0.8, 0.9).unwrap();
        let u = RealField::from_fn(g, |x| a * (k * x).cos());
        let r = residual_sinh(&u, &params);
        let coef = 1.3 * k * (0.8 * k).tanh() - 2.0 * 0.81;
        let lin = RealField::from_fn(g, |x| a * coef * (k * x).cos());
        assert!((&r - &lin).sup_norm() < 1e-8);

        let at_null = params.with_speed((1.3 * k * (0.8 * k).tanh() / 2.0).sqrt());
        assert!(residual_sinh(&u, &at_null).sup_norm() < 1e-8);
    }

    #[test]
    fn sinh_mean_bookkeeping() {
        let g = grid(128, 20.0);
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.7).unwrap();
        let u = RealField::from_centered_fn(g, |x| 0.4 * (-x * x / 4.0).exp() + 0.1 * (-(x - 3.0).powi(2)).exp());
        let r = residual_sinh(&u, &params);
        let expect = -2.0 * 0.49 * spectral::integrate(&u.map(f64::sinh));
        assert!((spectral::integrate(&r) - expect).abs() < 1e-12);
    }

    #[test]
    fn sinh_jacobian_matches_central_differences() {
        let g = grid(64, 12.0);
        let params = WaveParameters::new(0.0, 1.0, 1.0, 0.8).unwrap();
        let u = RealField::from_centered_fn(g, |x| 0.5 * (-x * x / 3.0).exp());
        let du = RealField::from_centered_fn(g, |x| (x / 2.0).sin() * (-x * x / 8.0).exp());
        let jdu = sinh_jacobian_apply(&u, &du, &params);
        let mut errs = vec![];
        for eps in [1e-3, 1e-4] {
            let plus = residual_sinh(&(&u + &du.scale(eps)), &params);
            let minus = residual_sinh(&(&u - &du.scale(eps)), &params);
            let fd = (&plus - &minus).scale(0.5 / eps);
            errs.push(norm_l2(&(&fd - &jdu)));
        }
        assert!(errs[1] < errs[0] / 50.0, "{errs:?}");
        assert!(sinh_jacobian_apply(&u, &RealField::zeros(g), &params).is_zero());
    }

    #[test]
    fn full_jacobian_matches_central_differences() {
        let g = grid(64, 2.0 * PI);
        let params = WaveParameters::new(0.7, 0.4, 1.0, 1.1).unwrap();
        let re = RealField::from_fn(g, |x| 0.2 * x.cos() + 0.05 * (2.0 * x).cos() + 0.01);
        let profile = SteadyProfile::from_re_w_alpha(&re, 1.0, 1e-3).unwrap();
        let d = RealField::from_fn(g, |x| (3.0 * x).cos() + 0.3 * x.cos() + 0.1);
        let jd = full_jacobian_apply(&profile, &params, &d).unwrap();
        let eps = 1e-5;
        let plus = SteadyProfile::from_re_w_alpha(&(&re + &d.scale(eps)), 1.0, 1e-3).unwrap();
        let minus = SteadyProfile::from_re_w_alpha(&(&re - &d.scale(eps)), 1.0, 1e-3).unwrap();
        let fd = (&residual_full(&plus, &params).unwrap() - &residual_full(&minus, &params).unwrap())
            .scale(0.5 / eps);
        assert!(norm_l2(&(&fd - &jd)) < 1e-8 * norm_l2(&jd));

        let dc = full_speed_derivative(&profile, &params);
        let hc = 1e-6;
        let fd = (&residual_full(&profile, &params.with_speed(1.1 + hc)).unwrap()
            - &residual_full(&profile, &params.with_speed(1.1 - hc)).unwrap())
            .scale(0.5 / hc);
        assert!(norm_l2(&(&fd - &dc)) < 1e-8 * norm_l2(&dc));
    }

    #[test]
    fn linear_mode_at_dispersion_speed_is_second_order() {
        let g = grid(64, 2.0 * PI);
        let params = WaveParameters::new(1.0, 1.0, 1.0, 0.0).unwrap();
        let k = 2.0;
        let c = dispersion_speed(k, &params).unwrap().sqrt();
        let params = params.with_speed(c);
        let mut norms = vec![];
        for eps in [1e-3, 1e-4] {
            let re = RealField::from_fn(g, |x| eps * (k * x).cos());
            let profile = SteadyProfile::from_re_w_alpha(&re, 1.0, DEFAULT_DELTA).unwrap();
            norms.push(norm_l2(&residual_full(&profile, &params).unwrap()));
        }
        let ratio = norms[0] / norms[1];
        assert!((ratio - 100.0).abs() < 5.0, "ratio {ratio}");
    }

    #[test]
    fn full_residual_factorizes_through_sinh() {
        let g = grid(256, 2.0 * PI);
        let t = RealField::from_fn(g, |x| 0.3 * x.cos() + 0.1 * (2.0 * x).cos());
        let log = LogProfile::from_u(&t, 1.0).unwrap();
        let w = log.exponentiate();
        let profile = SteadyProfile::new(
            HolomorphicBoundaryFunction::from_parts(w.re, w.im, 1.0, 1e-9).unwrap(),
            0.01,
        )
        .unwrap();
        let c = 1.2;
        let full = residual_full(&profile, &capillary(c)).unwrap();
        let sinh = residual_sinh(&t, &capillary(sinh_equation_speed(c)));
        let expect = sinh.zip_map(&t, |r, u| (-u).exp() * r);
        assert!((&full - &expect).sup_norm() < 1e-9, "{}", (&full - &expect).sup_norm());

        // i sigma d(e^{iV}) - c^2(...) = e^{iV}(-sigma V_a - 2c^2 sinh U).
        let scaled = residual_scaled(&profile, &capillary(c)).unwrap();
        let va = spectral::derivative(&log.v);
        let rhs: Vec<Complex64> = (0..g.n_points())
            .map(|j| {
                let (u, v) = (t.samples()[j], log.v.samples()[j]);
                Complex64::new(0.0, v).exp() * (-va.samples()[j] - 2.0 * c * c * u.sinh())
            })
            .collect();
        let err = scaled.sub(&ComplexField::from_values(g, &rhs).unwrap()).norm_l2();
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn log_reduce_recovers_exponent() {
        let g = grid(128, 2.0 * PI);
        let t = RealField::from_fn(g, |x| 0.1 * x.cos() - 0.05 * (2.0 * x).sin() + 0.02 * (3.0 * x).cos());
        let log = LogProfile::from_u(&t, 1.0).unwrap();
        let w = log.exponentiate();
        let profile =
            SteadyProfile::new(HolomorphicBoundaryFunction::from_parts(w.re, w.im, 1.0, 1e-9).unwrap(), 0.01)
                .unwrap();
        let back = log_reduce(&profile).unwrap();
        assert!((&back.u - &t).sup_norm() < 1e-10);
        assert!((&back.v - &log.v).sup_norm() < 1e-10);
    }

    #[test]
    fn log_reduce_rejects_winding() {
        let g = grid(64, 2.0 * PI);
        // 1 + W = 2 e^{i a}: modulus bounded away from zero, winding one.
        let re = RealField::from_fn(g, |a| 2.0 * a.cos() - 1.0);
        let im = RealField::from_fn(g, |a| 2.0 * a.sin());
        let w = HolomorphicBoundaryFunction::from_parts(re, im, 1.0, 10.0).unwrap();
        let profile = SteadyProfile::new(w, 0.01).unwrap();
        assert!(matches!(log_reduce(&profile), Err(Error::LogBranch(_))));
    }

    #[test]
    fn surface_reconstruction() {
        let g = grid(32, 2.0 * PI);
        let s = reconstruct_surface(&SteadyProfile::flat(g, 1.0));
        assert!(!s.overhang);
        for (a, z) in s.alpha.iter().zip(&s.z) {
            assert!((z.re - a).abs() < 1e-15 && z.im.abs() < 1e-15);
        }
        let small = SteadyProfile::from_re_w_alpha(&RealField::from_fn(g, |a| 0.05 * a.cos()), 1.0, 0.01)
            .unwrap();
        let s = reconstruct_surface(&small);
        assert!(!s.overhang);
        // Im W = tanh(1) * 0.05 * cos(alpha).
        let amp = surface_amplitude(&small);
        assert!((amp - 0.05 * 1f64.tanh()).abs() < 1e-14);
        let steep = RealField::from_fn(g, |a| -1.3 * a.cos());
        let profile = SteadyProfile::new(
            HolomorphicBoundaryFunction::from_parts(steep.clone(), RealField::constant(g, 0.0), 1.0, 10.0)
                .unwrap(),
            1e-3,
        );
        // Not holomorphic enough for the default check but the overhang flag
        // only depends on Re W_alpha.
        if let Ok(p) = profile {
            assert!(has_overhang(&p));
        }
        let with_im = make_holomorphic(&steep, 1.0).unwrap();
        let p = SteadyProfile::new(with_im, 1e-3).unwrap();
        assert!(has_overhang(&p));
        assert!(reconstruct_surface(&p).overhang);
    }

    #[test]
    fn qw_relation() {
        let g = grid(32, 2.0 * PI);
        let profile =
            SteadyProfile::from_re_w_alpha(&RealField::from_fn(g, |a| 0.1 * a.cos()), 1.0, 0.01).unwrap();
        let mut pair = DynamicPair::from_profile(&profile, 0.8).unwrap();
        assert!(check_qw_relation(&pair, 0.8) < 1e-15);
        pair.q_slope += 0.25;
        let expect = 0.25 * (2.0 * PI).sqrt();
        assert!((check_qw_relation(&pair, 0.8) - expect).abs() < 1e-14);
        assert_eq!(check_qw_relation(&DynamicPair::zeros(g, 1.0), 1.3), 0.0);
    }

    #[test]
    fn profile_record_roundtrip() {
        let g = grid(16, 3.0);
        let re = RealField::from_fn(g, |a| 0.1 * (2.0 * PI * a / 3.0).cos() + 0.01);
        let profile = SteadyProfile::from_re_w_alpha(&re, 1.0, 0.01).unwrap();
        let params = capillary(0.5);
        let rec = ProfileRecord::new(&profile, &params);
        let text = serde_json::to_string(&rec).unwrap();
        assert!(text.starts_with(r#"{"params":{"g":0.0,"sigma":1.0,"h":1.0,"c":0.5},"grid":{"n":16,"L":3.0}"#));
        let back: ProfileRecord = serde_json::from_str(&text).unwrap();
        let p2 = back.to_profile(0.01).unwrap();
        assert!((p2.w_alpha().re() - profile.w_alpha().re()).sup_norm() < 1e-15);
    }
}
