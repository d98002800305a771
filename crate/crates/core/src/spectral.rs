//! Periodic grids, real fields and Fourier multipliers.
//!
//! Fields live on a uniform grid of `n` nodes `alpha_j = j L / n` covering a
//! torus of circumference `L`. Spectral coefficients are stored in FFT order
//! and normalized so that `u(alpha_j) = sum_m c_m exp(i xi_m alpha_j)`, i.e.
//! `c_m = (1/n) sum_j u_j exp(-i xi_m alpha_j)`. Index `n/2` is the Nyquist
//! mode and carries the positive wavenumber `pi n / L`.
//!
//! Odd symbols cannot act on the Nyquist mode of a real field without leaving
//! the reals, so every multiplier is symmetrized there: the Nyquist
//! coefficient is multiplied by `(m(xi) + m(-xi)) / 2`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT normalized by `1/n`.
pub(crate) fn fft_forward(values: &[Complex64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf = values.to_vec();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|c| *c *= scale);
    buf
}

/// Inverse of [`fft_forward`] (no extra normalization).
pub(crate) fn fft_inverse(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(&mut buf);
    buf
}

/// Uniform discretization of a torus of length `L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodicGrid {
    n: usize,
    #[serde(rename = "L")]
    length: f64,
}

impl PeriodicGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Parameter(format!(
                "grid size must be even and >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Parameter(format!(
                "torus length must be positive and finite, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Node `alpha_j = j L / n`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    /// Node expressed in `[-L/2, L/2)`; the seam of the torus sits at index `n/2`.
    pub fn centered_node(&self, j: usize) -> f64 {
        if j < self.n / 2 {
            self.node(j)
        } else {
            self.node(j) - self.length
        }
    }

    /// Signed mode number of FFT index `idx`, in `{-n/2+1, ..., n/2}`.
    pub fn mode(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    pub fn wavenumber(&self, idx: usize) -> f64 {
        2.0 * PI * self.mode(idx) as f64 / self.length
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(i)).collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub fn max_wavenumber(&self) -> f64 {
        self.wavenumber(self.n / 2)
    }

    /// Mode number `m >= 0` with `xi_m = k`, if `k` is a grid wavenumber.
    pub fn mode_of_wavenumber(&self, k: f64) -> Option<usize> {
        let m = k * self.length / (2.0 * PI);
        let rounded = m.round();
        if rounded >= 0.0 && (m - rounded).abs() <= 1e-9 * m.abs().max(1.0) {
            let m = rounded as usize;
            (m <= self.n / 2).then_some(m)
        } else {
            None
        }
    }

    /// The same torus sampled with `factor` times as many nodes.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            n: self.n * factor,
            length: self.length,
        }
    }
}

/// Real samples on a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: PeriodicGrid,
    samples: Vec<f64>,
}

impl RealField {
    pub fn new(grid: PeriodicGrid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.n_points() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                grid.n_points(),
                samples.len()
            )));
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("non-finite sample at node {j}")));
        }
        Ok(Self { grid, samples })
    }

    pub(crate) fn from_vec_unchecked(grid: PeriodicGrid, samples: Vec<f64>) -> Self {
        debug_assert_eq!(samples.len(), grid.n_points());
        Self { grid, samples }
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self::from_vec_unchecked(grid, vec![0.0; grid.n_points()])
    }

    pub fn constant(grid: PeriodicGrid, value: f64) -> Self {
        Self::from_vec_unchecked(grid, vec![value; grid.n_points()])
    }

    /// Samples `f(alpha_j)` at the nodes `alpha_j = j L / n`.
    pub fn from_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.n_points()).map(|j| f(grid.node(j))).collect();
        Self::from_vec_unchecked(grid, samples)
    }

    /// Samples `f` at the centered nodes in `[-L/2, L/2)`.
    pub fn from_centered_fn(grid: PeriodicGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples = (0..grid.n_points())
            .map(|j| f(grid.centered_node(j)))
            .collect();
        Self::from_vec_unchecked(grid, samples)
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_vec_unchecked(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_vec_unchecked(self.grid, samples)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    /// Pointwise product on the grid (aliased).
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn norm_l2(&self) -> f64 {
        norm_l2(self)
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    pub fn spectrum(&self) -> SpectralField {
        let values: Vec<Complex64> = self
            .samples
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs: fft_forward(&values),
        }
    }

    /// Shift by `shift` grid nodes: `out_j = u_{j - shift}`.
    pub fn roll(&self, shift: usize) -> Self {
        let n = self.samples.len();
        let samples = (0..n).map(|j| self.samples[(j + n - shift % n) % n]).collect();
        Self::from_vec_unchecked(self.grid, samples)
    }

    /// Reflection `alpha -> -alpha` about node 0.
    pub fn reflect(&self) -> Self {
        let n = self.samples.len();
        let samples = (0..n).map(|j| self.samples[(n - j) % n]).collect();
        Self::from_vec_unchecked(self.grid, samples)
    }
}

impl Add for &RealField {
    type Output = RealField;
    fn add(self, rhs: Self) -> RealField {
        self.zip_map(rhs, |a, b| a + b)
    }
}

impl Sub for &RealField {
    type Output = RealField;
    fn sub(self, rhs: Self) -> RealField {
        self.zip_map(rhs, |a, b| a - b)
    }
}

impl Neg for &RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.map(|v| -v)
    }
}

impl Mul<f64> for &RealField {
    type Output = RealField;
    fn mul(self, rhs: f64) -> RealField {
        self.scale(rhs)
    }
}

/// Fourier coefficients of a grid field, FFT order, normalized by `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: PeriodicGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                grid.n_points(),
                coeffs.len()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficients in ascending wavenumber order `m = -n/2+1, ..., n/2`.
    pub fn ascending(&self) -> Vec<Complex64> {
        let n = self.coeffs.len();
        (0..n).map(|i| self.coeffs[(i + n / 2 + 1) % n]).collect()
    }

    /// Inverse of [`SpectralField::ascending`].
    pub fn from_ascending(grid: PeriodicGrid, ascending: &[Complex64]) -> Result<Self> {
        let n = grid.n_points();
        if ascending.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} coefficients, got {}",
                ascending.len()
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in ascending.iter().enumerate() {
            coeffs[(i + n / 2 + 1) % n] = *c;
        }
        Ok(Self { grid, coeffs })
    }

    /// Real part of the synthesized samples.
    pub fn to_real(&self) -> RealField {
        let values = fft_inverse(&self.coeffs);
        RealField::from_vec_unchecked(self.grid, values.iter().map(|c| c.re).collect())
    }

    /// Largest imaginary sample of the synthesized field.
    pub fn imaginary_residue(&self) -> f64 {
        fft_inverse(&self.coeffs)
            .iter()
            .fold(0.0, |m, c| m.max(c.im.abs()))
    }
}

/// Evaluation rule `xi -> m(xi)` of a Fourier multiplier.
pub trait MultiplierSymbol {
    fn eval(&self, xi: f64) -> Complex64;
}

impl<F: Fn(f64) -> Complex64> MultiplierSymbol for F {
    fn eval(&self, xi: f64) -> Complex64 {
        self(xi)
    }
}

/// Symbol `-i tanh(h xi)`.
#[derive(Debug, Clone, Copy)]
pub struct TilbertSymbol {
    pub depth: f64,
}

impl MultiplierSymbol for TilbertSymbol {
    fn eval(&self, xi: f64) -> Complex64 {
        Complex64::new(0.0, -(self.depth * xi).tanh())
    }
}

/// Symbol `i coth(h xi)` away from the origin, `0` at `xi = 0`.
#[derive(Debug, Clone, Copy)]
pub struct TilbertInverseSymbol {
    pub depth: f64,
}

impl MultiplierSymbol for TilbertInverseSymbol {
    fn eval(&self, xi: f64) -> Complex64 {
        if xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0 / (self.depth * xi).tanh())
        }
    }
}

/// Symbol `-i sgn(xi)`.
#[derive(Debug, Clone, Copy)]
pub struct HilbertSymbol;

impl MultiplierSymbol for HilbertSymbol {
    fn eval(&self, xi: f64) -> Complex64 {
        Complex64::new(0.0, -xi.signum() * f64::from(xi != 0.0))
    }
}

/// Symbol `i xi`.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeSymbol;

impl MultiplierSymbol for DerivativeSymbol {
    fn eval(&self, xi: f64) -> Complex64 {
        Complex64::new(0.0, xi)
    }
}

/// Applies `symbol` to every coefficient with Nyquist symmetrization. No validation.
pub(crate) fn multiply_coeffs(
    grid: PeriodicGrid,
    coeffs: &mut [Complex64],
    symbol: &impl MultiplierSymbol,
) {
    let nyq = grid.nyquist_index();
    for (idx, c) in coeffs.iter_mut().enumerate() {
        let xi = grid.wavenumber(idx);
        let m = if idx == nyq {
            (symbol.eval(xi) + symbol.eval(-xi)) * 0.5
        } else {
            symbol.eval(xi)
        };
        *c *= m;
    }
}

/// Infallible multiplier application for symbols known to be admissible.
pub(crate) fn multiply(u: &RealField, symbol: &impl MultiplierSymbol) -> RealField {
    let mut spec = u.spectrum();
    multiply_coeffs(u.grid, &mut spec.coeffs, symbol);
    spec.to_real()
}

/// Multiplies by a real even symbol given as a function of `|xi|`.
pub(crate) fn multiply_even(u: &RealField, symbol: impl Fn(f64) -> f64) -> RealField {
    multiply(u, &|xi: f64| Complex64::new(symbol(xi.abs()), 0.0))
}

/// Applies the multiplier `m` to `u`.
///
/// The symbol must be finite at every grid wavenumber and satisfy
/// `m(-xi) = conj(m(xi))`, otherwise the output would not be real.
pub fn apply_multiplier(u: &RealField, symbol: &impl MultiplierSymbol) -> Result<RealField> {
    let grid = u.grid;
    for idx in 0..grid.n_points() {
        let xi = grid.wavenumber(idx);
        let m = symbol.eval(xi);
        if !(m.re.is_finite() && m.im.is_finite()) {
            return Err(Error::SymbolDomain {
                xi,
                reason: "non-finite value".into(),
            });
        }
        let mirrored = symbol.eval(-xi);
        if (mirrored - m.conj()).norm() > 1e-12 * (1.0 + m.norm()) {
            return Err(Error::SymbolDomain {
                xi,
                reason: "symbol violates m(-xi) = conj(m(xi))".into(),
            });
        }
    }
    Ok(multiply(u, symbol))
}

fn check_depth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("depth must be positive, got {h}")))
    }
}

/// Tilbert transform: multiplier `-i tanh(h xi)`.
pub fn tilbert(u: &RealField, h: f64) -> Result<RealField> {
    check_depth(h)?;
    Ok(multiply(u, &TilbertSymbol { depth: h }))
}

/// Default tolerance factor for the zero-mean gate, relative to `||u||_2`.
pub const ZERO_MEAN_TOLERANCE: f64 = 1e-10;

/// Inverse Tilbert transform on zero-mean fields.
pub fn tilbert_inverse(u: &RealField, h: f64) -> Result<RealField> {
    tilbert_inverse_with_tolerance(u, h, ZERO_MEAN_TOLERANCE)
}

/// As [`tilbert_inverse`], rejecting `|mean(u)| > tol * ||u||_2`.
pub fn tilbert_inverse_with_tolerance(u: &RealField, h: f64, tol: f64) -> Result<RealField> {
    check_depth(h)?;
    check_zero_mean(u, tol)?;
    Ok(multiply(u, &TilbertInverseSymbol { depth: h }))
}

pub(crate) fn check_zero_mean(u: &RealField, tol: f64) -> Result<()> {
    let mean = u.mean();
    let tolerance = tol * u.norm_l2();
    if mean.abs() > tolerance {
        Err(Error::ZeroMode { mean, tolerance })
    } else {
        Ok(())
    }
}

/// Hilbert transform: multiplier `-i sgn(xi)`.
pub fn hilbert(u: &RealField) -> RealField {
    multiply(u, &HilbertSymbol)
}

/// Spectral derivative.
pub fn derivative(u: &RealField) -> RealField {
    multiply(u, &DerivativeSymbol)
}

/// Zero-mean spectral antiderivative; the mean of `u` is discarded.
pub fn antiderivative(u: &RealField) -> RealField {
    multiply(u, &|xi: f64| {
        if xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, -1.0 / xi)
        }
    })
}

/// Uniform-grid quadrature `L/n sum_j u_j`.
pub fn integrate(u: &RealField) -> f64 {
    u.grid.spacing() * u.samples.iter().sum::<f64>()
}

/// Quadrature pairing `integrate(u v)`.
pub fn inner(u: &RealField, v: &RealField) -> f64 {
    assert_eq!(u.grid, v.grid, "fields live on different grids");
    u.grid.spacing() * u.samples.iter().zip(&v.samples).map(|(a, b)| a * b).sum::<f64>()
}

pub fn norm_l2(u: &RealField) -> f64 {
    inner(u, u).sqrt()
}

/// Spectral pairing `L sum_m c_m(u) conj(c_m(v))`; equals [`inner`] by Parseval.
pub fn spectral_inner(u: &SpectralField, v: &SpectralField) -> f64 {
    let l = u.grid.length();
    l * u
        .coeffs
        .iter()
        .zip(&v.coeffs)
        .map(|(a, b)| (a * b.conj()).re)
        .sum::<f64>()
}

/// Resamples Fourier coefficients from an `n_from` grid to an `n_to` grid.
///
/// Refinement splits the Nyquist coefficient evenly between `+-n_from/2`;
/// coarsening truncates and folds `+-n_to/2` back onto the Nyquist index, so
/// that coarsening inverts refinement exactly.
pub(crate) fn resample_coeffs(coeffs: &[Complex64], n_to: usize) -> Vec<Complex64> {
    let n_from = coeffs.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = vec![zero; n_to];
    let mode = |idx: usize, n: usize| -> i64 {
        if idx <= n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    };
    let slot = |m: i64, n: usize| -> usize { m.rem_euclid(n as i64) as usize };
    if n_to >= n_from {
        for (idx, &c) in coeffs.iter().enumerate() {
            let m = mode(idx, n_from);
            if n_to > n_from && m == (n_from / 2) as i64 {
                out[slot(m, n_to)] += c * 0.5;
                out[slot(-m, n_to)] += c * 0.5;
            } else {
                out[slot(m, n_to)] += c;
            }
        }
    } else {
        let half = (n_to / 2) as i64;
        for (idx, &c) in coeffs.iter().enumerate() {
            let m = mode(idx, n_from);
            if m.abs() <= half {
                out[slot(m, n_to)] += c;
            }
        }
    }
    out
}

/// Band-limited interpolation onto a grid with `factor` times as many nodes.
pub fn upsample(u: &RealField, factor: usize) -> RealField {
    let fine = u.grid.refined(factor);
    let coeffs = resample_coeffs(&u.spectrum().coeffs, fine.n_points());
    SpectralField {
        grid: fine,
        coeffs,
    }
    .to_real()
}

/// Spectral truncation of a fine-grid field onto `coarse`.
pub fn downsample(u: &RealField, coarse: PeriodicGrid) -> RealField {
    let coeffs = resample_coeffs(&u.spectrum().coeffs, coarse.n_points());
    SpectralField {
        grid: coarse,
        coeffs,
    }
    .to_real()
}

/// Product computed on the 2x refined grid and truncated back.
pub fn dealiased_product(u: &RealField, v: &RealField) -> RealField {
    assert_eq!(u.grid, v.grid, "fields live on different grids");
    let prod = upsample(u, 2).pointwise_mul(&upsample(v, 2));
    downsample(&prod, u.grid)
}

/// Smooth radial bump: 1 on `|xi| <= 1`, 0 on `|xi| >= 2`, C-infinity in between.
pub fn lp_bump(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        1.0
    } else if a >= 2.0 {
        0.0
    } else {
        let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
        let up = f(2.0 - a);
        up / (up + f(a - 1.0))
    }
}

/// Symbol of the dyadic block `k`: `P_{<=0}` for `k = 0`, `P_k` otherwise.
pub fn lp_symbol(k: u32, xi: f64) -> f64 {
    if k == 0 {
        lp_bump(xi)
    } else {
        let scale = 2f64.powi(k as i32);
        lp_bump(xi / scale) - lp_bump(2.0 * xi / scale)
    }
}

/// Highest dyadic block needed for `sum_{k <= K} P_k = 1` on the grid.
pub fn lp_top_block(grid: PeriodicGrid) -> u32 {
    let kmax = grid.max_wavenumber();
    if kmax <= 1.0 {
        0
    } else {
        kmax.log2().ceil() as u32
    }
}

/// Littlewood-Paley projection onto block `k` (`k = 0` is the low-frequency block).
pub fn lp_project(u: &RealField, k: u32) -> RealField {
    multiply_even(u, |xi| lp_symbol(k, xi))
}

/// Discrete Besov norm `B^s_{2,1}` for `s` in `{1/2, 3/2}`.
pub fn besov_norm(u: &RealField, s: f64) -> Result<f64> {
    if (s - 0.5).abs() > 1e-12 && (s - 1.5).abs() > 1e-12 {
        return Err(Error::Parameter(format!(
            "Besov index must be 1/2 or 3/2, got {s}"
        )));
    }
    let grid = u.grid;
    let spec = u.spectrum();
    let block_norm = |k: u32| -> f64 {
        let sum: f64 = spec
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let w = lp_symbol(k, grid.wavenumber(idx));
                w * w * c.norm_sqr()
            })
            .sum();
        (grid.length() * sum).sqrt()
    };
    let mut total = block_norm(0);
    for k in 1..=lp_top_block(grid) {
        total += 2f64.powf(k as f64 * s) * block_norm(k);
    }
    Ok(total)
}
