//! Boundary traces of strip-holomorphic functions that are real on the bottom.
//!
//! A complex trace `u` belongs to the class iff `Im u = -T_h Re u`. The class
//! is closed under real linear combinations and under products, but not under
//! multiplication by `i`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    self, check_zero_mean, downsample, norm_l2, tilbert, upsample, PeriodicGrid, RealField,
    TilbertSymbol, ZERO_MEAN_TOLERANCE,
};

/// A complex field stored as real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub re: RealField,
    pub im: RealField,
}

impl ComplexField {
    pub fn new(re: RealField, im: RealField) -> Result<Self> {
        if re.grid() != im.grid() {
            return Err(Error::Shape("real and imaginary parts on different grids".into()));
        }
        Ok(Self { re, im })
    }

    pub fn zeros(grid: PeriodicGrid) -> Self {
        Self {
            re: RealField::zeros(grid),
            im: RealField::zeros(grid),
        }
    }

    pub fn real(re: RealField) -> Self {
        let im = RealField::zeros(re.grid());
        Self { re, im }
    }

    pub fn from_values(grid: PeriodicGrid, values: &[Complex64]) -> Result<Self> {
        let re = RealField::new(grid, values.iter().map(|c| c.re).collect())?;
        let im = RealField::new(grid, values.iter().map(|c| c.im).collect())?;
        Ok(Self { re, im })
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.re.grid()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.re
            .samples()
            .iter()
            .zip(self.im.samples())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect()
    }

    pub fn conj(&self) -> Self {
        Self {
            re: self.re.clone(),
            im: -&self.im,
        }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> Self {
        Self {
            re: -&self.im,
            im: self.re.clone(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            re: self.re.scale(s),
            im: self.im.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    /// `sqrt(integrate(|u|^2))`.
    pub fn norm_l2(&self) -> f64 {
        norm_l2(&self.re).hypot(norm_l2(&self.im))
    }

    /// Product on the 2x refined grid, truncated back.
    pub fn dealiased_mul(&self, other: &Self) -> Self {
        let grid = self.grid();
        let (ar, ai) = (upsample(&self.re, 2), upsample(&self.im, 2));
        let (br, bi) = (upsample(&other.re, 2), upsample(&other.im, 2));
        let re = &ar.pointwise_mul(&br) - &ai.pointwise_mul(&bi);
        let im = &ar.pointwise_mul(&bi) + &ai.pointwise_mul(&br);
        Self {
            re: downsample(&re, grid),
            im: downsample(&im, grid),
        }
    }

    pub fn reflect(&self) -> Self {
        Self {
            re: self.re.reflect(),
            im: self.im.reflect(),
        }
    }

    pub fn roll(&self, shift: usize) -> Self {
        Self {
            re: self.re.roll(shift),
            im: self.im.roll(shift),
        }
    }
}

/// Default tolerance for the holomorphy defect check in constructors.
pub const HOLOMORPHY_TOLERANCE: f64 = 1e-9;

/// A complex boundary trace with `Im u = -T_h Re u` at depth `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolomorphicBoundaryFunction {
    re: RealField,
    im: RealField,
    depth: f64,
}

impl HolomorphicBoundaryFunction {
    /// Wraps `(re, im)` after checking `||im + T_h re|| <= tol (1 + ||re||)`.
    pub fn from_parts(re: RealField, im: RealField, depth: f64, tol: f64) -> Result<Self> {
        let field = ComplexField::new(re, im)?;
        let defect = holomorphy_defect(&field, depth)?;
        let bound = tol * (1.0 + norm_l2(&field.re));
        if defect > bound {
            return Err(Error::Parameter(format!(
                "holomorphy defect {defect:e} exceeds {bound:e}"
            )));
        }
        Ok(Self {
            re: field.re,
            im: field.im,
            depth,
        })
    }

    pub fn zeros(grid: PeriodicGrid, depth: f64) -> Self {
        Self {
            re: RealField::zeros(grid),
            im: RealField::zeros(grid),
            depth,
        }
    }

    pub fn re(&self) -> &RealField {
        &self.re
    }

    pub fn im(&self) -> &RealField {
        &self.im
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn grid(&self) -> PeriodicGrid {
        self.re.grid()
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            re: self.re.clone(),
            im: self.im.clone(),
        }
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.to_complex().values()
    }

    /// Real-coefficient combination `a self + b other`; stays in the class.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        Self {
            re: &self.re.scale(a) + &other.re.scale(b),
            im: &self.im.scale(a) + &other.im.scale(b),
            depth: self.depth,
        }
    }

    pub fn derivative(&self) -> Self {
        Self {
            re: spectral::derivative(&self.re),
            im: spectral::derivative(&self.im),
            depth: self.depth,
        }
    }
}

fn check_depth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("depth must be positive, got {h}")))
    }
}

/// The holomorphic function with real part `re`: `(re, -T_h re)`.
pub fn make_holomorphic(re: &RealField, h: f64) -> Result<HolomorphicBoundaryFunction> {
    let im = -&tilbert(re, h)?;
    Ok(HolomorphicBoundaryFunction {
        re: re.clone(),
        im,
        depth: h,
    })
}

/// `||Im u + T_h Re u||_2`.
pub fn holomorphy_defect(u: &ComplexField, h: f64) -> Result<f64> {
    let t = tilbert(&u.re, h)?;
    Ok(norm_l2(&(&u.im + &t)))
}

/// Projection onto the holomorphic class,
/// `P_h u = 1/2 [(1 - i T_h) Re u + i (1 + i T_h^{-1}) Im u]`.
///
/// Requires `Im u` to have zero mean: `T_h^{-1}` is undefined on constants.
/// Real constants are holomorphic and are kept whole (the bare formula would
/// halve them and fail to be idempotent).
pub fn project_ph(u: &ComplexField, h: f64) -> Result<HolomorphicBoundaryFunction> {
    check_depth(h)?;
    check_zero_mean(&u.im, ZERO_MEAN_TOLERANCE)?;
    let tinv_im = spectral::multiply(&u.im, &spectral::TilbertInverseSymbol { depth: h });
    let half_mean = 0.5 * u.re.mean();
    let re = (&u.re - &tinv_im).map(|v| 0.5 * v + half_mean);
    let im = im_part_of_projection(u, h)?;
    Ok(HolomorphicBoundaryFunction { re, im, depth: h })
}

/// `Im(P_h u) = 1/2 [Im u - T_h Re u]`; needs no inverse Tilbert transform.
pub fn im_part_of_projection(u: &ComplexField, h: f64) -> Result<RealField> {
    let t = tilbert(&u.re, h)?;
    Ok((&u.im - &t).scale(0.5))
}

/// Defect of the Tilbert product rule
/// `u T[v] + T[u] v = T[u v - T[u] T[v]]`, evaluated on the 2x grid.
pub fn tilbert_product_defect(u: &RealField, v: &RealField, h: f64) -> Result<f64> {
    check_depth(h)?;
    let sym = TilbertSymbol { depth: h };
    let uf = upsample(u, 2);
    let vf = upsample(v, 2);
    let tu = spectral::multiply(&uf, &sym);
    let tv = spectral::multiply(&vf, &sym);
    let lhs = &uf.pointwise_mul(&tv) + &tu.pointwise_mul(&vf);
    let inner = &uf.pointwise_mul(&vf) - &tu.pointwise_mul(&tv);
    let rhs = spectral::multiply(&inner, &sym);
    Ok(norm_l2(&(&lhs - &rhs)))
}

/// Holomorphy defect of the product of two holomorphic functions, with the
/// product formed exactly on the 2x grid.
pub fn product_holomorphy_defect(
    a: &HolomorphicBoundaryFunction,
    b: &HolomorphicBoundaryFunction,
) -> Result<f64> {
    let h = a.depth;
    let (ar, ai) = (upsample(&a.re, 2), upsample(&a.im, 2));
    let (br, bi) = (upsample(&b.re, 2), upsample(&b.im, 2));
    let re = &ar.pointwise_mul(&br) - &ai.pointwise_mul(&bi);
    let im = &ar.pointwise_mul(&bi) + &ai.pointwise_mul(&br);
    holomorphy_defect(&ComplexField { re, im }, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> PeriodicGrid {
        PeriodicGrid::new(64, 2.0 * PI).unwrap()
    }

    fn max_diff(a: &RealField, b: &RealField) -> f64 {
        (a - b).sup_norm()
    }

    #[test]
    fn make_holomorphic_examples() {
        let g = grid();
        let z = make_holomorphic(&RealField::zeros(g), 1.0).unwrap();
        assert!(z.re().is_zero() && z.im().sup_norm() == 0.0);

        let f = make_holomorphic(&RealField::from_fn(g, |a| a.cos()), 1.0).unwrap();
        let expect = RealField::from_fn(g, |a| -(1f64.tanh()) * a.sin());
        assert!(max_diff(f.im(), &expect) < 1e-14);
        assert!(holomorphy_defect(&f.to_complex(), 1.0).unwrap() <= 1e-12);

        let c = make_holomorphic(&RealField::constant(g, 2.5), 1.0).unwrap();
        assert!(c.im().sup_norm() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let g = grid();
        let u = ComplexField::real(RealField::from_fn(g, |a| a.cos()));
        let p = project_ph(&u, 1.0).unwrap();
        assert!(max_diff(p.re(), &RealField::from_fn(g, |a| 0.5 * a.cos())) < 1e-14);
        assert!(
            max_diff(
                p.im(),
                &RealField::from_fn(g, |a| -0.5 * 1f64.tanh() * a.sin())
            ) < 1e-14
        );

        let hol = make_holomorphic(&RealField::from_fn(g, |a| (2.0 * a).sin() + 0.3), 0.8).unwrap();
        let p = project_ph(&hol.to_complex(), 0.8).unwrap();
        assert!(p.to_complex().sub(&hol.to_complex()).norm_l2() < 1e-13);

        let bad = ComplexField::new(RealField::zeros(g), RealField::constant(g, 1.0)).unwrap();
        assert!(matches!(project_ph(&bad, 1.0), Err(Error::ZeroMode { .. })));
    }

    #[test]
    fn im_projection_examples() {
        let g = grid();
        let re = RealField::from_fn(g, |a| a.cos() + 0.2 * (3.0 * a).sin());
        let out = im_part_of_projection(&ComplexField::real(re.clone()), 1.3).unwrap();
        assert!(max_diff(&out, &tilbert(&re, 1.3).unwrap().scale(-0.5)) < 1e-15);

        let hol = make_holomorphic(&re, 1.3).unwrap();
        let out = im_part_of_projection(&hol.to_complex(), 1.3).unwrap();
        assert!(max_diff(&out, hol.im()) < 1e-14);

        let u = ComplexField::new(RealField::zeros(g), RealField::from_fn(g, |a| a.sin())).unwrap();
        let out = im_part_of_projection(&u, 1.0).unwrap();
        assert!(max_diff(&out, &RealField::from_fn(g, |a| 0.5 * a.sin())) < 1e-15);

        let via_projection = project_ph(&u, 1.0).unwrap();
        assert!(max_diff(via_projection.im(), &out) < 1e-15);
    }

    #[test]
    fn product_rule_trivial_cases() {
        let g = grid();
        let zero = RealField::zeros(g);
        assert_eq!(tilbert_product_defect(&zero, &zero, 1.0).unwrap(), 0.0);
        let v = RealField::from_fn(g, |a| a.sin() + 0.4 * (5.0 * a).cos());
        let c = RealField::constant(g, 1.7);
        assert!(tilbert_product_defect(&c, &v, 1.0).unwrap() < 1e-13);
    }

    #[test]
    fn holomorphy_defect_examples() {
        let g = grid();
        let f = make_holomorphic(&RealField::from_fn(g, |a| a.cos()), 1.0).unwrap();
        assert!(holomorphy_defect(&f.to_complex().conj(), 1.0).unwrap() > 1.0);
        let c = ComplexField::real(RealField::constant(g, 4.0));
        assert_eq!(holomorphy_defect(&c, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn real_algebra_but_not_complex() {
        let g = grid();
        let a = make_holomorphic(&RealField::from_fn(g, |x| x.cos()), 1.0).unwrap();
        let b = make_holomorphic(&RealField::from_fn(g, |x| (2.0 * x).sin() + 0.5), 1.0).unwrap();
        let comb = a.combine(2.0, &b, -0.7);
        assert!(holomorphy_defect(&comb.to_complex(), 1.0).unwrap() < 1e-12);
        assert!(holomorphy_defect(&a.to_complex().times_i(), 1.0).unwrap() > 0.1);
        assert!(product_holomorphy_defect(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn from_parts_rejects_non_holomorphic() {
        let g = grid();
        let re = RealField::from_fn(g, |a| a.cos());
        let err = HolomorphicBoundaryFunction::from_parts(re.clone(), re, 1.0, 1e-10);
        assert!(err.is_err());
    }
}
