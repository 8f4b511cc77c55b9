//! Holomorphic equivalence of weighted spaces.
//!
//! Densities `alpha = e^{-phi_a}` and `beta = e^{-phi_b}` are equivalent when
//! `beta = alpha / |m|^2` for a nowhere-zero entire `m`; then `f -> m f` is
//! unitary and `alpha K_alpha = beta K_beta` on the diagonal. Equivalence
//! holds exactly when `phi_b - phi_a` is harmonic. This module builds `m`
//! constructively when that difference is a harmonic polynomial `u`:
//! `m = exp(p / 2)` with `Re p = u`. Any other difference is rejected.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{weighted_norm_sq, KernelEstimate, SampleFunction};
use crate::poly::RealPoly2;
use crate::quadrature::QuadratureRule;
use crate::weights::WeightFunction;

/// Strictly positive density `e^{-phi}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDensity {
    weight: WeightFunction,
}

impl WeightDensity {
    pub fn new(weight: WeightFunction) -> Self {
        WeightDensity { weight }
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    /// `s * alpha`, i.e. the exponent shifted by `-log s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!("scale {s} must be positive")));
        }
        Ok(WeightDensity {
            weight: self.weight.clone().with_harmonic(&[Complex64::new(-s.ln(), 0.0)]),
        })
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        (-self.weight.eval(z)).exp()
    }

    pub fn log_density(&self, z: Complex64) -> f64 {
        -self.weight.eval(z)
    }
}

/// Result of comparing `Delta log alpha` with `Delta log beta` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub equal: bool,
    pub max_difference: f64,
    pub worst_point: Option<Complex64>,
}

pub fn log_laplacian_equal(
    a: &WeightDensity,
    b: &WeightDensity,
    grid: &[Complex64],
    tol: f64,
) -> CriterionReport {
    let mut max_difference = 0.0;
    let mut worst_point = None;
    for &z in grid {
        let d = (a.weight.laplacian(z) - b.weight.laplacian(z)).abs();
        if worst_point.is_none() || d > max_difference {
            max_difference = d;
            worst_point = Some(z);
        }
    }
    CriterionReport {
        equal: !grid.is_empty() && max_difference <= tol,
        max_difference,
        worst_point,
    }
}

/// Holomorphic `p` with `Re p = u` and `p(0)` real, for a harmonic polynomial
/// `u`. Uses `p(z) = 2 u(z/2, z/(2i)) - u(0, 0)`; every step is a power-of-two
/// scaling or a multiplication by a power of `i`, so the coefficients are
/// exact in floating point.
pub fn harmonic_conjugate_poly(u: &RealPoly2) -> Result<Vec<Complex64>> {
    let lap = u.laplacian();
    let tol = 1e-10 * (1.0 + u.max_abs_coeff());
    if let Some((i, j, c)) = lap.terms().find(|t| t.2.abs() > tol) {
        return Err(Error::NotHarmonic {
            x_power: i,
            y_power: j,
            coefficient: c,
        });
    }
    let degree = u.degree().unwrap_or(0);
    let mut p = vec![Complex64::new(0.0, 0.0); degree + 1];
    for (i, j, c) in u.terms() {
        if c == 0.0 {
            continue;
        }
        let k = i + j;
        // (-i)^j
        let rot = match j % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, -1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 1.0),
        };
        p[k] += rot * (2.0 * c / 2f64.powi(k as i32));
    }
    p[0] -= u.coeff(0, 0);
    Ok(p)
}

fn eval_poly(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
}

/// The multiplier `exp(p/2)` taking `HL^2(alpha)` onto `HL^2(beta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceMap {
    p: Vec<Complex64>,
    source: WeightDensity,
    target: WeightDensity,
}

impl EquivalenceMap {
    pub fn exponent(&self) -> &[Complex64] {
        &self.p
    }

    pub fn source(&self) -> &WeightDensity {
        &self.source
    }

    pub fn target(&self) -> &WeightDensity {
        &self.target
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        (eval_poly(&self.p, z) / 2.0).exp()
    }

    pub fn is_constant(&self) -> bool {
        self.p.iter().skip(1).all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// Largest `| |m|^2 beta / alpha - 1 |` over the grid.
    pub fn max_relative_residual(&self, grid: &[Complex64]) -> f64 {
        grid.iter()
            .map(|&z| {
                let lhs = self.eval(z).norm_sqr() * self.target.eval(z);
                (lhs / self.source.eval(z) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds `m = exp(p/2)` with `Re p = phi_b - phi_a`, so that
/// `|m|^2 beta = alpha`.
pub fn build_equivalence_map(a: &WeightDensity, b: &WeightDensity) -> Result<EquivalenceMap> {
    if a.weight.non_polynomial_part() != b.weight.non_polynomial_part() {
        return Err(Error::Unsupported(
            "weights differ in a non-polynomial part; only harmonic polynomial differences are constructed"
                .into(),
        ));
    }
    let u = b.weight.polynomial_part().sub(&a.weight.polynomial_part());
    let p = harmonic_conjugate_poly(&u)?;
    Ok(EquivalenceMap {
        p,
        source: a.clone(),
        target: b.clone(),
    })
}

/// Segal-Bargmann exponent equivalent to a weight with constant Laplacian
/// `c > 0`, with `t = 4/c`.
pub fn segal_bargmann_partner(w: &WeightFunction) -> Result<(WeightFunction, f64)> {
    let c = w
        .constant_laplacian()
        .ok_or_else(|| Error::Unsupported("weight Laplacian is not constant".into()))?;
    if !(c > 0.0) {
        return Err(Error::Unsupported(format!("constant Laplacian {c} is not positive")));
    }
    let t = 4.0 / c;
    Ok((WeightFunction::segal_bargmann(t)?, t))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitaryReport {
    /// `||m f||^2_beta / ||f||^2_alpha` per sample.
    pub ratios: Vec<f64>,
    pub max_relative_error: f64,
    pub pass: bool,
}

pub fn verify_unitary(
    m: &EquivalenceMap,
    samples: &[SampleFunction],
    rule: &QuadratureRule,
    tol: f64,
) -> Result<UnitaryReport> {
    let ratios: Vec<f64> = samples
        .par_iter()
        .map(|f| {
            let src = weighted_norm_sq(m.source.weight(), f, rule)?;
            let tgt = rule.integrate(|z| {
                (m.eval(z) * f.eval(z)).norm_sqr() * m.target.eval(z)
            })?;
            if !(src > 0.0) {
                return Err(Error::ZeroNorm);
            }
            Ok(tgt / src)
        })
        .collect::<Result<_>>()?;
    let max_relative_error = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
    Ok(UnitaryReport {
        pass: max_relative_error <= tol,
        ratios,
        max_relative_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceRow {
    pub z: Complex64,
    pub alpha_k_alpha: f64,
    pub beta_k_beta: f64,
    pub relative_difference: f64,
    /// Degrees at which each side met the convergence test.
    pub degree_alpha: usize,
    pub degree_beta: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub rows: Vec<InvarianceRow>,
    pub max_relative_difference: f64,
    pub pass: bool,
}

/// Compares `alpha K_alpha` with `beta K_beta` at converged truncation
/// degrees. At a fixed degree the two truncated kernels differ unless the
/// multiplier is constant, so each side is read off where its own sequence
/// has converged.
pub fn verify_kernel_invariance(
    a: &WeightDensity,
    b: &WeightDensity,
    z_list: &[Complex64],
    degree: usize,
    rule: &QuadratureRule,
    tol: f64,
) -> Result<InvarianceReport> {
    let ka = KernelEstimate::new(a.weight(), degree, rule)?;
    let kb = KernelEstimate::new(b.weight(), degree, rule)?;
    let rows: Vec<InvarianceRow> = z_list
        .iter()
        .map(|&z| {
            let (va, na) = ka.converged_diag(z);
            let (vb, nb) = kb.converged_diag(z);
            let lhs = a.eval(z) * va;
            let rhs = b.eval(z) * vb;
            InvarianceRow {
                z,
                alpha_k_alpha: lhs,
                beta_k_beta: rhs,
                relative_difference: (lhs - rhs).abs() / lhs.abs(),
                degree_alpha: na,
                degree_beta: nb,
            }
        })
        .collect();
    let max_relative_difference = rows
        .iter()
        .map(|r| r.relative_difference)
        .fold(0.0, f64::max);
    Ok(InvarianceReport {
        pass: max_relative_difference <= tol,
        rows,
        max_relative_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid;
    use crate::quadrature::truncated_plane_rule;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn density(w: WeightFunction) -> WeightDensity {
        WeightDensity::new(w)
    }

    /// Expands `Re p(x + iy)` term by term, independently of `RealPoly2`.
    fn re_poly(p: &[Complex64], x: f64, y: f64) -> f64 {
        eval_poly(p, c(x, y)).re
    }

    #[test]
    fn harmonic_conjugates() {
        let mut u = RealPoly2::zero();
        u.add_term(1, 0, 1.0);
        assert_eq!(harmonic_conjugate_poly(&u).unwrap(), vec![c(0.0, 0.0), c(1.0, 0.0)]);

        let mut u = RealPoly2::zero();
        u.add_term(2, 0, 1.0);
        u.add_term(0, 2, -1.0);
        assert_eq!(
            harmonic_conjugate_poly(&u).unwrap(),
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]
        );

        let mut u = RealPoly2::zero();
        u.add_term(3, 0, 1.0);
        u.add_term(1, 2, -3.0);
        let p = harmonic_conjugate_poly(&u).unwrap();
        assert_eq!(p, vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        for (x, y) in [(0.3, -1.2), (2.0, 0.5)] {
            assert!((re_poly(&p, x, y) - u.eval(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_harmonic_is_rejected() {
        let mut u = RealPoly2::zero();
        u.add_term(2, 0, 1.0);
        match harmonic_conjugate_poly(&u) {
            Err(Error::NotHarmonic { x_power: 0, y_power: 0, coefficient }) => {
                assert_eq!(coefficient, 2.0)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn criterion_examples() {
        let g = grid::disk_lattice(c(0.0, 0.0), 2.0, 0.25);
        let a = density(WeightFunction::gaussian(1.0).unwrap());
        let b = density(WeightFunction::gaussian(1.0).unwrap().with_harmonic(&[c(0.0, 0.0), c(1.0, 0.0)]));
        assert!(log_laplacian_equal(&a, &b, &g, 1e-12).equal);
        let sb = density(WeightFunction::segal_bargmann(2.0).unwrap());
        let plain = density(WeightFunction::gaussian(2.0).unwrap());
        assert!(log_laplacian_equal(&sb, &plain, &g, 1e-12).equal);
        let steep = density(WeightFunction::gaussian(0.5).unwrap());
        let r = log_laplacian_equal(&a, &steep, &g, 1e-12);
        assert!(!r.equal);
        assert_eq!(r.max_difference, 4.0);
    }

    #[test]
    fn maps_from_examples() {
        let g = grid::disk_lattice(c(0.0, 0.0), 3.0, 0.3);
        let a = density(WeightFunction::gaussian(1.0).unwrap());
        let id = build_equivalence_map(&a, &a).unwrap();
        assert!(id.exponent().iter().all(|c| *c == Complex64::new(0.0, 0.0)));
        assert_eq!(id.eval(c(1.3, -0.4)), c(1.0, 0.0));

        let b = density(WeightFunction::gaussian(1.0).unwrap().with_harmonic(&[c(0.0, 0.0), c(2.0, 0.0)]));
        let m = build_equivalence_map(&a, &b).unwrap();
        assert!(m.max_relative_residual(&g) < 1e-10);
        assert!((m.eval(c(0.7, 0.2)) - c(0.7, 0.2).exp()).norm() < 1e-12);

        let t = 2.0;
        let scaled = a.scaled(PI * t).unwrap();
        let m = build_equivalence_map(&a, &scaled).unwrap();
        assert!(m.is_constant());
        assert!((m.eval(c(0.0, 0.0)).re - 1.0 / (PI * t).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn inequivalent_and_unsupported_pairs() {
        let a = density(WeightFunction::gaussian(1.0).unwrap());
        let b = density(WeightFunction::gaussian(0.5).unwrap());
        assert!(matches!(build_equivalence_map(&a, &b), Err(Error::NotHarmonic { .. })));
        let osc = density(WeightFunction::oscillatory(1.0, 0.5).unwrap());
        assert!(matches!(build_equivalence_map(&a, &osc), Err(Error::Unsupported(_))));
        let osc2 = density(
            WeightFunction::oscillatory(1.0, 0.5).unwrap().with_harmonic(&[c(0.0, 0.0), c(0.0, 1.0)]),
        );
        let m = build_equivalence_map(&osc, &osc2).unwrap();
        assert!(m.max_relative_residual(&grid::disk_lattice(c(0.0, 0.0), 3.0, 0.5)) < 1e-10);
    }

    #[test]
    fn unitary_and_invariance_for_linear_multiplier() {
        let a = density(WeightFunction::gaussian(1.0).unwrap());
        let b = density(WeightFunction::gaussian(1.0).unwrap().with_harmonic(&[c(0.0, 0.0), c(2.0, 0.0)]));
        let m = build_equivalence_map(&a, &b).unwrap();
        let rule = truncated_plane_rule(12.0, 192, 384).unwrap();
        let samples = vec![
            SampleFunction::polynomial(vec![c(1.0, 0.0)]),
            SampleFunction::polynomial(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
        ];
        let r = verify_unitary(&m, &samples, &rule, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
        let inv = verify_kernel_invariance(&a, &b, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)], 40, &rule, 1e-4)
            .unwrap();
        assert!(inv.pass, "{inv:?}");
    }

    #[test]
    fn constant_rescale_invariance_is_exact() {
        let a = density(WeightFunction::oscillatory(1.0, 0.5).unwrap());
        let b = a.scaled(3.0).unwrap();
        let rule = truncated_plane_rule(10.0, 96, 192).unwrap();
        let inv = verify_kernel_invariance(&a, &b, &[c(0.0, 0.0), c(0.5, 0.5)], 20, &rule, 1e-12).unwrap();
        assert!(inv.pass, "{inv:?}");
    }
}
