//! Reproducing-kernel diagonals.
//!
//! For a general weight the kernel of the degree-`N` polynomial subspace is
//! `K_N(z, z) = v(z)^H G^{-1} v(z)` with `v(z) = (1, (z-c), ..., (z-c)^N)` and
//! `G` the Gram matrix of those monomials under `e^{-phi}`, integrated with a
//! planar rule centered at `c`. `G` is Jacobi-scaled and Cholesky factored,
//! `G = L L^H`; then `K_n(z, z)` for every `n <= N` is a partial sum of
//! `|L^{-1} v(z)|^2`, so the sequence is nondecreasing in `n` by construction.
//!
//! Densities are taken as given: the kernel for `s * e^{-phi}` is the kernel
//! for `e^{-phi}` divided by `s`. The Segal-Bargmann density
//! `(1/(pi t)) e^{-|z|^2/t}` therefore has kernel `e^{z conj(w)/t}`, while the
//! bare weight `e^{-|z|^2/t}` has kernel `e^{z conj(w)/t} / (pi t)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{truncated_plane_rule, QuadratureRule};
use crate::weights::WeightFunction;

/// Scaled Gram matrices with a larger condition number are cut back to the
/// largest leading block below this threshold.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Default maximal degree.
pub const DEFAULT_DEGREE: usize = 40;

const CHUNK: usize = 2048;

/// Segal-Bargmann kernel `e^{z conj(w) / t}`.
pub fn sb_kernel(z: Complex64, w: Complex64, t: f64) -> Complex64 {
    (z * w.conj() / t).exp()
}

/// Entire test function `p(z) e^{a z}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleFunction {
    pub coeffs: Vec<Complex64>,
    pub exp_rate: Option<Complex64>,
}

impl SampleFunction {
    pub fn polynomial(coeffs: Vec<Complex64>) -> Self {
        SampleFunction {
            coeffs,
            exp_rate: None,
        }
    }

    pub fn exponential(rate: Complex64) -> Self {
        SampleFunction {
            coeffs: vec![Complex64::new(1.0, 0.0)],
            exp_rate: Some(rate),
        }
    }

    /// Taylor polynomial of `e^{a z}` through `z^degree`.
    pub fn truncated_exponential(rate: Complex64, degree: usize) -> Self {
        let mut coeffs = Vec::with_capacity(degree + 1);
        let mut c = Complex64::new(1.0, 0.0);
        for k in 0..=degree {
            coeffs.push(c);
            c *= rate / (k + 1) as f64;
        }
        Self::polynomial(coeffs)
    }

    /// Polynomial of exact degree `degree` with coefficients uniform in the
    /// unit square, scaled by `1/k!` so that it stays integrable against
    /// Gaussian weights without overwhelming the low-order terms.
    pub fn random_polynomial<R: Rng + ?Sized>(rng: &mut R, degree: usize) -> Self {
        let mut fact = 1.0;
        let coeffs = (0..=degree)
            .map(|k| {
                if k > 0 {
                    fact *= k as f64;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                c / fact.sqrt()
            })
            .collect();
        Self::polynomial(coeffs)
    }

    pub fn degree(&self) -> Option<usize> {
        if self.exp_rate.is_some() {
            return None;
        }
        self.coeffs.iter().rposition(|c| *c != Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let p = self
            .coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c);
        match self.exp_rate {
            Some(a) => p * (a * z).exp(),
            None => p,
        }
    }

    /// `z -> f(z0 + z)`.
    pub fn translate(&self, z0: Complex64) -> Self {
        // Taylor shift of the polynomial part, then absorb e^{a z0}.
        let n = self.coeffs.len();
        let mut shifted = self.coeffs.clone();
        for i in 0..n {
            for j in (i..n.saturating_sub(1)).rev() {
                let next = shifted[j + 1];
                shifted[j] += z0 * next;
            }
        }
        let scale = match self.exp_rate {
            Some(a) => (a * z0).exp(),
            None => Complex64::new(1.0, 0.0),
        };
        SampleFunction {
            coeffs: shifted.into_iter().map(|c| c * scale).collect(),
            exp_rate: self.exp_rate,
        }
    }
}

/// Truncated-plane rule sized by [`WeightFunction::truncation_hint`] for
/// monomials up to `degree`, with `resolution` radial and `2 * resolution`
/// angular nodes.
pub fn plane_rule_for(w: &WeightFunction, degree: usize, resolution: usize) -> Result<QuadratureRule> {
    truncated_plane_rule(w.truncation_hint(degree)?, resolution, 2 * resolution)
}

/// `||f||^2 = int |f|^2 e^{-phi}` over the rule.
pub fn weighted_norm_sq(w: &WeightFunction, f: &SampleFunction, rule: &QuadratureRule) -> Result<f64> {
    rule.integrate(|z| f.eval(z).norm_sqr() * (-w.eval(z)).exp())
}

/// Gram matrix `G_{mn} = int (z-c)^m conj((z-c)^n) e^{-phi(z)} dz` with `c`
/// the rule center. Only the upper triangle is accumulated; the lower one is
/// its conjugate, so the result is exactly Hermitian.
pub fn gram_matrix(w: &WeightFunction, degree: usize, rule: &QuadratureRule) -> Result<DMatrix<Complex64>> {
    let n = degree + 1;
    let center = rule.center();
    let partial: Vec<Result<DMatrix<Complex64>>> = rule
        .nodes()
        .par_chunks(CHUNK)
        .zip(rule.weights().par_chunks(CHUNK))
        .map(|(zs, ws)| {
            let mut rows = DMatrix::<Complex64>::zeros(zs.len(), n);
            for (i, (&z, &wt)) in zs.iter().zip(ws).enumerate() {
                let density = wt * (-w.eval(z)).exp();
                if !density.is_finite() {
                    return Err(Error::NonFinite {
                        node: z,
                        value: density,
                    });
                }
                let u = z - center;
                let mut p = Complex64::new(density.sqrt(), 0.0);
                for k in 0..n {
                    rows[(i, k)] = p;
                    p *= u;
                }
            }
            // sum_i p_{im} conj(p_{in})
            Ok(rows.transpose() * rows.conjugate())
        })
        .collect();
    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    for block in partial {
        gram += block?;
    }
    for i in 0..n {
        gram[(i, i)] = Complex64::new(gram[(i, i)].re, 0.0);
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)].conj();
        }
    }
    Ok(gram)
}

fn scaled_condition(scaled: &DMatrix<Complex64>, n: usize) -> (f64, f64) {
    let block = scaled.view((0, 0), (n, n)).into_owned();
    let eig = SymmetricEigen::new(block);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Factored Gram matrix and the truncated kernel it defines.
#[derive(Clone, Debug)]
pub struct KernelEstimate {
    degree_requested: usize,
    degree: usize,
    center: Complex64,
    rule_resolution: (usize, usize),
    scale: Vec<f64>,
    chol: Cholesky<Complex64, Dyn>,
    condition_estimate: f64,
}

impl KernelEstimate {
    /// Assembles and factors the Gram matrix for degrees `0..=degree`. If the
    /// scaled matrix has condition number above [`CONDITION_LIMIT`], the
    /// degree is lowered to the largest well-conditioned leading block.
    pub fn new(w: &WeightFunction, degree: usize, rule: &QuadratureRule) -> Result<Self> {
        let gram = gram_matrix(w, degree, rule)?;
        let scale: Vec<f64> = (0..=degree).map(|k| gram[(k, k)].re.sqrt()).collect();
        if let Some(k) = scale.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: gram[(k, k)].re,
            });
        }
        let scaled = DMatrix::from_fn(degree + 1, degree + 1, |i, j| {
            gram[(i, j)] / (scale[i] * scale[j])
        });
        let mut size = degree + 1;
        let (mut min, mut max) = scaled_condition(&scaled, size);
        while size > 1 && !(min > 0.0 && max / min <= CONDITION_LIMIT) {
            size -= 1;
            (min, max) = scaled_condition(&scaled, size);
        }
        if !(min > 0.0) {
            return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
        }
        let block = scaled.view((0, 0), (size, size)).into_owned();
        let chol = Cholesky::new(block).ok_or(Error::NotPositiveDefinite { min_eigenvalue: min })?;
        Ok(KernelEstimate {
            degree_requested: degree,
            degree: size - 1,
            center: rule.center(),
            rule_resolution: rule.resolution(),
            scale: scale[..size].to_vec(),
            chol,
            condition_estimate: max / min,
        })
    }

    pub fn degree_requested(&self) -> usize {
        self.degree_requested
    }

    /// Degree actually used after any conditioning cutback.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn degraded(&self) -> bool {
        self.degree < self.degree_requested
    }

    /// Condition number of the Jacobi-scaled Gram block in use.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn rule_resolution(&self) -> (usize, usize) {
        self.rule_resolution
    }

    fn whitened(&self, z: Complex64) -> DVector<Complex64> {
        let u = z - self.center;
        let mut p = Complex64::new(1.0, 0.0);
        let mut v = DVector::<Complex64>::zeros(self.scale.len());
        for (k, s) in self.scale.iter().enumerate() {
            v[k] = p / *s;
            p *= u;
        }
        self.chol
            .l_dirty()
            .solve_lower_triangular(&v)
            .expect("cholesky factor has a positive diagonal")
    }

    /// `K_N(z, z)` at the effective degree.
    pub fn diag(&self, z: Complex64) -> f64 {
        self.whitened(z).iter().map(|y| y.norm_sqr()).sum()
    }

    /// `K_0(z, z), ..., K_N(z, z)`; entries above the effective degree repeat
    /// the last value.
    pub fn diag_by_degree(&self, z: Complex64) -> Vec<f64> {
        let y = self.whitened(z);
        let mut acc = 0.0;
        let mut out: Vec<f64> = y
            .iter()
            .map(|y| {
                acc += y.norm_sqr();
                acc
            })
            .collect();
        out.resize(self.degree_requested + 1, acc);
        out
    }

    /// First degree `n >= 5` with `|K_n - K_{n-5}| < 1e-8 K_n`, falling back to
    /// the effective degree. Returns `(K_n, n)`.
    pub fn converged_diag(&self, z: Complex64) -> (f64, usize) {
        let seq = self.diag_by_degree(z);
        for n in 5..=self.degree {
            if (seq[n] - seq[n - 5]).abs() < 1e-8 * seq[n] {
                return (seq[n], n);
            }
        }
        (seq[self.degree], self.degree)
    }

    /// `|f(z)|^2 / ||f||^2` evaluated through the Gram matrix, for a
    /// polynomial in `z - center` given by `coeffs`. Used to cross-check the
    /// quadrature norm.
    pub fn gram_norm_sq(&self, coeffs: &[Complex64]) -> Option<f64> {
        if coeffs.len() > self.scale.len() {
            return None;
        }
        let mut u = DVector::<Complex64>::zeros(self.scale.len());
        for (k, c) in coeffs.iter().enumerate() {
            u[k] = c.conj() * self.scale[k];
        }
        // u^H L L^H u
        let lu = self.chol.l().adjoint() * &u;
        Some(lu.iter().map(|x| x.norm_sqr()).sum())
    }
}

pub fn kernel_diag(w: &WeightFunction, degree: usize, rule: &QuadratureRule, z: Complex64) -> Result<f64> {
    Ok(KernelEstimate::new(w, degree, rule)?.diag(z))
}

/// `|f(z)|^2 / ||f||^2` under `e^{-phi}`.
pub fn extremal_ratio(
    w: &WeightFunction,
    f: &SampleFunction,
    z: Complex64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let norm = weighted_norm_sq(w, f, rule)?;
    if !(norm > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(f.eval(z).norm_sqr() / norm)
}
