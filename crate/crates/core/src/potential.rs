//! Logarithmic potentials: the fundamental solution `Gamma`, the cutoff `g`,
//! the compactly supported density `psi = g * Delta phi`, its potential
//! `Phi = Gamma * psi`, and the geometric constant `B`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid;
use crate::quadrature::{disk_rule, masked_disk_rule};
use crate::weights::{fd_laplacian, ScalarField, WeightFunction};

/// Radius outside which `psi` vanishes.
pub const PSI_SUPPORT: f64 = 2.0;

/// Analytic envelope for `B`: `log|zeta|` lies in `[0, log 3]` on the
/// integration region and the region has area at most `4 pi`.
pub const B_BRACKET: (f64, f64) = (0.0, 2.0 * 1.098_612_288_668_109_8);

/// Default resolution for `Phi` evaluations.
pub const DEFAULT_RESOLUTION: usize = 256;

/// Step for the finite-difference Poisson residual of `Phi`.
pub const POISSON_FD_STEP: f64 = 1e-2;

/// `(1 / 2 pi) log |z|`.
pub fn gamma(z: Complex64) -> Result<f64> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::Domain("fundamental solution is singular at 0".into()));
    }
    Ok(z.norm().ln() / (2.0 * PI))
}

fn smooth_step(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Smooth radial cutoff: exactly 1 on the closed unit disk, exactly 0
/// outside `D(0, 2)`, values in `[0, 1]`.
pub fn cutoff_g(z: Complex64) -> f64 {
    let r = z.norm();
    let inner = smooth_step(2.0 - r);
    let outer = smooth_step(r - 1.0);
    inner / (inner + outer)
}

/// `Phi(z) = int Gamma(zeta) psi(z - zeta) d zeta`, integrated over
/// `D(0, |z| + support)` with a polar rule centered at the singularity.
pub fn convolve_fundamental(psi: &ScalarField, z: Complex64, resolution: usize) -> Result<f64> {
    let support = psi.support_radius().ok_or_else(|| {
        Error::InvalidParameter("convolution needs a compactly supported density".into())
    })?;
    if support == 0.0 {
        return Ok(0.0);
    }
    let window = z.norm() + support;
    let rule = disk_rule(Complex64::new(0.0, 0.0), window, resolution, 2 * resolution)?;
    rule.integrate(|zeta| {
        let p = psi.eval(z - zeta);
        if p == 0.0 {
            0.0
        } else {
            p * zeta.norm().ln() / (2.0 * PI)
        }
    })
}

/// `psi = g * Delta phi` and its potential.
#[derive(Clone, Debug)]
pub struct PotentialField {
    psi: ScalarField,
    weight: WeightFunction,
    m_bound: f64,
    b_used: f64,
    resolution: usize,
}

/// Builds `psi = g * Delta phi` after checking `0 <= Delta phi <= M` on a
/// lattice covering the support of `g`.
pub fn make_psi(w: &WeightFunction, m_bound: f64) -> Result<PotentialField> {
    if !(m_bound.is_finite() && m_bound >= 0.0) {
        return Err(Error::InvalidParameter(format!("M = {m_bound} must be nonnegative")));
    }
    for z in grid::disk_lattice(Complex64::new(0.0, 0.0), PSI_SUPPORT, 0.05) {
        let lap = w.laplacian(z);
        if !(0.0..=m_bound).contains(&lap) {
            return Err(Error::BoundsViolation {
                point: z,
                value: lap,
                lower: 0.0,
                upper: m_bound,
            });
        }
    }
    let weight = w.clone();
    let psi = ScalarField::new(move |z| {
        let g = cutoff_g(z);
        if g == 0.0 {
            0.0
        } else {
            g * weight.laplacian(z)
        }
    })
    .with_support(PSI_SUPPORT);
    Ok(PotentialField {
        psi,
        weight: w.clone(),
        m_bound,
        b_used: B_BRACKET.1,
        resolution: DEFAULT_RESOLUTION,
    })
}

impl PotentialField {
    /// The zero density; `Phi` vanishes identically.
    pub fn zero(weight: &WeightFunction, m_bound: f64) -> Self {
        PotentialField {
            psi: ScalarField::zero(),
            weight: weight.clone(),
            m_bound,
            b_used: B_BRACKET.1,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    /// Sets the value of `B` used by the upper-bound check. The default is
    /// the upper end of [`B_BRACKET`].
    pub fn with_b_used(mut self, b: f64) -> Self {
        self.b_used = b;
        self
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn m_bound(&self) -> f64 {
        self.m_bound
    }

    pub fn b_used(&self) -> f64 {
        self.b_used
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn phi(&self, z: Complex64) -> Result<f64> {
        convolve_fundamental(&self.psi, z, self.resolution)
    }

    /// `Delta Phi - psi` at `z` by finite differences.
    pub fn poisson_residual(&self, z: Complex64, h: f64) -> Result<f64> {
        // Propagate quadrature failures instead of folding NaN into the stencil.
        for dz in [0.0, h, -h].iter().flat_map(|&d| [Complex64::new(d, 0.0), Complex64::new(0.0, d)]) {
            self.phi(z + dz)?;
        }
        let lap = fd_laplacian(|u| self.phi(u).unwrap_or(f64::NAN), z, h);
        Ok(lap - self.psi.eval(z))
    }

    /// The weight-dependent constant `e^{B M - Phi(0)} / pi`, never larger
    /// than `e^{(B + 1/4) M} / pi`.
    pub fn tight_local_constant(&self) -> Result<f64> {
        Ok((self.b_used * self.m_bound - self.phi(Complex64::new(0.0, 0.0))?).exp() / PI)
    }
}

/// The constant `B = (1/2pi) sup_{|w| <= 1} int_{D(w,2) \ D(0,1)} log|zeta|`
/// approximated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BConstant {
    /// `grid_sup + margin`, the value certificates use.
    pub value: f64,
    pub grid_sup: f64,
    /// Difference to the half-resolution companion at the maximizer.
    pub margin: f64,
    pub argmax: Complex64,
    pub grid_points: usize,
    pub bracket: (f64, f64),
}

/// Lattice of spacing `2/(n-1)` clipped to the closed unit disk, plus `4n`
/// points on the unit circle.
pub fn omega_grid(n: usize) -> Vec<Complex64> {
    let origin = Complex64::new(0.0, 0.0);
    let mut pts = grid::disk_lattice(origin, 1.0, 2.0 / (n - 1) as f64);
    pts.extend(grid::circle(origin, 1.0, 4 * n));
    pts
}

/// Computes [`BConstant`] for an arbitrary integrand over the masked regions.
pub fn compute_b_with<F>(integrand: F, resolution: usize, omega_grid_size: usize) -> Result<BConstant>
where
    F: Fn(Complex64) -> f64 + Sync,
{
    if omega_grid_size < 9 {
        return Err(Error::InvalidParameter(format!(
            "omega_grid_size = {omega_grid_size} must be at least 9"
        )));
    }
    let origin = Complex64::new(0.0, 0.0);
    // Node dropping along the cut is first order, so masked rules run at
    // four times the node count of a plain rule.
    let (n_r, n_theta) = (2 * resolution, 4 * resolution);
    let pts = omega_grid(omega_grid_size);
    let values: Vec<f64> = pts
        .par_iter()
        .map(|&w| {
            masked_disk_rule(w, 2.0, origin, 1.0, n_r, n_theta)?
                .integrate(&integrand)
                .map(|v| v / (2.0 * PI))
        })
        .collect::<Result<_>>()?;
    let (k, &grid_sup) = values
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let argmax = pts[k];
    let coarse = masked_disk_rule(argmax, 2.0, origin, 1.0, n_r, n_theta)?
        .half_resolution()?
        .integrate(&integrand)?
        / (2.0 * PI);
    let margin = (grid_sup - coarse).abs();
    Ok(BConstant {
        value: grid_sup + margin,
        grid_sup,
        margin,
        argmax,
        grid_points: pts.len(),
        bracket: B_BRACKET,
    })
}

pub fn compute_b(resolution: usize, omega_grid_size: usize) -> Result<BConstant> {
    compute_b_with(|z| z.norm().ln(), resolution, omega_grid_size)
}

/// Checks of `Phi <= B M` on the unit disk, `Phi(0) >= -M/4`, and the
/// Poisson equation `Delta Phi = psi`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PotentialReport {
    pub max_phi: f64,
    pub argmax_phi: Complex64,
    pub upper_bound: f64,
    pub upper_ok: bool,
    pub phi0: f64,
    pub lower_bound: f64,
    pub lower_ok: bool,
    pub max_poisson_residual: f64,
    pub residual_tolerance: f64,
    pub interior_points: usize,
    pub poisson_ok: bool,
    pub pass: bool,
}

/// Verifies the three potential bounds on `grid` (points in the unit disk).
/// The Poisson residual is checked at points at least two stencil steps
/// inside the unit disk, against `5e-3 (1 + M)`.
pub fn verify_potential_bounds(
    pf: &PotentialField,
    grid: &[Complex64],
    tol: f64,
) -> Result<PotentialReport> {
    let m = pf.m_bound;
    let phis: Vec<f64> = grid.par_iter().map(|&z| pf.phi(z)).collect::<Result<_>>()?;
    let (k, max_phi) = phis
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
    let upper_bound = pf.b_used * m;
    let phi0 = pf.phi(Complex64::new(0.0, 0.0))?;
    let lower_bound = -m / 4.0;
    let h = POISSON_FD_STEP;
    let interior: Vec<Complex64> = grid
        .iter()
        .copied()
        .filter(|z| z.norm() <= 1.0 - 2.0 * h)
        .collect();
    let residuals: Vec<f64> = interior
        .par_iter()
        .map(|&z| pf.poisson_residual(z, h).map(f64::abs))
        .collect::<Result<_>>()?;
    let max_res = residuals.iter().copied().fold(0.0, f64::max);
    let residual_tolerance = 5e-3 * (1.0 + m);
    let upper_ok = grid.is_empty() || max_phi <= upper_bound + tol;
    let lower_ok = phi0 >= lower_bound - tol.min(1e-4);
    let poisson_ok = max_res <= residual_tolerance;
    Ok(PotentialReport {
        max_phi,
        argmax_phi: grid.get(k).copied().unwrap_or_default(),
        upper_bound,
        upper_ok,
        phi0,
        lower_bound,
        lower_ok,
        max_poisson_residual: max_res,
        residual_tolerance,
        interior_points: interior.len(),
        poisson_ok,
        pass: upper_ok && lower_ok && poisson_ok,
    })
}
