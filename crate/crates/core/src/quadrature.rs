//! Planar quadrature on disks, masked disks and truncations of the plane.
//!
//! Every rule is a polar tensor rule: Gauss-Legendre in the radius with the
//! Jacobian `r` folded into the weights, times the uniform trapezoid rule in
//! the angle. A logarithmic singularity at the rule center becomes the bounded
//! integrand `r log r`, so no special weights are needed as long as the caller
//! centers the rule on the singular point. No node is ever placed at the
//! center itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

const CHUNK: usize = 4096;

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes in increasing order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The integration domain a rule covers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Disk {
        center: Complex64,
        radius: f64,
    },
    MaskedDisk {
        center: Complex64,
        radius: f64,
        excluded_center: Complex64,
        excluded_radius: f64,
    },
    TruncatedPlane {
        center: Complex64,
        radius: f64,
    },
}

/// Area of the intersection of two disks.
fn lens_area(d: f64, r1: f64, r2: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return PI * r * r;
    }
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)).clamp(-1.0, 1.0).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)).clamp(-1.0, 1.0).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(0.0);
    r1 * r1 * a1 + r2 * r2 * a2 - 0.5 * k.sqrt()
}

impl Region {
    pub fn center(&self) -> Complex64 {
        match *self {
            Region::Disk { center, .. }
            | Region::MaskedDisk { center, .. }
            | Region::TruncatedPlane { center, .. } => center,
        }
    }

    pub fn radius(&self) -> f64 {
        match *self {
            Region::Disk { radius, .. }
            | Region::MaskedDisk { radius, .. }
            | Region::TruncatedPlane { radius, .. } => radius,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Region::Disk { radius, .. } | Region::TruncatedPlane { radius, .. } => {
                PI * radius * radius
            }
            Region::MaskedDisk {
                center,
                radius,
                excluded_center,
                excluded_radius,
            } => {
                let d = (center - excluded_center).norm();
                PI * radius * radius - lens_area(d, radius, excluded_radius)
            }
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            Region::Disk { center, radius } | Region::TruncatedPlane { center, radius } => {
                (z - center).norm() <= radius
            }
            Region::MaskedDisk {
                center,
                radius,
                excluded_center,
                excluded_radius,
            } => (z - center).norm() <= radius && (z - excluded_center).norm() >= excluded_radius,
        }
    }

    fn shifted(&self, by: Complex64) -> Region {
        self.mapped(|z| z + by)
    }

    fn mapped(&self, f: impl Fn(Complex64) -> Complex64) -> Region {
        match *self {
            Region::Disk { center, radius } => Region::Disk {
                center: f(center),
                radius,
            },
            Region::TruncatedPlane { center, radius } => Region::TruncatedPlane {
                center: f(center),
                radius,
            },
            Region::MaskedDisk {
                center,
                radius,
                excluded_center,
                excluded_radius,
            } => Region::MaskedDisk {
                center: f(center),
                radius,
                excluded_center: f(excluded_center),
                excluded_radius,
            },
        }
    }
}

/// Nodes and positive area weights for a planar region.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
    region: Region,
    n_r: usize,
    n_theta: usize,
}

/// A quadrature value together with the difference to its half-resolution
/// companion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

fn check_resolution(n_r: usize, n_theta: usize) -> Result<()> {
    if n_r < 2 {
        return Err(Error::InvalidParameter(format!("n_r = {n_r} must be at least 2")));
    }
    if n_theta < 4 {
        return Err(Error::InvalidParameter(format!(
            "n_theta = {n_theta} must be at least 4"
        )));
    }
    Ok(())
}

fn check_radius(name: &str, r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("{name} = {r} must be positive")));
    }
    Ok(())
}

fn polar_nodes(
    center: Complex64,
    radius: f64,
    n_r: usize,
    n_theta: usize,
) -> (Vec<Complex64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n_r);
    let dtheta = 2.0 * PI / n_theta as f64;
    let angles: Vec<Complex64> = (0..n_theta)
        .map(|j| Complex64::from_polar(1.0, j as f64 * dtheta))
        .collect();
    let mut nodes = Vec::with_capacity(n_r * n_theta);
    let mut weights = Vec::with_capacity(n_r * n_theta);
    for (xk, wk) in x.iter().zip(&w) {
        let r = 0.5 * radius * (1.0 + xk);
        let wr = 0.5 * radius * wk * r * dtheta;
        for e in &angles {
            nodes.push(center + e * r);
            weights.push(wr);
        }
    }
    (nodes, weights)
}

/// Tensor polar rule on `D(center, radius)`.
pub fn disk_rule(
    center: Complex64,
    radius: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<QuadratureRule> {
    check_radius("radius", radius)?;
    check_resolution(n_r, n_theta)?;
    let (nodes, weights) = polar_nodes(center, radius, n_r, n_theta);
    Ok(QuadratureRule {
        nodes,
        weights,
        region: Region::Disk { center, radius },
        n_r,
        n_theta,
    })
}

/// Polar rule on `D(center, radius)` with every node inside
/// `D(excluded_center, excluded_radius)` dropped.
pub fn masked_disk_rule(
    center: Complex64,
    radius: f64,
    excluded_center: Complex64,
    excluded_radius: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<QuadratureRule> {
    check_radius("radius", radius)?;
    check_radius("excluded_radius", excluded_radius)?;
    check_resolution(n_r, n_theta)?;
    let (nodes, weights) = polar_nodes(center, radius, n_r, n_theta);
    let (nodes, weights) = nodes
        .into_iter()
        .zip(weights)
        .filter(|(z, _)| (z - excluded_center).norm() >= excluded_radius)
        .unzip();
    Ok(QuadratureRule {
        nodes,
        weights,
        region: Region::MaskedDisk {
            center,
            radius,
            excluded_center,
            excluded_radius,
        },
        n_r,
        n_theta,
    })
}

/// Polar rule on `D(0, radius)` standing in for the whole plane.
pub fn truncated_plane_rule(radius: f64, n_r: usize, n_theta: usize) -> Result<QuadratureRule> {
    let mut rule = disk_rule(Complex64::new(0.0, 0.0), radius, n_r, n_theta)?;
    rule.region = Region::TruncatedPlane {
        center: Complex64::new(0.0, 0.0),
        radius,
    };
    Ok(rule)
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn center(&self) -> Complex64 {
        self.region.center()
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.n_r, self.n_theta)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        let partial: Vec<f64> = self
            .weights
            .chunks(CHUNK)
            .map(|c| c.iter().sum())
            .collect();
        pairwise_sum(&partial)
    }

    /// Bound on `|total_weight - area|` from node dropping: one radial or
    /// angular cell along the excluded circle. Zero for unmasked rules up to
    /// rounding.
    pub fn mask_tolerance(&self) -> f64 {
        match self.region {
            Region::MaskedDisk {
                radius,
                excluded_radius,
                ..
            } => {
                let dr = 0.5 * PI * radius / self.n_r as f64;
                let dtheta = 2.0 * PI * radius / self.n_theta as f64;
                2.0 * PI * excluded_radius * dr.max(dtheta)
            }
            _ => 1e-8 * self.region.area(),
        }
    }

    /// Rebuilds the same region at a different resolution.
    pub fn with_resolution(&self, n_r: usize, n_theta: usize) -> Result<Self> {
        match self.region {
            Region::Disk { center, radius } => disk_rule(center, radius, n_r, n_theta),
            Region::TruncatedPlane { center, radius } => {
                let mut rule = disk_rule(center, radius, n_r, n_theta)?;
                rule.region = self.region;
                Ok(rule)
            }
            Region::MaskedDisk {
                center,
                radius,
                excluded_center,
                excluded_radius,
            } => masked_disk_rule(center, radius, excluded_center, excluded_radius, n_r, n_theta),
        }
    }

    /// Companion rule at half the radial and angular resolution, used for
    /// error estimates.
    pub fn half_resolution(&self) -> Result<Self> {
        self.with_resolution((self.n_r / 2).max(2), (self.n_theta / 2).max(4))
    }

    /// The same rule translated so that its center sits at `center`.
    pub fn recentered(&self, center: Complex64) -> Self {
        let by = center - self.center();
        QuadratureRule {
            nodes: self.nodes.iter().map(|z| z + by).collect(),
            weights: self.weights.clone(),
            region: self.region.shifted(by),
            n_r: self.n_r,
            n_theta: self.n_theta,
        }
    }

    /// The rule rotated by `angle` about its center.
    pub fn rotated(&self, angle: f64) -> Self {
        let c = self.center();
        let e = Complex64::from_polar(1.0, angle);
        QuadratureRule {
            nodes: self.nodes.iter().map(|z| c + (z - c) * e).collect(),
            weights: self.weights.clone(),
            region: self.region.mapped(|z| c + (z - c) * e),
            n_r: self.n_r,
            n_theta: self.n_theta,
        }
    }

    /// `sum w_i f(z_i)`. Fails on the first node (in node order) where `f`
    /// is not finite.
    pub fn integrate<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(Complex64) -> f64 + Sync,
    {
        let partial: Vec<Result<f64>> = self
            .nodes
            .par_chunks(CHUNK)
            .zip(self.weights.par_chunks(CHUNK))
            .map(|(zs, ws)| {
                let mut acc = 0.0;
                for (&z, &w) in zs.iter().zip(ws) {
                    let v = f(z);
                    if !v.is_finite() {
                        return Err(Error::NonFinite { node: z, value: v });
                    }
                    acc += w * v;
                }
                Ok(acc)
            })
            .collect();
        let partial = partial.into_iter().collect::<Result<Vec<f64>>>()?;
        Ok(pairwise_sum(&partial))
    }

    /// Complex-valued counterpart of [`integrate`](Self::integrate).
    pub fn integrate_complex<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        let re = self.integrate(|z| f(z).re)?;
        let im = self.integrate(|z| f(z).im)?;
        Ok(Complex64::new(re, im))
    }

    /// Integral with a Richardson-style error estimate from the
    /// half-resolution companion.
    pub fn integrate_with_estimate<F>(&self, f: F) -> Result<Estimate>
    where
        F: Fn(Complex64) -> f64 + Sync,
    {
        let value = self.integrate(&f)?;
        let coarse = self.half_resolution()?.integrate(&f)?;
        Ok(Estimate {
            value,
            error: (value - coarse).abs(),
        })
    }
}
