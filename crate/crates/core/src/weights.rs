//! Weight exponents `phi` for the measure `e^{-phi(z)} dz`, with closed-form
//! Laplacians.
//!
//! Four families are built in:
//!
//! * `gaussian`: `|z|^2 / t`
//! * `gaussian_harmonic`: `a |z|^2 + Re(b z^2 + c z) + d`
//! * `oscillatory`: `a |z|^2 + eps cos(x) cos(y)`
//! * `potential_defined`: `a |z|^2 + (Gamma * psi)(z)` for a smooth radial
//!   bump `psi >= 0`
//!
//! Any weight may carry an extra harmonic addend `Re p(z)` and a translation
//! `z -> z + shift`. Numerical experiments assume `Delta phi >= c0 > 0`
//! everywhere: with a vanishing Laplacian the monomials need not be square
//! integrable and Gram matrices diverge.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::RealPoly2;
use crate::quadrature::gauss_legendre;

const BUMP_NODES: usize = 96;

/// A real field on the plane, optionally with declared compact support.
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<dyn Fn(Complex64) -> f64 + Send + Sync>,
    support_radius: Option<f64>,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarField")
            .field("support_radius", &self.support_radius)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(f: impl Fn(Complex64) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            eval: Arc::new(f),
            support_radius: None,
        }
    }

    /// Declares the support `D(0, r)`; evaluation returns exactly zero outside.
    pub fn with_support(mut self, r: f64) -> Self {
        self.support_radius = Some(r);
        self
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn zero() -> Self {
        ScalarField::new(|_| 0.0).with_support(0.0)
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match self.support_radius {
            Some(r) if z.norm() > r => 0.0,
            _ => (self.eval)(z),
        }
    }
}

/// Five-point finite-difference Laplacian with step `h`.
pub fn fd_laplacian(field: impl Fn(Complex64) -> f64, z: Complex64, h: f64) -> f64 {
    let hx = Complex64::new(h, 0.0);
    let hy = Complex64::new(0.0, h);
    (field(z + hx) + field(z - hx) + field(z + hy) + field(z - hy) - 4.0 * field(z)) / (h * h)
}

/// Smooth radial bump `amplitude * exp(1 - 1/(1 - s^2/radius^2))`, `s = |z - center|`.
#[derive(Clone, Debug)]
pub struct RadialBump {
    amplitude: f64,
    radius: f64,
    center: Complex64,
    rule: Arc<(Vec<f64>, Vec<f64>)>,
}

impl PartialEq for RadialBump {
    fn eq(&self, other: &Self) -> bool {
        self.amplitude == other.amplitude
            && self.radius == other.radius
            && self.center == other.center
    }
}

impl RadialBump {
    pub fn new(amplitude: f64, radius: f64, center: Complex64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bump amplitude {amplitude} must be nonnegative"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bump radius {radius} must be positive"
            )));
        }
        Ok(RadialBump {
            amplitude,
            radius,
            center,
            rule: Arc::new(gauss_legendre(BUMP_NODES)),
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    fn profile(&self, s: f64) -> f64 {
        let q = s / self.radius;
        if q >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - q * q)).exp()
        }
    }

    pub fn density(&self, z: Complex64) -> f64 {
        self.profile((z - self.center).norm())
    }

    /// `int_a^b f(s) ds` with the cached Gauss-Legendre rule.
    fn gl(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let (x, w) = &*self.rule;
        let half = 0.5 * (b - a);
        x.iter()
            .zip(w)
            .map(|(x, w)| w * f(a + half * (1.0 + x)))
            .sum::<f64>()
            * half
    }

    /// Logarithmic potential `(Gamma * density)(z)`. For a radial density
    /// this is `int_0^radius s rho(s) log max(r, s) ds` with `r = |z - center|`.
    pub fn potential(&self, z: Complex64) -> f64 {
        let r = (z - self.center).norm();
        let split = r.min(self.radius);
        let inner = if r > 0.0 {
            r.ln() * self.gl(0.0, split, |s| s * self.profile(s))
        } else {
            0.0
        };
        let outer = self.gl(split, self.radius, |s| s * self.profile(s) * s.ln());
        inner + outer
    }

    /// Total mass `int density`.
    pub fn mass(&self) -> f64 {
        2.0 * PI * self.gl(0.0, self.radius, |s| s * self.profile(s))
    }
}

/// Built-in weight families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Gaussian { t: f64 },
    GaussianHarmonic { a: f64, b: Complex64, c: Complex64, d: f64 },
    Oscillatory { a: f64, eps: f64 },
    PotentialDefined { a: f64, bump: RadialBump },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::GaussianHarmonic { .. } => "gaussian_harmonic",
            Family::Oscillatory { .. } => "oscillatory",
            Family::PotentialDefined { .. } => "potential_defined",
        }
    }

    fn value(&self, u: Complex64) -> f64 {
        match self {
            Family::Gaussian { t } => u.norm_sqr() / t,
            Family::GaussianHarmonic { a, b, c, d } => {
                a * u.norm_sqr() + (b * u * u + c * u).re + d
            }
            Family::Oscillatory { a, eps } => a * u.norm_sqr() + eps * u.re.cos() * u.im.cos(),
            Family::PotentialDefined { a, bump } => a * u.norm_sqr() + bump.potential(u),
        }
    }

    fn laplacian(&self, u: Complex64) -> f64 {
        match self {
            Family::Gaussian { t } => 4.0 / t,
            Family::GaussianHarmonic { a, .. } => 4.0 * a,
            Family::Oscillatory { a, eps } => 4.0 * a - 2.0 * eps * u.re.cos() * u.im.cos(),
            Family::PotentialDefined { a, bump } => 4.0 * a + bump.density(u),
        }
    }

    fn default_bounds(&self) -> (f64, f64) {
        match self {
            Family::Gaussian { t } => (4.0 / t, 4.0 / t),
            Family::GaussianHarmonic { a, .. } => (4.0 * a, 4.0 * a),
            Family::Oscillatory { a, eps } => ((4.0 * a - 2.0 * eps).max(0.0), 4.0 * a + 2.0 * eps),
            Family::PotentialDefined { a, bump } => (4.0 * a, 4.0 * a + bump.amplitude()),
        }
    }

    /// Coefficient of `|z|^2` and of `z^2` (inside `Re`).
    fn quadratic_part(&self) -> (f64, Complex64) {
        match self {
            Family::Gaussian { t } => (1.0 / t, Complex64::new(0.0, 0.0)),
            Family::GaussianHarmonic { a, b, .. } => (*a, *b),
            Family::Oscillatory { a, .. } | Family::PotentialDefined { a, .. } => {
                (*a, Complex64::new(0.0, 0.0))
            }
        }
    }
}

/// Non-polynomial part of a weight, with the translation already applied.
#[derive(Clone, Debug, PartialEq)]
pub enum NonPolynomialPart {
    Cosine { eps: f64, shift: Complex64 },
    Bump { bump: RadialBump, shift: Complex64 },
}

/// A weight exponent `phi` together with declared bounds `m <= Delta phi <= M`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFunction {
    family: Family,
    harmonic: Vec<Complex64>,
    shift: Complex64,
    bounds: (f64, f64),
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
    }
}

impl WeightFunction {
    fn from_family(family: Family) -> Self {
        let bounds = family.default_bounds();
        WeightFunction {
            family,
            harmonic: Vec::new(),
            shift: Complex64::new(0.0, 0.0),
            bounds,
        }
    }

    /// `|z|^2 / t`.
    pub fn gaussian(t: f64) -> Result<Self> {
        Ok(Self::from_family(Family::Gaussian { t: positive("t", t)? }))
    }

    /// `a |z|^2 + Re(b z^2 + c z) + d`; integrable only for `|b| < a`.
    pub fn gaussian_harmonic(a: f64, b: Complex64, c: Complex64, d: f64) -> Result<Self> {
        let a = positive("a", a)?;
        if !(b.norm() < a) {
            return Err(Error::InvalidParameter(format!(
                "|b| = {} must be below a = {a} for the weight to be integrable",
                b.norm()
            )));
        }
        if !(c.re.is_finite() && c.im.is_finite() && d.is_finite()) {
            return Err(Error::InvalidParameter("non-finite harmonic coefficient".into()));
        }
        Ok(Self::from_family(Family::GaussianHarmonic { a, b, c, d }))
    }

    /// Exponent of the Segal-Bargmann density `(1/(pi t)) e^{-|z|^2/t}`.
    pub fn segal_bargmann(t: f64) -> Result<Self> {
        let t = positive("t", t)?;
        Self::gaussian_harmonic(
            1.0 / t,
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            (PI * t).ln(),
        )
    }

    /// `a |z|^2 + eps cos(x) cos(y)`. The Laplacian is
    /// `4a - 2 eps cos(x) cos(y)`, nonnegative only when `eps <= 2a`;
    /// larger `eps` is accepted here and caught by bound validation.
    pub fn oscillatory(a: f64, eps: f64) -> Result<Self> {
        let a = positive("a", a)?;
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
        }
        Ok(Self::from_family(Family::Oscillatory { a, eps }))
    }

    /// `a |z|^2 + (Gamma * psi)(z)` with `psi` the given bump.
    pub fn potential_defined(a: f64, bump: RadialBump) -> Result<Self> {
        let a = positive("a", a)?;
        Ok(Self::from_family(Family::PotentialDefined { a, bump }))
    }

    /// Adds `Re p(z)` (coefficients in increasing degree) to the exponent.
    pub fn with_harmonic(mut self, p: &[Complex64]) -> Self {
        if self.harmonic.len() < p.len() {
            self.harmonic.resize(p.len(), Complex64::new(0.0, 0.0));
        }
        for (h, c) in self.harmonic.iter_mut().zip(p) {
            *h += c;
        }
        self
    }

    /// Replaces the declared Laplacian bounds.
    pub fn with_bounds(mut self, lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower <= upper) {
            return Err(Error::InvalidParameter(format!(
                "laplacian bounds [{lower}, {upper}] must satisfy 0 <= m <= M"
            )));
        }
        self.bounds = (lower, upper);
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn harmonic(&self) -> &[Complex64] {
        &self.harmonic
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn laplacian_bounds(&self) -> (f64, f64) {
        self.bounds
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let u = z + self.shift;
        let h: Complex64 = self
            .harmonic
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * u + c);
        self.family.value(u) + h.re
    }

    pub fn laplacian(&self, z: Complex64) -> f64 {
        self.family.laplacian(z + self.shift)
    }

    /// True when the Laplacian is the same constant everywhere.
    pub fn constant_laplacian(&self) -> Option<f64> {
        match &self.family {
            Family::Gaussian { t } => Some(4.0 / t),
            Family::GaussianHarmonic { a, .. } => Some(4.0 * a),
            Family::Oscillatory { a, eps } if *eps == 0.0 => Some(4.0 * a),
            Family::PotentialDefined { a, bump } if bump.amplitude() == 0.0 => Some(4.0 * a),
            _ => None,
        }
    }

    /// `omega -> phi(z0 + omega)`.
    pub fn translate(&self, z0: Complex64) -> Self {
        WeightFunction {
            shift: self.shift + z0,
            ..self.clone()
        }
    }

    /// Polynomial part of `phi` as a function of `(x, y)`, translation applied.
    pub fn polynomial_part(&self) -> RealPoly2 {
        let mut p = match &self.family {
            Family::Gaussian { t } => RealPoly2::radial_quadratic(1.0 / t),
            Family::GaussianHarmonic { a, b, c, d } => RealPoly2::radial_quadratic(*a)
                .add(&RealPoly2::real_part_of(&[Complex64::new(*d, 0.0), *c, *b])),
            Family::Oscillatory { a, .. } | Family::PotentialDefined { a, .. } => {
                RealPoly2::radial_quadratic(*a)
            }
        };
        p = p.add(&RealPoly2::real_part_of(&self.harmonic));
        p.translate(self.shift.re, self.shift.im)
    }

    /// Whatever is left of `phi` after [`polynomial_part`](Self::polynomial_part).
    pub fn non_polynomial_part(&self) -> Option<NonPolynomialPart> {
        match &self.family {
            Family::Oscillatory { eps, .. } if *eps != 0.0 => Some(NonPolynomialPart::Cosine {
                eps: *eps,
                shift: self.shift,
            }),
            Family::PotentialDefined { bump, .. } if bump.amplitude() != 0.0 => {
                Some(NonPolynomialPart::Bump {
                    bump: bump.clone(),
                    shift: self.shift,
                })
            }
            _ => None,
        }
    }

    /// Checks that `e^{-phi}` decays like a Gaussian: the harmonic addend has
    /// degree at most two and the `z^2` coefficient stays below the `|z|^2` one.
    pub fn check_integrable(&self) -> Result<()> {
        let degree = self
            .harmonic
            .iter()
            .rposition(|c| *c != Complex64::new(0.0, 0.0));
        if matches!(degree, Some(d) if d > 2) {
            return Err(Error::NotIntegrable(format!(
                "harmonic addend of degree {} dominates |z|^2",
                degree.unwrap_or(0)
            )));
        }
        let (a, b) = self.family.quadratic_part();
        let b = b + self.harmonic.get(2).copied().unwrap_or_default();
        if b.norm() >= a {
            return Err(Error::NotIntegrable(format!(
                "z^2 coefficient {} is not below |z|^2 coefficient {a}",
                b.norm()
            )));
        }
        Ok(())
    }

    fn min_on_circle(&self, r: f64) -> f64 {
        const SAMPLES: usize = 720;
        (0..SAMPLES)
            .map(|k| self.eval(Complex64::from_polar(r, 2.0 * PI * k as f64 / SAMPLES as f64)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Radius `R` beyond which `e^{-phi} |z|^{2N+1}` is below `1e-18`, for
    /// monomials up to `degree`. Found by outward scan and bisection on the
    /// minimum of `phi` over the circle `|z| = R`.
    pub fn truncation_hint(&self, degree: usize) -> Result<f64> {
        self.check_integrable()?;
        let target = 18.0 * 10f64.ln();
        let power = (2 * degree + 1) as f64;
        let excess = |r: f64| power * r.ln() - self.min_on_circle(r) + target;
        let mut lo = 1.0;
        let mut hi = 1.0;
        while excess(hi) >= 0.0 || excess(hi * 1.1) >= 0.0 {
            lo = hi;
            hi *= 1.1;
            if hi > 1e4 {
                return Err(Error::NotIntegrable(
                    "no truncation radius below 1e4".to_string(),
                ));
            }
        }
        if lo == hi {
            return Ok(hi);
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) < 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// The Laplacian as a standalone field.
    pub fn laplacian_field(&self) -> ScalarField {
        let w = self.clone();
        ScalarField::new(move |z| w.laplacian(z))
    }

    pub fn to_spec(&self) -> WeightSpec {
        let mut params = BTreeMap::new();
        match &self.family {
            Family::Gaussian { t } => {
                params.insert("t".into(), *t);
            }
            Family::GaussianHarmonic { a, b, c, d } => {
                params.insert("a".into(), *a);
                params.insert("b_re".into(), b.re);
                params.insert("b_im".into(), b.im);
                params.insert("c_re".into(), c.re);
                params.insert("c_im".into(), c.im);
                params.insert("d".into(), *d);
            }
            Family::Oscillatory { a, eps } => {
                params.insert("a".into(), *a);
                params.insert("eps".into(), *eps);
            }
            Family::PotentialDefined { a, bump } => {
                params.insert("a".into(), *a);
                params.insert("amplitude".into(), bump.amplitude());
                params.insert("radius".into(), bump.radius());
                params.insert("center_re".into(), bump.center().re);
                params.insert("center_im".into(), bump.center().im);
            }
        }
        WeightSpec {
            family: self.family.tag().to_string(),
            params,
            laplacian_bounds: Some([self.bounds.0, self.bounds.1]),
            shift: (self.shift != Complex64::new(0.0, 0.0)).then_some([self.shift.re, self.shift.im]),
            harmonic: (!self.harmonic.is_empty())
                .then(|| self.harmonic.iter().map(|c| [c.re, c.im]).collect()),
        }
    }

    pub fn from_spec(spec: &WeightSpec) -> Result<Self> {
        let mut params = spec.params.clone();
        let mut take = |name: &str, default: Option<f64>| -> Result<f64> {
            match (params.remove(name), default) {
                (Some(v), _) => Ok(v),
                (None, Some(d)) => Ok(d),
                (None, None) => Err(Error::Config(format!(
                    "family {} requires parameter {name}",
                    spec.family
                ))),
            }
        };
        let mut w = match spec.family.as_str() {
            "gaussian" => Self::gaussian(take("t", None)?)?,
            "gaussian_harmonic" => {
                let a = take("a", None)?;
                let b = Complex64::new(take("b_re", Some(0.0))?, take("b_im", Some(0.0))?);
                let c = Complex64::new(take("c_re", Some(0.0))?, take("c_im", Some(0.0))?);
                let d = take("d", Some(0.0))?;
                Self::gaussian_harmonic(a, b, c, d)?
            }
            "oscillatory" => Self::oscillatory(take("a", None)?, take("eps", None)?)?,
            "potential_defined" => {
                let a = take("a", None)?;
                let bump = RadialBump::new(
                    take("amplitude", None)?,
                    take("radius", Some(1.0))?,
                    Complex64::new(take("center_re", Some(0.0))?, take("center_im", Some(0.0))?),
                )?;
                Self::potential_defined(a, bump)?
            }
            other => return Err(Error::Config(format!("unknown weight family {other:?}"))),
        };
        if let Some(name) = params.keys().next() {
            return Err(Error::Config(format!(
                "unknown parameter {name:?} for family {}",
                spec.family
            )));
        }
        if let Some(h) = &spec.harmonic {
            let p: Vec<Complex64> = h.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
            w = w.with_harmonic(&p);
        }
        if let Some([re, im]) = spec.shift {
            w = w.translate(Complex64::new(re, im));
        }
        if let Some([m, big_m]) = spec.laplacian_bounds {
            w = w.with_bounds(m, big_m)?;
        }
        Ok(w)
    }
}

/// JSON form of a weight:
/// `{"family": ..., "params": {...}, "laplacian_bounds": [m, M]}` with
/// optional `"shift": [re, im]` and `"harmonic": [[re, im], ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplacian_bounds: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub harmonic: Option<Vec<[f64; 2]>>,
}

pub fn eval_weight(w: &WeightFunction, z: Complex64) -> f64 {
    w.eval(z)
}

pub fn eval_laplacian(w: &WeightFunction, z: Complex64) -> f64 {
    w.laplacian(z)
}

pub fn translate_weight(w: &WeightFunction, z0: Complex64) -> WeightFunction {
    w.translate(z0)
}

/// Outcome of checking `m <= Delta phi <= M` on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub min: f64,
    pub max: f64,
    pub declared: (f64, f64),
    /// `min - m` and `M - max`; negative means a violation.
    pub margin_lower: f64,
    pub margin_upper: f64,
    /// Largest `|analytic - fd|` over the grid.
    pub max_fd_discrepancy: f64,
    pub fd_agrees: bool,
    /// First grid point (in grid order) outside `[m - tol, M + tol]`.
    pub violation: Option<(Complex64, f64)>,
    pub pass: bool,
}

/// Step used for the finite-difference cross-check of the analytic Laplacian.
pub const FD_STEP: f64 = 1e-3;

pub fn validate_laplacian_bounds(
    w: &WeightFunction,
    grid: &[Complex64],
    tol: f64,
) -> ValidationReport {
    let (lower, upper) = w.bounds;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut max_fd = 0.0f64;
    let mut fd_agrees = true;
    let mut violation = None;
    for &z in grid {
        let lap = w.laplacian(z);
        min = min.min(lap);
        max = max.max(lap);
        let fd = fd_laplacian(|u| w.eval(u), z, FD_STEP);
        let diff = (fd - lap).abs();
        max_fd = max_fd.max(diff);
        if diff > tol.max(1e-4) * (1.0 + lap.abs()) {
            fd_agrees = false;
        }
        if violation.is_none() && !(lap >= lower - tol && lap <= upper + tol) {
            violation = Some((z, lap));
        }
    }
    ValidationReport {
        min,
        max,
        declared: (lower, upper),
        margin_lower: min - lower,
        margin_upper: upper - max,
        max_fd_discrepancy: max_fd,
        fd_agrees,
        pass: violation.is_none() && !grid.is_empty(),
        violation,
    }
}
