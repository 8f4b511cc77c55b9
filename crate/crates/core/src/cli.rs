//! Batch driver behind the `weighted-fock` binary.
//!
//! A run reads an [`ExperimentConfig`], computes one experiment, and writes
//! `<experiment>.csv` and `<experiment>.json` into the output directory. The
//! first CSV line is a schema tag (`# schema: weighted-fock/<experiment>/v1`),
//! followed by a header row. Rows follow grid order. Outputs depend only on
//! the config and seed, so repeated runs are byte-identical.
//!
//! Exit statuses: 0 success, 2 config error (nothing written), 3 numeric
//! failure (only the JSON summary is written), 4 certificate failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{global_certificate, mean_value_check, translation_spot_checks};
use crate::equivalence::{
    build_equivalence_map, log_laplacian_equal, verify_kernel_invariance, verify_unitary,
    WeightDensity,
};
use crate::error::Error;
use crate::grid;
use crate::kernel::{plane_rule_for, KernelEstimate, SampleFunction};
use crate::potential::{compute_b, make_psi, verify_potential_bounds, POISSON_FD_STEP};
use crate::quadrature::truncated_plane_rule;
use crate::weights::{WeightFunction, WeightSpec};

pub const SCHEMA_VERSION: u32 = 1;
pub const MAX_DEGREE: usize = 64;
pub const MAX_RESOLUTION: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    KernelDiag,
    VerifyBound,
    Constants,
    Equivalence,
    Potential,
    MeanValue,
    Sweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::KernelDiag => "kernel-diag",
            Experiment::VerifyBound => "verify-bound",
            Experiment::Constants => "constants",
            Experiment::Equivalence => "equivalence",
            Experiment::Potential => "potential",
            Experiment::MeanValue => "mean-value",
            Experiment::Sweep => "sweep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    Disk {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        spacing: f64,
    },
    Random {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        count: usize,
    },
    Points {
        points: Vec<[f64; 2]>,
    },
}

impl GridSpec {
    fn validate(&self) -> Result<(), String> {
        match self {
            GridSpec::Disk { radius, spacing, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(format!("grid radius {radius} must be positive"));
                }
                if !(*spacing > 0.0) || radius / spacing > 2000.0 {
                    return Err(format!("grid spacing {spacing} out of range"));
                }
            }
            GridSpec::Random { radius, count, .. } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(format!("grid radius {radius} must be positive"));
                }
                if *count == 0 || *count > 1_000_000 {
                    return Err(format!("grid count {count} out of range"));
                }
            }
            GridSpec::Points { points } => {
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("grid points must be finite".into());
                }
            }
        }
        Ok(())
    }

    fn build(&self, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        match self {
            GridSpec::Disk { center, radius, spacing } => {
                grid::disk_lattice(to_c(*center), *radius, *spacing)
            }
            GridSpec::Random { center, radius, count } => {
                grid::random_disk(rng, to_c(*center), *radius, *count)
            }
            GridSpec::Points { points } => points.iter().copied().map(to_c).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Polynomial { coeffs: Vec<[f64; 2]> },
    Exponential { rate: [f64; 2] },
}

impl FunctionSpec {
    fn build(&self) -> SampleFunction {
        match self {
            FunctionSpec::Polynomial { coeffs } => {
                SampleFunction::polynomial(coeffs.iter().copied().map(to_c).collect())
            }
            FunctionSpec::Exponential { rate } => SampleFunction::exponential(to_c(*rate)),
        }
    }

    fn label(&self) -> String {
        match self {
            FunctionSpec::Polynomial { coeffs } => format!("polynomial{coeffs:?}"),
            FunctionSpec::Exponential { rate } => format!("exponential{rate:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative slack for the Laplacian criterion.
    pub criterion: f64,
    pub unitary: f64,
    pub invariance: f64,
    pub mean_value: f64,
    /// Absolute slack on the potential bounds.
    pub potential: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            criterion: 1e-9,
            unitary: 1e-5,
            invariance: 1e-4,
            mean_value: 1e-8,
            potential: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub weight: Option<WeightSpec>,
    /// Second weight, for `equivalence`.
    #[serde(default)]
    pub weight_b: Option<WeightSpec>,
    #[serde(default)]
    pub degree: Option<usize>,
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Resolution of the masked rules used for `B`.
    #[serde(default)]
    pub b_resolution: Option<usize>,
    #[serde(default)]
    pub omega_grid: Option<usize>,
    /// Upper Laplacian bound; defaults to the weight's declared bound.
    #[serde(default)]
    pub m_bound: Option<f64>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    /// Points where `equivalence` compares kernels.
    #[serde(default)]
    pub probe_points: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub sample_degree: Option<usize>,
    /// Number of translated certificates in `verify-bound`.
    #[serde(default)]
    pub translations: Option<usize>,
    /// Radii for `mean-value`.
    #[serde(default)]
    pub s: Option<Vec<f64>>,
    #[serde(default)]
    pub functions: Option<Vec<FunctionSpec>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Entries of a `sweep`.
    #[serde(default)]
    pub configs: Vec<ExperimentConfig>,
}

/// Command-line overrides, applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub degree: Option<usize>,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numeric(Error),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(msg) => write!(f, "config error: {msg}"),
            RunError::Numeric(e) => write!(f, "numeric failure: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(msg) | Error::InvalidParameter(msg) => RunError::Config(msg),
            Error::Json(e) => RunError::Config(e.to_string()),
            other => RunError::Numeric(other),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    ConfigError,
    NumericFailure,
    CertificateFailure,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::ConfigError => 2,
            Status::NumericFailure => 3,
            Status::CertificateFailure => 4,
        }
    }
}

/// Tabular output plus a JSON summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub summary: Value,
    pub pass: bool,
}

impl Report {
    pub fn status(&self) -> Status {
        if self.pass {
            Status::Ok
        } else {
            Status::CertificateFailure
        }
    }

    pub fn to_csv(&self) -> Result<String, Error> {
        let mut out = format!(
            "# schema: weighted-fock/{}/v{SCHEMA_VERSION}\n",
            self.experiment.name()
        );
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        out.push_str(&String::from_utf8_lossy(&bytes));
        Ok(out)
    }
}

fn to_c(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

/// Settles the experiment type and applies overrides.
pub fn resolve(
    mut cfg: ExperimentConfig,
    experiment: Experiment,
    overrides: &Overrides,
) -> Result<ExperimentConfig, RunError> {
    match cfg.experiment {
        Some(e) if e != experiment => {
            return Err(RunError::Config(format!(
                "config declares experiment {} but {} was requested",
                e.name(),
                experiment.name()
            )))
        }
        _ => cfg.experiment = Some(experiment),
    }
    if overrides.seed.is_some() {
        cfg.seed = overrides.seed;
    }
    if overrides.resolution.is_some() {
        cfg.resolution = overrides.resolution;
    }
    if overrides.degree.is_some() {
        cfg.degree = overrides.degree;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn needs_weight(e: Experiment) -> bool {
    !matches!(e, Experiment::MeanValue | Experiment::Sweep)
}

/// Range and presence checks. Runs before anything is computed or written.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), RunError> {
    let bad = |msg: String| Err(RunError::Config(msg));
    let experiment = cfg
        .experiment
        .ok_or_else(|| RunError::Config("experiment is not set".into()))?;
    if let Some(d) = cfg.degree {
        if d > MAX_DEGREE {
            return bad(format!("degree {d} exceeds {MAX_DEGREE}"));
        }
    }
    for (name, r) in [("resolution", cfg.resolution), ("b_resolution", cfg.b_resolution)] {
        if let Some(r) = r {
            if !(4..=MAX_RESOLUTION).contains(&r) {
                return bad(format!("{name} {r} outside [4, {MAX_RESOLUTION}]"));
            }
        }
    }
    if let Some(n) = cfg.omega_grid {
        if !(9..=200).contains(&n) {
            return bad(format!("omega_grid {n} outside [9, 200]"));
        }
    }
    if let Some(m) = cfg.m_bound {
        if !(m >= 0.0 && m.is_finite()) {
            return bad(format!("m_bound {m} must be finite and nonnegative"));
        }
    }
    if let Some(n) = cfg.samples {
        if n > 100_000 {
            return bad(format!("samples {n} exceeds 100000"));
        }
    }
    if cfg.sample_degree.is_some_and(|d| d > MAX_DEGREE) {
        return bad(format!("sample_degree exceeds {MAX_DEGREE}"));
    }
    if cfg.translations.is_some_and(|n| n > 100) {
        return bad("translations exceeds 100".into());
    }
    if let Some(s) = &cfg.s {
        if let Some(v) = s.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return bad(format!("mean-value radius {v} outside (0, 1)"));
        }
    }
    if let Some(g) = &cfg.grid {
        g.validate().map_err(RunError::Config)?;
    }
    let t = &cfg.tolerances;
    for v in [t.criterion, t.unitary, t.invariance, t.mean_value, t.potential] {
        if !(v >= 0.0 && v.is_finite()) {
            return bad(format!("tolerance {v} must be finite and nonnegative"));
        }
    }
    if needs_weight(experiment) {
        let spec = cfg
            .weight
            .as_ref()
            .ok_or_else(|| RunError::Config(format!("{} needs a weight", experiment.name())))?;
        WeightFunction::from_spec(spec)?;
    }
    if experiment == Experiment::Equivalence {
        let spec = cfg
            .weight_b
            .as_ref()
            .ok_or_else(|| RunError::Config("equivalence needs weight_b".into()))?;
        WeightFunction::from_spec(spec)?;
    }
    if experiment == Experiment::Sweep {
        let mut kinds = cfg.configs.iter().map(|c| c.experiment);
        let first = match kinds.next() {
            Some(Some(e)) => Some(e),
            Some(None) => return bad("every sweep entry must name its experiment".into()),
            None => None,
        };
        if first == Some(Experiment::Sweep) {
            return bad("sweeps cannot be nested".into());
        }
        if kinds.any(|k| k != first) {
            return bad("sweep entries must share one experiment type".into());
        }
        for entry in &cfg.configs {
            let mut entry = entry.clone();
            if entry.seed.is_none() {
                entry.seed = cfg.seed;
            }
            validate(&entry)?;
        }
    } else if !cfg.configs.is_empty() {
        return bad("configs is only allowed for sweep".into());
    }
    Ok(())
}

struct Knobs {
    degree: usize,
    resolution: usize,
    b_resolution: usize,
    omega_grid: usize,
    seed: u64,
}

impl Knobs {
    fn of(cfg: &ExperimentConfig) -> Self {
        Knobs {
            degree: cfg.degree.unwrap_or(crate::kernel::DEFAULT_DEGREE),
            resolution: cfg.resolution.unwrap_or(128),
            b_resolution: cfg.b_resolution.unwrap_or(128),
            omega_grid: cfg.omega_grid.unwrap_or(9),
            seed: cfg.seed.unwrap_or(0),
        }
    }
}

fn weight_of(spec: &Option<WeightSpec>) -> Result<WeightFunction, RunError> {
    let spec = spec
        .as_ref()
        .ok_or_else(|| RunError::Config("missing weight".into()))?;
    Ok(WeightFunction::from_spec(spec)?)
}

fn grid_of(cfg: &ExperimentConfig, default: GridSpec, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    cfg.grid.as_ref().unwrap_or(&default).build(rng)
}

/// Computes one experiment without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    validate(cfg)?;
    let experiment = cfg.experiment.expect("validated");
    let knobs = Knobs::of(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(knobs.seed);
    match experiment {
        Experiment::KernelDiag => kernel_diag(cfg, &knobs, &mut rng),
        Experiment::VerifyBound => verify_bound(cfg, &knobs, &mut rng),
        Experiment::Constants => constants(cfg, &knobs),
        Experiment::Equivalence => equivalence(cfg, &knobs, &mut rng),
        Experiment::Potential => potential(cfg, &knobs, &mut rng),
        Experiment::MeanValue => mean_value(cfg, &knobs),
        Experiment::Sweep => sweep(cfg),
    }
}

fn default_disk(radius: f64, spacing: f64) -> GridSpec {
    GridSpec::Disk {
        center: [0.0, 0.0],
        radius,
        spacing,
    }
}

fn kernel_diag(cfg: &ExperimentConfig, k: &Knobs, rng: &mut ChaCha8Rng) -> Result<Report, RunError> {
    let w = weight_of(&cfg.weight)?;
    let pts = grid_of(cfg, default_disk(2.0, 0.1), rng);
    let rule = plane_rule_for(&w, k.degree, k.resolution)?;
    let est = KernelEstimate::new(&w, k.degree, &rule)?;
    let values: Vec<f64> = pts.par_iter().map(|&z| est.diag(z)).collect();
    let rows = pts
        .iter()
        .zip(&values)
        .map(|(z, v)| {
            vec![
                num(z.re),
                num(z.im),
                est.degree().to_string(),
                num(*v),
                num(est.condition_estimate()),
            ]
        })
        .collect();
    let finite = values.iter().all(|v| v.is_finite() && *v > 0.0);
    Ok(Report {
        experiment: Experiment::KernelDiag,
        header: vec!["z_re", "z_im", "N", "K_N", "condition_estimate"],
        rows,
        summary: json!({
            "pass": finite,
            "weight": w.to_spec(),
            "N": k.degree,
            "N_effective": est.degree(),
            "degraded": est.degraded(),
            "condition_estimate": est.condition_estimate(),
            "truncation_radius": rule.region().radius(),
            "resolution": k.resolution,
            "points": pts.len(),
            "max_K_N": values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }),
        pass: finite,
    })
}

fn verify_bound(cfg: &ExperimentConfig, k: &Knobs, rng: &mut ChaCha8Rng) -> Result<Report, RunError> {
    let w = weight_of(&cfg.weight)?;
    let m = cfg.m_bound.unwrap_or(w.laplacian_bounds().1);
    let pts = grid_of(cfg, default_disk(2.0, 0.1), rng);
    let b = compute_b(k.b_resolution, k.omega_grid)?;
    let rule = plane_rule_for(&w, k.degree, k.resolution)?;
    let cert = global_certificate(&w, m, b.value, &pts, k.degree, &rule)?;
    let centers = grid::random_disk(
        rng,
        Complex64::new(0.0, 0.0),
        2.0,
        cfg.translations.unwrap_or(5),
    );
    let spot_grid = grid::disk_lattice(Complex64::new(0.0, 0.0), 1.0, 0.5);
    let spots = translation_spot_checks(&w, m, b.value, &centers, &spot_grid, k.degree, k.resolution)?;
    let spots_pass = spots.iter().all(|c| c.pass);
    let rows = pts
        .iter()
        .zip(&cert.values)
        .map(|(z, v)| {
            vec![
                num(z.re),
                num(z.im),
                num(*v),
                num(cert.constant_c),
                num(cert.constant_c - v),
            ]
        })
        .collect();
    let pass = cert.pass && spots_pass;
    let translated: Vec<Value> = centers
        .iter()
        .zip(&spots)
        .map(|(z0, c)| {
            json!({
                "center": [z0.re, z0.im],
                "measured_sup": c.measured_sup,
                "margin": c.margin,
                "error_estimate": c.error_estimate,
                "pass": c.pass,
            })
        })
        .collect();
    Ok(Report {
        experiment: Experiment::VerifyBound,
        header: vec!["z_re", "z_im", "K_N_exp_neg_phi", "C", "margin"],
        rows,
        summary: json!({
            "pass": pass,
            "constant_C": cert.constant_c,
            "measured_sup": cert.measured_sup,
            "margin": cert.margin,
            "error_estimate": cert.error_estimate,
            "B_used": b.value,
            "B_margin": b.margin,
            "M": m,
            "N": k.degree,
            "N_effective": cert.metadata.degree_effective,
            "resolution": k.resolution,
            "weight": w.to_spec(),
            "notes": cert.metadata.notes,
            "translations": translated,
        }),
        pass,
    })
}

fn constants(cfg: &ExperimentConfig, k: &Knobs) -> Result<Report, RunError> {
    let w = weight_of(&cfg.weight)?;
    let m = cfg.m_bound.unwrap_or(w.laplacian_bounds().1);
    let b = compute_b(k.b_resolution, k.omega_grid)?;
    let pf = make_psi(&w, m)?.with_b_used(b.value).with_resolution(k.resolution);
    let phi0 = pf.phi(Complex64::new(0.0, 0.0))?;
    let lower = -m / 4.0;
    let in_bracket = b.value >= b.bracket.0 && b.value <= b.bracket.1;
    let pass = in_bracket && phi0 >= lower - cfg.tolerances.potential;
    let c = crate::bounds::global_constant(b.value, m);
    Ok(Report {
        experiment: Experiment::Constants,
        header: vec![
            "B_used", "B_grid_sup", "B_margin", "bracket_lo", "bracket_hi", "M", "phi0",
            "neg_M_over_4", "C",
        ],
        rows: vec![vec![
            num(b.value),
            num(b.grid_sup),
            num(b.margin),
            num(b.bracket.0),
            num(b.bracket.1),
            num(m),
            num(phi0),
            num(lower),
            num(c),
        ]],
        summary: json!({
            "pass": pass,
            "B_used": b.value,
            "B_argmax": [b.argmax.re, b.argmax.im],
            "bracket": [b.bracket.0, b.bracket.1],
            "M": m,
            "phi0": phi0,
            "constant_C": c,
            "tight_constant": pf.tight_local_constant()?,
            "b_resolution": k.b_resolution,
            "omega_grid_points": b.grid_points,
            "weight": w.to_spec(),
        }),
        pass,
    })
}

fn equivalence(cfg: &ExperimentConfig, k: &Knobs, rng: &mut ChaCha8Rng) -> Result<Report, RunError> {
    let a = WeightDensity::new(weight_of(&cfg.weight)?);
    let b = WeightDensity::new(weight_of(&cfg.weight_b)?);
    let tol = &cfg.tolerances;
    let pts = grid_of(cfg, default_disk(2.0, 0.1), rng);
    let criterion = log_laplacian_equal(&a, &b, &pts, tol.criterion);
    let header = vec!["k", "p_re", "p_im"];
    if !criterion.equal {
        return Ok(Report {
            experiment: Experiment::Equivalence,
            header,
            rows: Vec::new(),
            summary: json!({ "pass": false, "equivalent": false, "criterion": criterion }),
            pass: false,
        });
    }
    let map = build_equivalence_map(&a, &b)?;
    let residual = map.max_relative_residual(&pts);
    let r = a
        .weight()
        .truncation_hint(k.degree)?
        .max(b.weight().truncation_hint(k.degree)?);
    let rule = truncated_plane_rule(r, k.resolution, 2 * k.resolution)?;
    let samples: Vec<SampleFunction> = (0..cfg.samples.unwrap_or(20))
        .map(|_| SampleFunction::random_polynomial(rng, cfg.sample_degree.unwrap_or(8)))
        .collect();
    let unitary = verify_unitary(&map, &samples, &rule, tol.unitary)?;
    let probes: Vec<Complex64> = match &cfg.probe_points {
        Some(p) => p.iter().copied().map(to_c).collect(),
        None => vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ],
    };
    let invariance = verify_kernel_invariance(&a, &b, &probes, k.degree, &rule, tol.invariance)?;
    let rows = map
        .exponent()
        .iter()
        .enumerate()
        .map(|(i, c)| vec![i.to_string(), num(c.re), num(c.im)])
        .collect();
    let pass = unitary.pass && invariance.pass;
    Ok(Report {
        experiment: Experiment::Equivalence,
        header,
        rows,
        summary: json!({
            "pass": pass,
            "equivalent": true,
            "criterion": criterion,
            "max_real_part_residual": residual,
            "unitary": unitary,
            "invariance": invariance,
            "N": k.degree,
            "resolution": k.resolution,
        }),
        pass,
    })
}

fn potential(cfg: &ExperimentConfig, k: &Knobs, rng: &mut ChaCha8Rng) -> Result<Report, RunError> {
    let w = weight_of(&cfg.weight)?;
    let m = cfg.m_bound.unwrap_or(w.laplacian_bounds().1);
    let b = compute_b(k.b_resolution, k.omega_grid)?;
    let pf = make_psi(&w, m)?.with_b_used(b.value).with_resolution(k.resolution);
    let pts = grid_of(cfg, default_disk(1.0, 0.125), rng);
    let report = verify_potential_bounds(&pf, &pts, cfg.tolerances.potential)?;
    let h = POISSON_FD_STEP;
    let rows: Vec<Vec<String>> = pts
        .par_iter()
        .map(|&z| {
            let residual = if z.norm() <= 1.0 - 2.0 * h {
                num(pf.poisson_residual(z, h)?)
            } else {
                String::new()
            };
            Ok(vec![
                num(z.re),
                num(z.im),
                num(pf.phi(z)?),
                num(pf.psi().eval(z)),
                residual,
            ])
        })
        .collect::<Result<_, Error>>()?;
    Ok(Report {
        experiment: Experiment::Potential,
        header: vec!["z_re", "z_im", "phi", "psi", "poisson_residual"],
        rows,
        summary: json!({
            "pass": report.pass,
            "report": report,
            "B_used": b.value,
            "M": m,
            "resolution": k.resolution,
            "weight": w.to_spec(),
        }),
        pass: report.pass,
    })
}

fn mean_value(cfg: &ExperimentConfig, k: &Knobs) -> Result<Report, RunError> {
    let functions = cfg.functions.clone().unwrap_or_else(|| {
        vec![
            FunctionSpec::Polynomial { coeffs: vec![[1.0, 0.0]] },
            FunctionSpec::Polynomial { coeffs: vec![[0.0, 0.0], [1.0, 0.0]] },
            FunctionSpec::Polynomial { coeffs: vec![[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]] },
            FunctionSpec::Exponential { rate: [1.0, 0.0] },
        ]
    });
    let radii = cfg.s.clone().unwrap_or_else(|| vec![0.3, 0.9]);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut pass = true;
    for f in &functions {
        let h = f.build();
        for &s in &radii {
            let r = mean_value_check(&h, s, k.resolution.min(64), 2 * k.resolution.min(64), cfg.tolerances.mean_value)?;
            worst = worst.max(r.error);
            pass &= r.pass;
            rows.push(vec![
                f.label(),
                num(s),
                num(r.mean.re),
                num(r.mean.im),
                num(r.center_value.re),
                num(r.center_value.im),
                num(r.error),
            ]);
        }
    }
    Ok(Report {
        experiment: Experiment::MeanValue,
        header: vec!["function", "s", "mean_re", "mean_im", "center_re", "center_im", "error"],
        rows,
        summary: json!({ "pass": pass, "max_error": worst, "tolerance": cfg.tolerances.mean_value }),
        pass,
    })
}

/// The number each sweep row reports for its experiment.
fn headline(report: &Report) -> Option<f64> {
    let s = &report.summary;
    let key = match report.experiment {
        Experiment::KernelDiag => s.get("max_K_N"),
        Experiment::VerifyBound => s.get("measured_sup"),
        Experiment::Constants => s.get("phi0"),
        Experiment::Equivalence => s.pointer("/invariance/max_relative_difference"),
        Experiment::Potential => s.pointer("/report/max_poisson_residual"),
        Experiment::MeanValue => s.get("max_error"),
        Experiment::Sweep => None,
    };
    key.and_then(Value::as_f64)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Report, RunError> {
    let outcomes: Vec<(String, Result<Report, RunError>)> = cfg
        .configs
        .par_iter()
        .map(|entry| {
            let mut entry = entry.clone();
            if entry.seed.is_none() {
                entry.seed = cfg.seed;
            }
            let params = entry
                .weight
                .as_ref()
                .map(|w| serde_json::to_string(&w.params).unwrap_or_default())
                .unwrap_or_default();
            (params, execute(&entry))
        })
        .collect();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut numeric_failure = false;
    let mut all_pass = true;
    for (i, (params, outcome)) in outcomes.into_iter().enumerate() {
        let experiment = cfg.configs[i].experiment.map(Experiment::name).unwrap_or("");
        let family = cfg.configs[i]
            .weight
            .as_ref()
            .map(|w| w.family.clone())
            .unwrap_or_default();
        match outcome {
            Ok(report) => {
                all_pass &= report.pass;
                rows.push(vec![
                    i.to_string(),
                    experiment.to_string(),
                    family,
                    params,
                    format!("{:?}", report.status()).to_lowercase(),
                    report.pass.to_string(),
                    headline(&report).map(num).unwrap_or_default(),
                    String::new(),
                ]);
                entries.push(report.summary);
            }
            Err(e) => {
                numeric_failure = true;
                all_pass = false;
                rows.push(vec![
                    i.to_string(),
                    experiment.to_string(),
                    family,
                    params,
                    "error".to_string(),
                    "false".to_string(),
                    String::new(),
                    e.to_string(),
                ]);
                entries.push(json!({ "error": e.to_string() }));
            }
        }
    }
    Ok(Report {
        experiment: Experiment::Sweep,
        header: vec!["index", "experiment", "family", "params", "status", "pass", "value", "error"],
        rows,
        summary: json!({
            "pass": all_pass,
            "numeric_failure": numeric_failure,
            "entries": entries,
        }),
        pass: all_pass,
    })
}

/// Paths of the two artifacts for `experiment` under `out`.
pub fn artifact_paths(out: &Path, experiment: Experiment) -> (PathBuf, PathBuf) {
    (
        out.join(format!("{}.csv", experiment.name())),
        out.join(format!("{}.json", experiment.name())),
    )
}

/// Runs a resolved config and writes its artifacts. Returns the status the
/// process should exit with.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Status {
    let experiment = match cfg.experiment {
        Some(e) => e,
        None => return Status::ConfigError,
    };
    let (csv_path, json_path) = artifact_paths(out, experiment);
    let write = |csv: Option<String>, summary: &Value| -> std::io::Result<()> {
        fs::create_dir_all(out)?;
        let text = serde_json::to_string_pretty(summary).map_err(std::io::Error::other)?;
        if let Some(csv) = csv {
            fs::write(&csv_path, csv)?;
        }
        fs::write(&json_path, text + "\n")
    };
    match execute(cfg) {
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            Status::ConfigError
        }
        Err(RunError::Numeric(e)) => {
            eprintln!("numeric failure: {e}");
            let summary = json!({
                "pass": false,
                "experiment": experiment.name(),
                "status": Status::NumericFailure,
                "error": e.to_string(),
            });
            if let Err(io) = write(None, &summary) {
                eprintln!("could not write summary: {io}");
            }
            Status::NumericFailure
        }
        Ok(report) => {
            let status = match &report.summary {
                Value::Object(map)
                    if map.get("numeric_failure") == Some(&Value::Bool(true)) =>
                {
                    Status::NumericFailure
                }
                _ => report.status(),
            };
            let csv = match report.to_csv() {
                Ok(csv) => csv,
                Err(e) => {
                    eprintln!("numeric failure: {e}");
                    return Status::NumericFailure;
                }
            };
            let mut summary = BTreeMap::new();
            summary.insert("experiment".to_string(), json!(experiment.name()));
            summary.insert("status".to_string(), json!(status));
            summary.insert("result".to_string(), report.summary.clone());
            summary.insert("config".to_string(), json!(cfg));
            if let Err(io) = write(Some(csv), &json!(summary)) {
                eprintln!("could not write artifacts: {io}");
                return Status::NumericFailure;
            }
            println!(
                "{}: {}",
                experiment.name(),
                if report.pass { "pass" } else { "fail" }
            );
            status
        }
    }
}
