//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL line
//! each, and exits nonzero if any fails.

use std::f64::consts::PI;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::OnceLock;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weighted_fock::bounds::{
    constant_case_certificate, global_certificate, global_constant, mean_value_check,
    translation_spot_checks,
};
use weighted_fock::equivalence::{
    build_equivalence_map, log_laplacian_equal, segal_bargmann_partner, verify_kernel_invariance,
    verify_unitary, WeightDensity,
};
use weighted_fock::grid;
use weighted_fock::kernel::{plane_rule_for, weighted_norm_sq, KernelEstimate, SampleFunction};
use weighted_fock::potential::{compute_b, gamma, make_psi, verify_potential_bounds, BConstant};
use weighted_fock::quadrature::{disk_rule, truncated_plane_rule};
use weighted_fock::weights::{RadialBump, WeightFunction};
use weighted_fock::{Complex64, Result};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

/// `B` on the finer omega grid; shared by every criterion that needs it.
fn b_constant() -> &'static BConstant {
    static B: OnceLock<BConstant> = OnceLock::new();
    B.get_or_init(|| compute_b(128, 17).expect("B"))
}

/// Built-in families with strictly positive Laplacian.
fn families() -> Vec<(&'static str, WeightFunction)> {
    vec![
        ("gaussian(t=1)", WeightFunction::gaussian(1.0).unwrap()),
        ("gaussian(t=2.5)", WeightFunction::gaussian(2.5).unwrap()),
        (
            "gaussian_harmonic(a=1,b=0.3,c=0.2+0.1i,d=0.5)",
            WeightFunction::gaussian_harmonic(1.0, c(0.3, 0.0), c(0.2, 0.1), 0.5).unwrap(),
        ),
        ("oscillatory(a=1,eps=0.5)", WeightFunction::oscillatory(1.0, 0.5).unwrap()),
        (
            "potential_defined(a=1,bump=2@0.3+0.2i,r=0.8)",
            WeightFunction::potential_defined(1.0, RadialBump::new(2.0, 0.8, c(0.3, 0.2)).unwrap())
                .unwrap(),
        ),
    ]
}

fn z_grid() -> Vec<Complex64> {
    grid::disk_lattice(ORIGIN, 2.0, 0.1)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn fundamental_integral() -> Result<Outcome> {
    let rule = disk_rule(ORIGIN, 1.0, 64, 128)?;
    let value = rule.integrate(|z| gamma(z).expect("no node at the origin"))?;
    let err = (value + 0.25).abs();
    outcome(err <= 1e-6, format!("integral = {value:.12}, |error| = {err:.2e} (tol 1e-6)"))
}

fn segal_bargmann_exactness() -> Result<Outcome> {
    let w = WeightFunction::segal_bargmann(1.0)?;
    let rule = truncated_plane_rule(10.0, 256, 512)?;
    let est = KernelEstimate::new(&w, 40, &rule)?;
    let mut worst = 0.0f64;
    for z in [c(0.0, 0.0), c(0.5, 0.0), c(1.0, 0.0), c(1.0, 1.0), c(1.5, 0.0)] {
        let exact = z.norm_sqr().exp();
        worst = worst.max((est.diag(z) - exact).abs() / exact);
    }
    outcome(worst <= 1e-6, format!("max relative error {worst:.2e} (tol 1e-6)"))
}

fn constant_case_flatness() -> Result<Outcome> {
    let w = WeightFunction::gaussian_harmonic(1.0, c(0.3, 0.0), ORIGIN, 0.0)?;
    let pts = grid::disk_lattice(ORIGIN, 1.5, 0.1);
    let rule = plane_rule_for(&w, 40, 128)?;
    let cert = constant_case_certificate(&w, &pts, 40, &rule, 1e-3)?;
    let target = 1.0 / PI;
    let dev = (cert.measured_sup - target)
        .abs()
        .max((cert.measured_inf - target).abs())
        / target;
    outcome(
        cert.pass && (cert.constant_c - target).abs() < 1e-15,
        format!(
            "{} points, max relative deviation from 1/pi {dev:.2e} (tol 1e-3)",
            pts.len()
        ),
    )
}

fn poisson_residual() -> Result<Outcome> {
    let w = WeightFunction::oscillatory(1.0, 0.5)?;
    let m = 5.0;
    let pf = make_psi(&w, m)?
        .with_b_used(b_constant().value)
        .with_resolution(256);
    let pts = grid::disk_lattice(ORIGIN, 1.0, 0.125);
    let report = verify_potential_bounds(&pf, &pts, 1e-3)?;
    outcome(
        report.poisson_ok,
        format!(
            "max residual {:.2e} over {} interior points (tol {:.2e})",
            report.max_poisson_residual, report.interior_points, report.residual_tolerance
        ),
    )
}

fn potential_constants() -> Result<Outcome> {
    let b = b_constant();
    let coarse = compute_b(128, 9)?;
    let drift = (b.value - coarse.value).abs();
    let in_bracket = b.value >= 0.0 && b.value <= 2.1972;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pts = vec![ORIGIN];
    pts.extend(grid::random_disk(&mut rng, ORIGIN, 1.0, 199));
    let mut ok = in_bracket && drift < 1e-3;
    let mut worst_upper = f64::NEG_INFINITY;
    let mut worst_lower = f64::INFINITY;
    for (_, w) in families() {
        let m = w.laplacian_bounds().1;
        let pf = make_psi(&w, m)?.with_b_used(b.value).with_resolution(128);
        let report = verify_potential_bounds(&pf, &pts, 1e-3)?;
        worst_upper = worst_upper.max(report.max_phi - report.upper_bound);
        worst_lower = worst_lower.min(report.phi0 - report.lower_bound);
        ok &= report.max_phi <= report.upper_bound + 1e-3;
        ok &= report.phi0 >= report.lower_bound - 1e-4;
    }
    outcome(
        ok,
        format!(
            "B_used = {:.9}, drift {drift:.1e}; max(Phi - B M) = {worst_upper:.3}, min(Phi(0) + M/4) = {worst_lower:.3}",
            b.value
        ),
    )
}

fn global_certificates() -> Result<Outcome> {
    let b = b_constant().value;
    let pts = z_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let centers = grid::random_disk(&mut rng, ORIGIN, 2.0, 5);
    let spot_grid = grid::disk_lattice(ORIGIN, 1.0, 0.25);
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, w) in families() {
        let m = w.laplacian_bounds().1;
        let rule = plane_rule_for(&w, 40, 128)?;
        let cert = global_certificate(&w, m, b, &pts, 40, &rule)?;
        let spots = translation_spot_checks(&w, m, b, &centers, &spot_grid, 30, 96)?;
        let spots_ok = spots.iter().all(|s| s.pass);
        ok &= cert.pass && spots_ok;
        lines.push(format!(
            "{name}: sup {:.4} <= C {:.4}, margin/err {:.1e}, translated {}",
            cert.measured_sup,
            cert.constant_c,
            cert.margin / cert.error_estimate.max(f64::MIN_POSITIVE),
            if spots_ok { "ok" } else { "FAIL" }
        ));
    }
    outcome(ok, lines.join("; "))
}

fn sampled_oracle() -> Result<Outcome> {
    let b = b_constant().value;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut trials = 0;
    let mut global_violations = 0;
    let mut kernel_violations = 0;
    let mut worst_kernel_ratio = 0.0f64;
    for (_, w) in families() {
        let cst = global_constant(b, w.laplacian_bounds().1);
        let rule = plane_rule_for(&w, 40, 128)?;
        let est = KernelEstimate::new(&w, 40, &rule)?;
        for _ in 0..100 {
            let degree = rand::Rng::gen_range(&mut rng, 0..=est.degree());
            let f = SampleFunction::random_polynomial(&mut rng, degree);
            let z = grid::random_disk(&mut rng, ORIGIN, 2.0, 1)[0];
            let norm = weighted_norm_sq(&w, &f, &rule)?;
            let value = f.eval(z).norm_sqr();
            if value > cst * w.eval(z).exp() * norm {
                global_violations += 1;
            }
            let sharp = est.diag(z) * norm;
            worst_kernel_ratio = worst_kernel_ratio.max(value / sharp);
            if value > sharp * (1.0 + 1e-8) {
                kernel_violations += 1;
            }
            trials += 1;
        }
    }
    outcome(
        trials == 500 && global_violations == 0 && kernel_violations == 0,
        format!(
            "{trials} trials, {global_violations} violations of C, {kernel_violations} of K_N; max |f(z)|^2/(K_N ||f||^2) = {worst_kernel_ratio:.6}"
        ),
    )
}

fn equivalence_suite() -> Result<Outcome> {
    let mut ok = true;
    let mut lines = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let probes = [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0)];
    for lap in [1.0, 4.0, 10.0] {
        let a = lap / 4.0;
        let w = WeightFunction::gaussian_harmonic(a, c(0.3 * a, 0.1 * a), c(0.2, -0.1), 0.4)?;
        let (partner, t) = segal_bargmann_partner(&w)?;
        let alpha = WeightDensity::new(w.clone());
        let beta = WeightDensity::new(partner.clone());
        let map = build_equivalence_map(&alpha, &beta)?;
        let radius = w.truncation_hint(40)?.max(partner.truncation_hint(40)?);
        let rule = truncated_plane_rule(radius, 256, 512)?;
        let samples: Vec<SampleFunction> = (0..10)
            .map(|k| SampleFunction::random_polynomial(&mut rng, k % 11))
            .collect();
        let unitary = verify_unitary(&map, &samples, &rule, 1e-5)?;
        let inv = verify_kernel_invariance(&alpha, &beta, &probes, 40, &rule, 1e-4)?;
        ok &= (t - 4.0 / lap).abs() < 1e-15 && unitary.pass && inv.pass;
        lines.push(format!(
            "c={lap}: t={t}, unitary err {:.1e}, invariance {:.1e}",
            unitary.max_relative_error, inv.max_relative_difference
        ));
    }
    let four = WeightDensity::new(WeightFunction::gaussian(1.0)?);
    let eight = WeightDensity::new(WeightFunction::gaussian(0.5)?);
    let criterion = log_laplacian_equal(&four, &eight, &z_grid(), 1e-9);
    let rejected = !criterion.equal && build_equivalence_map(&four, &eight).is_err();
    ok &= rejected;
    lines.push(format!("4 vs 8 rejected: {rejected}"));
    outcome(ok, lines.join("; "))
}

fn mean_values() -> Result<Outcome> {
    let fs = [
        SampleFunction::polynomial(vec![c(1.0, 0.0)]),
        SampleFunction::polynomial(vec![ORIGIN, c(1.0, 0.0)]),
        SampleFunction::polynomial(vec![ORIGIN, ORIGIN, c(1.0, 0.0)]),
        SampleFunction::exponential(c(1.0, 0.0)),
    ];
    let mut worst = 0.0f64;
    let mut ok = true;
    for h in &fs {
        for s in [0.3, 0.9] {
            let r = mean_value_check(h, s, 32, 64, 1e-8)?;
            worst = worst.max(r.error);
            ok &= r.pass;
        }
    }
    outcome(ok, format!("max error {worst:.2e} (tol 1e-8)"))
}

fn monotonicity() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pts = grid::random_disk(&mut rng, ORIGIN, 2.0, 20);
    let mut worst_drop = 0.0f64;
    for (_, w) in families() {
        let rule = plane_rule_for(&w, 40, 128)?;
        let est = KernelEstimate::new(&w, 40, &rule)?;
        for &z in &pts {
            let seq = est.diag_by_degree(z);
            for pair in seq[5..].windows(2) {
                worst_drop = worst_drop.max(pair[0] - pair[1]);
            }
        }
    }
    // Separate factorizations per degree agree with the nested partial sums.
    let w = WeightFunction::oscillatory(1.0, 0.5)?;
    let rule = plane_rule_for(&w, 40, 96)?;
    let mut previous: Option<Vec<f64>> = None;
    for n in (5..=40).step_by(5) {
        let est = KernelEstimate::new(&w, n, &rule)?;
        let current: Vec<f64> = pts.iter().map(|&z| est.diag(z)).collect();
        if let Some(prev) = &previous {
            for (p, q) in prev.iter().zip(&current) {
                worst_drop = worst_drop.max(p - q);
            }
        }
        previous = Some(current);
    }
    outcome(
        worst_drop <= 1e-10,
        format!("largest decrease {worst_drop:.1e} (tol 1e-10)"),
    )
}

fn determinism() -> Result<Outcome> {
    let tmp = tempfile::tempdir()?;
    let dir = tmp.path();
    let config = dir.join("config.json");
    fs::write(
        &config,
        r#"{
            "weight": {"family": "oscillatory", "params": {"a": 1.0, "eps": 0.5}},
            "grid": {"kind": "random", "radius": 2.0, "count": 60},
            "degree": 30, "resolution": 96, "b_resolution": 64, "translations": 2
        }"#,
    )?;
    let mut artifacts = Vec::new();
    for run in 0..2 {
        let out = dir.join(format!("run{run}"));
        let status = Command::new(env!("CARGO_BIN_EXE_weighted-fock"))
            .args(["verify-bound", "--seed", "2024", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()?;
        if !status.status.success() {
            return outcome(false, format!("run {run} exited with {}", status.status));
        }
        artifacts.push((
            fs::read(out.join("verify-bound.csv"))?,
            fs::read(out.join("verify-bound.json"))?,
        ));
    }
    let same_csv = artifacts[0].0 == artifacts[1].0;
    let same_json = artifacts[0].1 == artifacts[1].1;
    outcome(
        same_csv && same_json,
        format!(
            "CSV identical: {same_csv} ({} bytes), JSON identical: {same_json}",
            artifacts[0].0.len()
        ),
    )
}

type Criterion = fn() -> Result<Outcome>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 11] = [
        ("fundamental integral", fundamental_integral),
        ("Segal-Bargmann exactness", segal_bargmann_exactness),
        ("constant-Laplacian flatness", constant_case_flatness),
        ("Poisson residual", poisson_residual),
        ("potential constants", potential_constants),
        ("global certificate", global_certificates),
        ("sampled-f oracle", sampled_oracle),
        ("equivalence suite", equivalence_suite),
        ("mean-value property", mean_values),
        ("monotonicity in N", monotonicity),
        ("CLI determinism", determinism),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(Ok(o)) => (o.pass, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name} [{:.1}s]: {detail}",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
