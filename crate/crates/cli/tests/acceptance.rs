//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use ionkick::analytic::{chi_fock, fwhm_hot, s_coherent, s_thermal, thermal_envelope};
use ionkick::fock_oracle::{recommended_dim, run_ramsey};
use ionkick::heating::{heating_rate, NoiseDrive};
use ionkick::kinematics::theta_resolution;
use ionkick::synth::{derive_seed, fringe_detunings, synth_lineshape, FringePlan, LiftModel};
use ionkick::thermometry::{campaign_theta_grid, fit_scans, plan_theta_grid, FitStatus, ThermometryResult};
use ionkick::tomography::{plan_rings, DEFAULT_RINGS};
use ionkick::{KickSequence, MotionalSpec, TrapConfig};
use ionkick_cli::commands::{self, Context};
use ionkick_cli::RunConfig;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn uniform(seed: u64, i: u64) -> f64 {
    (derive_seed(seed, i) >> 11) as f64 / (1u64 << 53) as f64
}

fn context(text: &str, out: &Path) -> Context {
    let mut config = RunConfig::parse(text).expect("config");
    config.run.out = out.to_path_buf();
    Context::new(config).expect("context")
}

fn oracle_vs_coherent() -> Outcome {
    let start = Instant::now();
    let cfg = TrapConfig::default();
    let mut worst: f64 = 0.0;
    let mut max_dim = 0;
    for k in 0..50u64 {
        let u = |j: u64| uniform(11, 5 * k + j);
        let alpha = Complex64::from_polar(3.0 * u(0).sqrt(), TAU * u(1));
        let n = [1, -1, 2, -2][(u(2) * 4.0) as usize % 4];
        let theta = TAU * u(3);
        let phi = if u(4) < 0.5 { 0.0 } else { FRAC_PI_2 };
        let spec = MotionalSpec::Coherent { alpha };
        let seq = KickSequence::new(n, theta, phi).unwrap();
        let dim = recommended_dim(&spec, n, cfg.eta);
        max_dim = max_dim.max(dim);
        let p = match run_ramsey(&spec, &cfg, &seq, dim) {
            Ok(r) => r.spin_up_probability,
            Err(e) => return outcome(false, format!("oracle error: {e}")),
        };
        worst = worst.max((p - s_coherent(alpha, &cfg, &seq)).abs());
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-5 && max_dim <= 256 && t < Duration::from_secs(60),
        format!("max |oracle − closed form| = {worst:.2e}, max dim {max_dim}, {t:.1?}"),
    )
}

fn oracle_vs_thermal() -> Outcome {
    let start = Instant::now();
    let cfg = TrapConfig::default();
    let mut worst: f64 = 0.0;
    for &nbar in &[0.1, 1.0, 10.0] {
        for &n in &[1, 2] {
            let spec = MotionalSpec::Thermal { nbar };
            let dim = recommended_dim(&spec, n, cfg.eta);
            for j in 0..64 {
                let theta = TAU * j as f64 / 64.0;
                let seq = KickSequence::new(n, theta, 0.0).unwrap();
                let p = match run_ramsey(&spec, &cfg, &seq, dim) {
                    Ok(r) => r.spin_up_probability,
                    Err(e) => return outcome(false, format!("oracle error: {e}")),
                };
                worst = worst.max((p - s_thermal(nbar, &cfg, &seq)).abs());
            }
        }
    }
    let t = start.elapsed();
    outcome(
        worst < 1e-3 && t < Duration::from_secs(300),
        format!("max deviation {worst:.2e} over 384 points, {t:.1?}"),
    )
}

fn campaign_fit(nbar: f64, seed: u64) -> ionkick::Result<ThermometryResult> {
    let cfg = TrapConfig::default();
    let thetas = campaign_theta_grid(nbar, &cfg, 1, 1, 41);
    let template = FringePlan {
        n_kicks: 1,
        theta: 0.0,
        detunings: fringe_detunings(16, 1e-3),
        ramsey_time: 1e-3,
        shots: 500,
        noiseless: false,
    };
    let spec = MotionalSpec::Thermal { nbar };
    let scans = synth_lineshape(&spec, &cfg, &thetas, &template, &LiftModel::from_config(&cfg), seed)?;
    Ok(fit_scans(&scans, &cfg)?.1)
}

fn thermometry_range() -> Outcome {
    let mut medians = Vec::new();
    for &nbar in &[0.5, 10.0, 1e3, 1e4] {
        let mut errs = Vec::new();
        for seed in 0..20 {
            match campaign_fit(nbar, 100 + seed) {
                Ok(f) if f.status == FitStatus::Converged => errs.push((f.nbar / nbar - 1.0).abs()),
                Ok(f) => return outcome(false, format!("n̄ = {nbar}, seed {seed}: status {:?}", f.status)),
                Err(e) => return outcome(false, format!("n̄ = {nbar}, seed {seed}: {e}")),
            }
        }
        errs.sort_by(f64::total_cmp);
        medians.push((nbar, (errs[9] + errs[10]) / 2.0));
    }
    let pass = medians.iter().all(|(_, m)| *m < 0.1);
    let detail = medians
        .iter()
        .map(|(n, m)| format!("n̄={n}: {:.1}%", 100.0 * m))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("median relative error {detail}; 80/80 fits converged"))
}

/// Half-maximum width of A·C(θ) around 2π by bisection on each side.
fn numeric_fwhm(fit: &ThermometryResult, eta: f64) -> f64 {
    let f = |t: f64| thermal_envelope(fit.nbar, 1, eta, t) - 0.5;
    let edge = |mut inside: f64, mut outside: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if f(mid) > 0.0 {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        0.5 * (inside + outside)
    };
    edge(TAU, TAU + 1.0) - edge(TAU, TAU - 1.0)
}

fn fwhm_law() -> Outcome {
    let law = fwhm_hot(1e4, 1, 0.2).value;
    match campaign_fit(1e4, 4) {
        Ok(fit) => {
            let w = numeric_fwhm(&fit, 0.2);
            let rel = w / law - 1.0;
            outcome(
                rel.abs() < 0.02,
                format!("fitted n̄ = {:.0}, numeric FWHM {w:.5} rad vs 0.83/(Nη√n̄) = {law:.5} ({:+.2}%)", fit.nbar, 100.0 * rel),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn fock_tomography() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let noiseless = context(
        "[run]\nnoiseless = true\nshots = 1000000000\n[state]\nkind = \"fock\"\nn = 1\n[tomography]\nsmoothing = \"interpolate\"\n",
        &dir.path().join("exact"),
    );
    let exact = match commands::tomo(&noiseless, None) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let g = &exact.grid;
    let worst = (0..g.len())
        .filter(|&i| g.mask[i])
        .map(|i| (g.re[i] - chi_fock(1, g.alpha(i)).re).abs())
        .fold(0.0, f64::max);
    let min = exact.negativity.min_value;
    let r2 = exact.negativity.min_alpha.norm_sqr();

    let noisy = context(
        "[run]\nshots = 500\nseed = 5\n[state]\nkind = \"fock\"\nn = 1\n",
        &dir.path().join("noisy"),
    );
    let noisy = match commands::tomo(&noisy, None) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let sig = noisy.negativity.significance;
    let t = start.elapsed();
    outcome(
        worst < 0.05
            && (min + 0.4463).abs() < 0.02
            && (r2 - 3.0).abs() < 0.5
            && sig > 3.0
            && t < Duration::from_secs(120),
        format!(
            "max |grid − χ_fock| in hull {worst:.4}, min {min:.4} at |α|² = {r2:.2}, 500-shot negativity {sig:.1}σ, {t:.1?}"
        ),
    )
}

fn ring_geometry() -> Outcome {
    let cfg = TrapConfig::default();
    let pts = plan_rings(&cfg, &DEFAULT_RINGS, 64).unwrap();
    let worst = pts
        .iter()
        .map(|p| {
            let n = p.n_kicks as f64;
            ((p.alpha.0 - Complex64::new(0.0, 2.0 * n * cfg.eta)).norm() - 2.0 * n.abs() * cfg.eta).abs()
        })
        .fold(0.0, f64::max);
    let mut rings: Vec<i32> = pts.iter().map(|p| p.n_kicks).collect();
    rings.dedup();
    outcome(
        worst < 1e-12 && rings.len() == 16,
        format!("{} rings, max circle residual {worst:.1e}", rings.len()),
    )
}

fn resolution_calculator() -> Outcome {
    let cfg = TrapConfig::default();
    let coarse = theta_resolution(&cfg);
    let feasible = |nbar: f64| plan_theta_grid(nbar, &cfg, 1, 1).unwrap().feasible;
    // bisect the feasibility edge in log n̄
    let (mut lo, mut hi) = (6.0f64, 12.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if feasible(10f64.powf(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let edge = 10f64.powf(lo);
    let hot = plan_theta_grid(1e4, &cfg, 1, 1).unwrap();
    let tenth = plan_theta_grid(1e8, &cfg, 1, 1).unwrap();
    outcome(
        (coarse - 0.0532).abs() < 5e-4 && (1e9..1e10).contains(&edge) && tenth.undersampled && hot.spacing <= 4.15e-3,
        format!(
            "coarse step {:.1} mrad; FWHM reaches the 0.1 mrad step at n̄ = {edge:.2e}; FWHM/10 below 0.1 mrad flagged from n̄ ≈ 1.7e7",
            1e3 * coarse
        ),
    )
}

fn heating_pipeline() -> Outcome {
    // hand computation: e²·S_V / (4·M·ħ·ω_t·d²) with CODATA 2018 constants
    const HAND: f64 = 3.4121e7;
    let cfg = TrapConfig::default();
    let drive = NoiseDrive {
        s_v: 1e-12,
        d_eff: 1e-3,
        duration: 1.0,
        nbar0: 0.0,
    };
    let rate = heating_rate(&cfg, &drive).unwrap();
    let four_figures = format!("{rate:.3e}") == format!("{HAND:.3e}");
    let dir = tempfile::tempdir().unwrap();
    let ctx = context("[run]\nseed = 8\n", dir.path());
    match commands::heating(&ctx) {
        Ok((report, _)) => {
            let dev = report.relative_deviation.unwrap();
            outcome(
                four_figures && dev.abs() < 0.1,
                format!(
                    "rate {rate:.4e} /s vs hand {HAND:.4e}; predicted n̄ {:.1}, recovered {:.1} ({:+.1}%)",
                    report.predicted_nbar,
                    report.recovered_nbar.unwrap(),
                    100.0 * dev
                ),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "[run]\nseed = 2024\n[experiment]\nkind = \"thermometry\"\n[state]\nkind = \"fock\"\nn = 1\n[tomography]\ntheta_count = 16\ngrid_resolution = 31\n",
    )
    .unwrap();
    let run = |tag: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(tag);
        for cmd in ["simulate", "tomo"] {
            let status = Command::new(env!("CARGO_BIN_EXE_ionkick"))
                .arg("--config")
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .arg(cmd)
                .output()
                .unwrap()
                .status;
            assert!(status.success(), "{cmd} failed");
        }
        let mut files: Vec<_> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "csv"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect();
        files.sort();
        files
    };
    let a = run("first");
    let b = run("second");
    outcome(
        a == b && a.len() >= 6,
        format!("{} CSV files compared byte for byte", a.len()),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("oracle matches coherent-state fringe", oracle_vs_coherent),
        ("oracle matches thermal fringe", oracle_vs_thermal),
        ("thermometry across four decades of n̄", thermometry_range),
        ("revival FWHM law", fwhm_law),
        ("Fock-state tomography", fock_tomography),
        ("ring geometry", ring_geometry),
        ("θ resolution feasibility", resolution_calculator),
        ("heating rate and pipeline", heating_pipeline),
        ("byte-identical reruns", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "acceptance {} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
