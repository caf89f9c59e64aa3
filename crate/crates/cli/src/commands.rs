//! Subcommand implementations. Each returns the files it wrote.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use ionkick::analytic::{self, Quadrature};
use ionkick::heating::{heating_rate, predict_nbar};
use ionkick::synth::{
    derive_seed, fringe_detunings, synth_fringe, synth_lineshape, synth_ring_samples, FringePlan, LiftModel,
    RingPlan,
};
use ionkick::thermometry::{self, campaign_theta_grid, plan_theta_grid, FitStatus, ThermometryResult};
use ionkick::tomography::{
    self, chi_from_samples, chi_from_samples_corrected, negativity_report, reconstruct_grid, ring_thetas,
    ChiSample, NegativityReport,
};
use ionkick::{MotionalSpec, TrapConfig};

use crate::config::{RunConfig, ThetaGridKind};
use crate::error::{CliError, CliResult};
use crate::records::{
    read_fringe_csv, read_ring_csv, write_fringe_csv, write_grid_csv, write_ring_csv, Provenance, FRINGE_SCHEMA,
    GRID_SCHEMA, RING_SCHEMA,
};

/// Validated configuration plus its digest and output directory.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub trap: TrapConfig<f64>,
    pub digest: String,
}

impl Context {
    pub fn new(config: RunConfig) -> CliResult<Self> {
        config.validate()?;
        Ok(Self {
            trap: config.trap.to_trap()?,
            digest: config.digest()?,
            config,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.run.out
    }

    fn prepare_out(&self) -> CliResult<()> {
        std::fs::create_dir_all(self.out_dir())
            .map_err(|e| CliError::Io(format!("{}: {e}", self.out_dir().display())))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    fn provenance(&self, schema: &str) -> Provenance {
        Provenance::new(schema, &self.digest, self.config.run.seed)
    }

    fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Echo of the effective configuration next to the outputs.
    fn write_config_echo(&self) -> CliResult<PathBuf> {
        let text = format!(
            "# config_sha256 = {}\n# version = {}\n{}",
            self.digest,
            env!("CARGO_PKG_VERSION"),
            self.config.canonical()?
        );
        self.write_text("run_config.toml", &text)
    }
}

fn toml_text<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(toml::to_string(value)?)
}

/// θ values for one synthetic lineshape at `nbar`.
fn lineshape_thetas(ctx: &Context, nbar: f64, n_kicks: i32, points: usize) -> CliResult<Vec<f64>> {
    let t = &ctx.config.thermometry;
    Ok(match t.grid {
        ThetaGridKind::Uniform => campaign_theta_grid(nbar, &ctx.trap, n_kicks, t.revival, points),
        ThetaGridKind::Planned => plan_theta_grid(nbar, &ctx.trap, n_kicks, t.revival)?.thetas,
    })
}

fn lineshape_plan(ctx: &Context, n_kicks: i32, detuning_points: usize, ramsey_time: f64) -> FringePlan {
    FringePlan {
        n_kicks,
        theta: 0.0,
        detunings: fringe_detunings(detuning_points, ramsey_time),
        ramsey_time,
        shots: ctx.config.run.shots,
        noiseless: ctx.config.run.noiseless,
    }
}

/// Writes fringe, lineshape or ring records depending on the experiment kind.
pub fn simulate(ctx: &Context) -> CliResult<Vec<PathBuf>> {
    use crate::config::ExperimentKind as K;
    ctx.prepare_out()?;
    let cfg = &ctx.trap;
    let run = &ctx.config.run;
    let mut written = vec![ctx.write_config_echo()?];
    match ctx.config.experiment.kind {
        K::Fringe => {
            let f = &ctx.config.fringe;
            let spec = ctx.config.state.to_spec()?;
            let plan = FringePlan {
                theta: f.theta,
                ..lineshape_plan(ctx, f.n_kicks, f.detuning_points, f.ramsey_time)
            };
            let scan = synth_fringe(&spec, cfg, &plan, run.seed)?;
            let path = ctx.path("fringe.csv");
            write_fringe_csv(&path, &ctx.provenance(FRINGE_SCHEMA), &[scan])?;
            written.push(path);
        }
        K::Thermometry => {
            let t = &ctx.config.thermometry;
            let template = lineshape_plan(ctx, t.n_kicks, t.detuning_points, t.ramsey_time);
            let lift = LiftModel::from_config(cfg);
            for (i, &nbar) in t.nbars.iter().enumerate() {
                let thetas = lineshape_thetas(ctx, nbar, t.n_kicks, t.theta_points)?;
                let spec = MotionalSpec::Thermal { nbar };
                let scans = synth_lineshape(&spec, cfg, &thetas, &template, &lift, derive_seed(run.seed, i as u64))?;
                let mut prov = ctx.provenance(FRINGE_SCHEMA);
                prov.push("expected_nbar", nbar);
                let path = ctx.path(&format!("lineshape_{i:02}.csv"));
                write_fringe_csv(&path, &prov, &scans)?;
                written.push(path);
            }
        }
        K::Tomography => {
            let path = ctx.path("rings.csv");
            write_ring_csv(&path, &ctx.provenance(RING_SCHEMA), &simulate_rings(ctx)?)?;
            written.push(path);
        }
        K::Heating => {
            let (path, _) = heating_lineshape(ctx)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn simulate_rings(ctx: &Context) -> CliResult<Vec<ionkick::synth::RingSample>> {
    let t = &ctx.config.tomography;
    let plan = RingPlan {
        rings: t.rings.clone(),
        thetas: ring_thetas(t.theta_count),
        quadratures: t.quadratures.iter().map(|&q| Quadrature::from(q)).collect(),
        shots: ctx.config.run.shots,
        noiseless: ctx.config.run.noiseless,
    };
    Ok(synth_ring_samples(&ctx.config.state.to_spec()?, &ctx.trap, &plan, ctx.config.run.seed)?)
}

fn heating_lineshape(ctx: &Context) -> CliResult<(PathBuf, f64)> {
    let h = &ctx.config.heating;
    let predicted = predict_nbar(&ctx.trap, &h.drive())?;
    if !(predicted > 0.0) {
        return Err(CliError::Validation("predicted n̄ must be positive to synthesize a lineshape".into()));
    }
    let thetas = lineshape_thetas(ctx, predicted, h.n_kicks, h.theta_points)?;
    let template = lineshape_plan(ctx, h.n_kicks, h.detuning_points, h.ramsey_time);
    let scans = synth_lineshape(
        &MotionalSpec::Thermal { nbar: predicted },
        &ctx.trap,
        &thetas,
        &template,
        &LiftModel::from_config(&ctx.trap),
        ctx.config.run.seed,
    )?;
    let mut prov = ctx.provenance(FRINGE_SCHEMA);
    prov.push("expected_nbar", predicted);
    let path = ctx.path("heating_lineshape.csv");
    write_fringe_csv(&path, &prov, &scans)?;
    Ok((path, predicted))
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub theta_rad: f64,
    pub contrast: f64,
    pub error: f64,
    pub model: f64,
    pub pull: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LineshapeReport {
    pub file: String,
    pub status: String,
    pub n_kicks: i32,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_nbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nbar_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dof: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fwhm_rad: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_deviation: Option<f64>,
    pub residuals: Vec<ResidualRow>,
}

impl LineshapeReport {
    pub fn succeeded(&self) -> bool {
        self.nbar.is_some()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub lineshape: Vec<LineshapeReport>,
}

fn status_name(s: FitStatus) -> &'static str {
    match s {
        FitStatus::Converged => "converged",
        FitStatus::LowerBoundOnly => "lower-bound-only",
        FitStatus::UpperBoundOnly => "upper-bound-only",
    }
}

fn fit_one(ctx: &Context, path: &Path) -> CliResult<LineshapeReport> {
    let (prov, scans) = read_fringe_csv(path)?;
    let expected_nbar = prov.get("expected_nbar").and_then(|v| v.parse::<f64>().ok());
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let n_kicks = scans[0].n_kicks;
    let mut report = LineshapeReport {
        file,
        status: String::new(),
        n_kicks,
        points: scans.len(),
        expected_nbar,
        nbar: None,
        nbar_err: None,
        amplitude: None,
        amplitude_err: None,
        chi2: None,
        dof: None,
        fwhm_rad: None,
        relative_deviation: None,
        residuals: Vec::new(),
    };
    match thermometry::fit_scans(&scans, &ctx.trap) {
        Ok((points, fit)) => {
            fill_fit(&mut report, &fit);
            report.residuals = points
                .iter()
                .map(|p| {
                    let model = fit.amplitude * analytic::thermal_envelope(fit.nbar, n_kicks, ctx.trap.eta, p.theta);
                    ResidualRow {
                        theta_rad: p.theta,
                        contrast: p.contrast,
                        error: p.error,
                        model,
                        pull: (p.contrast - model) / p.error,
                    }
                })
                .collect();
        }
        // data that parsed but cannot be fitted is itemized, not fatal
        Err(e) => report.status = format!("failed: {e}"),
    }
    Ok(report)
}

fn fill_fit(report: &mut LineshapeReport, fit: &ThermometryResult) {
    report.status = status_name(fit.status).to_string();
    report.nbar = Some(fit.nbar);
    report.nbar_err = Some(fit.nbar_err);
    report.amplitude = Some(fit.amplitude);
    report.amplitude_err = Some(fit.amplitude_err);
    report.chi2 = Some(fit.chi2);
    report.dof = Some(fit.dof);
    report.fwhm_rad = fit.fwhm;
    report.relative_deviation = report.expected_nbar.map(|e| fit.nbar / e - 1.0);
}

const SUMMARY_HEADER: [&str; 11] = [
    "file",
    "n_kicks",
    "expected_nbar",
    "nbar_hat",
    "nbar_err",
    "amplitude",
    "amplitude_err",
    "reduced_chi2",
    "fwhm_rad",
    "status",
    "relative_deviation",
];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Fits every fringe CSV and writes `fit_report.toml` and `fit_summary.csv`.
/// Fails only when no lineshape could be fitted.
pub fn fit(ctx: &Context, inputs: &[PathBuf]) -> CliResult<(FitReport, Vec<PathBuf>)> {
    if inputs.is_empty() {
        return Err(CliError::Validation("fit needs at least one fringe CSV".into()));
    }
    let reports = inputs
        .par_iter()
        .map(|p| fit_one(ctx, p))
        .collect::<CliResult<Vec<_>>>()?;
    ctx.prepare_out()?;
    let report = FitReport { lineshape: reports };
    let report_path = ctx.write_text("fit_report.toml", &toml_text(&report)?)?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER)?;
    for r in &report.lineshape {
        w.write_record([
            r.file.clone(),
            r.n_kicks.to_string(),
            opt(r.expected_nbar),
            opt(r.nbar),
            opt(r.nbar_err),
            opt(r.amplitude),
            opt(r.amplitude_err),
            opt(r.chi2.zip(r.dof).map(|(c, d)| c / d.max(1) as f64)),
            opt(r.fwhm_rad),
            r.status.clone(),
            opt(r.relative_deviation),
        ])?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let mut text = format!("# config_sha256 = {}\n# version = {}\n", ctx.digest, env!("CARGO_PKG_VERSION"));
    text.push_str(&String::from_utf8_lossy(&body));
    let summary_path = ctx.write_text("fit_summary.csv", &text)?;

    if !report.lineshape.iter().any(LineshapeReport::succeeded) {
        let reasons: Vec<String> = report.lineshape.iter().map(|r| format!("{}: {}", r.file, r.status)).collect();
        return Err(CliError::Numeric(format!("no lineshape could be fitted ({})", reasons.join("; "))));
    }
    Ok((report, vec![report_path, summary_path]))
}

#[derive(Debug, Clone, Serialize)]
pub struct NegativitySummary {
    pub min_value: f64,
    pub min_re_alpha: f64,
    pub min_im_alpha: f64,
    pub min_sigma: f64,
    pub significance: f64,
    pub area_fraction_below_3sigma: f64,
    pub significant: bool,
    pub samples: usize,
    pub re_only_samples: usize,
    pub unphysical_samples: usize,
    pub imaginary_part: bool,
    pub method: String,
    pub lift_corrected: bool,
}

#[derive(Debug, Clone)]
pub struct TomoOutcome {
    pub chis: Vec<ChiSample>,
    pub grid: tomography::ChiGrid,
    pub negativity: NegativityReport,
    pub files: Vec<PathBuf>,
}

/// Reconstructs χ from a ring CSV, or from freshly simulated rings when no
/// input is given, and writes the grid and a negativity summary.
pub fn tomo(ctx: &Context, input: Option<&Path>) -> CliResult<TomoOutcome> {
    ctx.prepare_out()?;
    let mut files = Vec::new();
    let samples = match input {
        Some(p) => read_ring_csv(p)?.1,
        None => {
            let samples = simulate_rings(ctx)?;
            let path = ctx.path("rings.csv");
            write_ring_csv(&path, &ctx.provenance(RING_SCHEMA), &samples)?;
            files.push(path);
            samples
        }
    };
    let t = &ctx.config.tomography;
    let chis = if t.correct_lift {
        chi_from_samples_corrected(&ctx.trap, &samples, &LiftModel::from_config(&ctx.trap))?
    } else {
        chi_from_samples(&ctx.trap, &samples)?
    };
    let grid = reconstruct_grid(&chis, t.grid_resolution, t.smoothing.into())?;
    let negativity = negativity_report(&grid)?;

    let mut prov = ctx.provenance(GRID_SCHEMA);
    prov.push("method", &grid.method);
    prov.push("chi_im", if grid.im.is_some() { "present" } else { "missing" });
    let grid_path = ctx.path("chi_grid.csv");
    write_grid_csv(&grid_path, &prov, &grid)?;
    files.push(grid_path);

    let summary = NegativitySummary {
        min_value: negativity.min_value,
        min_re_alpha: negativity.min_alpha.re,
        min_im_alpha: negativity.min_alpha.im,
        min_sigma: negativity.min_sigma,
        significance: negativity.significance,
        area_fraction_below_3sigma: negativity.area_fraction,
        significant: negativity.significant,
        samples: chis.len(),
        re_only_samples: chis.iter().filter(|c| c.re_only()).count(),
        unphysical_samples: chis.iter().filter(|c| c.unphysical()).count(),
        imaginary_part: grid.im.is_some(),
        method: grid.method.clone(),
        lift_corrected: t.correct_lift,
    };
    files.push(ctx.write_text("negativity_report.toml", &toml_text(&summary)?)?);

    if t.reference {
        files.push(write_reference_residuals(ctx, &chis)?);
    }
    Ok(TomoOutcome {
        chis,
        grid,
        negativity,
        files,
    })
}

fn write_reference_residuals(ctx: &Context, chis: &[ChiSample]) -> CliResult<PathBuf> {
    let spec = ctx.config.state.to_spec()?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record([
        "n_kicks", "theta_rad", "re_alpha", "im_alpha", "chi_re", "chi_re_err", "model_re", "chi_im", "chi_im_err",
        "model_im",
    ])?;
    for c in chis {
        let model = ionkick::synth::chi_for_spec(&spec, &ctx.trap, c.n_kicks, c.theta)?;
        w.write_record([
            c.n_kicks.to_string(),
            c.theta.to_string(),
            c.alpha.0.re.to_string(),
            c.alpha.0.im.to_string(),
            c.re.value.to_string(),
            c.re.error.to_string(),
            model.re.to_string(),
            c.im.map(|e| e.value.to_string()).unwrap_or_default(),
            c.im.map(|e| e.error.to_string()).unwrap_or_default(),
            model.im.to_string(),
        ])?;
    }
    let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    let mut text = format!("# config_sha256 = {}\n# seed = {}\n", ctx.digest, ctx.config.run.seed);
    text.push_str(&String::from_utf8_lossy(&body));
    ctx.write_text("chi_residuals.csv", &text)
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatingReport {
    pub s_v: f64,
    pub d_eff: f64,
    pub duration: f64,
    pub nbar0: f64,
    pub rate_per_s: f64,
    pub predicted_nbar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered_nbar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered_nbar_err: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_deviation: Option<f64>,
}

/// Heating rate and predicted n̄; optionally the synthesize-and-fit check.
pub fn heating(ctx: &Context) -> CliResult<(HeatingReport, Vec<PathBuf>)> {
    ctx.prepare_out()?;
    let h = &ctx.config.heating;
    let drive = h.drive();
    let mut report = HeatingReport {
        s_v: h.s_v,
        d_eff: h.d_eff,
        duration: h.duration,
        nbar0: h.nbar0,
        rate_per_s: heating_rate(&ctx.trap, &drive)?,
        predicted_nbar: predict_nbar(&ctx.trap, &drive)?,
        recovered_nbar: None,
        recovered_nbar_err: None,
        relative_deviation: None,
    };
    let mut files = Vec::new();
    if h.synthesize {
        let (path, predicted) = heating_lineshape(ctx)?;
        let (_, scans) = read_fringe_csv(&path)?;
        let (_, fit) = thermometry::fit_scans(&scans, &ctx.trap)?;
        report.recovered_nbar = Some(fit.nbar);
        report.recovered_nbar_err = Some(fit.nbar_err);
        report.relative_deviation = Some(fit.nbar / predicted - 1.0);
        files.push(path);
    }
    files.push(ctx.write_text("heating_report.toml", &toml_text(&report)?)?);
    Ok((report, files))
}
