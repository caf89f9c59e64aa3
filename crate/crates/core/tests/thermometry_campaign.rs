use ionkick::analytic::{fwhm_exact, fwhm_hot};
use ionkick::heating::{heating_rate, predict_nbar, NoiseDrive};
use ionkick::synth::{fringe_detunings, synth_lineshape, FringePlan, LiftModel};
use ionkick::thermometry::{campaign_theta_grid, fit_scans, FitStatus, ThermometryResult};
use ionkick::{MotionalSpec, TrapConfig};

fn run(nbar: f64, shots: u64, seed: u64) -> ThermometryResult {
    let cfg = TrapConfig::default();
    let thetas = campaign_theta_grid(nbar, &cfg, 1, 1, 41);
    let template = FringePlan {
        n_kicks: 1,
        theta: 0.0,
        detunings: fringe_detunings(16, 1e-3),
        ramsey_time: 1e-3,
        shots,
        noiseless: false,
    };
    let scans = synth_lineshape(
        &MotionalSpec::Thermal { nbar },
        &cfg,
        &thetas,
        &template,
        &LiftModel::from_config(&cfg),
        seed,
    )
    .unwrap();
    fit_scans(&scans, &cfg).unwrap().1
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[(n - 1) / 2] + v[n / 2]) / 2.0
}

#[test]
fn median_error_below_ten_percent() {
    for &nbar in &[0.5, 10.0, 1e3, 1e4] {
        let errs: Vec<f64> = (0..20)
            .map(|seed| {
                let fit = run(nbar, 500, seed);
                assert_eq!(fit.status, FitStatus::Converged);
                (fit.nbar / nbar - 1.0).abs()
            })
            .collect();
        let m = median(errs);
        assert!(m < 0.1, "n̄ = {nbar}: median relative error {m}");
    }
}

#[test]
fn estimator_bias_within_standard_error() {
    let nbar = 1e3;
    let fits: Vec<ThermometryResult> = (0..100).map(|seed| run(nbar, 10_000, 1000 + seed)).collect();
    let mean = fits.iter().map(|f| f.nbar).sum::<f64>() / 100.0;
    let typical_err = median(fits.iter().map(|f| f.nbar_err).collect());
    assert!((mean - nbar).abs() < typical_err, "bias {} vs σ {typical_err}", mean - nbar);
}

#[test]
fn fitted_width_matches_hot_ion_law() {
    let fit = run(1e4, 500, 3);
    let law = fwhm_hot(fit.nbar, 1, 0.2);
    assert!(law.hot_ion);
    let numeric = fit.fwhm.unwrap();
    assert!((numeric / law.value - 1.0).abs() < 0.02, "{numeric} vs {}", law.value);
    let at_truth = fwhm_exact(1e4, 1, 0.2f64).unwrap();
    assert!((at_truth / 0.0415 - 1.0).abs() < 0.02);
}

#[test]
fn heating_prediction_is_recovered() {
    let cfg = TrapConfig::default();
    let drive = NoiseDrive {
        s_v: 2e-19,
        d_eff: 1e-3,
        duration: 0.5,
        nbar0: 8.0,
    };
    assert!(heating_rate(&cfg, &drive).unwrap() > 1.0);
    let predicted = predict_nbar(&cfg, &drive).unwrap();
    let fit = run(predicted, 500, 17);
    assert!((fit.nbar / predicted - 1.0).abs() < 0.1, "{} vs {predicted}", fit.nbar);
}
