use std::f64::consts::PI;

use proptest::prelude::*;
use twinbeam_core::bright::{analyze_bright, BrightOptions, BrightSignal, SpectrumEstimator};
use twinbeam_core::noise;
use twinbeam_core::stats;
use twinbeam_core::synth::{
    synth_bright, synth_vacuum, DetectionChainConfig, PulseTrainConfig, SpectralProfile,
    SweepConfig,
};
use twinbeam_core::vacuum::{
    self, analyze_vacuum, bin_and_report, estimate_snl, shot_segment_starts, PulseWindow,
    QuadratureSample, VacuumOptions, VacuumReport, WindowConfig,
};
use twinbeam_core::{
    apply_loss, build_tmsv, criteria, joint_variance, JointQuadrature, TraceRecord, TwinBeamModel,
};

fn vacuum_run(
    model: &TwinBeamModel,
    n_pulses: usize,
    sweep: &SweepConfig,
    chain: &DetectionChainConfig,
    profile: &SpectralProfile,
    seed: u64,
    opts: &VacuumOptions,
) -> VacuumReport {
    let p = PulseTrainConfig {
        n_pulses,
        ..PulseTrainConfig::vacuum_default()
    };
    let t = synth_vacuum(model, &p, sweep, chain, profile, seed).unwrap();
    analyze_vacuum(
        (&t.minus.probe, &t.minus.conjugate),
        (&t.plus.probe, &t.plus.conjugate),
        opts,
    )
    .unwrap()
}

fn short_tail() -> SweepConfig {
    SweepConfig {
        shot_noise_tail: 2e-3,
        ..SweepConfig::default()
    }
}

#[test]
fn bin_variance_estimator_is_consistent() {
    for m in [100usize, 1000] {
        let n_bins = 100;
        let v_true: f64 = 0.6;
        let mut rng = noise::stream(77, m as u64);
        let samples: Vec<QuadratureSample> = (0..n_bins * m)
            .map(|k| QuadratureSample {
                theta: (k / m) as f64 * PI / n_bins as f64,
                x_minus: v_true.sqrt() * noise::normal(&mut rng),
                x_plus: noise::normal(&mut rng),
                pulse_index: k,
            })
            .collect();
        let r = bin_and_report(&samples, 1.0, n_bins, (0.0, PI)).unwrap();
        assert_eq!(r.bins.len(), n_bins);
        assert!(r.bins.iter().all(|b| b.count == m));
        let est: Vec<f64> = r.bins.iter().map(|b| b.var_minus.unwrap()).collect();
        let spread = (2.0 / (m - 1) as f64).sqrt() * v_true;
        let mean = stats::mean(&est);
        assert!(
            (mean - v_true).abs() < 3.0 * spread / (n_bins as f64).sqrt(),
            "m={m}: mean {mean}"
        );
        let sd = stats::variance(&est).sqrt();
        assert!(
            (sd / spread - 1.0).abs() < 0.25,
            "m={m}: scatter {sd} vs {spread}"
        );
    }
}

#[test]
fn snl_from_a_ten_millisecond_tail_at_period_stride() {
    let p = PulseTrainConfig::vacuum_default();
    let t = synth_vacuum(
        &TwinBeamModel::default(),
        &PulseTrainConfig { n_pulses: 100, ..p },
        &SweepConfig::default(),
        &DetectionChainConfig::ideal(),
        &SpectralProfile::default(),
        4,
    )
    .unwrap();
    let starts = shot_segment_starts(&t.minus.probe, p.period_samples());
    assert_eq!(starts.len(), 1000);
    let w = PulseWindow::new(
        &WindowConfig::default(),
        p.samples_per_pulse,
        p.sample_rate(),
    )
    .unwrap();
    let vals: Vec<f64> = starts
        .iter()
        .map(|&s| {
            w.integrate(&t.minus.probe.samples[s..]).unwrap()
                - w.integrate(&t.minus.conjugate.samples[s..]).unwrap()
        })
        .collect();
    let snl = estimate_snl(&vals).unwrap();
    let expected = 2.0 * w.weights().iter().map(|x| x * x).sum::<f64>();
    assert!((snl / expected - 1.0).abs() < 0.1, "{snl} vs {expected}");
}

#[test]
fn alignment_recovers_the_probe_delay() {
    let chain = DetectionChainConfig {
        delay_pc: 50e-9,
        ..DetectionChainConfig::ideal()
    };
    let r = vacuum_run(
        &TwinBeamModel::default(),
        3000,
        &short_tail(),
        &chain,
        &SpectralProfile::default(),
        2,
        &VacuumOptions {
            n_bins: 30,
            ..VacuumOptions::default()
        },
    );
    assert_eq!(r.delta_t_samples, 5);
    assert!((r.delta_t - 50e-9).abs() < 1e-15);
}

fn scaled(t: &TraceRecord, c: f64) -> TraceRecord {
    let mut out = t.clone();
    out.samples.iter_mut().for_each(|x| *x *= c);
    out
}

#[test]
fn outputs_are_invariant_to_trace_scaling() {
    let p = PulseTrainConfig {
        n_pulses: 2000,
        ..PulseTrainConfig::vacuum_default()
    };
    let t = synth_vacuum(
        &TwinBeamModel::default(),
        &p,
        &short_tail(),
        &DetectionChainConfig::default(),
        &SpectralProfile::default(),
        6,
    )
    .unwrap();
    let opts = VacuumOptions {
        n_bins: 20,
        ..VacuumOptions::default()
    };
    let base = analyze_vacuum(
        (&t.minus.probe, &t.minus.conjugate),
        (&t.plus.probe, &t.plus.conjugate),
        &opts,
    )
    .unwrap();
    for c in [1e-3, 7.5, 1e4] {
        let s = |r: &TraceRecord| scaled(r, c);
        let (mp, mc, pp, pc) = (
            s(&t.minus.probe),
            s(&t.minus.conjugate),
            s(&t.plus.probe),
            s(&t.plus.conjugate),
        );
        let r = analyze_vacuum((&mp, &mc), (&pp, &pc), &opts).unwrap();
        assert_eq!(r.delta_t_samples, base.delta_t_samples);
        for (a, b) in [
            (r.minus.squeezing_db, base.minus.squeezing_db),
            (r.plus.squeezing_db, base.plus.squeezing_db),
            (r.minus.uncertainty_db, base.minus.uncertainty_db),
            (r.inseparability, base.inseparability),
            (r.epr_product, base.epr_product),
        ] {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "c={c}: {a} vs {b}");
        }
    }

    let b = synth_bright(
        &TwinBeamModel::default(),
        &PulseTrainConfig::default(),
        &DetectionChainConfig::default(),
        &SpectralProfile::default(),
        6,
    )
    .unwrap();
    let opts = BrightOptions {
        correct_electronic: true,
        ..BrightOptions::default()
    };
    let base = analyze_bright(
        BrightSignal::Subtracted(&b.diff),
        &b.shot,
        Some(&b.electronic),
        &opts,
    )
    .unwrap();
    for c in [1e-3, 40.0] {
        let (d, s, e) = (
            scaled(&b.diff, c),
            scaled(&b.shot, c),
            scaled(&b.electronic, c),
        );
        let r = analyze_bright(BrightSignal::Subtracted(&d), &s, Some(&e), &opts).unwrap();
        for (x, y) in r.squeezing_db.iter().zip(&base.squeezing_db) {
            assert!((x.unwrap() - y.unwrap()).abs() < 1e-9);
        }
    }
}

#[test]
fn averaged_spectrum_scatter_falls_as_one_over_root_n() {
    let est = SpectrumEstimator::new(200, 1e8, false).unwrap();
    let mut rng = noise::stream(5, 900);
    for n in [10usize, 100, 1000] {
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let mut v = vec![0.0; 200];
                noise::fill_normal(&mut rng, &mut v);
                v
            })
            .collect();
        let views: Vec<&[f64]> = data.iter().map(Vec::as_slice).collect();
        let s = est.average(&views).unwrap();
        assert_eq!(s.n_averaged, n);
        // Interior bins only: DC is removed and Nyquist has half the degrees of freedom.
        let p = &s.power[1..s.power.len() - 1];
        let rel = stats::variance(p).sqrt() / stats::mean(p);
        let scaled = rel * (n as f64).sqrt();
        assert!(
            (0.75..1.25).contains(&scaled),
            "n={n}: relative scatter·√n = {scaled}"
        );
    }
}

#[test]
fn a_full_turn_of_phase_changes_nothing() {
    let model = TwinBeamModel::default();
    let chain = DetectionChainConfig::ideal();
    let profile = SpectralProfile::default();
    let turn = |offset: f64| {
        let sweep = SweepConfig {
            phase_start: -PI / 4.0 + offset,
            phase_end: 7.0 * PI / 4.0 + offset,
            phase_jitter_rms: 0.0,
            shot_noise_tail: 2e-3,
        };
        let opts = VacuumOptions {
            n_bins: 40,
            phase_range: (sweep.phase_start, sweep.phase_end),
            ..VacuumOptions::default()
        };
        vacuum_run(&model, 4000, &sweep, &chain, &profile, 13, &opts)
    };
    let a = turn(0.0);
    let b = turn(2.0 * PI);
    assert!((a.minus.squeezing_db - b.minus.squeezing_db).abs() < 1e-6);
    assert!((a.inseparability - b.inseparability).abs() < 1e-6);
    let wrapped = (b.minus.phase - a.minus.phase).rem_euclid(2.0 * PI);
    assert!(wrapped.min(2.0 * PI - wrapped) < 1e-6);
    // Over a full turn the X⁻ curve has exactly one minimum, at δ⁻ = 0.
    let ph = a.minus.phase.rem_euclid(2.0 * PI);
    assert!(ph.min(2.0 * PI - ph) < 0.1, "phase {}", a.minus.phase);
    assert!(
        (a.minus.squeezing_db + 3.8).abs() < 0.4,
        "{}",
        a.minus.squeezing_db
    );
}

/// Normalized X⁻ variance at the squeezing phase predicted for a window on
/// the shaped, lossless source: WᵀSW / WᵀW with S the squeezed-mode
/// autocorrelation.
fn shaped_window_prediction(
    model: &TwinBeamModel,
    profile: &SpectralProfile,
    window: &WindowConfig,
) -> f64 {
    let p = PulseTrainConfig::vacuum_default();
    let rate = p.sample_rate();
    let fir = noise::FirFilter::design(|f| (-model.r * profile.squeezing_fraction(f)).exp(), rate)
        .unwrap();
    let w = PulseWindow::new(window, p.samples_per_pulse, rate).unwrap();
    let w = w.weights();
    let mut quad = 0.0;
    for (i, a) in w.iter().enumerate() {
        for (j, b) in w.iter().enumerate() {
            quad += a * b * fir.autocorrelation(i.abs_diff(j));
        }
    }
    quad / w.iter().map(|x| x * x).sum::<f64>()
}

#[test]
fn window_centre_selects_the_squeezed_band() {
    let model = TwinBeamModel::default();
    let chain = DetectionChainConfig::ideal();
    let profile = SpectralProfile::shaped();
    let run = |centre: f64| {
        let window = WindowConfig {
            omega0: 2.0 * PI * centre,
            ..WindowConfig::default()
        };
        // No delay in the ideal chain; a Δt search on band-free data would
        // only select noise.
        let opts = VacuumOptions {
            search_range: 0.0,
            window,
            ..VacuumOptions::default()
        };
        let r = vacuum_run(
            &model,
            10_000,
            &SweepConfig::default(),
            &chain,
            &profile,
            17,
            &opts,
        );
        (
            r,
            10.0 * shaped_window_prediction(&model, &profile, &window).log10(),
        )
    };
    let (tuned, tuned_pred) = run(7.5e5);
    let (detuned, detuned_pred) = run(5e6);
    assert!(tuned_pred < -1.0, "{tuned_pred}");
    assert!(detuned_pred.abs() < 0.05, "{detuned_pred}");
    for q in [&tuned.minus, &tuned.plus] {
        assert!(
            (q.squeezing_db - tuned_pred).abs() < 0.4,
            "tuned {} vs {tuned_pred}",
            q.squeezing_db
        );
    }
    for q in [&detuned.minus, &detuned.plus] {
        assert!(q.squeezing_db.abs() < 0.5, "detuned {}", q.squeezing_db);
    }
    assert!(tuned.inseparability < 1.7);
    assert!((detuned.inseparability - 2.0).abs() < 0.15);
}

#[test]
fn minimum_and_maximum_bins_are_half_a_turn_apart() {
    let model = TwinBeamModel {
        r: 1.0,
        ..TwinBeamModel::default()
    };
    let state = apply_loss(&build_tmsv(&model).unwrap(), 0.9, 0.85).unwrap();
    let n_bins = 20;
    let per_bin = 200_000;
    let width = 2.0 * PI / n_bins as f64;
    let mut rng = noise::stream(31, 0);
    let mut samples = Vec::with_capacity(n_bins * per_bin);
    for k in 0..n_bins * per_bin {
        let theta = (k as f64 + 0.5) * 2.0 * PI / (n_bins * per_bin) as f64;
        let sd = |q| joint_variance(&state, theta, q).sqrt();
        samples.push(QuadratureSample {
            theta,
            x_minus: sd(JointQuadrature::Minus) * noise::normal(&mut rng),
            x_plus: sd(JointQuadrature::Plus) * noise::normal(&mut rng),
            pulse_index: k,
        });
    }
    let r = bin_and_report(&samples, 1.0, n_bins, (0.0, 2.0 * PI)).unwrap();
    let circular = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    };
    let pick = |f: &dyn Fn(&vacuum::PhaseBin) -> f64| {
        let vals: Vec<(f64, f64)> = r.bins.iter().map(|b| (b.theta_mean, f(b))).collect();
        let lo = vals
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        let hi = vals
            .iter()
            .copied()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        (lo, hi)
    };
    for q in [JointQuadrature::Minus, JointQuadrature::Plus] {
        let (lo, hi) = match q {
            JointQuadrature::Minus => pick(&|b| b.var_minus.unwrap()),
            JointQuadrature::Plus => pick(&|b| b.var_plus.unwrap()),
        };
        assert!(
            (circular(lo, hi) - PI).abs() <= width,
            "{q:?}: min {lo}, max {hi}"
        );
        // The closed-form minimum lies in the minimum bin.
        let truth = (0..3600)
            .map(|k| k as f64 * 2.0 * PI / 3600.0)
            .min_by(|a, b| joint_variance(&state, *a, q).total_cmp(&joint_variance(&state, *b, q)))
            .unwrap();
        assert!(
            circular(lo, truth) <= width,
            "{q:?}: bin {lo} vs closed form {truth}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inseparability_rises_monotonically_with_loss(r in 0.05f64..1.5, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let m = TwinBeamModel { r, ..TwinBeamModel::default() };
        let s = build_tmsv(&m).unwrap();
        let figures = |eta: f64| {
            let l = apply_loss(&s, eta, eta).unwrap();
            let vm = joint_variance(&l, m.delta_minus, JointQuadrature::Minus);
            let vp = joint_variance(&l, m.delta_plus, JointQuadrature::Plus);
            criteria(vm, vp).unwrap()
        };
        let (a, b) = (figures(lo), figures(hi));
        prop_assert!(a.inseparability >= b.inseparability - 1e-12);
        prop_assert!(a.epr_product >= b.epr_product - 1e-12);
        prop_assert!(a.inseparability <= 2.0 + 1e-12);
    }

}
