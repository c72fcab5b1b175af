use bridgebench_core::closed_loop::operating_point;
use bridgebench_core::presets::{self, FIG7_NOISE_HZ, FIG7_SIGNAL_HZ};
use bridgebench_core::spectral::{goertzel, measured_output, LinearModel};
use bridgebench_core::transient::{self, resonator_gain, settle_and_window};
use bridgebench_core::*;

fn tone(ts: &TimeSeries, y: &[f64], f: f64) -> f64 {
    goertzel(y, ts.sample_rate(), f).unwrap().amplitude
}

/// Output tone at `f_noise` relative to the tone at `f_signal`, dB.
fn tone_ratio_db(config: &SimConfig, f_signal: f64, f_noise: f64) -> f64 {
    let ts = transient::run(config).unwrap();
    let w = settle_and_window(&ts, 0.5, &[f_signal, f_noise]).unwrap();
    let y = measured_output(&w, config.topology);
    20.0 * (tone(&w, &y, f_noise) / tone(&w, &y, f_signal)).log10()
}

#[test]
fn balanced_open_bridge_ignores_supply_tone() {
    let c = SimConfig::new(
        Topology::OpenBridge,
        BridgeParams::balanced(1000.0, 5.0),
        presets::fig7_amp(),
    )
    .with_source(SourceSpec::tone(Target::Vcc, 10e-3, 9e3));
    let ts = transient::run(&c).unwrap();
    let w = settle_and_window(&ts, 0.5, &[9e3]).unwrap();
    assert!(tone(&w, w.channel(Channel::VDiff), 9e3) < 1e-12);
}

#[test]
fn pmos_loop_rejects_ground_tone() {
    let c = presets::fig7(Topology::PmosFeedback, Target::Gnd);
    let r = tone_ratio_db(&c, FIG7_SIGNAL_HZ, FIG7_NOISE_HZ);
    assert!(r <= -40.0, "{r} dB");
}

#[test]
fn pmos_loop_degrades_on_supply_tone() {
    let fb = tone_ratio_db(
        &presets::fig7(Topology::PmosFeedback, Target::Vcc),
        FIG7_SIGNAL_HZ,
        FIG7_NOISE_HZ,
    );
    let open = tone_ratio_db(
        &presets::fig7(Topology::OpenBridge, Target::Vcc),
        FIG7_SIGNAL_HZ,
        FIG7_NOISE_HZ,
    );
    assert!(fb - open > 0.0, "feedback {fb} dB, open {open} dB");
}

#[test]
fn nmos_loop_rejects_supply_tone_and_passes_ground() {
    let vcc = tone_ratio_db(
        &presets::fig7(Topology::NmosFeedback, Target::Vcc),
        FIG7_SIGNAL_HZ,
        FIG7_NOISE_HZ,
    );
    assert!(vcc <= -40.0, "{vcc} dB");
    let gnd = tone_ratio_db(
        &presets::fig7(Topology::NmosFeedback, Target::Gnd),
        FIG7_SIGNAL_HZ,
        FIG7_NOISE_HZ,
    );
    assert!(gnd > vcc + 20.0, "gnd {gnd} dB, vcc {vcc} dB");
}

#[test]
fn halving_the_step_barely_moves_the_output() {
    let coarse = presets::fig7(Topology::PmosFeedback, Target::Gnd);
    let fine = coarse.clone().with_timing(2e6, coarse.duration);
    let amp = |c: &SimConfig| {
        let ts = transient::run(c).unwrap();
        let w = settle_and_window(&ts, 0.5, &[FIG7_SIGNAL_HZ, FIG7_NOISE_HZ]).unwrap();
        tone(&w, &w.differential_output(), FIG7_SIGNAL_HZ)
    };
    let (a, b) = (amp(&coarse), amp(&fine));
    assert!(((a - b) / b).abs() <= 1e-4, "{a} vs {b}");
}

#[test]
fn runs_are_bit_identical() {
    let c = presets::fig7(Topology::PmosFeedback, Target::Gnd)
        .with_source(SourceSpec::white_noise(Target::Vcc, 10e-6, 7))
        .with_timing(1e6, 5e-3);
    assert_eq!(transient::run(&c).unwrap(), transient::run(&c).unwrap());
    let other = transient::run_with_seed(&c, Some(8)).unwrap();
    assert_ne!(transient::run(&c).unwrap(), other);
}

#[test]
fn settles_onto_the_dc_operating_point() {
    for topology in [
        Topology::PmosFeedback,
        Topology::NmosFeedback,
        Topology::RcCompensated,
    ] {
        let mut c = match topology {
            Topology::RcCompensated => presets::fig9(topology).with_timing(2e6, 20e-3),
            _ => presets::fig7(topology, Target::Gnd),
        };
        c.sources.clear();
        c = c.with_source(SourceSpec::dc(Target::Vcc, 0.2));
        let op = operating_point(&c).unwrap();
        let ts = transient::run(&c).unwrap();
        let last = *ts.differential_output().last().unwrap();
        assert!(
            ((last - op.v_s) / op.v_s).abs() < 1e-3,
            "{topology:?}: {last} vs {}",
            op.v_s
        );
    }
}

/// After a mismatch step the gate filter integrates the offset away. The
/// loop speeds the filter up by `1 + L`, so the output relaxes with
/// `RC/(1 + L)`.
#[test]
fn gate_filter_cancels_a_static_offset() {
    let c = presets::fig9(Topology::RcCompensated).with_timing(2e6, 2e-3);
    let tau_rc = c.rc.unwrap().tau();
    let l = LinearModel::new(&c).unwrap().loop_gain(1e-3);
    let expected = tau_rc / (1.0 + l);

    let ts = transient::run(&c).unwrap();
    let y = ts.differential_output();
    let fin = operating_point(&c).unwrap().v_s;
    let (peak_idx, _) = y
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 - fin).abs().total_cmp(&(b.1 - fin).abs()))
        .unwrap();
    let dev = |k: usize| (y[k] - fin).abs();
    let peak = dev(peak_idx);
    let cross = |level: f64| (peak_idx..y.len()).find(|&k| dev(k) < level * peak).unwrap();
    let (k1, k2) = (cross(0.5), cross(0.5 / std::f64::consts::E));
    let tau = (k2 - k1) as f64 / c.sample_rate;
    assert!(((tau - expected) / expected).abs() < 0.1, "{tau} vs {expected}");
    // Without the loop speed-up the filter constant itself would be 100x off.
    assert!(tau < tau_rc / 10.0);
}

#[test]
fn gate_tracks_supply_above_the_corner() {
    let mut c = presets::fig9(Topology::RcCompensated);
    c.bridge = BridgeParams::balanced(1000.0, 5.0);
    c.amp.pole_hz = 1e3;
    let corner = c.rc.unwrap().corner_hz();
    let f = 10.0 * corner;
    let eps = 0.1;
    c = c
        .with_timing(20e3, 1.0)
        .with_source(SourceSpec::tone(Target::Vcc, eps, f));
    let ts = transient::run(&c).unwrap();
    let w = settle_and_window(&ts, 0.5, &[f]).unwrap();
    let vgs: Vec<f64> = w
        .channel(Channel::Vcc)
        .iter()
        .zip(w.channel(Channel::VGateP))
        .map(|(v, g)| v - g)
        .collect();
    let ratio = tone(&w, &vgs, f) / eps;
    let bound = 1.0 / 101f64.sqrt();
    assert!(ratio <= bound * 1.01, "{ratio} vs {bound}");
    assert!((ratio / bound - 1.0).abs() < 0.01);
}

#[test]
fn device_leaving_triode_reports_time() {
    let c = presets::fig7(Topology::PmosFeedback, Target::Gnd)
        .with_source(SourceSpec::tone(Target::Vcc, 2.0, 1e3));
    match transient::run(&c) {
        Err(Error::Cutoff { time_s, .. }) => assert!(time_s.unwrap() > 0.0),
        other => panic!("expected cutoff, got {other:?}"),
    }
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let c = presets::fig7(Topology::PmosFeedback, Target::Gnd).with_timing(100e3, 50e-3);
    assert!(matches!(
        transient::run(&c),
        Err(Error::ValidationFailed(_))
    ));
}

fn synthetic(fs: f64, seconds: f64) -> TimeSeries {
    let n = (fs * seconds) as usize;
    let y: Vec<f64> = (0..n).map(|k| (k as f64 * 0.01).sin()).collect();
    TimeSeries::from_channels(fs, &[(Channel::VDiff, y)]).unwrap()
}

#[test]
fn window_keeps_whole_periods() {
    let ts = synthetic(100e3, 1.0);
    let w = settle_and_window(&ts, 0.5, &[1e3, 9e3]).unwrap();
    assert_eq!(w.len(), 50_000);
    assert_eq!(w.len() as f64 * 1e3 / 100e3, 500.0);
    assert_eq!(settle_and_window(&ts, 0.0, &[]).unwrap().len(), ts.len());

    let w = settle_and_window(&synthetic(100e3, 0.0173), 0.0, &[1e3]).unwrap();
    assert_eq!(w.len(), 1700);

    let short = synthetic(100e3, 20e-3);
    assert!(matches!(
        settle_and_window(&short, 0.5, &[1e3]),
        Err(Error::WindowTooShort { required: 16, .. })
    ));
    assert!(settle_and_window(&ts, 1.0, &[]).is_err());
}

#[test]
fn resonator_source_drives_the_mismatch() {
    let sensor = presets::sensor();
    let mut c = presets::fig9(Topology::OpenBridge).with_timing(2e6, 50e-3);
    c.sensor = Some(sensor);
    c = c.with_source(SourceSpec::mech_resonator(sensor.drive_amp, presets::CARRIER_HZ));
    let ts = transient::run(&c).unwrap();
    let w = settle_and_window(&ts, 0.5, &[presets::CARRIER_HZ]).unwrap();
    let v = tone(&w, w.channel(Channel::VDiff), presets::CARRIER_HZ);
    let sens = LinearModel::new(&c).unwrap().signal_sensitivity();
    let dr = sensor.drive_amp * sensor.force_to_dr * resonator_gain(&sensor, presets::CARRIER_HZ);
    assert!(((v / (sens * dr)) - 1.0).abs() < 0.02, "{v} vs {}", sens * dr);
}
