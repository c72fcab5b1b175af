//! Rail tones through the directly driven loops, in the time domain.

use std::time::Instant;

use anyhow::{anyhow, Result};
use bridgebench_core::presets;
use bridgebench_core::spectral::{goertzel, measured_output};
use bridgebench_core::transient::{self, settle_and_window};
use bridgebench_core::{db20, Channel, SimConfig, SourceKind, Target, Topology};
use rayon::prelude::*;

use super::{as_emitted, snapshot_with_seed, ExpInput, ExperimentResult, Verdict};
use crate::table::{Cell, Table};

const REJECTION_DB: f64 = 40.0;
const SETTLE_FRACTION: f64 = 0.5;

struct Scenario {
    name: &'static str,
    topology: Topology,
    rail: Target,
}

const SCENARIOS: [Scenario; 4] = [
    Scenario {
        name: "pmos_gnd",
        topology: Topology::PmosFeedback,
        rail: Target::Gnd,
    },
    Scenario {
        name: "pmos_vcc",
        topology: Topology::PmosFeedback,
        rail: Target::Vcc,
    },
    Scenario {
        name: "open_vcc",
        topology: Topology::OpenBridge,
        rail: Target::Vcc,
    },
    Scenario {
        name: "nmos_vcc",
        topology: Topology::NmosFeedback,
        rail: Target::Vcc,
    },
];

/// `base` rewired for a scenario: topology and device polarity imposed,
/// every rail tone moved to `rail`.
fn scenario_config(base: &SimConfig, s: &Scenario) -> SimConfig {
    let mut c = base.clone();
    c.topology = s.topology;
    c.rc = None;
    c.mos = s.topology.device_polarity().map(|p| {
        let mut m = base.mos.unwrap_or_else(|| presets::fig7_mos(p));
        m.polarity = p;
        m
    });
    for src in &mut c.sources {
        if src.kind == SourceKind::Tone && src.target != Target::DeltaR {
            src.target = s.rail;
        }
    }
    c
}

fn tone_frequencies(c: &SimConfig) -> Result<(f64, f64)> {
    let find = |rail: bool| {
        c.sources
            .iter()
            .find(|s| s.kind == SourceKind::Tone && (s.target != Target::DeltaR) == rail)
            .map(|s| s.frequency)
    };
    let signal = find(false).ok_or_else(|| anyhow!("fig7 needs a TONE source on DELTA_R"))?;
    let noise = find(true).ok_or_else(|| anyhow!("fig7 needs a TONE source on VCC or GND"))?;
    Ok((signal, noise))
}

struct Measured {
    signal: f64,
    noise: f64,
    series: Option<bridgebench_core::TimeSeries>,
}

fn measure(c: &SimConfig, f_signal: f64, f_noise: f64, keep: bool) -> Result<Measured> {
    let ts = transient::run(c)?;
    let w = settle_and_window(&ts, SETTLE_FRACTION, &[f_signal, f_noise])?;
    let y = measured_output(&w, c.topology);
    let fs = w.sample_rate();
    Ok(Measured {
        signal: goertzel(&y, fs, f_signal)?.amplitude,
        noise: goertzel(&y, fs, f_noise)?.amplitude,
        series: keep.then_some(ts),
    })
}

pub fn run_fig7(input: &ExpInput) -> Result<ExperimentResult> {
    let started = Instant::now();
    let base = input.config(&presets::fig7(Topology::PmosFeedback, Target::Gnd))?;
    let configs: Vec<SimConfig> = SCENARIOS.iter().map(|s| scenario_config(&base, s)).collect();
    let (f_signal, f_noise) = tone_frequencies(&base)?;
    let measured: Vec<Measured> = configs
        .par_iter()
        .enumerate()
        .map(|(i, c)| measure(c, f_signal, f_noise, i == 0))
        .collect::<Result<_>>()?;

    let mut tones = Table::new(&[
        "scenario",
        "topology",
        "noise_rail",
        "f_signal_hz",
        "f_noise_hz",
        "signal_tone_v",
        "noise_tone_v",
        "rejection_db",
    ]);
    for ((s, c), m) in SCENARIOS.iter().zip(&configs).zip(&measured) {
        tones.push(vec![
            s.name.into(),
            c.topology.name().into(),
            match s.rail {
                Target::Gnd => "GND",
                _ => "VCC",
            }
            .into(),
            f_signal.into(),
            f_noise.into(),
            m.signal.into(),
            m.noise.into(),
            db20(m.noise / m.signal).into(),
        ]);
    }
    let tones = as_emitted(&tones)?;

    let ts = measured[0].series.as_ref().expect("first scenario keeps its series");
    let mut series = Table::new(&["t_s", "vcc", "out_p", "out_n", "gnd"]);
    let chans = [Channel::Vcc, Channel::OutP, Channel::OutN, Channel::Gnd].map(|c| ts.channel(c));
    for k in 0..ts.len() {
        let mut row: Vec<Cell> = vec![ts.time(k).into()];
        row.extend(chans.iter().map(|c| Cell::Num(c[k])));
        series.push(row);
    }

    let mut result = ExperimentResult::new("fig7", started);
    result.verdicts = fig7_verdicts(&tones)?;
    for (s, c) in SCENARIOS.iter().zip(&configs) {
        result.configs.push((s.name.into(), snapshot_with_seed(c, input.seed)));
    }
    result.tables.push(("fig7_timeseries".into(), series));
    result.tables.push(("fig7_tones".into(), tones));
    result.wall_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

pub fn fig7_verdicts(tones: &Table) -> Result<Vec<Verdict>> {
    let names = tones.text_column("scenario")?;
    let rej = tones.column("rejection_db")?;
    let at = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .map(|i| rej[i])
            .ok_or_else(|| anyhow!("tone table lacks scenario `{name}`"))
    };
    let (pmos_gnd, pmos_vcc, open_vcc, nmos_vcc) =
        (at("pmos_gnd")?, at("pmos_vcc")?, at("open_vcc")?, at("nmos_vcc")?);
    Ok(vec![
        Verdict::check(
            "ground_tone_rejected",
            pmos_gnd <= -REJECTION_DB,
            format!("PMOS loop, ground tone at {pmos_gnd:.1} dB re signal"),
        ),
        Verdict::check(
            "supply_tone_degrades",
            pmos_vcc > open_vcc,
            format!(
                "PMOS loop {pmos_vcc:.1} dB vs open bridge {open_vcc:.1} dB ({:+.1} dB)",
                pmos_vcc - open_vcc
            ),
        ),
        Verdict::check(
            "nmos_supply_rejected",
            nmos_vcc <= -REJECTION_DB,
            format!("NMOS loop, supply tone at {nmos_vcc:.1} dB re signal"),
        ),
    ])
}
