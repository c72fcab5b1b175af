//! Supply rejection and intrinsic noise of the three front-end architectures.
//!
//! The feedback variants take the overlaid configuration as is (minus the
//! LNA for the no-LNA row); the open loop keeps the LNA and drops the devices.
//! Every chain is scaled to the same overall gain through `post_gain` before
//! its noise is read.

use std::time::Instant;

use anyhow::{anyhow, Result};
use bridgebench_core::presets::{self, Architecture, CARRIER_HZ, TABLE1_GAIN_DB, TABLE1_SIGNAL_HZ};
use bridgebench_core::spectral::{noise_budget, psrr_from_transient, LinearModel};
use bridgebench_core::{db20, SimConfig, Topology};
use rayon::prelude::*;

use super::{as_emitted, snapshot_with_seed, ExpInput, ExperimentResult, Verdict};
use crate::config::PsrrSection;
use crate::table::Table;

const IMPROVEMENT_DB: f64 = 30.0;
const NOISE_PARITY: f64 = 0.1;

fn architecture_config(base: &SimConfig, arch: Architecture) -> SimConfig {
    let mut c = base.clone();
    match arch {
        Architecture::OpenLoop => {
            c.topology = Topology::OpenBridge;
            c.mos = None;
            c.rc = None;
        }
        Architecture::FeedbackNoLna => c.lna = None,
        Architecture::FeedbackWithLna => {}
    }
    c
}

/// Sets `post_gain` so the chain gain at the carrier is [`TABLE1_GAIN_DB`].
fn normalize(mut c: SimConfig) -> Result<(SimConfig, f64)> {
    c.post_gain = 1.0;
    let raw = LinearModel::new(&c)?.chain_gain(CARRIER_HZ);
    c.post_gain = 10f64.powf(TABLE1_GAIN_DB / 20.0) / raw;
    Ok((c, raw))
}

struct Row {
    config: SimConfig,
    raw_gain: f64,
    gain: f64,
    loop_gain: f64,
    psrr_db: f64,
    noise: f64,
}

pub fn run_table1(input: &ExpInput) -> Result<ExperimentResult> {
    let started = Instant::now();
    let base = input.config(&presets::table1(Architecture::FeedbackWithLna))?;
    let opts = input.file.psrr_options();
    let f_signal = input.file.f_signal().unwrap_or(TABLE1_SIGNAL_HZ);
    let rows: Vec<Row> = Architecture::ALL
        .par_iter()
        .map(|&arch| {
            let (config, raw_gain) = normalize(architecture_config(&base, arch))?;
            let model = LinearModel::new(&config)?;
            let psrr = psrr_from_transient(&config, f_signal, CARRIER_HZ, &opts)?;
            let noise = noise_budget(&config, CARRIER_HZ)?.intrinsic_output();
            Ok(Row {
                raw_gain,
                gain: model.chain_gain(CARRIER_HZ),
                loop_gain: model.loop_gain(0.0),
                psrr_db: psrr.psrr_db,
                noise,
                config,
            })
        })
        .collect::<Result<_>>()?;

    let mut t = Table::new(&[
        "architecture",
        "topology",
        "lna",
        "raw_gain_db",
        "gain_db",
        "loop_gain_dc",
        "psrr_db",
        "psrr_inv_db",
        "intrinsic_noise_v_rthz",
    ]);
    for (arch, r) in Architecture::ALL.iter().zip(&rows) {
        t.push(vec![
            arch.name().into(),
            r.config.topology.name().into(),
            if r.config.lna.is_some() { "yes" } else { "no" }.into(),
            db20(r.raw_gain).into(),
            db20(r.gain).into(),
            r.loop_gain.into(),
            r.psrr_db.into(),
            (-r.psrr_db).into(),
            r.noise.into(),
        ]);
    }
    let t = as_emitted(&t)?;

    let mut result = ExperimentResult::new("table1", started);
    result.verdicts = table1_verdicts(&t)?;
    for (arch, r) in Architecture::ALL.iter().zip(&rows) {
        let mut f = snapshot_with_seed(&r.config, input.seed);
        f.psrr = Some(PsrrSection {
            f_signal: Some(f_signal),
            signal_amplitude: Some(opts.signal_amplitude),
            supply_amplitude: Some(opts.supply_amplitude),
            supply_target: Some(opts.supply_target.into()),
            settle_fraction: Some(opts.settle_fraction),
            ..PsrrSection::default()
        });
        result.configs.push((arch.name().into(), f));
    }
    result.tables.push(("table1".into(), t));
    result.wall_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

pub fn table1_verdicts(t: &Table) -> Result<Vec<Verdict>> {
    let names = t.text_column("architecture")?;
    let psrr = t.column("psrr_db")?;
    let noise = t.column("intrinsic_noise_v_rthz")?;
    let loop_gain = t.column("loop_gain_dc")?;
    let idx = |a: Architecture| {
        names
            .iter()
            .position(|n| n == a.name())
            .ok_or_else(|| anyhow!("table lacks architecture `{}`", a.name()))
    };
    let (o, n, w) = (
        idx(Architecture::OpenLoop)?,
        idx(Architecture::FeedbackNoLna)?,
        idx(Architecture::FeedbackWithLna)?,
    );
    let feedback_off = loop_gain[n] == 0.0 && loop_gain[w] == 0.0;
    let mut v = Vec::new();
    if feedback_off {
        let why = "feedback disabled in both feedback rows";
        v.push(Verdict::not_applicable("psrr_ordering", why));
        v.push(Verdict::not_applicable("psrr_improvement", why));
    } else {
        v.push(Verdict::check(
            "psrr_ordering",
            psrr[o] < psrr[n] && psrr[n] < psrr[w],
            format!(
                "open {:.1} dB, no LNA {:.1} dB, with LNA {:.1} dB",
                psrr[o], psrr[n], psrr[w]
            ),
        ));
        v.push(Verdict::check(
            "psrr_improvement",
            psrr[w] - psrr[o] >= IMPROVEMENT_DB,
            format!("with LNA {:+.1} dB over open loop", psrr[w] - psrr[o]),
        ));
    }
    let ratio = noise[w] / noise[o];
    v.push(Verdict::check(
        "noise_parity",
        (ratio - 1.0).abs() <= NOISE_PARITY,
        format!(
            "with LNA {:.1} µV/√Hz vs open loop {:.1} µV/√Hz ({:+.1}%)",
            noise[w] * 1e6,
            noise[o] * 1e6,
            (ratio - 1.0) * 100.0
        ),
    ));
    v.push(Verdict::check(
        "no_lna_noise_worst",
        noise[n] > noise[o] && noise[n] > noise[w],
        format!("no LNA {:.1} µV/√Hz", noise[n] * 1e6),
    ));
    Ok(v)
}
