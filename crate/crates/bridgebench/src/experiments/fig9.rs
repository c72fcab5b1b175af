//! PSRR of the gate-compensated bridge against the stand-alone bridge.

use std::time::Instant;

use anyhow::Result;
use bridgebench_core::closed_loop::log_grid;
use bridgebench_core::presets;
use bridgebench_core::spectral::{psrr_from_transient, PsrrOptions, PsrrReport};
use bridgebench_core::{SimConfig, Topology};
use rayon::prelude::*;

use super::{as_emitted, snapshot_with_seed, ExpInput, ExperimentResult, Verdict};
use crate::config::PsrrSection;
use crate::table::Table;

const ADVANTAGE_DB: f64 = 20.0;

pub fn default_grid() -> Vec<f64> {
    log_grid(1e3, 100e3, 9)
}

pub fn psrr_table(reports: &[PsrrReport]) -> Table {
    let mut t = Table::new(&["freq_hz", "psrr_db", "psrr_inv_db", "gain_signal", "gain_supply"]);
    for r in reports {
        t.push(vec![
            r.freq_hz.into(),
            r.psrr_db.into(),
            r.psrr_inv_db().into(),
            r.gain_signal.into(),
            r.gain_supply.into(),
        ]);
    }
    t
}

/// Sweeps every configuration over the grid, points in parallel; output
/// order follows the input.
pub(crate) fn sweep_many(
    configs: &[&SimConfig],
    f_signal: f64,
    grid: &[f64],
    opts: &PsrrOptions,
) -> Result<Vec<Vec<PsrrReport>>> {
    let jobs: Vec<(usize, f64)> = (0..configs.len())
        .flat_map(|i| grid.iter().map(move |&f| (i, f)))
        .collect();
    let flat: Vec<PsrrReport> = jobs
        .par_iter()
        .map(|&(i, f)| psrr_from_transient(configs[i], f_signal, f, opts))
        .collect::<Result<_, _>>()?;
    Ok(flat.chunks(grid.len()).map(<[_]>::to_vec).collect())
}

pub fn run_fig9(input: &ExpInput) -> Result<ExperimentResult> {
    let started = Instant::now();
    let compensated = input.config(&presets::fig9(Topology::RcCompensated))?;
    let mut open = compensated.clone();
    open.topology = Topology::OpenBridge;
    open.mos = None;
    open.rc = None;

    let f_signal = input.file.f_signal().unwrap_or(presets::FIG9_SIGNAL_HZ);
    let grid = input.file.f_grid().unwrap_or_else(default_grid);
    let opts = input.file.psrr_options();
    let sweeps = sweep_many(&[&compensated, &open], f_signal, &grid, &opts)?;
    let comp_t = as_emitted(&psrr_table(&sweeps[0]))?;
    let open_t = as_emitted(&psrr_table(&sweeps[1]))?;

    let psrr = PsrrSection {
        f_signal: Some(f_signal),
        f_grid: Some(grid),
        signal_amplitude: Some(opts.signal_amplitude),
        supply_amplitude: Some(opts.supply_amplitude),
        supply_target: Some(opts.supply_target.into()),
        settle_fraction: Some(opts.settle_fraction),
    };
    let mut result = ExperimentResult::new("fig9", started);
    result.verdicts = fig9_verdicts(&comp_t, &open_t)?;
    for (name, c) in [("compensated", &compensated), ("open", &open)] {
        let mut f = snapshot_with_seed(c, input.seed);
        f.psrr = Some(psrr.clone());
        result.configs.push((name.into(), f));
    }
    result.tables.push(("fig9_compensated".into(), comp_t));
    result.tables.push(("fig9_open".into(), open_t));
    result.wall_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

pub fn fig9_verdicts(compensated: &Table, open: &Table) -> Result<Vec<Verdict>> {
    let f = compensated.column("freq_hz")?;
    let c = compensated.column("psrr_db")?;
    let o = open.column("psrr_db")?;
    let name = "compensation_advantage";
    if c.iter().chain(&o).all(|x| *x == f64::INFINITY) {
        return Ok(vec![Verdict::not_applicable(name, "both curves at the balanced-bridge sentinel")]);
    }
    let failing: Vec<String> = f
        .iter()
        .zip(c.iter().zip(&o))
        .filter(|(_, (c, o))| !(**c >= **o + ADVANTAGE_DB))
        .map(|(f, _)| format!("{f:.0}"))
        .collect();
    let min_adv = c
        .iter()
        .zip(&o)
        .map(|(c, o)| c - o)
        .filter(|d| !d.is_nan())
        .fold(f64::INFINITY, f64::min);
    let detail = if failing.is_empty() {
        format!("smallest advantage {min_adv:.1} dB over {} points", f.len())
    } else {
        format!("below +{ADVANTAGE_DB} dB at {} Hz", failing.join(", "))
    };
    Ok(vec![Verdict::check(name, failing.is_empty(), detail)])
}
