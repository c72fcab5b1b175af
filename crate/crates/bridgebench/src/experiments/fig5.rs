//! Inverted PSRR against mismatch for several amplifier gains.

use std::time::Instant;

use anyhow::{bail, Result};
use bridgebench_core::closed_loop::{gain_sweep, log_grid, LoopParams, SweepRow};
use bridgebench_core::presets;
use bridgebench_core::Topology;

use super::{as_emitted, snapshot_with_seed, worst, ExpInput, ExperimentResult, Verdict};
use crate::config::LoopSection;
use crate::table::Table;

pub const DEFAULT_BETA: f64 = 1000.0;
pub const DEFAULT_GAINS: [f64; 3] = [1e2, 1e3, 1e4];
const OFFSET_DB_PER_DECADE: f64 = 20.0;
const OFFSET_TOL_DB: f64 = 0.1;
const SLOPE_DB_PER_DOUBLING: f64 = 6.02;
const SLOPE_TOL_DB: f64 = 0.1;

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&[
        "delta_r",
        "gain",
        "psrr_inv_db_exact",
        "psrr_inv_db_asymptotic",
        "psrr_inv_db_open_loop",
    ]);
    for r in rows {
        t.push(vec![
            r.delta_r.into(),
            r.gain.into(),
            r.psrr_inv_db_exact.into(),
            r.psrr_inv_db_asymptotic.into(),
            r.psrr_inv_db_open_loop.into(),
        ]);
    }
    t
}

pub fn run_fig5(input: &ExpInput) -> Result<ExperimentResult> {
    let started = Instant::now();
    let config = input.config(&presets::fig9(Topology::OpenBridge))?;
    let section = input.file.loop_section();
    let beta = section.beta.unwrap_or(DEFAULT_BETA);
    let gains = section.gains.clone().unwrap_or_else(|| DEFAULT_GAINS.to_vec());
    let grid = section.delta_r.clone().unwrap_or_else(|| log_grid(0.1, 100.0, 50));
    let fixed = LoopParams {
        a_gain: gains[0],
        beta,
        r_nominal: config.bridge.r_nominal,
        delta_r: 0.0,
        vcc: config.bridge.vcc_dc,
    };
    let table = as_emitted(&sweep_table(&gain_sweep(&grid, &gains, &fixed)?))?;

    let mut file = snapshot_with_seed(&config, input.seed);
    file.loop_ = Some(LoopSection {
        beta: Some(beta),
        gains: Some(gains),
        delta_r: Some(grid),
    });
    let mut result = ExperimentResult::new("fig5", started);
    result.verdicts = fig5_verdicts(&table)?;
    result.configs.push(("sweep".into(), file));
    result.tables.push(("fig5_gain_sweep".into(), table));
    result.wall_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

/// Curves of the sweep keyed by gain, in table order.
fn curves(t: &Table) -> Result<Vec<(f64, Vec<(f64, f64)>)>> {
    let dr = t.column("delta_r")?;
    let gain = t.column("gain")?;
    let y = t.column("psrr_inv_db_exact")?;
    let mut out: Vec<(f64, Vec<(f64, f64)>)> = Vec::new();
    for i in 0..dr.len() {
        match out.iter_mut().find(|(g, _)| *g == gain[i]) {
            Some((_, c)) => c.push((dr[i], y[i])),
            None => out.push((gain[i], vec![(dr[i], y[i])])),
        }
    }
    Ok(out)
}

/// Least-squares slope of `y` against `log2(x)` over finite points.
fn slope_per_doubling(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.is_finite())
        .map(|&(x, y)| (x.log2(), y))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn fig5_verdicts(t: &Table) -> Result<Vec<Verdict>> {
    let curves = curves(t)?;
    if curves.is_empty() {
        bail!("gain sweep table is empty");
    }

    let offset = if curves.len() < 2 {
        Verdict::not_applicable("gain_offset", "a single gain has no offset")
    } else {
        // Deviation from 20 dB per decade of gain, pairwise at shared ΔR.
        let mut devs = Vec::new();
        for w in curves.windows(2) {
            let decades = (w[1].0 / w[0].0).log10();
            for (&(x0, y0), &(x1, y1)) in w[0].1.iter().zip(&w[1].1) {
                if x0 == x1 && y0.is_finite() && y1.is_finite() {
                    devs.push((y0 - y1) / decades - OFFSET_DB_PER_DECADE);
                }
            }
        }
        if devs.is_empty() {
            Verdict::not_applicable("gain_offset", "no finite points to compare")
        } else {
            let w = worst(devs);
            Verdict::check(
                "gain_offset",
                w.abs() <= OFFSET_TOL_DB,
                format!("{:.3} dB per decade of gain (worst)", OFFSET_DB_PER_DECADE + w),
            )
        }
    };

    let slopes: Vec<f64> = curves.iter().filter_map(|(_, c)| slope_per_doubling(c)).collect();
    let slope = if slopes.is_empty() {
        Verdict::not_applicable("mismatch_slope", "fewer than two finite points per curve")
    } else {
        let w = worst(slopes.iter().map(|s| s - SLOPE_DB_PER_DOUBLING));
        Verdict::check(
            "mismatch_slope",
            w.abs() <= SLOPE_TOL_DB,
            format!("{:.3} dB per doubling of mismatch (worst)", SLOPE_DB_PER_DOUBLING + w),
        )
    };
    Ok(vec![offset, slope])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::Status;

    #[test]
    fn default_run_passes() {
        let r = run_fig5(&ExpInput::default()).unwrap();
        assert!(r.verdicts.iter().all(|v| v.status == Status::Pass), "{:?}", r.verdicts);
        assert_eq!(r.tables[0].1.rows.len(), 150);
    }

    #[test]
    fn single_gain_skips_the_offset() {
        let mut input = ExpInput::default();
        input.file.loop_ = Some(LoopSection {
            gains: Some(vec![1e3]),
            ..LoopSection::default()
        });
        let r = run_fig5(&input).unwrap();
        assert_eq!(r.verdicts[0].status, Status::NotApplicable);
        assert_eq!(r.verdicts[1].status, Status::Pass);
    }

    #[test]
    fn zero_mismatch_is_excluded_from_the_fit() {
        let mut input = ExpInput::default();
        input.file.loop_ = Some(LoopSection {
            delta_r: Some(vec![0.0, 0.5, 1.0, 2.0, 4.0]),
            ..LoopSection::default()
        });
        let r = run_fig5(&input).unwrap();
        let y = r.tables[0].1.column("psrr_inv_db_exact").unwrap();
        assert_eq!(y[0], f64::NEG_INFINITY);
        assert!(r.verdicts.iter().all(|v| v.status == Status::Pass), "{:?}", r.verdicts);
    }
}
