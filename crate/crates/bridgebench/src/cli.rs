//! Command-line front end.
//!
//! Exit status: 0 when everything ran and no verdict failed, 2 when a verdict
//! failed, 1 on usage, configuration or runtime errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bridgebench_core::closed_loop::{gain_sweep, log_grid, operating_point, LoopParams};
use bridgebench_core::presets::{self, CARRIER_HZ};
use bridgebench_core::spectral::{noise_budget, NoiseLimit};
use bridgebench_core::{bridge, transient, Channel, SimConfig, Target, Topology};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::ConfigFile;
use crate::experiments::{self, apply_seed, ExpInput, ExperimentResult};
use crate::table::{Cell, Table};

#[derive(Debug, Parser)]
#[command(name = "bridgebench", version, about = "Supply-rejection experiments on Wheatstone-bridge front ends")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Write a JSON mirror next to every CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every noise source.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// TOML file overlaid on the command's default configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stand-alone bridge statics.
    Bridge {
        #[command(subcommand)]
        command: BridgeCommand,
    },
    /// Closed-form loop algebra.
    Loop {
        #[command(subcommand)]
        command: LoopCommand,
    },
    /// Transient simulation; writes every channel.
    Sim {
        /// Output CSV (default `<out-dir>/sim.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measurements on a configuration.
    Analyze {
        #[command(subcommand)]
        command: AnalyzeCommand,
    },
    /// Canned experiments with verdicts.
    Exp {
        #[arg(value_enum)]
        id: ExpId,
    },
}

#[derive(Debug, Subcommand)]
enum BridgeCommand {
    /// DC output, sensitivities and, with feedback, the operating point.
    Dc,
}

#[derive(Debug, Subcommand)]
enum LoopCommand {
    /// Inverted PSRR against mismatch for several gains.
    Sweep {
        /// Comma-separated amplifier gains.
        #[arg(long, value_delimiter = ',', default_values_t = [1e2, 1e3, 1e4])]
        gains: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        dr_min: f64,
        #[arg(long, default_value_t = 100.0)]
        dr_max: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Controlled-resistor slope, Ω/V.
        #[arg(long, default_value_t = experiments::fig5::DEFAULT_BETA)]
        beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Two-tone PSRR sweep.
    Psrr {
        /// Supply-tone grid as `lo:hi:log:n` or `lo:hi:lin:n`.
        #[arg(long)]
        f_grid: Option<String>,
        /// Mismatch-tone frequency, Hz.
        #[arg(long)]
        f_signal: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Output noise budget at one frequency.
    Noise {
        #[arg(long, default_value_t = CARRIER_HZ)]
        freq: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ExpId {
    Fig5,
    Fig7,
    Fig9,
    Table1,
}

const EXIT_ERROR: u8 = 1;
const EXIT_VERDICT_FAIL: u8 = 2;

/// Parses `args` (program name first), runs the command and maps the
/// outcome to an exit status.
pub fn main<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERDICT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

struct Ctx {
    global: Global,
    file: ConfigFile,
}

impl Ctx {
    fn config(&self, base: &SimConfig) -> Result<SimConfig> {
        let mut c = self.file.overlay(base)?;
        apply_seed(&mut c, self.global.seed.or(self.file.seed()));
        Ok(c)
    }

    fn output(&self, explicit: Option<PathBuf>, stem: &str) -> Result<PathBuf> {
        if let Some(p) = explicit {
            return Ok(p);
        }
        fs::create_dir_all(&self.global.out_dir)
            .with_context(|| format!("creating {}", self.global.out_dir.display()))?;
        Ok(self.global.out_dir.join(format!("{stem}.csv")))
    }

    fn write(&self, table: &Table, path: &Path) -> Result<()> {
        table.write(path, self.global.json)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

/// `Ok(false)` when a verdict failed.
fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.global.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let ctx = Ctx {
        global: cli.global,
        file,
    };
    match cli.command {
        Command::Bridge {
            command: BridgeCommand::Dc,
        } => bridge_dc(&ctx)?,
        Command::Loop {
            command:
                LoopCommand::Sweep {
                    gains,
                    dr_min,
                    dr_max,
                    points,
                    beta,
                    out,
                },
        } => {
            let c = ctx.config(&presets::fig9(Topology::OpenBridge))?;
            let fixed = LoopParams {
                a_gain: gains.first().copied().unwrap_or(1.0),
                beta,
                r_nominal: c.bridge.r_nominal,
                delta_r: 0.0,
                vcc: c.bridge.vcc_dc,
            };
            let rows = gain_sweep(&log_grid(dr_min, dr_max, points), &gains, &fixed)?;
            ctx.write(&experiments::sweep_table(&rows), &ctx.output(out, "loop_sweep")?)?;
        }
        Command::Sim { out } => {
            let c = ctx.config(&presets::fig7(Topology::PmosFeedback, Target::Gnd))?;
            let ts = transient::run(&c)?;
            let mut headers = vec!["t_s"];
            headers.extend(Channel::ALL.iter().map(|c| c.name()));
            let mut t = Table::new(&headers);
            for k in 0..ts.len() {
                let mut row: Vec<Cell> = vec![ts.time(k).into()];
                row.extend(Channel::ALL.iter().map(|&ch| Cell::Num(ts.channel(ch)[k])));
                t.push(row);
            }
            ctx.write(&t, &ctx.output(out, "sim")?)?;
        }
        Command::Analyze {
            command: AnalyzeCommand::Psrr { f_grid, f_signal, out },
        } => {
            let c = ctx.config(&presets::fig9(Topology::RcCompensated))?;
            let grid = match f_grid {
                Some(spec) => parse_grid(&spec)?,
                None => ctx.file.f_grid().unwrap_or_else(experiments::fig9::default_grid),
            };
            let f_signal = f_signal
                .or(ctx.file.f_signal())
                .unwrap_or(presets::FIG9_SIGNAL_HZ);
            let reports =
                experiments::fig9::sweep_many(&[&c], f_signal, &grid, &ctx.file.psrr_options())?;
            ctx.write(&experiments::psrr_table(&reports[0]), &ctx.output(out, "psrr")?)?;
        }
        Command::Analyze {
            command: AnalyzeCommand::Noise { freq, out },
        } => {
            let c = ctx.config(&presets::fig9(Topology::RcCompensated))?;
            let b = noise_budget(&c, freq)?;
            let mut t = Table::new(&[
                "freq_hz",
                "bridge_thermal",
                "amp_input",
                "supply_injected",
                "ground_injected",
                "total_output",
                "input_referred",
                "chain_gain",
                "resolution_ohm",
                "limit",
            ]);
            t.push(vec![
                b.freq_hz.into(),
                b.bridge_thermal.into(),
                b.amp_input.into(),
                b.supply_injected.into(),
                b.ground_injected.into(),
                b.total_output.into(),
                b.input_referred.into(),
                b.chain_gain.into(),
                b.resolution_ohm().into(),
                match b.limit {
                    NoiseLimit::Intrinsic => "INTRINSIC",
                    NoiseLimit::Supply => "SUPPLY",
                }
                .into(),
            ]);
            ctx.write(&t, &ctx.output(out, "noise")?)?;
        }
        Command::Exp { id } => {
            let input = ExpInput {
                file: ctx.file.clone(),
                seed: ctx.global.seed,
            };
            let mut result = match id {
                ExpId::Fig5 => experiments::run_fig5(&input)?,
                ExpId::Fig7 => experiments::run_fig7(&input)?,
                ExpId::Fig9 => experiments::run_fig9(&input)?,
                ExpId::Table1 => experiments::run_table1(&input)?,
            };
            result.save(&ctx.global.out_dir, ctx.global.json)?;
            report(&result);
            return Ok(!result.failed());
        }
    }
    Ok(true)
}

fn report(r: &ExperimentResult) {
    println!("{} ({:.2} s)", r.id, r.wall_seconds);
    for v in &r.verdicts {
        println!("  {v}");
    }
    for p in &r.outputs {
        println!("wrote {}", p.display());
    }
}

fn bridge_dc(ctx: &Ctx) -> Result<()> {
    let c = ctx.config(&presets::fig9(Topology::OpenBridge))?;
    let s = bridge::sensitivities(&c.bridge);
    let mut headers = vec!["v_offset", "dv_ddr", "dv_dvcc", "psrr_db"];
    let mut row: Vec<Cell> = vec![
        s.v_offset.into(),
        s.dv_ddr.into(),
        s.dv_dvcc.into(),
        bridge::standalone_psrr_db(&c.bridge).into(),
    ];
    if c.topology.has_feedback() {
        let op = operating_point(&c)?;
        headers.extend(["v_s", "v_diff", "r_fb_left", "r_fb_right", "clamped"]);
        row.extend([
            op.v_s.into(),
            op.v_diff.into(),
            op.r_fb.into(),
            op.r_fb_right.into(),
            if op.clamped { "yes" } else { "no" }.into(),
        ]);
    }
    for (h, v) in headers.iter().zip(&row) {
        match v {
            Cell::Num(x) => println!("{h:>10} = {x:.6e}"),
            Cell::Text(t) => println!("{h:>10} = {t}"),
        }
    }
    let mut t = Table::new(&headers);
    t.push(row);
    ctx.write(&t, &ctx.output(None, "bridge_dc")?)
}

/// `lo:hi:log:n` or `lo:hi:lin:n`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, kind, n] = parts[..] else {
        bail!("frequency grid `{spec}` is not of the form lo:hi:log:n");
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .with_context(|| format!("bad number `{s}` in grid `{spec}`"))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    let n: usize = n
        .trim()
        .parse()
        .with_context(|| format!("bad point count `{n}` in grid `{spec}`"))?;
    if !(lo > 0.0 && hi > lo && n >= 1) {
        bail!("frequency grid `{spec}` needs 0 < lo < hi and n >= 1");
    }
    Ok(match kind {
        "log" => log_grid(lo, hi, n),
        "lin" if n == 1 => vec![lo],
        "lin" => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
        _ => bail!("grid spacing `{kind}` is neither `log` nor `lin`"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let g = parse_grid("1000:100000:log:3").unwrap();
        assert_eq!(g.len(), 3);
        assert!((g[1] - 1e4).abs() < 1e-6);
        assert_eq!(parse_grid("1:3:lin:3").unwrap(), vec![1.0, 2.0, 3.0]);
        for bad in ["1:2:log", "2:1:log:3", "1:2:cubic:3", "a:2:log:3", "1:2:log:x"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
