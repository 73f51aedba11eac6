use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wpt_waveform::experiments::{
    design, fmt_value, report_waveform, run_power_sweep, run_ripple_check, run_tone_sweep,
    ExperimentConfig, Method,
};
use wpt_waveform::quadrature::QuadratureSpec;
use wpt_waveform::rectenna::DEFAULT_DC_TOL;
use wpt_waveform::{frequency_response, harvested_power, scp_qclp};

/// Multisine waveform design for wireless power transfer.
#[derive(Parser, Debug)]
#[command(name = "wpt", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Experiment configuration (JSON); defaults to the built-in profile.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Channel seed, overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Use the 20 kHz / 2 kHz toy profile instead of 915 MHz / 10 MHz.
    #[arg(long, global = true, conflicts_with = "config")]
    fast: bool,
    /// Concurrent sweep points (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the tone grid.
    Grid,
    /// Print the effective configuration as JSON.
    Config,
    /// Channel realization and per-tone response.
    Channel {
        #[command(subcommand)]
        action: ChannelAction,
    },
    /// Design one waveform at the configured transmit power.
    Optimize {
        /// single_tone, mrt, scp_qclp or equal
        method: Method,
    },
    /// Harvested power sweeps.
    Sweep {
        #[command(subcommand)]
        variable: SweepKind,
    },
    /// Amplitudes and one period of x(t) per method, with PAPR.
    Waveform {
        /// Methods to report; defaults to the configured methods.
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
    },
    /// Transient ripple and steady-state agreement for several capacitors.
    Ripple {
        /// Values of C R_L / T; defaults to the configured list.
        #[arg(long, value_delimiter = ',')]
        multipliers: Vec<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum ChannelAction {
    /// Write the tap list as JSON.
    Gen,
    /// Write h_n and psi_n on the tone grid as CSV.
    Response,
}

#[derive(Subcommand, Debug)]
enum SweepKind {
    /// Versus transmit power.
    Power,
    /// Versus tone count.
    Tones,
}

fn load_config(opts: &GlobalOpts) -> Result<ExperimentConfig> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_json(&text)
                .with_context(|| format!("invalid config {}", path.display()))?
        }
        None if opts.fast => ExperimentConfig::fast(),
        None => ExperimentConfig::full(),
    };
    if let Some(seed) = opts.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = &opts.out {
        cfg.output_dir = out.clone();
    }
    if let Some(w) = opts.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.global)?;
    let out = cfg.output_dir.clone();
    match cli.command {
        Command::Config => println!("{}", cfg.to_json()),
        Command::Grid => {
            let g = cfg.system.grid()?;
            println!("tone_index,f_hz");
            for (n, f) in g.tones().into_iter().enumerate() {
                println!("{},{}", n + 1, fmt_value(f));
            }
            eprintln!(
                "delta_f {} Hz, f0 {} Hz, period {} s",
                fmt_value(g.delta_f()),
                fmt_value(g.f0()),
                fmt_value(g.period())
            );
        }
        Command::Channel { action } => {
            let channel = cfg.channel.build()?;
            match action {
                ChannelAction::Gen => write(
                    &out,
                    "channel.json",
                    &serde_json::to_string_pretty(&channel)?,
                )?,
                ChannelAction::Response => {
                    let r = frequency_response(&channel, &cfg.system.grid()?);
                    write(&out, "channel_response.csv", &r.to_csv())?;
                }
            }
        }
        Command::Optimize { method } => {
            let grid = cfg.system.grid()?;
            let r = frequency_response(&cfg.channel.build()?, &grid);
            let scp = cfg.scp.for_grid(&grid)?;
            let (waveform, iterations) = if method == Method::ScpQclp {
                let trace = scp_qclp(&r, &cfg.rectenna, cfg.p_t_w, &scp)?;
                write(&out, "scp_trace.csv", &trace.to_csv())?;
                write(
                    &out,
                    "scp_trace.json",
                    &serde_json::to_string_pretty(&trace)?,
                )?;
                if !trace.converged {
                    eprintln!(
                        "warning: SCP stopped after {} iterations without converging",
                        trace.steps()
                    );
                }
                let steps = trace.steps();
                (trace.final_waveform, steps)
            } else {
                let d = design(method, &r, &cfg.rectenna, cfg.p_t_w, &scp)?;
                (d.waveform, d.iterations)
            };
            let dc = harvested_power(
                &waveform,
                &r,
                &cfg.rectenna,
                &QuadratureSpec::at_rate(&grid, cfg.eval_rate)?,
                DEFAULT_DC_TOL,
            )?;
            write(
                &out,
                &format!("{method}_waveform.json"),
                &serde_json::to_string_pretty(&waveform)?,
            )?;
            println!(
                "{method}: v_out {} V, p_out {} W, iterations {}",
                fmt_value(dc.v_out),
                fmt_value(dc.p_out),
                iterations
            );
        }
        Command::Sweep { variable } => {
            let (name, table) = match variable {
                SweepKind::Power => ("sweep_power.csv", run_power_sweep(&cfg)?),
                SweepKind::Tones => ("sweep_tones.csv", run_tone_sweep(&cfg)?),
            };
            let failed = table.rows.iter().filter(|r| r.outcome.is_err()).count();
            write(&out, name, &table.to_csv())?;
            if failed > 0 {
                eprintln!(
                    "warning: {failed} of {} points failed; see the status column",
                    table.rows.len()
                );
            }
        }
        Command::Waveform { method } => {
            let methods = if method.is_empty() {
                cfg.methods.clone()
            } else {
                method
            };
            for m in methods {
                let report = report_waveform(&cfg, m)?;
                write(
                    &out,
                    &format!("waveform_{m}_amplitudes.csv"),
                    &report.amplitudes_csv(),
                )?;
                write(
                    &out,
                    &format!("waveform_{m}_signal.csv"),
                    &report.signal_csv(),
                )?;
                match &report.papr {
                    Ok(v) => println!("{m}: PAPR {}", fmt_value(*v)),
                    Err(e) => println!("{m}: PAPR undefined ({})", e.tag()),
                }
            }
        }
        Command::Ripple { multipliers } => {
            let multipliers = if multipliers.is_empty() {
                cfg.ripple.multipliers.clone()
            } else {
                multipliers
            };
            if multipliers.is_empty() {
                bail!("no capacitor multipliers given");
            }
            let table = run_ripple_check(&cfg, &multipliers)?;
            write(&out, "ripple.csv", &table.to_csv())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
