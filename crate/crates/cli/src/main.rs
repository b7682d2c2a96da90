use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use mtsph::config::{Preset, RunConfig, ScenarioKind};
use mtsph::run::{default_output_dir, run};

#[derive(Parser)]
#[command(
    version,
    about = "Multi-time-step SPH for elastoplastic necking and membrane swelling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a TOML config file.
    Run {
        config: PathBuf,
        /// Output directory; defaults to out/<config stem>.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write a particle snapshot every N outer steps (overrides the file).
        #[arg(long, value_name = "N")]
        snapshots: Option<usize>,
        /// Suppress per-step progress.
        #[arg(long)]
        quiet: bool,
    },
    /// Print the fully resolved defaults of a scenario as TOML.
    Defaults {
        #[arg(value_enum)]
        scenario: Scenario,
        #[arg(long, value_enum, default_value = "full")]
        preset: PresetArg,
    },
    /// Parse and check a config file without running it.
    Check { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    #[value(name = "necking_2d")]
    Necking2d,
    #[value(name = "necking_3d")]
    Necking3d,
    #[value(name = "fsi_2d")]
    Fsi2d,
    #[value(name = "fsi_3d")]
    Fsi3d,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Full,
    Desk,
    Coarse,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            snapshots,
            quiet,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(n) = snapshots {
                cfg.snapshot_every = n;
            }
            let dir = out.unwrap_or_else(|| default_output_dir(&config));
            let report = run(&cfg, Some(&dir), |s| {
                if !quiet {
                    eprintln!(
                        "t = {:>10.4} s  F = {:>12.5e} N  neck = {:>11.4e} m  amp = {:>11.4e} m  ek = {:>9.3e}  inner = {:>6}",
                        s.time, s.reaction_force, s.neck_displacement, s.amplitude, s.energy_ratio, s.inner_iterations
                    );
                }
            })
            .with_context(|| format!("run failed; manifest written to {}", dir.display()))?;
            let m = &report.manifest;
            println!(
                "{}: {} particles, outer {} inner {} damping {} in {:.1} s -> {}",
                config.display(),
                m.particles,
                m.outer_steps,
                m.inner_steps,
                m.damping_steps,
                m.wall_clock_s,
                dir.display()
            );
            for w in &m.warnings {
                println!("warning: {w}");
            }
        }
        Command::Defaults { scenario, preset } => {
            let scenario = match scenario {
                Scenario::Necking2d => ScenarioKind::Necking2d,
                Scenario::Necking3d => ScenarioKind::Necking3d,
                Scenario::Fsi2d => ScenarioKind::Fsi2d,
                Scenario::Fsi3d => ScenarioKind::Fsi3d,
            };
            let preset = match preset {
                PresetArg::Full => Preset::Full,
                PresetArg::Desk => Preset::Desk,
                PresetArg::Coarse => Preset::Coarse,
            };
            print!("{}", RunConfig::preset(scenario, preset)?.to_toml_string()?);
        }
        Command::Check { config } => {
            let cfg = RunConfig::load(&config)?;
            println!("{}: ok ({}D)", config.display(), cfg.dimension());
        }
    }
    Ok(())
}
