use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use rwhil_bench::{execute, RunMode, RunRequest};
use rwhil_bus::Role;

#[derive(Parser)]
#[command(name = "rwhil", version, about = "Reaction-wheel attitude control test bench")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Mil,
    #[value(alias = "distributed")]
    Dist,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario file.
    Run {
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Distributed mode: step the shared virtual clock as fast as the nodes allow.
        #[arg(long)]
        accel: bool,
        #[arg(long, default_value = "rwhil-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write one CSV per figure (plot_<key>.csv).
        #[arg(long)]
        emit_plots: bool,
        /// Crash one node at a virtual time, e.g. `rw@100`.
        #[arg(long, hide = true, value_parser = parse_kill)]
        kill: Option<(Role, f64)>,
    },
    /// Run one node process (started by the distributed harness).
    #[command(hide = true)]
    Node {
        role: String,
        #[arg(long)]
        broker: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        exit_at: Option<f64>,
    },
}

fn parse_kill(s: &str) -> Result<(Role, f64), String> {
    let (r, t) = s.split_once('@').ok_or("expected <role>@<seconds>")?;
    let role = Role::from_name(r).ok_or_else(|| format!("unknown role `{r}`"))?;
    Ok((role, t.parse().map_err(|_| format!("bad time `{t}`"))?))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    match cli.cmd {
        Cmd::Run { config, mode, accel, out, seed, emit_plots, kill } => {
            let req = RunRequest {
                config,
                mode: mode.map(|m| match m {
                    ModeArg::Mil => RunMode::Mil,
                    ModeArg::Dist => RunMode::Distributed,
                }),
                accelerated: accel,
                out,
                seed,
                emit_plots,
                exe: None,
                kill,
            };
            match execute(&req) {
                Ok(s) => {
                    for a in &s.assertions {
                        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
                    }
                    if let Some(f) = &s.failure {
                        eprintln!("run failed: {f}");
                    }
                    println!("{} after {:.1} s; results in {}", s.status, s.wall_seconds, req.out.display());
                    ExitCode::from(s.exit_code() as u8)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Cmd::Node { role, broker, out, exit_at } => {
            let Some(role) = Role::from_name(&role) else {
                eprintln!("unknown role `{role}`");
                return ExitCode::from(1);
            };
            match rwhil_bench::dist::node_main(role, &broker, &out, exit_at) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("{role} node: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
