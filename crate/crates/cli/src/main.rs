use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wasm_probe_cli::{infer_hooks, run, CliConfig, ReportFormat};
use wasm_probe_core::hooks::HookSet;

#[derive(Parser)]
#[command(name = "wasm-probe", version, about = "Instrument WebAssembly binaries for dynamic analysis")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Instrument a module and write the instrumented binary and its glue script.
    Instrument {
        input: PathBuf,
        /// Output directory, created if missing.
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        /// Comma-separated hook names, `all`, or "" for none.
        #[arg(long, value_parser = parse_hooks, conflicts_with = "infer_hooks")]
        hooks: Option<HookSet>,
        /// Enable exactly the hooks named in this analysis source.
        #[arg(long, value_name = "FILE")]
        infer_hooks: Option<PathBuf>,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
        threads: u16,
        #[arg(long, value_enum)]
        report: Option<ReportArg>,
    },
}

fn parse_hooks(s: &str) -> Result<HookSet, String> {
    s.parse().map_err(|e: wasm_probe_core::hooks::UnknownHook| e.to_string())
}

fn main() -> ExitCode {
    let Command::Instrument { input, output, hooks, infer_hooks: analysis, threads, report } = Args::parse().command;
    let hooks = match (hooks, analysis) {
        (Some(h), _) => h,
        (None, Some(path)) => match std::fs::read_to_string(&path) {
            Ok(src) => infer_hooks(&src),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        (None, None) => HookSet::all(),
    };
    let config = CliConfig {
        input,
        output_dir: output,
        hooks,
        threads: threads as usize,
        report: match report {
            Some(ReportArg::Json) => ReportFormat::Json,
            None => ReportFormat::None,
        },
    };
    match run(&config) {
        Ok(out) => {
            println!("{}", out.wasm_path.display());
            println!("{}", out.glue_path.display());
            if let Some(p) = out.report_path {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
