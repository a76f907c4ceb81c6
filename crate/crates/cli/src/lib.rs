//! Library side of the `wasm-probe` command: configuration, the instrument
//! run, and the JSON report.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;
use wasm_probe_core::decode::{decode_module, DecodeError};
use wasm_probe_core::encode::{encode_module, EncodeError};
use wasm_probe_core::glue;
use wasm_probe_core::hooks::{HookKind, HookSet};
use wasm_probe_core::instrument::{instrument_module, InstrumentError, InstrumentOptions, InstrumentStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    None,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    pub hooks: HookSet,
    pub threads: usize,
    pub report: ReportFormat,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Decode { path: PathBuf, source: DecodeError },
    #[error("{0}")]
    Instrument(#[from] InstrumentError),
    #[error("{0}")]
    Encode(#[from] EncodeError),
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub input: String,
    pub original_size: usize,
    pub instrumented_size: usize,
    pub size_ratio: f64,
    pub glue_size: usize,
    pub hook_count: usize,
    pub enabled_hooks: HookSet,
    #[serde(flatten)]
    pub stats: InstrumentStats,
    pub threads: usize,
    pub instrumentation_time_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub wasm_path: PathBuf,
    pub glue_path: PathBuf,
    pub report_path: Option<PathBuf>,
    pub report: Report,
}

fn output_stem(input: &Path) -> String {
    let name = input.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "module".into());
    name.strip_suffix(".wasm").map(str::to_string).unwrap_or(name)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

pub fn run(config: &CliConfig) -> Result<RunOutput, CliError> {
    let bytes = fs::read(&config.input).map_err(|source| CliError::Read { path: config.input.clone(), source })?;
    let started = Instant::now();
    let module = decode_module(&bytes).map_err(|source| CliError::Decode { path: config.input.clone(), source })?;
    let opts = InstrumentOptions::new(config.hooks).threads(config.threads);
    let result = instrument_module(&module, &opts)?;
    let wasm = encode_module(&result.module)?;
    let glue = glue::generate(&result.hooks, &result.metadata);
    let elapsed = started.elapsed();

    fs::create_dir_all(&config.output_dir)
        .map_err(|source| CliError::Write { path: config.output_dir.clone(), source })?;
    let stem = output_stem(&config.input);
    let wasm_path = config.output_dir.join(format!("{stem}.instrumented.wasm"));
    let glue_path = config.output_dir.join(format!("{stem}.wasabi.js-glue"));
    write(&wasm_path, &wasm)?;
    write(&glue_path, glue.as_bytes())?;

    let report = Report {
        input: config.input.display().to_string(),
        original_size: bytes.len(),
        instrumented_size: wasm.len(),
        size_ratio: wasm.len() as f64 / bytes.len() as f64,
        glue_size: glue.len(),
        hook_count: result.hooks.len(),
        enabled_hooks: config.hooks,
        stats: result.stats,
        threads: opts.threads,
        instrumentation_time_ms: elapsed.as_secs_f64() * 1000.0,
    };
    let report_path = match config.report {
        ReportFormat::None => None,
        ReportFormat::Json => {
            let path = config.output_dir.join("report.json");
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write(&path, json.as_bytes())?;
            Some(path)
        }
    };
    Ok(RunOutput { wasm_path, glue_path, report_path, report })
}

/// Hooks whose names occur as whole identifiers in an analysis source.
///
/// Over-approximates: a name mentioned in a comment or string also counts.
pub fn infer_hooks(source: &str) -> HookSet {
    let is_ident = |c: char| c.is_ascii_alphanumeric() || c == '_' || c == '$';
    let mut found = HookSet::empty();
    let mut word_start = None;
    for (i, c) in source.char_indices().chain(std::iter::once((source.len(), ' '))) {
        match (is_ident(c), word_start) {
            (true, None) => word_start = Some(i),
            (false, Some(start)) => {
                if let Some(kind) = HookKind::from_name(&source[start..i]) {
                    found.insert(kind);
                }
                word_start = None;
            }
            _ => {}
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infers_whole_identifiers_only() {
        let src = "Wasabi.analysis = { binary(loc, op) {}, if_: f, call_pre_x: 1, // br_table\n};";
        let set = infer_hooks(src);
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![HookKind::If, HookKind::BrTable, HookKind::Binary]);
    }

    #[test]
    fn stem_strips_wasm_suffix() {
        assert_eq!(output_stem(Path::new("dir/app.wasm")), "app");
        assert_eq!(output_stem(Path::new("dir/app.bin")), "app.bin");
    }
}
