//! Executes generated glue in node. Skipped when node is not installed.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value as Json;

use wasm_probe_core::decode::decode_module;
use wasm_probe_core::encode::encode_module;
use wasm_probe_core::glue;
use wasm_probe_core::hooks::{HookKind, HookSet};
use wasm_probe_core::instrument::{instrument_module, InstrumentOptions};

/// Loads the glue, installs a recording (or empty) analysis, instantiates the
/// module, calls the named exports, and prints a JSON report.
const DRIVER: &str = r#"
const fs = require("fs");
const vm = require("vm");
const [wasmPath, gluePath, mode, ...calls] = process.argv.slice(2);
vm.runInThisContext(fs.readFileSync(gluePath, "utf8"), { filename: gluePath });
const log = [];
if (mode === "record") {
  Wasabi.analysis = new Proxy({}, { get: (_, name) => (...args) => log.push([name, ...args]) });
}
const bytes = fs.readFileSync(wasmPath);
const wasmModule = new WebAssembly.Module(bytes);
const imports = {};
for (const imp of WebAssembly.Module.imports(wasmModule)) {
  if (imp.module === Wasabi.HOOK_NAMESPACE) continue;
  (imports[imp.module] = imports[imp.module] || {})[imp.name] = () => 0;
}
const missing = WebAssembly.Module.imports(wasmModule)
  .filter(i => i.module === Wasabi.HOOK_NAMESPACE && typeof Wasabi.lowlevelHooks[i.name] !== "function")
  .map(i => i.name);
const instance = Wasabi.instantiateSync(wasmModule, imports);
const results = [];
for (const call of calls) {
  const [name, ...args] = call.split(":");
  results.push(instance.exports[name](...args.map(Number)));
}
let memoryHash = null;
const mem = instance.exports.memory;
if (mem instanceof WebAssembly.Memory) {
  let h = 0x811c9dc5;
  for (const b of new Uint8Array(mem.buffer)) h = Math.imul(h ^ b, 0x01000193) >>> 0;
  memoryHash = h;
}
const replacer = (_, v) => (typeof v === "bigint" ? v.toString() + "n" : v);
console.log(JSON.stringify({ missing, results, log, memoryHash }, replacer));
"#;

fn node() -> Option<PathBuf> {
    let ok = Command::new("node").arg("--version").output().is_ok_and(|o| o.status.success());
    if ok {
        Some(PathBuf::from("node"))
    } else {
        eprintln!("node not found; skipping glue execution");
        None
    }
}

struct Artifacts {
    dir: tempfile::TempDir,
}

impl Artifacts {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("driver.cjs"), DRIVER).unwrap();
        Artifacts { dir }
    }

    /// Instruments `bytes` and writes the binary and glue; returns their paths.
    fn instrument(&self, name: &str, bytes: &[u8], hooks: HookSet) -> (PathBuf, PathBuf) {
        let module = decode_module(bytes).unwrap();
        let out = instrument_module(&module, &InstrumentOptions::new(hooks)).unwrap();
        let wasm = self.dir.path().join(format!("{name}.instrumented.wasm"));
        let js = self.dir.path().join(format!("{name}.wasabi.js-glue"));
        std::fs::write(&wasm, encode_module(&out.module).unwrap()).unwrap();
        std::fs::write(&js, glue::generate(&out.hooks, &out.metadata)).unwrap();
        (wasm, js)
    }

    fn run(&self, node: &Path, wasm: &Path, js: &Path, mode: &str, calls: &[&str]) -> Json {
        let out = Command::new(node)
            .arg(self.dir.path().join("driver.cjs"))
            .arg(wasm)
            .arg(js)
            .arg(mode)
            .args(calls)
            .output()
            .unwrap();
        assert!(out.status.success(), "node failed: {}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice(&out.stdout).unwrap()
    }
}

fn wat(src: &str) -> Vec<u8> {
    wat::parse_str(src).unwrap()
}

#[test]
fn glue_is_syntactically_valid_for_every_corpus_module() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    for m in common::corpus() {
        for (label, hooks) in [("none", HookSet::empty()), ("all", HookSet::all())] {
            let (_, js) = artifacts.instrument(&format!("{}_{label}", m.name), &m.bytes, hooks);
            // node picks the parser by extension
            let script = js.with_extension("cjs");
            std::fs::copy(&js, &script).unwrap();
            let out = Command::new(&node).arg("--check").arg(&script).output().unwrap();
            assert!(out.status.success(), "{} [{label}]: {}", m.name, String::from_utf8_lossy(&out.stderr));
        }
    }
}

#[test]
fn every_hook_import_has_a_low_level_implementation() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    for m in common::hand_written() {
        if m.name == "import_memory_global" {
            continue;
        }
        let (wasm, js) = artifacts.instrument(&m.name, &m.bytes, HookSet::all());
        let report = artifacts.run(&node, &wasm, &js, "empty", &[]);
        assert_eq!(report["missing"], Json::Array(vec![]), "{}", m.name);
    }
}

#[test]
fn i64_values_reach_the_analysis_joined() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    let bytes = wat(r#"(module
      (func (export "consts")
        i64.const 4294967301
        drop
        i64.const -1
        drop
        i64.const -9223372036854775808
        drop))"#);
    let (wasm, js) = artifacts.instrument("i64", &bytes, HookSet::only(HookKind::Const));
    let report = artifacts.run(&node, &wasm, &js, "record", &["consts"]);
    let values: Vec<&Json> = report["log"].as_array().unwrap().iter().map(|call| &call[3]).collect();
    assert_eq!(values, ["4294967301n", "-1n", "-9223372036854775808n"]);
    assert_eq!(report["log"][0][0], "const_");
    assert_eq!(report["log"][0][1], serde_json::json!({ "func": 0, "instr": 0 }));
    assert_eq!(report["log"][0][2], "i64.const");
}

#[test]
fn br_table_default_fires_end_callbacks_of_its_ended_blocks() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    let bytes = wat(r#"(module
      (func (export "switch") (param i32) (result i32)
        block
          block
            block
              local.get 0
              br_table 0 1 2 1
            end
            i32.const 10
            return
          end
          i32.const 20
          return
        end
        i32.const 30))"#);
    let (wasm, js) = artifacts.instrument("switch", &bytes, HookSet::only(HookKind::BrTable).with(HookKind::End));
    let report = artifacts.run(&node, &wasm, &js, "record", &["switch:7"]);
    assert_eq!(report["results"], serde_json::json!([20]));
    let log = report["log"].as_array().unwrap();
    assert_eq!(log[0][0], "br_table");
    assert_eq!(log[0][4], 7);
    // the default label 1 leaves the blocks opened at 2 and 1, ending at 5 and 8
    let ends: Vec<(String, i64)> =
        log[1..3].iter().map(|c| (c[2].as_str().unwrap().to_string(), c[1]["instr"].as_i64().unwrap())).collect();
    assert_eq!(ends, [("block".to_string(), 5), ("block".to_string(), 8)]);
    assert_eq!(log[0][3]["location"]["instr"], 9);
    assert_eq!(log[0][3]["endedBlocks"].as_array().unwrap().len(), 2);
}

#[test]
fn indirect_calls_resolve_to_original_function_indices() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    let bytes = std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/corpus/call_indirect.wat")).unwrap();
    let bytes = wat(std::str::from_utf8(&bytes).unwrap());
    let (wasm, js) = artifacts.instrument("dispatch", &bytes, HookSet::only(HookKind::CallPre));
    let report = artifacts.run(&node, &wasm, &js, "record", &["dispatch:1"]);
    let log = report["log"].as_array().unwrap();
    // table slot 1 holds $sub (function 1), slot 2 holds $seven (function 2)
    assert_eq!(log[0][2], 1);
    assert_eq!(log[0][3], serde_json::json!([10, 4]));
    assert_eq!(log[0][4], 1);
    assert_eq!(log[1][2], 2);
    assert_eq!(log[1][4], 2);
    assert_eq!(report["results"], serde_json::json!([13]));
}

#[test]
fn direct_calls_report_null_table_index() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    let bytes = wat(r#"(module
      (func $f (param i32) (result i32) local.get 0)
      (func (export "g") (result i32) i32.const 5 call $f))"#);
    let (wasm, js) = artifacts.instrument("direct", &bytes, HookSet::only(HookKind::CallPre).with(HookKind::CallPost));
    let report = artifacts.run(&node, &wasm, &js, "record", &["g"]);
    assert_eq!(
        report["log"],
        serde_json::json!([
            ["call_pre", { "func": 1, "instr": 1 }, 0, [5], null],
            ["call_post", { "func": 1, "instr": 1 }, [5]]
        ])
    );
}

fn fnv(bytes: &[u8]) -> u32 {
    bytes.iter().fold(0x811c9dc5u32, |h, b| (h ^ *b as u32).wrapping_mul(0x01000193))
}

#[test]
fn empty_analysis_leaves_kernel_results_and_memory_unchanged() {
    let Some(node) = node() else { return };
    let artifacts = Artifacts::new();
    for m in common::kernels() {
        let log = common::new_log();
        let original = common::run_exports(&m.bytes, 100_000_000, &log).unwrap();
        let expected = match &original.outcomes[..] {
            [(name, common::Outcome::Returned(values))] if name == "run" => values[0],
            other => panic!("{}: {other:?}", m.name),
        };
        let (wasm, js) = artifacts.instrument(&m.name, &m.bytes, HookSet::all());
        let report = artifacts.run(&node, &wasm, &js, "empty", &["run"]);
        let actual = &report["results"][0];
        match expected {
            common::Bits::I32(v) => assert_eq!(actual.as_i64(), Some(v as i64), "{}", m.name),
            common::Bits::I64(v) => assert_eq!(actual.as_str(), Some(format!("{v}n").as_str()), "{}", m.name),
            common::Bits::F32(bits) => {
                assert_eq!(actual.as_f64().map(|x| x as f32), Some(f32::from_bits(bits)), "{}", m.name)
            }
            common::Bits::F64(bits) => assert_eq!(actual.as_f64().map(f64::to_bits), Some(bits), "{}", m.name),
        }
        let memory = original.memory.as_deref().expect("kernels export memory");
        assert_eq!(report["memoryHash"].as_u64(), Some(fnv(memory) as u64), "{}: final memory differs", m.name);
    }
}
