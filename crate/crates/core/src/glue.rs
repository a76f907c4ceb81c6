//! JavaScript glue implementing the low-level hooks of an instrumented module.
//!
//! The script assigns `globalThis.Wasabi` with the embedded module metadata,
//! one low-level function per hook import, and helpers to build the import
//! object. Each low-level function rebuilds high-level arguments (location,
//! joined i64 values, booleans, branch targets) and calls the matching
//! callback of `Wasabi.analysis` if the analysis defines it.

use std::fmt::Write;

use crate::hooks::{HookKey, HookRef, HOOK_NAMESPACE};
use crate::ir::ValType;
use crate::metadata::ModuleMetadata;

const PRELUDE: &str = r#"(function () {
"use strict";
const Wasabi = globalThis.Wasabi = globalThis.Wasabi || {};
Wasabi.analysis = Wasabi.analysis || {};
Wasabi.module = Wasabi.module || {};
"#;

const HELPERS: &str = r#"const info = Wasabi.module.info;
const endEnabled = info.enabledHooks.indexOf("end") >= 0;
function loc(func, instr) { return { func: func, instr: instr }; }
function i64(low, high) { return BigInt.asIntN(64, (BigInt(high) << 32n) | BigInt(low >>> 0)); }
function bool(v) { return v !== 0; }
function u32(v) { return v >>> 0; }
function target(func, label, instr) { return { label: label, location: loc(func, instr) }; }
function dispatch(name, args) {
  const f = Wasabi.analysis[name];
  if (typeof f === "function") f.apply(Wasabi.analysis, args);
}
function endBlocks(blocks) {
  for (const b of blocks) dispatch("end", [b.end, b.type, b.begin]);
}
function resolveTableIndex(tableIndex) {
  const exports = Wasabi.module.exports;
  const table = exports && info.tableExportName !== null ? exports[info.tableExportName] : undefined;
  if (!table) return null;
  const f = table.get(tableIndex);
  if (!f) return null;
  return parseInt(f.name, 10) - info.hookCount;
}
"#;

const EPILOGUE: &str = r#"Wasabi.importObject = function (imports) {
  const result = Object.assign({}, imports || {});
  result[Wasabi.HOOK_NAMESPACE] = Wasabi.lowlevelHooks;
  return result;
};
Wasabi.instantiate = function (bytes, imports) {
  return WebAssembly.instantiate(bytes, Wasabi.importObject(imports)).then(function (result) {
    Wasabi.module.instance = result.instance;
    Wasabi.module.exports = result.instance.exports;
    return result;
  });
};
Wasabi.instantiateSync = function (bytes, imports) {
  const module = bytes instanceof WebAssembly.Module ? bytes : new WebAssembly.Module(bytes);
  const instance = new WebAssembly.Instance(module, Wasabi.importObject(imports));
  Wasabi.module.instance = instance;
  Wasabi.module.exports = instance.exports;
  return instance;
};
})();
"#;

/// Converts the lowered parameters `p2..` into high-level JS expressions,
/// one per unlowered value.
fn value_exprs(values: &[ValType]) -> (Vec<String>, usize) {
    let mut next = 2;
    let mut exprs = Vec::with_capacity(values.len());
    for &t in values {
        if t == ValType::I64 {
            exprs.push(format!("i64(p{}, p{})", next, next + 1));
            next += 2;
        } else {
            exprs.push(format!("p{next}"));
            next += 1;
        }
    }
    (exprs, next)
}

fn js_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

/// Body of one low-level hook: a call to `dispatch` (or more for `br_table`).
fn hook_body(key: &HookKey, v: &[String]) -> String {
    let l = "loc(p0, p1)";
    let call = |name: &str, args: &[String]| {
        let mut all = vec![l.to_string()];
        all.extend_from_slice(args);
        format!("dispatch({}, [{}]);", js_string(name), all.join(", "))
    };
    let s = |x: &str| x.to_string();
    match key {
        HookKey::Start => call("start", &[]),
        HookKey::Nop => call("nop", &[]),
        HookKey::Unreachable => call("unreachable", &[]),
        HookKey::If => call("if_", &[format!("bool({})", v[0])]),
        HookKey::Br => call("br", &[format!("target(p0, {}, {})", v[0], v[1])]),
        HookKey::BrIf => call("br_if", &[format!("target(p0, {}, {})", v[0], v[1]), format!("bool({})", v[2])]),
        HookKey::BrTable => format!(
            "const t = info.brTables[{table}]; const i = u32({idx}); \
             dispatch(\"br_table\", [{l}, t.targets, t.default, i]); \
             if (endEnabled) endBlocks((i < t.targets.length ? t.targets[i] : t.default).endedBlocks);",
            table = v[0],
            idx = v[1],
        ),
        HookKey::Begin(k) => call("begin", &[js_string(k.name())]),
        HookKey::End(k) => call("end", &[js_string(k.name()), format!("loc(p0, {})", v[0])]),
        HookKey::MemorySize => call("memory_size", &[s(&v[0])]),
        HookKey::MemoryGrow => call("memory_grow", &[s(&v[0]), s(&v[1])]),
        HookKey::Const(t) => call("const_", &[js_string(&format!("{}.const", t.name())), s(&v[0])]),
        HookKey::Drop(_) => call("drop", &[s(&v[0])]),
        HookKey::Select(_) => call("select", &[format!("bool({})", v[0]), s(&v[1]), s(&v[2])]),
        HookKey::Unary(op) => call("unary", &[js_string(op.name()), s(&v[0]), s(&v[1])]),
        HookKey::Binary(op) => call("binary", &[js_string(op.name()), s(&v[0]), s(&v[1]), s(&v[2])]),
        HookKey::Load(op) => {
            call("load", &[js_string(op.name()), format!("{{ addr: u32({}), offset: u32({}) }}", v[0], v[1]), s(&v[2])])
        }
        HookKey::Store(op) => call(
            "store",
            &[js_string(op.name()), format!("{{ addr: u32({}), offset: u32({}) }}", v[0], v[1]), s(&v[2])],
        ),
        HookKey::Local(op, _) => call("local", &[js_string(&format!("local.{}", op.name())), s(&v[0]), s(&v[1])]),
        HookKey::Global(op, _) => call("global", &[js_string(&format!("global.{}", op.name())), s(&v[0]), s(&v[1])]),
        HookKey::CallPre { indirect, .. } => {
            let args = format!("[{}]", v[1..].join(", "));
            if *indirect {
                call("call_pre", &[format!("resolveTableIndex(u32({}))", v[0]), args, format!("u32({})", v[0])])
            } else {
                call("call_pre", &[s(&v[0]), args, s("null")])
            }
        }
        HookKey::CallPost(_) => call("call_post", &[format!("[{}]", v.join(", "))]),
        HookKey::Return(_) => call("return_", &[format!("[{}]", v.join(", "))]),
    }
}

/// Generates the glue script for an instrumented module.
pub fn generate(hooks: &[HookRef], metadata: &ModuleMetadata) -> String {
    let mut out = String::with_capacity(4096 + hooks.len() * 128);
    out.push_str("// Generated by wasm-probe. Low-level hooks for an instrumented module.\n");
    out.push_str(PRELUDE);
    writeln!(out, "Wasabi.HOOK_NAMESPACE = {};", js_string(HOOK_NAMESPACE)).unwrap();
    writeln!(out, "Wasabi.module.info = {};", metadata.to_json()).unwrap();
    out.push_str(HELPERS);
    out.push_str("Wasabi.lowlevelHooks = {\n");
    for hook in hooks {
        let (exprs, n) = value_exprs(&hook.key.values());
        let params: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
        writeln!(
            out,
            "  {}: function ({}) {{ {} }},",
            js_string(&hook.symbol()),
            params.join(", "),
            hook_body(&hook.key, &exprs)
        )
        .unwrap();
    }
    out.push_str("};\n");
    out.push_str(EPILOGUE);
    out
}
