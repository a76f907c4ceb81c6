//! Shared fixtures for the integration tests: the module corpus, the external
//! validator, and a reference interpreter with stub imports.
#![allow(dead_code)]

pub mod mutate;

use std::path::Path;
use std::sync::{Arc, Mutex};

use arbitrary::Unstructured;
use rand_chacha::rand_core::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasmparser::{Validator, WasmFeatures};

use wasm_probe_core::hooks::HOOK_NAMESPACE;

pub const SMITH_MODULES: usize = 30;

pub struct CorpusModule {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Passes iff the module is valid WebAssembly 1.0.
pub fn validate(bytes: &[u8]) -> Result<(), String> {
    Validator::new_with_features(WasmFeatures::WASM1).validate_all(bytes).map(|_| ()).map_err(|e| e.to_string())
}

pub fn hand_written() -> Vec<CorpusModule> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut paths: Vec<_> = std::fs::read_dir(&dir)
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "wat"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let bytes = wat::parse_file(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
            CorpusModule { name, bytes }
        })
        .collect()
}

fn smith_config() -> wasm_smith::Config {
    wasm_smith::Config {
        max_memories: 1,
        max_tables: 1,
        max_funcs: 12,
        max_instructions: 120,
        max_type_size: 100,
        min_funcs: 1,
        multi_value_enabled: false,
        reference_types_enabled: false,
        bulk_memory_enabled: false,
        simd_enabled: false,
        relaxed_simd_enabled: false,
        saturating_float_to_int_enabled: false,
        sign_extension_ops_enabled: false,
        exceptions_enabled: false,
        gc_enabled: false,
        memory64_enabled: false,
        tail_call_enabled: false,
        threads_enabled: false,
        extended_const_enabled: false,
        wide_arithmetic_enabled: false,
        compact_imports_enabled: false,
        custom_page_sizes_enabled: false,
        shared_everything_threads_enabled: false,
        custom_descriptors_enabled: false,
        ..wasm_smith::Config::default()
    }
}

/// One generated 1.0 module per seed. Loops are bounded by a fuel global.
pub fn smith_module(seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entropy = vec![0u8; 16 * 1024];
    rng.fill_bytes(&mut entropy);
    let mut u = Unstructured::new(&entropy);
    let mut module = wasm_smith::Module::new(smith_config(), &mut u).expect("wasm-smith generates from any entropy");
    module.ensure_termination(1_000).expect("termination fuel fits");
    module.to_bytes()
}

pub fn generated() -> Vec<CorpusModule> {
    (0..SMITH_MODULES as u64)
        .map(|seed| CorpusModule { name: format!("smith_{seed:02}"), bytes: smith_module(seed) })
        .collect()
}

pub fn corpus() -> Vec<CorpusModule> {
    let mut all = hand_written();
    all.extend(generated());
    all
}

pub fn kernels() -> Vec<CorpusModule> {
    hand_written().into_iter().filter(|m| m.name.starts_with("kernel_")).collect()
}

/// Bytes of the code section (id 10) payload, if present.
pub fn code_section(bytes: &[u8]) -> Option<Vec<u8>> {
    for payload in wasmparser::Parser::new(0).parse_all(bytes) {
        if let wasmparser::Payload::CodeSectionStart { range, .. } = payload.unwrap() {
            return Some(bytes[range.start as usize..range.end as usize].to_vec());
        }
    }
    None
}

/// A host value with bitwise equality for floats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bits {
    I32(i32),
    I64(i64),
    F32(u32),
    F64(u64),
}

impl Bits {
    pub fn of(v: &wasmi::Val) -> Bits {
        match v {
            wasmi::Val::I32(x) => Bits::I32(*x),
            wasmi::Val::I64(x) => Bits::I64(*x),
            wasmi::Val::F32(x) => Bits::F32(x.to_bits()),
            wasmi::Val::F64(x) => Bits::F64(x.to_bits()),
            other => panic!("not a 1.0 value: {other:?}"),
        }
    }

    pub fn as_i64(self) -> i64 {
        match self {
            Bits::I32(x) => x as i64,
            Bits::I64(x) => x,
            Bits::F32(x) => x as i64,
            Bits::F64(x) => x as i64,
        }
    }
}

pub type HookLog = Arc<Mutex<Vec<(String, Vec<Bits>)>>>;

/// Outcome of calling one export: results, a trap, or fuel exhaustion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Returned(Vec<Bits>),
    Trapped,
    OutOfFuel,
}

pub struct Run {
    pub outcomes: Vec<(String, Outcome)>,
    pub memory: Option<Vec<u8>>,
    pub globals: Vec<(String, Bits)>,
}

fn is_out_of_fuel(e: &wasmi::Error) -> bool {
    e.as_trap_code() == Some(wasmi::TrapCode::OutOfFuel) || e.to_string().contains("fuel")
}

/// Instantiates `bytes` with stub function imports and calls every exported
/// function with zero arguments, in export order. Hook imports record their
/// arguments into `log`. Returns `None` if the module imports a table,
/// memory, or global.
pub fn run_exports(bytes: &[u8], fuel: u64, log: &HookLog) -> Option<Run> {
    let mut config = wasmi::Config::default();
    config.consume_fuel(true);
    let engine = wasmi::Engine::new(&config);
    let module = wasmi::Module::new(&engine, bytes).expect("interpreter accepts validated module");
    let mut store = wasmi::Store::new(&engine, ());
    store.set_fuel(fuel).unwrap();
    let mut linker = <wasmi::Linker<()>>::new(&engine);
    for import in module.imports() {
        let wasmi::ExternType::Func(ty) = import.ty() else {
            return None;
        };
        let results: Vec<wasmi::ValType> = ty.results().to_vec();
        let name = import.name().to_string();
        let record = (import.module() == HOOK_NAMESPACE).then(|| Arc::clone(log));
        linker
            .func_new(import.module(), import.name(), ty.clone(), move |_, params, out| {
                if let Some(log) = &record {
                    log.lock().unwrap().push((name.clone(), params.iter().map(Bits::of).collect()));
                }
                for (slot, ty) in out.iter_mut().zip(&results) {
                    *slot = wasmi::Val::default_for_ty(*ty);
                }
                Ok(())
            })
            .expect("import names are unique");
    }
    let instance = match linker.instantiate_and_start(&mut store, &module) {
        Ok(instance) => instance,
        Err(e) if is_out_of_fuel(&e) => {
            return Some(Run { outcomes: vec![("<start>".into(), Outcome::OutOfFuel)], memory: None, globals: vec![] })
        }
        Err(_) => {
            return Some(Run { outcomes: vec![("<start>".into(), Outcome::Trapped)], memory: None, globals: vec![] })
        }
    };
    let mut outcomes = Vec::new();
    let exports: Vec<(String, wasmi::ExternType)> =
        module.exports().map(|e| (e.name().to_string(), e.ty().clone())).collect();
    for (name, ty) in &exports {
        let wasmi::ExternType::Func(fty) = ty else { continue };
        let func = instance.get_func(&store, name).unwrap();
        let args: Vec<wasmi::Val> = fty.params().iter().map(|t| wasmi::Val::default_for_ty(*t)).collect();
        let mut results: Vec<wasmi::Val> = fty.results().iter().map(|t| wasmi::Val::default_for_ty(*t)).collect();
        let outcome = match func.call(&mut store, &args, &mut results) {
            Ok(()) => Outcome::Returned(results.iter().map(Bits::of).collect()),
            Err(e) if is_out_of_fuel(&e) => Outcome::OutOfFuel,
            Err(_) => Outcome::Trapped,
        };
        let stop = outcome == Outcome::OutOfFuel;
        outcomes.push((name.clone(), outcome));
        if stop {
            break;
        }
    }
    let memory = exports
        .iter()
        .find(|(n, t)| matches!(t, wasmi::ExternType::Memory(_)) && !n.starts_with("__wasabi"))
        .map(|(n, _)| instance.get_memory(&store, n).unwrap().data(&store).to_vec());
    let globals = exports
        .iter()
        .filter(|(_, t)| matches!(t, wasmi::ExternType::Global(_)))
        .map(|(n, _)| (n.clone(), Bits::of(&instance.get_global(&store, n).unwrap().get(&store))))
        .collect();
    Some(Run { outcomes, memory, globals })
}

pub fn new_log() -> HookLog {
    Arc::new(Mutex::new(Vec::new()))
}
