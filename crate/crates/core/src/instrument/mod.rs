//! The rewriting pass: inserts calls to low-level hooks around every
//! instruction whose hook kind is enabled.
//!
//! Functions are rewritten independently (optionally in parallel). Each hook
//! call is first emitted with a placeholder index. Once all functions are
//! done, the hooks are replayed in function order to assign final import
//! indices `0..H`, original function references are shifted by `H`, and the
//! hook imports are prepended.
//!
//! Every hook call passes the original location first:
//! `i32.const func; i32.const instr; <arguments>; call <hook>`.

mod locals;
mod lower;
mod remap;

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use locals::TempLocalPool;
pub use lower::lower_i64;
pub use remap::remap_indices;

use crate::control::{match_ends, BlockKind, BranchTarget, ControlError, ControlFrame, ControlStack};
use crate::hooks::{HookKey, HookKind, HookRef, HookRegistry, HookSet, VarOp, HOOK_NAMESPACE};
use crate::ir::*;
use crate::metadata::{BrTableInfo, ElementInfo, FunctionInfo, ModuleMetadata};
use crate::typing::{check_function, TypeError};
use lower::{push_arg, Arg};

pub const DEFAULT_MAX_FUNCTION_INSTRS: usize = 100_000;
pub const TABLE_EXPORT_NAME: &str = "__wasabi_table";
pub const MEMORY_EXPORT_NAME: &str = "__wasabi_memory";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrumentOptions {
    pub hooks: HookSet,
    /// Worker threads for per-function rewriting; 1 runs on the calling thread.
    pub threads: usize,
    pub max_function_instrs: usize,
}

impl InstrumentOptions {
    pub fn new(hooks: HookSet) -> Self {
        InstrumentOptions { hooks, threads: 1, max_function_instrs: DEFAULT_MAX_FUNCTION_INSTRS }
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstrumentError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("function {func} has {instructions} instructions, limit is {limit}")]
    FunctionTooLarge { func: u32, instructions: usize, limit: usize },
    #[error("export name `{0}` is reserved for the instrumentation runtime")]
    ReservedExportName(String),
    #[error("cannot start worker threads: {0}")]
    ThreadPool(String),
}

/// Per-kind counts over the original module.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InstrumentStats {
    /// Original instructions, grouped by the hook kind that observes them.
    pub instruction_counts: BTreeMap<HookKind, usize>,
    /// Hook call sites inserted.
    pub hook_calls: BTreeMap<HookKind, usize>,
}

#[derive(Debug, Clone)]
pub struct Instrumented {
    pub module: Module,
    pub metadata: ModuleMetadata,
    /// Hook imports; `hooks[i]` is function `i` of the instrumented module.
    pub hooks: Vec<HookRef>,
    pub stats: InstrumentStats,
}

/// The hook kind that observes `instr`. `else` opens a block and counts as `begin`.
pub fn instruction_kind(instr: &Instr) -> HookKind {
    match instr {
        Instr::Unreachable => HookKind::Unreachable,
        Instr::Nop => HookKind::Nop,
        Instr::Block(_) | Instr::Loop(_) | Instr::Else => HookKind::Begin,
        Instr::If(_) => HookKind::If,
        Instr::End => HookKind::End,
        Instr::Br(_) => HookKind::Br,
        Instr::BrIf(_) => HookKind::BrIf,
        Instr::BrTable { .. } => HookKind::BrTable,
        Instr::Return => HookKind::Return,
        Instr::Call(_) | Instr::CallIndirect(_) => HookKind::CallPre,
        Instr::Drop => HookKind::Drop,
        Instr::Select => HookKind::Select,
        Instr::LocalGet(_) | Instr::LocalSet(_) | Instr::LocalTee(_) => HookKind::Local,
        Instr::GlobalGet(_) | Instr::GlobalSet(_) => HookKind::Global,
        Instr::Load(..) => HookKind::Load,
        Instr::Store(..) => HookKind::Store,
        Instr::MemorySize => HookKind::MemorySize,
        Instr::MemoryGrow => HookKind::MemoryGrow,
        Instr::Const(_) => HookKind::Const,
        Instr::Unary(_) => HookKind::Unary,
        Instr::Binary(_) => HookKind::Binary,
    }
}

struct FunctionResult {
    func: u32,
    body: Vec<Instr>,
    added_locals: Vec<ValType>,
    /// Positions in `body` of placeholder hook calls.
    sites: Vec<(usize, HookKey)>,
    br_tables: Vec<BrTableInfo>,
}

struct Rewriter<'a> {
    module: &'a Module,
    func: u32,
    hooks: HookSet,
    registry: &'a HookRegistry,
    local_types: Vec<ValType>,
    pool: TempLocalPool,
    out: Vec<Instr>,
    sites: Vec<(usize, HookKey)>,
}

fn i32_const(v: i32) -> Instr {
    Instr::Const(Value::I32(v))
}

impl Rewriter<'_> {
    fn on(&self, kind: HookKind) -> bool {
        self.hooks.contains(kind)
    }

    fn emit(&mut self, instr: Instr) {
        self.out.push(instr);
    }

    fn temp(&mut self, ty: ValType) -> u32 {
        self.pool.take(ty)
    }

    fn hook(&mut self, key: HookKey, loc: Location, args: &[Arg]) {
        self.out.push(i32_const(loc.func as i32));
        self.out.push(i32_const(loc.instr as i32));
        for &arg in args {
            push_arg(&mut self.out, arg);
        }
        self.registry.get_or_create(&key);
        self.sites.push((self.out.len(), key));
        self.out.push(Instr::Call(0));
    }

    fn end_hooks(&mut self, frames: &[ControlFrame]) {
        for frame in frames {
            self.hook(HookKey::End(frame.kind), frame.end, &[Arg::I32(frame.begin.instr as i32)]);
        }
    }

    /// Passes the value(s) on top of the stack to a hook, leaving them in place.
    fn values_hook(&mut self, key: HookKey, loc: Location, tys: &[ValType]) {
        match tys {
            [] => self.hook(key, loc, &[]),
            [t] => {
                let tmp = self.temp(*t);
                self.emit(Instr::LocalTee(tmp));
                self.hook(key, loc, &[Arg::Local(tmp, *t)]);
            }
            _ => unreachable!("MVP functions have at most one result"),
        }
    }

    fn call_pre(&mut self, loc: Location, params: &[ValType], target: Option<u32>) {
        let indirect = target.is_none();
        let table_idx = indirect.then(|| self.temp(ValType::I32));
        if let Some(t) = table_idx {
            self.emit(Instr::LocalSet(t));
        }
        let temps: Vec<u32> = params.iter().map(|&t| self.temp(t)).collect();
        for &t in temps.iter().rev() {
            self.emit(Instr::LocalSet(t));
        }
        let mut args = vec![match (target, table_idx) {
            (Some(f), _) => Arg::I32(f as i32),
            (None, Some(t)) => Arg::Local(t, ValType::I32),
            (None, None) => unreachable!(),
        }];
        args.extend(temps.iter().zip(params).map(|(&l, &t)| Arg::Local(l, t)));
        self.hook(HookKey::CallPre { indirect, args: params.to_vec() }, loc, &args);
        for &t in &temps {
            self.emit(Instr::LocalGet(t));
        }
        if let Some(t) = table_idx {
            self.emit(Instr::LocalGet(t));
        }
    }

    fn variable(&mut self, instr: &Instr, loc: Location) {
        self.emit(instr.clone());
        let (key, arg) = match *instr {
            Instr::LocalGet(i) | Instr::LocalSet(i) | Instr::LocalTee(i) => {
                if !self.on(HookKind::Local) {
                    return;
                }
                let op = match instr {
                    Instr::LocalGet(_) => VarOp::Get,
                    Instr::LocalSet(_) => VarOp::Set,
                    _ => VarOp::Tee,
                };
                let t = self.local_types[i as usize];
                (HookKey::Local(op, t), [Arg::I32(i as i32), Arg::Local(i, t)])
            }
            Instr::GlobalGet(i) | Instr::GlobalSet(i) => {
                if !self.on(HookKind::Global) {
                    return;
                }
                let op = if matches!(instr, Instr::GlobalGet(_)) { VarOp::Get } else { VarOp::Set };
                let t = self.module.globals[i as usize].ty.ty;
                (HookKey::Global(op, t), [Arg::I32(i as i32), Arg::Global(i, t)])
            }
            _ => unreachable!(),
        };
        self.hook(key, loc, &arg);
    }
}

fn count_br_tables(code: &Code) -> u32 {
    code.body.iter().filter(|i| matches!(i, Instr::BrTable { .. })).count() as u32
}

fn instrument_function(
    m: &Module,
    func: u32,
    opts: &InstrumentOptions,
    registry: &HookRegistry,
    first_table_id: u32,
) -> Result<FunctionResult, InstrumentError> {
    let code = m.functions[func as usize].code().expect("defined function");
    if code.body.len() > opts.max_function_instrs {
        return Err(InstrumentError::FunctionTooLarge {
            func,
            instructions: code.body.len(),
            limit: opts.max_function_instrs,
        });
    }
    let annotations = check_function(m, func)?;
    let ends = match_ends(func, &code.body)?;
    let mut ctrl = ControlStack::new(func, code.body.len());
    let local_types = m.local_types(func);
    let results = m.func_type(func).results.clone();
    let mut w = Rewriter {
        module: m,
        func,
        hooks: opts.hooks,
        registry,
        pool: TempLocalPool::new(local_types.len() as u32),
        local_types,
        out: Vec::with_capacity(code.body.len() * 2),
        sites: Vec::new(),
    };
    // Whether each open frame was entered by reachable code.
    let mut entered: Vec<bool> = vec![true];
    let mut br_tables = Vec::new();

    let entry = Location::entry(func);
    if w.on(HookKind::Start) && m.start == Some(func) {
        w.hook(HookKey::Start, entry, &[]);
    }
    if w.on(HookKind::Begin) {
        w.hook(HookKey::Begin(BlockKind::Function), entry, &[]);
    }

    for (i, instr) in code.body.iter().enumerate() {
        let loc = Location::new(w.func, i as i64);
        let ann = &annotations[i];
        w.pool.begin_site();

        let mut table_id = None;
        if let Instr::BrTable { labels, default } = instr {
            let targets = labels.iter().map(|&l| ctrl.resolve_label(l)).collect::<Result<Vec<_>, _>>()?;
            let default = ctrl.resolve_label(*default)?;
            let id = first_table_id + br_tables.len() as u32;
            br_tables.push(BrTableInfo { func, instr: i as i64, table: id, targets, default });
            table_id = Some(id);
        }

        if let Instr::Else = instr {
            let frame = *ctrl.top().expect("else inside if");
            if ann.reachable && w.on(HookKind::End) {
                w.hook(HookKey::End(BlockKind::If), loc, &[Arg::I32(frame.begin.instr as i32)]);
            }
            w.emit(Instr::Else);
            if *entered.last().expect("frame") && w.on(HookKind::Begin) {
                w.hook(HookKey::Begin(BlockKind::Else), loc, &[]);
            }
            ctrl.update(instr, i, &ends)?;
            continue;
        }

        if !ann.reachable {
            w.emit(instr.clone());
        } else {
            rewrite(&mut w, instr, ann, loc, &ctrl, &results, table_id)?;
        }

        ctrl.update(instr, i, &ends)?;
        match instr {
            Instr::Block(_) | Instr::Loop(_) | Instr::If(_) => entered.push(ann.reachable),
            Instr::End => {
                entered.pop();
            }
            _ => {}
        }
    }

    Ok(FunctionResult { func, body: w.out, added_locals: w.pool.added().to_vec(), sites: w.sites, br_tables })
}

fn rewrite(
    w: &mut Rewriter<'_>,
    instr: &Instr,
    ann: &crate::typing::InstrTypeAnnotation,
    loc: Location,
    ctrl: &ControlStack,
    results: &[ValType],
    table_id: Option<u32>,
) -> Result<(), InstrumentError> {
    let inputs = ann.input_types().expect("reachable code has concrete types");
    match instr {
        Instr::Nop | Instr::Unreachable => {
            if w.on(instruction_kind(instr)) {
                let key = if matches!(instr, Instr::Nop) { HookKey::Nop } else { HookKey::Unreachable };
                w.hook(key, loc, &[]);
            }
            w.emit(instr.clone());
        }
        Instr::Const(v) => {
            w.emit(instr.clone());
            if w.on(HookKind::Const) {
                w.hook(HookKey::Const(v.ty()), loc, &[Arg::Const(*v)]);
            }
        }
        Instr::Unary(op) if w.on(HookKind::Unary) => {
            let (ti, to) = (op.inputs()[0], op.output());
            let (a, r) = (w.temp(ti), w.temp(to));
            w.emit(Instr::LocalTee(a));
            w.emit(instr.clone());
            w.emit(Instr::LocalTee(r));
            w.hook(HookKey::Unary(*op), loc, &[Arg::Local(a, ti), Arg::Local(r, to)]);
        }
        Instr::Binary(op) if w.on(HookKind::Binary) => {
            let (ti, to) = (op.inputs()[0], op.output());
            let (a, b, r) = (w.temp(ti), w.temp(ti), w.temp(to));
            w.emit(Instr::LocalSet(b));
            w.emit(Instr::LocalTee(a));
            w.emit(Instr::LocalGet(b));
            w.emit(instr.clone());
            w.emit(Instr::LocalTee(r));
            w.hook(HookKey::Binary(*op), loc, &[Arg::Local(a, ti), Arg::Local(b, ti), Arg::Local(r, to)]);
        }
        Instr::Load(op, arg) if w.on(HookKind::Load) => {
            let t = op.value_type();
            let (addr, val) = (w.temp(ValType::I32), w.temp(t));
            w.emit(Instr::LocalTee(addr));
            w.emit(instr.clone());
            w.emit(Instr::LocalTee(val));
            let args = [Arg::Local(addr, ValType::I32), Arg::I32(arg.offset as i32), Arg::Local(val, t)];
            w.hook(HookKey::Load(*op), loc, &args);
        }
        Instr::Store(op, arg) if w.on(HookKind::Store) => {
            let t = op.value_type();
            let (val, addr) = (w.temp(t), w.temp(ValType::I32));
            w.emit(Instr::LocalSet(val));
            w.emit(Instr::LocalTee(addr));
            w.emit(Instr::LocalGet(val));
            w.emit(instr.clone());
            let args = [Arg::Local(addr, ValType::I32), Arg::I32(arg.offset as i32), Arg::Local(val, t)];
            w.hook(HookKey::Store(*op), loc, &args);
        }
        Instr::MemorySize if w.on(HookKind::MemorySize) => {
            w.emit(Instr::MemorySize);
            w.values_hook(HookKey::MemorySize, loc, &[ValType::I32]);
        }
        Instr::MemoryGrow if w.on(HookKind::MemoryGrow) => {
            let (delta, prev) = (w.temp(ValType::I32), w.temp(ValType::I32));
            w.emit(Instr::LocalTee(delta));
            w.emit(Instr::MemoryGrow);
            w.emit(Instr::LocalTee(prev));
            w.hook(HookKey::MemoryGrow, loc, &[Arg::Local(delta, ValType::I32), Arg::Local(prev, ValType::I32)]);
        }
        Instr::Drop if w.on(HookKind::Drop) => {
            let t = inputs[0];
            let tmp = w.temp(t);
            w.emit(Instr::LocalSet(tmp));
            w.hook(HookKey::Drop(t), loc, &[Arg::Local(tmp, t)]);
        }
        Instr::Select if w.on(HookKind::Select) => {
            let t = inputs[0];
            let (c, second, first) = (w.temp(ValType::I32), w.temp(t), w.temp(t));
            w.emit(Instr::LocalSet(c));
            w.emit(Instr::LocalSet(second));
            w.emit(Instr::LocalSet(first));
            w.emit(Instr::LocalGet(first));
            w.emit(Instr::LocalGet(second));
            w.emit(Instr::LocalGet(c));
            w.emit(Instr::Select);
            let args = [Arg::Local(c, ValType::I32), Arg::Local(first, t), Arg::Local(second, t)];
            w.hook(HookKey::Select(t), loc, &args);
        }
        Instr::LocalGet(_) | Instr::LocalSet(_) | Instr::LocalTee(_) | Instr::GlobalGet(_) | Instr::GlobalSet(_) => {
            w.variable(instr, loc);
        }
        Instr::Call(f) => {
            let ty = w.module.func_type(*f).clone();
            if w.on(HookKind::CallPre) {
                w.call_pre(loc, &ty.params, Some(*f));
            }
            w.emit(instr.clone());
            if w.on(HookKind::CallPost) {
                w.values_hook(HookKey::CallPost(ty.results.clone()), loc, &ty.results);
            }
        }
        Instr::CallIndirect(type_idx) => {
            let ty = w.module.types[*type_idx as usize].clone();
            if w.on(HookKind::CallPre) {
                w.call_pre(loc, &ty.params, None);
            }
            w.emit(instr.clone());
            if w.on(HookKind::CallPost) {
                w.values_hook(HookKey::CallPost(ty.results.clone()), loc, &ty.results);
            }
        }
        Instr::Return => {
            if w.on(HookKind::Return) {
                w.values_hook(HookKey::Return(results.to_vec()), loc, results);
            }
            if w.on(HookKind::End) {
                w.end_hooks(&ctrl.ended_blocks_for_return());
            }
            w.emit(Instr::Return);
        }
        Instr::Br(label) => {
            let target = ctrl.resolve_label(*label)?;
            if w.on(HookKind::Br) {
                w.hook(HookKey::Br, loc, &branch_args(&target));
            }
            if w.on(HookKind::End) {
                w.end_hooks(&target.ended_blocks);
            }
            w.emit(instr.clone());
        }
        Instr::BrIf(label) if w.on(HookKind::BrIf) || w.on(HookKind::End) => {
            let target = ctrl.resolve_label(*label)?;
            let c = w.temp(ValType::I32);
            w.emit(Instr::LocalTee(c));
            if w.on(HookKind::BrIf) {
                let [l, t] = branch_args(&target);
                w.hook(HookKey::BrIf, loc, &[l, t, Arg::Local(c, ValType::I32)]);
            }
            if w.on(HookKind::End) {
                w.emit(Instr::LocalGet(c));
                w.emit(Instr::If(BlockType::Empty));
                w.end_hooks(&target.ended_blocks);
                w.emit(Instr::End);
            }
            w.emit(instr.clone());
        }
        Instr::BrTable { .. } if w.on(HookKind::BrTable) || w.on(HookKind::End) => {
            let idx = w.temp(ValType::I32);
            w.emit(Instr::LocalTee(idx));
            let id = table_id.expect("br_table has a metadata entry");
            w.hook(HookKey::BrTable, loc, &[Arg::I32(id as i32), Arg::Local(idx, ValType::I32)]);
            w.emit(instr.clone());
        }
        Instr::If(_) => {
            if w.on(HookKind::If) {
                w.values_hook(HookKey::If, loc, &[ValType::I32]);
            }
            w.emit(instr.clone());
            if w.on(HookKind::Begin) {
                w.hook(HookKey::Begin(BlockKind::If), loc, &[]);
            }
        }
        Instr::Block(_) | Instr::Loop(_) => {
            w.emit(instr.clone());
            if w.on(HookKind::Begin) {
                let kind = if matches!(instr, Instr::Block(_)) { BlockKind::Block } else { BlockKind::Loop };
                w.hook(HookKey::Begin(kind), loc, &[]);
            }
        }
        Instr::End => {
            let frame = *ctrl.top().expect("end closes a frame");
            if frame.kind == BlockKind::Function && w.on(HookKind::Return) {
                w.values_hook(HookKey::Return(results.to_vec()), loc, results);
            }
            if w.on(HookKind::End) {
                w.hook(HookKey::End(frame.kind), loc, &[Arg::I32(frame.begin.instr as i32)]);
            }
            w.emit(Instr::End);
        }
        _ => w.emit(instr.clone()),
    }
    Ok(())
}

fn branch_args(target: &BranchTarget) -> [Arg; 2] {
    [Arg::I32(target.label as i32), Arg::I32(target.location.instr as i32)]
}

/// Instruments every defined function of `m` for the hooks in `opts`.
///
/// `m` is expected to be well-typed; typing errors are reported with the
/// offending location.
pub fn instrument_module(m: &Module, opts: &InstrumentOptions) -> Result<Instrumented, InstrumentError> {
    let defined: Vec<u32> = m.defined_functions().collect();
    let mut first_table_ids = Vec::with_capacity(defined.len());
    let mut tables = 0u32;
    for &f in &defined {
        first_table_ids.push(tables);
        tables += count_br_tables(m.functions[f as usize].code().expect("defined"));
    }

    let registry = HookRegistry::new();
    let job = |(k, &f): (usize, &u32)| instrument_function(m, f, opts, &registry, first_table_ids[k]);
    let results: Vec<Result<FunctionResult, InstrumentError>> = if opts.threads <= 1 {
        defined.iter().enumerate().map(job).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| InstrumentError::ThreadPool(e.to_string()))?;
        pool.install(|| defined.par_iter().enumerate().map(job).collect())
    };
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    // Sequential replay in function order fixes the import order independent
    // of thread scheduling.
    let canonical = HookRegistry::new();
    for r in &results {
        for (_, key) in &r.sites {
            canonical.get_or_create(key);
        }
    }
    let hooks = canonical.into_refs();
    let hook_count = hooks.len() as u32;
    let index_of: HashMap<&HookKey, u32> = hooks.iter().map(|h| (&h.key, h.import_index)).collect();

    let mut stats = InstrumentStats::default();
    for f in &m.functions {
        if let Some(code) = f.code() {
            for instr in &code.body {
                *stats.instruction_counts.entry(instruction_kind(instr)).or_default() += 1;
            }
        }
    }

    let mut out = m.clone();
    out.custom_sections.retain(|c| c.name != "name");
    let mut br_tables = Vec::new();
    let mut all_sites = Vec::with_capacity(results.len());
    for r in results {
        let code = out.functions[r.func as usize].code_mut().expect("defined");
        code.body = r.body;
        code.locals.extend(r.added_locals);
        br_tables.extend(r.br_tables);
        all_sites.push((r.func, r.sites));
    }
    remap_indices(&mut out, hook_count);
    for (func, sites) in &all_sites {
        let body = &mut out.functions[*func as usize].code_mut().expect("defined").body;
        for (pos, key) in sites {
            body[*pos] = Instr::Call(index_of[key]);
            *stats.hook_calls.entry(key.kind()).or_default() += 1;
        }
    }
    let imports: Vec<Function> = hooks
        .iter()
        .map(|h| Function {
            type_idx: out.intern_type(h.key.func_type()),
            source: FunctionSource::Import(ImportName::new(HOOK_NAMESPACE, h.symbol())),
        })
        .collect();
    out.functions.splice(0..0, imports);

    let table_export_name = runtime_export(&mut out, ExternalKind::Table, TABLE_EXPORT_NAME, hook_count > 0)?;
    let memory_export_name = runtime_export(&mut out, ExternalKind::Memory, MEMORY_EXPORT_NAME, hook_count > 0)?;

    let functions = (0..m.functions.len() as u32)
        .map(|i| {
            let f = &m.functions[i as usize];
            FunctionInfo {
                index: i,
                instrumented_index: i + hook_count,
                ty: m.func_type(i).clone(),
                import: f.import().map(Into::into),
                exports: m.export_names(ExternalKind::Func, i),
            }
        })
        .collect();
    let metadata = ModuleMetadata {
        hook_count,
        enabled_hooks: opts.hooks,
        functions,
        br_tables,
        elements: m.elements.iter().map(|e| ElementInfo::new(e.offset, e.functions.clone())).collect(),
        start: m.start,
        table_export_name,
        memory_export_name,
    };
    Ok(Instrumented { module: out, metadata, hooks, stats })
}

/// Name under which the table or memory is exported, adding `reserved` as a
/// new export if `add` is set and the entity is not yet exported.
fn runtime_export(
    m: &mut Module,
    kind: ExternalKind,
    reserved: &str,
    add: bool,
) -> Result<Option<String>, InstrumentError> {
    let exists = match kind {
        ExternalKind::Table => !m.tables.is_empty(),
        _ => !m.memories.is_empty(),
    };
    if !exists {
        return Ok(None);
    }
    if let Some(name) = m.export_names(kind, 0).into_iter().next() {
        return Ok(Some(name));
    }
    if !add {
        return Ok(None);
    }
    if m.exports.iter().any(|e| e.name == reserved) {
        return Err(InstrumentError::ReservedExportName(reserved.to_string()));
    }
    m.exports.push(Export { name: reserved.to_string(), kind, index: 0 });
    Ok(Some(reserved.to_string()))
}
