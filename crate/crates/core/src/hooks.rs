//! Hook kinds, hook selection, and the on-demand registry of low-level hooks.
//!
//! Analyses see 23 high-level hooks ([`HookKind`]). Instrumented code calls
//! low-level hooks, one imported function per distinct [`HookKey`]: the kind
//! plus the concrete types (and, for per-instruction hooks, the opcode) at the
//! call site. Keys are created only when some instruction needs them.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use parking_lot::{RwLock, RwLockUpgradableReadGuard};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::control::BlockKind;
use crate::ir::*;

/// Import module name of every low-level hook.
pub const HOOK_NAMESPACE: &str = "__wasabi_hooks";

macro_rules! hook_kinds {
    ($($variant:ident => $name:literal,)*) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum HookKind {
            $($variant,)*
        }

        impl HookKind {
            pub const ALL: [HookKind; 23] = [$(HookKind::$variant,)*];

            /// Name of the high-level callback, as analyses spell it.
            pub fn name(self) -> &'static str {
                match self {
                    $(HookKind::$variant => $name,)*
                }
            }

            pub fn from_name(name: &str) -> Option<Self> {
                match name {
                    $($name => Some(HookKind::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

hook_kinds! {
    Start => "start",
    Nop => "nop",
    Unreachable => "unreachable",
    If => "if_",
    Br => "br",
    BrIf => "br_if",
    BrTable => "br_table",
    Begin => "begin",
    End => "end",
    MemorySize => "memory_size",
    MemoryGrow => "memory_grow",
    Const => "const_",
    Drop => "drop",
    Select => "select",
    Unary => "unary",
    Binary => "binary",
    Load => "load",
    Store => "store",
    Local => "local",
    Global => "global",
    CallPre => "call_pre",
    CallPost => "call_post",
    Return => "return_",
}

impl fmt::Display for HookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for HookKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// A set of enabled hook kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct HookSet(u32);

impl HookSet {
    pub fn empty() -> Self {
        HookSet(0)
    }

    pub fn all() -> Self {
        HookSet((1 << HookKind::ALL.len()) - 1)
    }

    pub fn only(kind: HookKind) -> Self {
        HookSet::empty().with(kind)
    }

    pub fn with(mut self, kind: HookKind) -> Self {
        self.insert(kind);
        self
    }

    pub fn insert(&mut self, kind: HookKind) {
        self.0 |= 1 << kind as u32;
    }

    pub fn contains(self, kind: HookKind) -> bool {
        self.0 & (1 << kind as u32) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = HookKind> {
        HookKind::ALL.into_iter().filter(move |k| self.contains(*k))
    }
}

impl FromIterator<HookKind> for HookSet {
    fn from_iter<I: IntoIterator<Item = HookKind>>(iter: I) -> Self {
        let mut set = HookSet::empty();
        for k in iter {
            set.insert(k);
        }
        set
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown hook name `{0}`")]
pub struct UnknownHook(pub String);

impl FromStr for HookSet {
    type Err = UnknownHook;

    /// Comma-separated hook names, or `all`. The empty string is the empty set.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "all" {
            return Ok(HookSet::all());
        }
        s.split(',')
            .map(str::trim)
            .filter(|name| !name.is_empty())
            .map(|name| HookKind::from_name(name).ok_or_else(|| UnknownHook(name.to_string())))
            .collect()
    }
}

impl fmt::Display for HookSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.iter().map(HookKind::name).collect();
        f.write_str(&names.join(","))
    }
}

impl Serialize for HookSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarOp {
    Get,
    Set,
    Tee,
}

impl VarOp {
    pub fn name(self) -> &'static str {
        match self {
            VarOp::Get => "get",
            VarOp::Set => "set",
            VarOp::Tee => "tee",
        }
    }
}

/// Identity of one low-level hook.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HookKey {
    Start,
    Nop,
    Unreachable,
    If,
    Br,
    BrIf,
    BrTable,
    Begin(BlockKind),
    End(BlockKind),
    MemorySize,
    MemoryGrow,
    Const(ValType),
    Drop(ValType),
    Select(ValType),
    Unary(UnaryOp),
    Binary(BinaryOp),
    Load(LoadOp),
    Store(StoreOp),
    Local(VarOp, ValType),
    Global(VarOp, ValType),
    CallPre { indirect: bool, args: Vec<ValType> },
    CallPost(Vec<ValType>),
    Return(Vec<ValType>),
}

fn type_suffix(tys: &[ValType]) -> String {
    tys.iter().map(|t| format!("_{}", t.name())).collect()
}

impl HookKey {
    pub fn kind(&self) -> HookKind {
        match self {
            HookKey::Start => HookKind::Start,
            HookKey::Nop => HookKind::Nop,
            HookKey::Unreachable => HookKind::Unreachable,
            HookKey::If => HookKind::If,
            HookKey::Br => HookKind::Br,
            HookKey::BrIf => HookKind::BrIf,
            HookKey::BrTable => HookKind::BrTable,
            HookKey::Begin(_) => HookKind::Begin,
            HookKey::End(_) => HookKind::End,
            HookKey::MemorySize => HookKind::MemorySize,
            HookKey::MemoryGrow => HookKind::MemoryGrow,
            HookKey::Const(_) => HookKind::Const,
            HookKey::Drop(_) => HookKind::Drop,
            HookKey::Select(_) => HookKind::Select,
            HookKey::Unary(_) => HookKind::Unary,
            HookKey::Binary(_) => HookKind::Binary,
            HookKey::Load(_) => HookKind::Load,
            HookKey::Store(_) => HookKind::Store,
            HookKey::Local(..) => HookKind::Local,
            HookKey::Global(..) => HookKind::Global,
            HookKey::CallPre { .. } => HookKind::CallPre,
            HookKey::CallPost(_) => HookKind::CallPost,
            HookKey::Return(_) => HookKind::Return,
        }
    }

    /// Hook arguments after the location pair, before i64 lowering.
    pub fn values(&self) -> Vec<ValType> {
        use ValType::I32;
        match self {
            HookKey::Start | HookKey::Nop | HookKey::Unreachable | HookKey::Begin(_) => vec![],
            // condition
            HookKey::If => vec![I32],
            // label, target instruction
            HookKey::Br => vec![I32, I32],
            // label, target instruction, condition
            HookKey::BrIf => vec![I32, I32, I32],
            // table id, runtime index
            HookKey::BrTable => vec![I32, I32],
            // begin instruction
            HookKey::End(_) => vec![I32],
            HookKey::MemorySize => vec![I32],
            // delta, previous size
            HookKey::MemoryGrow => vec![I32, I32],
            HookKey::Const(t) | HookKey::Drop(t) => vec![*t],
            HookKey::Select(t) => vec![I32, *t, *t],
            HookKey::Unary(op) => vec![op.inputs()[0], op.output()],
            HookKey::Binary(op) => vec![op.inputs()[0], op.inputs()[1], op.output()],
            // address, static offset, value
            HookKey::Load(op) => vec![I32, I32, op.value_type()],
            HookKey::Store(op) => vec![I32, I32, op.value_type()],
            // variable index, value
            HookKey::Local(_, t) | HookKey::Global(_, t) => vec![I32, *t],
            // callee function index or table index, then arguments
            HookKey::CallPre { args, .. } => std::iter::once(I32).chain(args.iter().copied()).collect(),
            HookKey::CallPost(tys) | HookKey::Return(tys) => tys.clone(),
        }
    }

    /// The instruction-specific parameters with every i64 split into two i32.
    pub fn signature(&self) -> Vec<ValType> {
        lower_types(&self.values())
    }

    /// Full parameter list of the imported function: location, then signature.
    pub fn params(&self) -> Vec<ValType> {
        let mut params = vec![ValType::I32, ValType::I32];
        params.extend(self.signature());
        params
    }

    pub fn func_type(&self) -> FuncType {
        FuncType::new(self.params(), [])
    }

    /// Import name, unique per key.
    pub fn symbol(&self) -> String {
        match self {
            HookKey::Start => "start".into(),
            HookKey::Nop => "nop".into(),
            HookKey::Unreachable => "unreachable".into(),
            HookKey::If => "if".into(),
            HookKey::Br => "br".into(),
            HookKey::BrIf => "br_if".into(),
            HookKey::BrTable => "br_table".into(),
            HookKey::Begin(k) => format!("begin_{}", k.name()),
            HookKey::End(k) => format!("end_{}", k.name()),
            HookKey::MemorySize => "memory_size".into(),
            HookKey::MemoryGrow => "memory_grow".into(),
            HookKey::Const(t) => format!("{}.const", t.name()),
            HookKey::Drop(t) => format!("drop_{}", t.name()),
            HookKey::Select(t) => format!("select_{}", t.name()),
            HookKey::Unary(op) => op.name().into(),
            HookKey::Binary(op) => op.name().into(),
            HookKey::Load(op) => op.name().into(),
            HookKey::Store(op) => op.name().into(),
            HookKey::Local(op, t) => format!("local.{}_{}", op.name(), t.name()),
            HookKey::Global(op, t) => format!("global.{}_{}", op.name(), t.name()),
            HookKey::CallPre { indirect: false, args } => format!("call_pre{}", type_suffix(args)),
            HookKey::CallPre { indirect: true, args } => format!("call_indirect_pre{}", type_suffix(args)),
            HookKey::CallPost(tys) => format!("call_post{}", type_suffix(tys)),
            HookKey::Return(tys) => format!("return{}", type_suffix(tys)),
        }
    }
}

/// Replaces every i64 with two i32 (low half, then high half).
pub fn lower_types(tys: &[ValType]) -> Vec<ValType> {
    let mut out = Vec::with_capacity(tys.len());
    for &t in tys {
        match t {
            ValType::I64 => out.extend([ValType::I32, ValType::I32]),
            t => out.push(t),
        }
    }
    out
}

/// A created low-level hook.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HookRef {
    pub key: HookKey,
    /// Function index of the hook import: hooks are imports `0..len`.
    pub import_index: u32,
}

impl HookRef {
    pub fn kind(&self) -> HookKind {
        self.key.kind()
    }

    pub fn signature(&self) -> Vec<ValType> {
        self.key.signature()
    }

    pub fn symbol(&self) -> String {
        self.key.symbol()
    }
}

#[derive(Debug, Default)]
struct Inner {
    index: HashMap<HookKey, u32>,
    refs: Vec<HookRef>,
}

/// Map from hook key to low-level hook, safe to share across threads.
///
/// Lookups of existing keys take a shared lock. A missing key takes an
/// upgradable lock, re-checks, and upgrades to insert, so check-then-insert
/// is atomic and indices are consecutive.
#[derive(Debug, Default)]
pub struct HookRegistry {
    inner: RwLock<Inner>,
}

impl HookRegistry {
    pub fn new() -> Self {
        HookRegistry::default()
    }

    pub fn get_or_create(&self, key: &HookKey) -> HookRef {
        if let Some(&idx) = self.inner.read().index.get(key) {
            return HookRef { key: key.clone(), import_index: idx };
        }
        let guard = self.inner.upgradable_read();
        if let Some(&idx) = guard.index.get(key) {
            return HookRef { key: key.clone(), import_index: idx };
        }
        let mut inner = RwLockUpgradableReadGuard::upgrade(guard);
        let idx = inner.refs.len() as u32;
        let hook = HookRef { key: key.clone(), import_index: idx };
        inner.index.insert(key.clone(), idx);
        inner.refs.push(hook.clone());
        hook
    }

    pub fn get(&self, key: &HookKey) -> Option<HookRef> {
        let inner = self.inner.read();
        inner.index.get(key).map(|&idx| HookRef { key: key.clone(), import_index: idx })
    }

    pub fn len(&self) -> usize {
        self.inner.read().refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Hooks in creation order.
    pub fn refs(&self) -> Vec<HookRef> {
        self.inner.read().refs.clone()
    }

    pub fn into_refs(self) -> Vec<HookRef> {
        self.inner.into_inner().refs
    }
}
