//! Static side tables embedded in the glue script.
//!
//! All indices and locations refer to the original module unless a field
//! name says otherwise.

use serde::Serialize;

use crate::control::BranchTarget;
use crate::hooks::HookSet;
use crate::ir::{ConstExpr, FuncType, ImportName, Value};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModuleMetadata {
    /// Number of hook imports prepended to the function index space.
    pub hook_count: u32,
    pub enabled_hooks: HookSet,
    pub functions: Vec<FunctionInfo>,
    /// Indexed by the dense table id passed to the `br_table` hook.
    pub br_tables: Vec<BrTableInfo>,
    pub elements: Vec<ElementInfo>,
    pub start: Option<u32>,
    pub table_export_name: Option<String>,
    pub memory_export_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FunctionInfo {
    pub index: u32,
    pub instrumented_index: u32,
    #[serde(rename = "type")]
    pub ty: FuncType,
    pub import: Option<ImportInfo>,
    pub exports: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ImportInfo {
    pub module: String,
    pub name: String,
}

impl From<&ImportName> for ImportInfo {
    fn from(n: &ImportName) -> Self {
        ImportInfo { module: n.module.clone(), name: n.name.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BrTableInfo {
    pub func: u32,
    pub instr: i64,
    pub table: u32,
    /// One target per table entry, in order.
    pub targets: Vec<BranchTarget>,
    pub default: BranchTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementInfo {
    /// Constant offset, or `None` if the offset is read from a global.
    pub offset: Option<u32>,
    pub functions: Vec<u32>,
}

impl ElementInfo {
    pub(crate) fn new(offset: ConstExpr, functions: Vec<u32>) -> Self {
        let offset = match offset {
            ConstExpr::Value(Value::I32(v)) => Some(v as u32),
            _ => None,
        };
        ElementInfo { offset, functions }
    }
}

impl ModuleMetadata {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metadata is always serializable")
    }
}
