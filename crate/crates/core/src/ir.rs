//! In-memory representation of a WebAssembly 1.0 module.

use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ValType {
    I32,
    I64,
    F32,
    F64,
}

impl ValType {
    pub const ALL: [ValType; 4] = [ValType::I32, ValType::I64, ValType::F32, ValType::F64];

    pub fn name(self) -> &'static str {
        match self {
            ValType::I32 => "i32",
            ValType::I64 => "i64",
            ValType::F32 => "f32",
            ValType::F64 => "f64",
        }
    }

    pub(crate) fn byte(self) -> u8 {
        match self {
            ValType::I32 => 0x7f,
            ValType::I64 => 0x7e,
            ValType::F32 => 0x7d,
            ValType::F64 => 0x7c,
        }
    }

    pub(crate) fn from_byte(byte: u8) -> Option<Self> {
        match byte {
            0x7f => Some(ValType::I32),
            0x7e => Some(ValType::I64),
            0x7d => Some(ValType::F32),
            0x7c => Some(ValType::F64),
            _ => None,
        }
    }
}

impl fmt::Display for ValType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for ValType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize)]
pub struct FuncType {
    pub params: Vec<ValType>,
    pub results: Vec<ValType>,
}

impl FuncType {
    pub fn new(params: impl Into<Vec<ValType>>, results: impl Into<Vec<ValType>>) -> Self {
        FuncType { params: params.into(), results: results.into() }
    }
}

impl fmt::Display for FuncType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |tys: &[ValType]| tys.iter().map(|t| t.name()).collect::<Vec<_>>().join(", ");
        write!(f, "[{}] -> [{}]", join(&self.params), join(&self.results))
    }
}

/// Bit pattern of an `f32` constant. Kept as bits so NaN payloads survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct F32(pub u32);

/// Bit pattern of an `f64` constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct F64(pub u64);

impl From<f32> for F32 {
    fn from(v: f32) -> Self {
        F32(v.to_bits())
    }
}

impl From<f64> for F64 {
    fn from(v: f64) -> Self {
        F64(v.to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    I32(i32),
    I64(i64),
    F32(F32),
    F64(F64),
}

impl Value {
    pub fn ty(self) -> ValType {
        match self {
            Value::I32(_) => ValType::I32,
            Value::I64(_) => ValType::I64,
            Value::F32(_) => ValType::F32,
            Value::F64(_) => ValType::F64,
        }
    }
}

/// Result type of a `block`, `loop` or `if`. MVP blocks yield at most one value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockType {
    Empty,
    Value(ValType),
}

impl BlockType {
    pub fn results(self) -> &'static [ValType] {
        match self {
            BlockType::Empty => &[],
            BlockType::Value(ValType::I32) => &[ValType::I32],
            BlockType::Value(ValType::I64) => &[ValType::I64],
            BlockType::Value(ValType::F32) => &[ValType::F32],
            BlockType::Value(ValType::F64) => &[ValType::F64],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MemArg {
    /// Alignment exponent (log2 of the byte alignment).
    pub align: u32,
    pub offset: u32,
}

macro_rules! numeric_ops {
    (
        $(#[$meta:meta])*
        $name:ident {
            $($variant:ident = $opcode:literal, $text:literal, [$($input:ident),*] -> $output:ident;)*
        }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant,)*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)*];

            pub fn opcode(self) -> u8 {
                match self {
                    $($name::$variant => $opcode,)*
                }
            }

            pub fn from_opcode(opcode: u8) -> Option<Self> {
                match opcode {
                    $($opcode => Some($name::$variant),)*
                    _ => None,
                }
            }

            /// Text-format mnemonic, e.g. `i32.add`.
            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)*
                }
            }

            pub fn inputs(self) -> &'static [ValType] {
                match self {
                    $($name::$variant => &[$(ValType::$input),*],)*
                }
            }

            pub fn output(self) -> ValType {
                match self {
                    $($name::$variant => ValType::$output,)*
                }
            }
        }
    };
}

numeric_ops! {
    /// Numeric instructions with one operand and one result.
    UnaryOp {
        I32Eqz = 0x45, "i32.eqz", [I32] -> I32;
        I64Eqz = 0x50, "i64.eqz", [I64] -> I32;
        I32Clz = 0x67, "i32.clz", [I32] -> I32;
        I32Ctz = 0x68, "i32.ctz", [I32] -> I32;
        I32Popcnt = 0x69, "i32.popcnt", [I32] -> I32;
        I64Clz = 0x79, "i64.clz", [I64] -> I64;
        I64Ctz = 0x7a, "i64.ctz", [I64] -> I64;
        I64Popcnt = 0x7b, "i64.popcnt", [I64] -> I64;
        F32Abs = 0x8b, "f32.abs", [F32] -> F32;
        F32Neg = 0x8c, "f32.neg", [F32] -> F32;
        F32Ceil = 0x8d, "f32.ceil", [F32] -> F32;
        F32Floor = 0x8e, "f32.floor", [F32] -> F32;
        F32Trunc = 0x8f, "f32.trunc", [F32] -> F32;
        F32Nearest = 0x90, "f32.nearest", [F32] -> F32;
        F32Sqrt = 0x91, "f32.sqrt", [F32] -> F32;
        F64Abs = 0x99, "f64.abs", [F64] -> F64;
        F64Neg = 0x9a, "f64.neg", [F64] -> F64;
        F64Ceil = 0x9b, "f64.ceil", [F64] -> F64;
        F64Floor = 0x9c, "f64.floor", [F64] -> F64;
        F64Trunc = 0x9d, "f64.trunc", [F64] -> F64;
        F64Nearest = 0x9e, "f64.nearest", [F64] -> F64;
        F64Sqrt = 0x9f, "f64.sqrt", [F64] -> F64;
        I32WrapI64 = 0xa7, "i32.wrap_i64", [I64] -> I32;
        I32TruncF32S = 0xa8, "i32.trunc_f32_s", [F32] -> I32;
        I32TruncF32U = 0xa9, "i32.trunc_f32_u", [F32] -> I32;
        I32TruncF64S = 0xaa, "i32.trunc_f64_s", [F64] -> I32;
        I32TruncF64U = 0xab, "i32.trunc_f64_u", [F64] -> I32;
        I64ExtendI32S = 0xac, "i64.extend_i32_s", [I32] -> I64;
        I64ExtendI32U = 0xad, "i64.extend_i32_u", [I32] -> I64;
        I64TruncF32S = 0xae, "i64.trunc_f32_s", [F32] -> I64;
        I64TruncF32U = 0xaf, "i64.trunc_f32_u", [F32] -> I64;
        I64TruncF64S = 0xb0, "i64.trunc_f64_s", [F64] -> I64;
        I64TruncF64U = 0xb1, "i64.trunc_f64_u", [F64] -> I64;
        F32ConvertI32S = 0xb2, "f32.convert_i32_s", [I32] -> F32;
        F32ConvertI32U = 0xb3, "f32.convert_i32_u", [I32] -> F32;
        F32ConvertI64S = 0xb4, "f32.convert_i64_s", [I64] -> F32;
        F32ConvertI64U = 0xb5, "f32.convert_i64_u", [I64] -> F32;
        F32DemoteF64 = 0xb6, "f32.demote_f64", [F64] -> F32;
        F64ConvertI32S = 0xb7, "f64.convert_i32_s", [I32] -> F64;
        F64ConvertI32U = 0xb8, "f64.convert_i32_u", [I32] -> F64;
        F64ConvertI64S = 0xb9, "f64.convert_i64_s", [I64] -> F64;
        F64ConvertI64U = 0xba, "f64.convert_i64_u", [I64] -> F64;
        F64PromoteF32 = 0xbb, "f64.promote_f32", [F32] -> F64;
        I32ReinterpretF32 = 0xbc, "i32.reinterpret_f32", [F32] -> I32;
        I64ReinterpretF64 = 0xbd, "i64.reinterpret_f64", [F64] -> I64;
        F32ReinterpretI32 = 0xbe, "f32.reinterpret_i32", [I32] -> F32;
        F64ReinterpretI64 = 0xbf, "f64.reinterpret_i64", [I64] -> F64;
    }
}

numeric_ops! {
    /// Numeric instructions with two operands and one result.
    BinaryOp {
        I32Eq = 0x46, "i32.eq", [I32, I32] -> I32;
        I32Ne = 0x47, "i32.ne", [I32, I32] -> I32;
        I32LtS = 0x48, "i32.lt_s", [I32, I32] -> I32;
        I32LtU = 0x49, "i32.lt_u", [I32, I32] -> I32;
        I32GtS = 0x4a, "i32.gt_s", [I32, I32] -> I32;
        I32GtU = 0x4b, "i32.gt_u", [I32, I32] -> I32;
        I32LeS = 0x4c, "i32.le_s", [I32, I32] -> I32;
        I32LeU = 0x4d, "i32.le_u", [I32, I32] -> I32;
        I32GeS = 0x4e, "i32.ge_s", [I32, I32] -> I32;
        I32GeU = 0x4f, "i32.ge_u", [I32, I32] -> I32;
        I64Eq = 0x51, "i64.eq", [I64, I64] -> I32;
        I64Ne = 0x52, "i64.ne", [I64, I64] -> I32;
        I64LtS = 0x53, "i64.lt_s", [I64, I64] -> I32;
        I64LtU = 0x54, "i64.lt_u", [I64, I64] -> I32;
        I64GtS = 0x55, "i64.gt_s", [I64, I64] -> I32;
        I64GtU = 0x56, "i64.gt_u", [I64, I64] -> I32;
        I64LeS = 0x57, "i64.le_s", [I64, I64] -> I32;
        I64LeU = 0x58, "i64.le_u", [I64, I64] -> I32;
        I64GeS = 0x59, "i64.ge_s", [I64, I64] -> I32;
        I64GeU = 0x5a, "i64.ge_u", [I64, I64] -> I32;
        F32Eq = 0x5b, "f32.eq", [F32, F32] -> I32;
        F32Ne = 0x5c, "f32.ne", [F32, F32] -> I32;
        F32Lt = 0x5d, "f32.lt", [F32, F32] -> I32;
        F32Gt = 0x5e, "f32.gt", [F32, F32] -> I32;
        F32Le = 0x5f, "f32.le", [F32, F32] -> I32;
        F32Ge = 0x60, "f32.ge", [F32, F32] -> I32;
        F64Eq = 0x61, "f64.eq", [F64, F64] -> I32;
        F64Ne = 0x62, "f64.ne", [F64, F64] -> I32;
        F64Lt = 0x63, "f64.lt", [F64, F64] -> I32;
        F64Gt = 0x64, "f64.gt", [F64, F64] -> I32;
        F64Le = 0x65, "f64.le", [F64, F64] -> I32;
        F64Ge = 0x66, "f64.ge", [F64, F64] -> I32;
        I32Add = 0x6a, "i32.add", [I32, I32] -> I32;
        I32Sub = 0x6b, "i32.sub", [I32, I32] -> I32;
        I32Mul = 0x6c, "i32.mul", [I32, I32] -> I32;
        I32DivS = 0x6d, "i32.div_s", [I32, I32] -> I32;
        I32DivU = 0x6e, "i32.div_u", [I32, I32] -> I32;
        I32RemS = 0x6f, "i32.rem_s", [I32, I32] -> I32;
        I32RemU = 0x70, "i32.rem_u", [I32, I32] -> I32;
        I32And = 0x71, "i32.and", [I32, I32] -> I32;
        I32Or = 0x72, "i32.or", [I32, I32] -> I32;
        I32Xor = 0x73, "i32.xor", [I32, I32] -> I32;
        I32Shl = 0x74, "i32.shl", [I32, I32] -> I32;
        I32ShrS = 0x75, "i32.shr_s", [I32, I32] -> I32;
        I32ShrU = 0x76, "i32.shr_u", [I32, I32] -> I32;
        I32Rotl = 0x77, "i32.rotl", [I32, I32] -> I32;
        I32Rotr = 0x78, "i32.rotr", [I32, I32] -> I32;
        I64Add = 0x7c, "i64.add", [I64, I64] -> I64;
        I64Sub = 0x7d, "i64.sub", [I64, I64] -> I64;
        I64Mul = 0x7e, "i64.mul", [I64, I64] -> I64;
        I64DivS = 0x7f, "i64.div_s", [I64, I64] -> I64;
        I64DivU = 0x80, "i64.div_u", [I64, I64] -> I64;
        I64RemS = 0x81, "i64.rem_s", [I64, I64] -> I64;
        I64RemU = 0x82, "i64.rem_u", [I64, I64] -> I64;
        I64And = 0x83, "i64.and", [I64, I64] -> I64;
        I64Or = 0x84, "i64.or", [I64, I64] -> I64;
        I64Xor = 0x85, "i64.xor", [I64, I64] -> I64;
        I64Shl = 0x86, "i64.shl", [I64, I64] -> I64;
        I64ShrS = 0x87, "i64.shr_s", [I64, I64] -> I64;
        I64ShrU = 0x88, "i64.shr_u", [I64, I64] -> I64;
        I64Rotl = 0x89, "i64.rotl", [I64, I64] -> I64;
        I64Rotr = 0x8a, "i64.rotr", [I64, I64] -> I64;
        F32Add = 0x92, "f32.add", [F32, F32] -> F32;
        F32Sub = 0x93, "f32.sub", [F32, F32] -> F32;
        F32Mul = 0x94, "f32.mul", [F32, F32] -> F32;
        F32Div = 0x95, "f32.div", [F32, F32] -> F32;
        F32Min = 0x96, "f32.min", [F32, F32] -> F32;
        F32Max = 0x97, "f32.max", [F32, F32] -> F32;
        F32Copysign = 0x98, "f32.copysign", [F32, F32] -> F32;
        F64Add = 0xa0, "f64.add", [F64, F64] -> F64;
        F64Sub = 0xa1, "f64.sub", [F64, F64] -> F64;
        F64Mul = 0xa2, "f64.mul", [F64, F64] -> F64;
        F64Div = 0xa3, "f64.div", [F64, F64] -> F64;
        F64Min = 0xa4, "f64.min", [F64, F64] -> F64;
        F64Max = 0xa5, "f64.max", [F64, F64] -> F64;
        F64Copysign = 0xa6, "f64.copysign", [F64, F64] -> F64;
    }
}

macro_rules! memory_ops {
    ($name:ident { $($variant:ident = $opcode:literal, $text:literal, $ty:ident, $align:literal;)* }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant,)*
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant,)*];

            pub fn opcode(self) -> u8 {
                match self {
                    $($name::$variant => $opcode,)*
                }
            }

            pub fn from_opcode(opcode: u8) -> Option<Self> {
                match opcode {
                    $($opcode => Some($name::$variant),)*
                    _ => None,
                }
            }

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)*
                }
            }

            /// Type of the value loaded or stored.
            pub fn value_type(self) -> ValType {
                match self {
                    $($name::$variant => ValType::$ty,)*
                }
            }

            /// Natural alignment exponent; larger alignments are invalid.
            pub fn natural_align(self) -> u32 {
                match self {
                    $($name::$variant => $align,)*
                }
            }
        }
    };
}

memory_ops! {
    LoadOp {
        I32Load = 0x28, "i32.load", I32, 2;
        I64Load = 0x29, "i64.load", I64, 3;
        F32Load = 0x2a, "f32.load", F32, 2;
        F64Load = 0x2b, "f64.load", F64, 3;
        I32Load8S = 0x2c, "i32.load8_s", I32, 0;
        I32Load8U = 0x2d, "i32.load8_u", I32, 0;
        I32Load16S = 0x2e, "i32.load16_s", I32, 1;
        I32Load16U = 0x2f, "i32.load16_u", I32, 1;
        I64Load8S = 0x30, "i64.load8_s", I64, 0;
        I64Load8U = 0x31, "i64.load8_u", I64, 0;
        I64Load16S = 0x32, "i64.load16_s", I64, 1;
        I64Load16U = 0x33, "i64.load16_u", I64, 1;
        I64Load32S = 0x34, "i64.load32_s", I64, 2;
        I64Load32U = 0x35, "i64.load32_u", I64, 2;
    }
}

memory_ops! {
    StoreOp {
        I32Store = 0x36, "i32.store", I32, 2;
        I64Store = 0x37, "i64.store", I64, 3;
        F32Store = 0x38, "f32.store", F32, 2;
        F64Store = 0x39, "f64.store", F64, 3;
        I32Store8 = 0x3a, "i32.store8", I32, 0;
        I32Store16 = 0x3b, "i32.store16", I32, 1;
        I64Store8 = 0x3c, "i64.store8", I64, 0;
        I64Store16 = 0x3d, "i64.store16", I64, 1;
        I64Store32 = 0x3e, "i64.store32", I64, 2;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instr {
    Unreachable,
    Nop,
    Block(BlockType),
    Loop(BlockType),
    If(BlockType),
    Else,
    End,
    Br(u32),
    BrIf(u32),
    BrTable {
        labels: Box<[u32]>,
        default: u32,
    },
    Return,
    Call(u32),
    /// Indirect call through table 0; the immediate is a type index.
    CallIndirect(u32),
    Drop,
    Select,
    LocalGet(u32),
    LocalSet(u32),
    LocalTee(u32),
    GlobalGet(u32),
    GlobalSet(u32),
    Load(LoadOp, MemArg),
    Store(StoreOp, MemArg),
    MemorySize,
    MemoryGrow,
    Const(Value),
    Unary(UnaryOp),
    Binary(BinaryOp),
}

impl Instr {
    /// Text-format mnemonic.
    pub fn name(&self) -> &'static str {
        match self {
            Instr::Unreachable => "unreachable",
            Instr::Nop => "nop",
            Instr::Block(_) => "block",
            Instr::Loop(_) => "loop",
            Instr::If(_) => "if",
            Instr::Else => "else",
            Instr::End => "end",
            Instr::Br(_) => "br",
            Instr::BrIf(_) => "br_if",
            Instr::BrTable { .. } => "br_table",
            Instr::Return => "return",
            Instr::Call(_) => "call",
            Instr::CallIndirect(_) => "call_indirect",
            Instr::Drop => "drop",
            Instr::Select => "select",
            Instr::LocalGet(_) => "local.get",
            Instr::LocalSet(_) => "local.set",
            Instr::LocalTee(_) => "local.tee",
            Instr::GlobalGet(_) => "global.get",
            Instr::GlobalSet(_) => "global.set",
            Instr::Load(op, _) => op.name(),
            Instr::Store(op, _) => op.name(),
            Instr::MemorySize => "memory.size",
            Instr::MemoryGrow => "memory.grow",
            Instr::Const(v) => match v.ty() {
                ValType::I32 => "i32.const",
                ValType::I64 => "i64.const",
                ValType::F32 => "f32.const",
                ValType::F64 => "f64.const",
            },
            Instr::Unary(op) => op.name(),
            Instr::Binary(op) => op.name(),
        }
    }

    /// Whether this instruction opens a new structured block.
    pub fn opens_block(&self) -> bool {
        matches!(self, Instr::Block(_) | Instr::Loop(_) | Instr::If(_))
    }
}

/// Identifies an instruction of the original module. `instr == -1` is the
/// implicit function entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Location {
    pub func: u32,
    pub instr: i64,
}

impl Location {
    pub const ENTRY: i64 = -1;

    pub fn new(func: u32, instr: i64) -> Self {
        Location { func, instr }
    }

    pub fn entry(func: u32) -> Self {
        Location { func, instr: Self::ENTRY }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "func {} instr {}", self.func, self.instr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ImportName {
    pub module: String,
    pub name: String,
}

impl ImportName {
    pub fn new(module: impl Into<String>, name: impl Into<String>) -> Self {
        ImportName { module: module.into(), name: name.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Code {
    /// Declared locals, expanded (one entry per local, after the parameters).
    pub locals: Vec<ValType>,
    /// Instructions, including the closing `end`.
    pub body: Vec<Instr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FunctionSource {
    Import(ImportName),
    Code(Code),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Function {
    pub type_idx: u32,
    pub source: FunctionSource,
}

impl Function {
    pub fn code(&self) -> Option<&Code> {
        match &self.source {
            FunctionSource::Code(code) => Some(code),
            FunctionSource::Import(_) => None,
        }
    }

    pub fn code_mut(&mut self) -> Option<&mut Code> {
        match &mut self.source {
            FunctionSource::Code(code) => Some(code),
            FunctionSource::Import(_) => None,
        }
    }

    pub fn import(&self) -> Option<&ImportName> {
        match &self.source {
            FunctionSource::Import(name) => Some(name),
            FunctionSource::Code(_) => None,
        }
    }

    pub fn is_import(&self) -> bool {
        self.import().is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub min: u32,
    pub max: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub limits: Limits,
    pub import: Option<ImportName>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Memory {
    pub limits: Limits,
    pub import: Option<ImportName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlobalType {
    pub ty: ValType,
    pub mutable: bool,
}

/// Constant expression used by global initializers and segment offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstExpr {
    Value(Value),
    GlobalGet(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GlobalInit {
    Import(ImportName),
    Expr(ConstExpr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Global {
    pub ty: GlobalType,
    pub init: GlobalInit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExternalKind {
    Func,
    Table,
    Memory,
    Global,
}

impl ExternalKind {
    pub(crate) fn byte(self) -> u8 {
        match self {
            ExternalKind::Func => 0,
            ExternalKind::Table => 1,
            ExternalKind::Memory => 2,
            ExternalKind::Global => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Export {
    pub name: String,
    pub kind: ExternalKind,
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementSegment {
    pub offset: ConstExpr,
    pub functions: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataSegment {
    pub offset: ConstExpr,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustomSection {
    pub name: String,
    pub bytes: Vec<u8>,
    /// Id of the last non-custom section preceding this one, 0 if none.
    pub after: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Module {
    pub types: Vec<FuncType>,
    /// Function index space: imports first, then defined functions.
    pub functions: Vec<Function>,
    pub tables: Vec<Table>,
    pub memories: Vec<Memory>,
    pub globals: Vec<Global>,
    pub exports: Vec<Export>,
    pub start: Option<u32>,
    pub elements: Vec<ElementSegment>,
    pub data: Vec<DataSegment>,
    pub custom_sections: Vec<CustomSection>,
}

impl Module {
    /// Type of function `idx`. Panics if the function or its type is out of bounds.
    pub fn func_type(&self, idx: u32) -> &FuncType {
        &self.types[self.functions[idx as usize].type_idx as usize]
    }

    pub fn imported_function_count(&self) -> usize {
        self.functions.iter().take_while(|f| f.is_import()).count()
    }

    /// Indices of functions that have a body.
    pub fn defined_functions(&self) -> impl Iterator<Item = u32> + '_ {
        self.functions.iter().enumerate().filter(|(_, f)| !f.is_import()).map(|(i, _)| i as u32)
    }

    /// Parameter and local types of a defined function, in local-index order.
    pub fn local_types(&self, func: u32) -> Vec<ValType> {
        let mut locals = self.func_type(func).params.clone();
        if let Some(code) = self.functions[func as usize].code() {
            locals.extend_from_slice(&code.locals);
        }
        locals
    }

    /// Index of an existing structurally-equal type, or a freshly appended one.
    pub fn intern_type(&mut self, ty: FuncType) -> u32 {
        match self.types.iter().position(|t| *t == ty) {
            Some(idx) => idx as u32,
            None => {
                self.types.push(ty);
                (self.types.len() - 1) as u32
            }
        }
    }

    pub fn export_names(&self, kind: ExternalKind, index: u32) -> Vec<String> {
        self.exports.iter().filter(|e| e.kind == kind && e.index == index).map(|e| e.name.clone()).collect()
    }
}
