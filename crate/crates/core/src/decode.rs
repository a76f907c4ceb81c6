//! Binary decoder for WebAssembly 1.0 modules.

use thiserror::Error;

use crate::ir::*;
use crate::leb128::{self, LebError};

pub const MAGIC: [u8; 4] = [0x00, 0x61, 0x73, 0x6d];
pub const VERSION: [u8; 4] = [0x01, 0x00, 0x00, 0x00];

/// Upper bound on declared locals per function.
pub const MAX_LOCALS: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexSpace {
    Type,
    Function,
    Table,
    Memory,
    Global,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecodeErrorKind {
    #[error("bad magic number or version")]
    MalformedMagic,
    #[error("unexpected end of section or input")]
    Truncated,
    #[error("unknown opcode 0x{0:02x}")]
    UnknownOpcode(u8),
    #[error("{space:?} index {index} out of bounds")]
    OutOfBoundsIndex { space: IndexSpace, index: u32 },
    #[error("{0}")]
    Leb(LebError),
    #[error("section id {0} out of order")]
    SectionOutOfOrder(u8),
    #[error("unknown section id {0}")]
    UnknownSection(u8),
    #[error("section size does not match its contents")]
    SectionSizeMismatch,
    #[error("invalid value type 0x{0:02x}")]
    InvalidValType(u8),
    #[error("invalid UTF-8 in name")]
    InvalidUtf8,
    #[error("function and code section lengths differ")]
    FunctionCodeMismatch,
    #[error("too many locals")]
    TooManyLocals,
    #[error("malformed: {0}")]
    Malformed(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct DecodeError {
    pub offset: usize,
    pub kind: DecodeErrorKind,
}

type Result<T> = std::result::Result<T, DecodeError>;

type LebReader<T> = fn(&[u8]) -> std::result::Result<(T, usize), LebError>;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    end: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0, end: bytes.len() }
    }

    fn err<T>(&self, kind: DecodeErrorKind) -> Result<T> {
        Err(DecodeError { offset: self.pos, kind })
    }

    fn at_end(&self) -> bool {
        self.pos >= self.end
    }

    fn u8(&mut self) -> Result<u8> {
        if self.pos >= self.end {
            return self.err(DecodeErrorKind::Truncated);
        }
        let b = self.bytes[self.pos];
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.end - self.pos < n {
            return self.err(DecodeErrorKind::Truncated);
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn leb<T>(&mut self, f: LebReader<T>) -> Result<T> {
        match f(&self.bytes[self.pos..self.end]) {
            Ok((v, n)) => {
                self.pos += n;
                Ok(v)
            }
            Err(LebError::Truncated) => self.err(DecodeErrorKind::Truncated),
            Err(e) => self.err(DecodeErrorKind::Leb(e)),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        self.leb(leb128::read_u32)
    }

    fn i32(&mut self) -> Result<i32> {
        self.leb(leb128::read_i32)
    }

    fn i64(&mut self) -> Result<i64> {
        self.leb(leb128::read_i64)
    }

    /// Reads a vector length, rejecting counts that cannot fit in the remaining bytes.
    fn count(&mut self) -> Result<usize> {
        let start = self.pos;
        let n = self.u32()? as usize;
        if n > self.end - self.pos {
            return Err(DecodeError { offset: start, kind: DecodeErrorKind::Truncated });
        }
        Ok(n)
    }

    fn name(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let start = self.pos;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| DecodeError { offset: start, kind: DecodeErrorKind::InvalidUtf8 })
    }

    fn val_type(&mut self) -> Result<ValType> {
        let b = self.u8()?;
        ValType::from_byte(b).ok_or(DecodeError { offset: self.pos - 1, kind: DecodeErrorKind::InvalidValType(b) })
    }

    fn limits(&mut self) -> Result<Limits> {
        match self.u8()? {
            0x00 => Ok(Limits { min: self.u32()?, max: None }),
            0x01 => {
                let min = self.u32()?;
                let max = self.u32()?;
                Ok(Limits { min, max: Some(max) })
            }
            _ => Err(DecodeError { offset: self.pos - 1, kind: DecodeErrorKind::Malformed("limits flag") }),
        }
    }

    fn table_type(&mut self) -> Result<Limits> {
        if self.u8()? != 0x70 {
            return Err(DecodeError {
                offset: self.pos - 1,
                kind: DecodeErrorKind::Malformed("table element type must be funcref"),
            });
        }
        self.limits()
    }

    fn global_type(&mut self) -> Result<GlobalType> {
        let ty = self.val_type()?;
        let mutable = match self.u8()? {
            0 => false,
            1 => true,
            _ => {
                return Err(DecodeError { offset: self.pos - 1, kind: DecodeErrorKind::Malformed("global mutability") })
            }
        };
        Ok(GlobalType { ty, mutable })
    }

    fn f32(&mut self) -> Result<F32> {
        let b = self.take(4)?;
        Ok(F32(u32::from_le_bytes([b[0], b[1], b[2], b[3]])))
    }

    fn f64(&mut self) -> Result<F64> {
        let b = self.take(8)?;
        let mut a = [0u8; 8];
        a.copy_from_slice(b);
        Ok(F64(u64::from_le_bytes(a)))
    }
}

/// Module entities decoded so far, used for bounds checks.
#[derive(Default)]
struct Spaces {
    types: u32,
    funcs: u32,
    tables: u32,
    memories: u32,
    globals: u32,
}

fn check(space: IndexSpace, index: u32, len: u32, offset: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(DecodeError { offset, kind: DecodeErrorKind::OutOfBoundsIndex { space, index } })
    }
}

pub fn decode_module(bytes: &[u8]) -> Result<Module> {
    if bytes.len() < 8 || bytes[0..4] != MAGIC || bytes[4..8] != VERSION {
        return Err(DecodeError { offset: 0, kind: DecodeErrorKind::MalformedMagic });
    }
    let mut r = Reader::new(bytes);
    r.pos = 8;

    let mut m = Module::default();
    let mut spaces = Spaces::default();
    let mut func_type_indices: Vec<u32> = Vec::new();
    let mut saw_function_section = false;
    let mut saw_code_section = false;
    let mut last_id = 0u8;

    while !r.at_end() {
        let id_offset = r.pos;
        let id = r.u8()?;
        let size = r.u32()? as usize;
        if size > r.end - r.pos {
            return r.err(DecodeErrorKind::Truncated);
        }
        let section_end = r.pos + size;
        let mut s = Reader { bytes, pos: r.pos, end: section_end };

        if id == 0 {
            let name = s.name()?;
            let rest = s.take(section_end - s.pos)?;
            m.custom_sections.push(CustomSection { name, bytes: rest.to_vec(), after: last_id });
        } else {
            if id > 11 {
                return Err(DecodeError { offset: id_offset, kind: DecodeErrorKind::UnknownSection(id) });
            }
            if id <= last_id {
                return Err(DecodeError { offset: id_offset, kind: DecodeErrorKind::SectionOutOfOrder(id) });
            }
            last_id = id;
            match id {
                1 => decode_types(&mut s, &mut m, &mut spaces)?,
                2 => decode_imports(&mut s, &mut m, &mut spaces)?,
                3 => {
                    saw_function_section = true;
                    let n = s.count()?;
                    for _ in 0..n {
                        let off = s.pos;
                        let idx = s.u32()?;
                        check(IndexSpace::Type, idx, spaces.types, off)?;
                        func_type_indices.push(idx);
                    }
                    spaces.funcs += n as u32;
                }
                4 => {
                    let n = s.count()?;
                    for _ in 0..n {
                        let limits = s.table_type()?;
                        m.tables.push(Table { limits, import: None });
                    }
                    spaces.tables += n as u32;
                    if m.tables.len() > 1 {
                        return s.err(DecodeErrorKind::Malformed("multiple tables"));
                    }
                }
                5 => {
                    let n = s.count()?;
                    for _ in 0..n {
                        let limits = s.limits()?;
                        m.memories.push(Memory { limits, import: None });
                    }
                    spaces.memories += n as u32;
                    if m.memories.len() > 1 {
                        return s.err(DecodeErrorKind::Malformed("multiple memories"));
                    }
                }
                6 => {
                    let n = s.count()?;
                    for _ in 0..n {
                        let ty = s.global_type()?;
                        let expr = const_expr(&mut s, &spaces)?;
                        m.globals.push(Global { ty, init: GlobalInit::Expr(expr) });
                        spaces.globals += 1;
                    }
                }
                7 => {
                    let n = s.count()?;
                    for _ in 0..n {
                        let name = s.name()?;
                        let kind_off = s.pos;
                        let (kind, len, space) = match s.u8()? {
                            0 => (ExternalKind::Func, spaces.funcs, IndexSpace::Function),
                            1 => (ExternalKind::Table, spaces.tables, IndexSpace::Table),
                            2 => (ExternalKind::Memory, spaces.memories, IndexSpace::Memory),
                            3 => (ExternalKind::Global, spaces.globals, IndexSpace::Global),
                            _ => {
                                return Err(DecodeError {
                                    offset: kind_off,
                                    kind: DecodeErrorKind::Malformed("export kind"),
                                })
                            }
                        };
                        let off = s.pos;
                        let index = s.u32()?;
                        check(space, index, len, off)?;
                        m.exports.push(Export { name, kind, index });
                    }
                }
                8 => {
                    let off = s.pos;
                    let idx = s.u32()?;
                    check(IndexSpace::Function, idx, spaces.funcs, off)?;
                    m.start = Some(idx);
                }
                9 => {
                    let n = s.count()?;
                    for _ in 0..n {
                        let off = s.pos;
                        let table = s.u32()?;
                        if table != 0 {
                            return Err(DecodeError {
                                offset: off,
                                kind: DecodeErrorKind::Malformed("unsupported element segment kind"),
                            });
                        }
                        check(IndexSpace::Table, 0, spaces.tables, off)?;
                        let offset = const_expr(&mut s, &spaces)?;
                        let count = s.count()?;
                        let mut functions = Vec::with_capacity(count);
                        for _ in 0..count {
                            let off = s.pos;
                            let f = s.u32()?;
                            check(IndexSpace::Function, f, spaces.funcs, off)?;
                            functions.push(f);
                        }
                        m.elements.push(ElementSegment { offset, functions });
                    }
                }
                10 => {
                    saw_code_section = true;
                    let n = s.count()?;
                    if n != func_type_indices.len() {
                        return s.err(DecodeErrorKind::FunctionCodeMismatch);
                    }
                    for &type_idx in &func_type_indices {
                        let size = s.u32()? as usize;
                        if size > s.end - s.pos {
                            return s.err(DecodeErrorKind::Truncated);
                        }
                        let body_end = s.pos + size;
                        let mut b = Reader { bytes, pos: s.pos, end: body_end };
                        let params = m.types[type_idx as usize].params.len();
                        let code = decode_code(&mut b, &spaces, params)?;
                        if !b.at_end() {
                            return b.err(DecodeErrorKind::SectionSizeMismatch);
                        }
                        s.pos = body_end;
                        m.functions.push(Function { type_idx, source: FunctionSource::Code(code) });
                    }
                }
                11 => {
                    let n = s.count()?;
                    for _ in 0..n {
                        let off = s.pos;
                        let mem = s.u32()?;
                        if mem != 0 {
                            return Err(DecodeError {
                                offset: off,
                                kind: DecodeErrorKind::Malformed("unsupported data segment kind"),
                            });
                        }
                        check(IndexSpace::Memory, 0, spaces.memories, off)?;
                        let offset = const_expr(&mut s, &spaces)?;
                        let len = s.u32()? as usize;
                        let data = s.take(len)?;
                        m.data.push(DataSegment { offset, bytes: data.to_vec() });
                    }
                }
                _ => unreachable!(),
            }
            if s.pos != section_end {
                return s.err(DecodeErrorKind::SectionSizeMismatch);
            }
        }
        r.pos = section_end;
    }

    if saw_function_section && !func_type_indices.is_empty() && !saw_code_section {
        return r.err(DecodeErrorKind::FunctionCodeMismatch);
    }
    Ok(m)
}

fn decode_types(s: &mut Reader<'_>, m: &mut Module, spaces: &mut Spaces) -> Result<()> {
    let n = s.count()?;
    for _ in 0..n {
        let form_off = s.pos;
        if s.u8()? != 0x60 {
            return Err(DecodeError { offset: form_off, kind: DecodeErrorKind::Malformed("function type form") });
        }
        let np = s.count()?;
        let params = (0..np).map(|_| s.val_type()).collect::<Result<Vec<_>>>()?;
        let nr = s.count()?;
        let results = (0..nr).map(|_| s.val_type()).collect::<Result<Vec<_>>>()?;
        if results.len() > 1 {
            return Err(DecodeError { offset: form_off, kind: DecodeErrorKind::Malformed("multiple results") });
        }
        m.types.push(FuncType { params, results });
    }
    spaces.types = m.types.len() as u32;
    Ok(())
}

fn decode_imports(s: &mut Reader<'_>, m: &mut Module, spaces: &mut Spaces) -> Result<()> {
    let n = s.count()?;
    for _ in 0..n {
        let module = s.name()?;
        let name = s.name()?;
        let import = ImportName { module, name };
        let kind_off = s.pos;
        match s.u8()? {
            0 => {
                let off = s.pos;
                let type_idx = s.u32()?;
                check(IndexSpace::Type, type_idx, spaces.types, off)?;
                m.functions.push(Function { type_idx, source: FunctionSource::Import(import) });
                spaces.funcs += 1;
            }
            1 => {
                let limits = s.table_type()?;
                m.tables.push(Table { limits, import: Some(import) });
                spaces.tables += 1;
            }
            2 => {
                let limits = s.limits()?;
                m.memories.push(Memory { limits, import: Some(import) });
                spaces.memories += 1;
            }
            3 => {
                let ty = s.global_type()?;
                m.globals.push(Global { ty, init: GlobalInit::Import(import) });
                spaces.globals += 1;
            }
            _ => return Err(DecodeError { offset: kind_off, kind: DecodeErrorKind::Malformed("import kind") }),
        }
    }
    if m.tables.len() > 1 {
        return s.err(DecodeErrorKind::Malformed("multiple tables"));
    }
    if m.memories.len() > 1 {
        return s.err(DecodeErrorKind::Malformed("multiple memories"));
    }
    Ok(())
}

fn const_expr(s: &mut Reader<'_>, spaces: &Spaces) -> Result<ConstExpr> {
    let op_off = s.pos;
    let expr = match s.u8()? {
        0x41 => ConstExpr::Value(Value::I32(s.i32()?)),
        0x42 => ConstExpr::Value(Value::I64(s.i64()?)),
        0x43 => ConstExpr::Value(Value::F32(s.f32()?)),
        0x44 => ConstExpr::Value(Value::F64(s.f64()?)),
        0x23 => {
            let off = s.pos;
            let idx = s.u32()?;
            check(IndexSpace::Global, idx, spaces.globals, off)?;
            ConstExpr::GlobalGet(idx)
        }
        op => return Err(DecodeError { offset: op_off, kind: DecodeErrorKind::UnknownOpcode(op) }),
    };
    let end_off = s.pos;
    if s.u8()? != 0x0b {
        return Err(DecodeError { offset: end_off, kind: DecodeErrorKind::Malformed("constant expression") });
    }
    Ok(expr)
}

fn block_type(r: &mut Reader<'_>) -> Result<BlockType> {
    let b = r.u8()?;
    if b == 0x40 {
        return Ok(BlockType::Empty);
    }
    match ValType::from_byte(b) {
        Some(t) => Ok(BlockType::Value(t)),
        None => Err(DecodeError { offset: r.pos - 1, kind: DecodeErrorKind::InvalidValType(b) }),
    }
}

fn mem_arg(r: &mut Reader<'_>) -> Result<MemArg> {
    let align = r.u32()?;
    let offset = r.u32()?;
    Ok(MemArg { align, offset })
}

fn decode_code(r: &mut Reader<'_>, spaces: &Spaces, params: usize) -> Result<Code> {
    let groups = r.count()?;
    let mut locals = Vec::new();
    for _ in 0..groups {
        let off = r.pos;
        let n = r.u32()? as usize;
        if locals.len() + n + params > MAX_LOCALS {
            return Err(DecodeError { offset: off, kind: DecodeErrorKind::TooManyLocals });
        }
        let ty = r.val_type()?;
        locals.extend(std::iter::repeat_n(ty, n));
    }
    let local_count = (params + locals.len()) as u32;

    // Structural nesting: `true` marks an `if` frame that may still take an `else`.
    let mut frames: Vec<bool> = vec![false];
    let mut body = Vec::new();
    while !frames.is_empty() {
        let op_off = r.pos;
        let op = r.u8()?;
        let instr = match op {
            0x00 => Instr::Unreachable,
            0x01 => Instr::Nop,
            0x02 => {
                frames.push(false);
                Instr::Block(block_type(r)?)
            }
            0x03 => {
                frames.push(false);
                Instr::Loop(block_type(r)?)
            }
            0x04 => {
                frames.push(true);
                Instr::If(block_type(r)?)
            }
            0x05 => {
                match frames.last_mut() {
                    Some(open_if @ true) => *open_if = false,
                    _ => {
                        return Err(DecodeError {
                            offset: op_off,
                            kind: DecodeErrorKind::Malformed("else without matching if"),
                        })
                    }
                }
                Instr::Else
            }
            0x0b => {
                frames.pop();
                Instr::End
            }
            0x0c => Instr::Br(r.u32()?),
            0x0d => Instr::BrIf(r.u32()?),
            0x0e => {
                let n = r.count()?;
                let labels = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
                let default = r.u32()?;
                Instr::BrTable { labels: labels.into_boxed_slice(), default }
            }
            0x0f => Instr::Return,
            0x10 => {
                let off = r.pos;
                let f = r.u32()?;
                check(IndexSpace::Function, f, spaces.funcs, off)?;
                Instr::Call(f)
            }
            0x11 => {
                let off = r.pos;
                let t = r.u32()?;
                check(IndexSpace::Type, t, spaces.types, off)?;
                let table_off = r.pos;
                if r.u8()? != 0x00 {
                    return Err(DecodeError {
                        offset: table_off,
                        kind: DecodeErrorKind::Malformed("call_indirect reserved byte"),
                    });
                }
                check(IndexSpace::Table, 0, spaces.tables, table_off)?;
                Instr::CallIndirect(t)
            }
            0x1a => Instr::Drop,
            0x1b => Instr::Select,
            0x20..=0x22 => {
                let off = r.pos;
                let idx = r.u32()?;
                check(IndexSpace::Local, idx, local_count, off)?;
                match op {
                    0x20 => Instr::LocalGet(idx),
                    0x21 => Instr::LocalSet(idx),
                    _ => Instr::LocalTee(idx),
                }
            }
            0x23 | 0x24 => {
                let off = r.pos;
                let idx = r.u32()?;
                check(IndexSpace::Global, idx, spaces.globals, off)?;
                if op == 0x23 {
                    Instr::GlobalGet(idx)
                } else {
                    Instr::GlobalSet(idx)
                }
            }
            0x28..=0x35 => {
                let arg = mem_arg(r)?;
                check(IndexSpace::Memory, 0, spaces.memories, op_off)?;
                Instr::Load(LoadOp::from_opcode(op).expect("load opcode range"), arg)
            }
            0x36..=0x3e => {
                let arg = mem_arg(r)?;
                check(IndexSpace::Memory, 0, spaces.memories, op_off)?;
                Instr::Store(StoreOp::from_opcode(op).expect("store opcode range"), arg)
            }
            0x3f | 0x40 => {
                let reserved_off = r.pos;
                if r.u8()? != 0x00 {
                    return Err(DecodeError {
                        offset: reserved_off,
                        kind: DecodeErrorKind::Malformed("memory instruction reserved byte"),
                    });
                }
                check(IndexSpace::Memory, 0, spaces.memories, op_off)?;
                if op == 0x3f {
                    Instr::MemorySize
                } else {
                    Instr::MemoryGrow
                }
            }
            0x41 => Instr::Const(Value::I32(r.i32()?)),
            0x42 => Instr::Const(Value::I64(r.i64()?)),
            0x43 => Instr::Const(Value::F32(r.f32()?)),
            0x44 => Instr::Const(Value::F64(r.f64()?)),
            _ => {
                if let Some(u) = UnaryOp::from_opcode(op) {
                    Instr::Unary(u)
                } else if let Some(b) = BinaryOp::from_opcode(op) {
                    Instr::Binary(b)
                } else {
                    return Err(DecodeError { offset: op_off, kind: DecodeErrorKind::UnknownOpcode(op) });
                }
            }
        };
        body.push(instr);
    }
    Ok(Code { locals, body })
}
