//! Binary encoder. Output always uses the shortest LEB128 form.

use thiserror::Error;

use crate::decode::{MAGIC, VERSION};
use crate::ir::*;
use crate::leb128::{write_i32, write_i64, write_u32};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("unencodable module: {0}")]
    UnencodableModule(String),
}

fn unencodable<T>(msg: impl Into<String>) -> Result<T, EncodeError> {
    Err(EncodeError::UnencodableModule(msg.into()))
}

pub fn encode_module(m: &Module) -> Result<Vec<u8>, EncodeError> {
    if let Some(i) = m.types.iter().position(|t| t.results.len() > 1) {
        return unencodable(format!("type {i} has more than one result"));
    }
    let imported = m.imported_function_count();
    if m.functions[imported..].iter().any(Function::is_import) {
        return unencodable("imported function after a defined function");
    }
    if m.tables.len() > 1 {
        return unencodable("more than one table");
    }
    if m.memories.len() > 1 {
        return unencodable("more than one memory");
    }
    if m.tables.iter().skip_while(|t| t.import.is_some()).any(|t| t.import.is_some())
        || m.memories.iter().skip_while(|t| t.import.is_some()).any(|t| t.import.is_some())
        || m.globals
            .iter()
            .skip_while(|g| matches!(g.init, GlobalInit::Import(_)))
            .any(|g| matches!(g.init, GlobalInit::Import(_)))
    {
        return unencodable("import after a defined entity");
    }
    for f in &m.functions {
        if f.type_idx as usize >= m.types.len() {
            return unencodable(format!("type index {} out of bounds", f.type_idx));
        }
    }

    let mut out = Vec::with_capacity(1024);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION);
    let mut customs: Vec<&CustomSection> = m.custom_sections.iter().collect();
    customs.sort_by_key(|c| c.after);
    let mut e = Encoder { out, customs, next_custom: 0 };
    e.flush_customs(0);

    if !m.types.is_empty() {
        e.section(1, |b| {
            vec(b, &m.types, |b, t| {
                b.push(0x60);
                vec(b, &t.params, |b, v| b.push(v.byte()));
                vec(b, &t.results, |b, v| b.push(v.byte()));
            });
        });
    }

    let mut imports: Vec<(&ImportName, u8, Vec<u8>)> = Vec::new();
    for f in &m.functions {
        if let Some(name) = f.import() {
            let mut d = Vec::new();
            write_u32(&mut d, f.type_idx);
            imports.push((name, 0, d));
        }
    }
    for t in &m.tables {
        if let Some(name) = &t.import {
            let mut d = vec![0x70];
            limits(&mut d, t.limits);
            imports.push((name, 1, d));
        }
    }
    for mem in &m.memories {
        if let Some(name) = &mem.import {
            let mut d = Vec::new();
            limits(&mut d, mem.limits);
            imports.push((name, 2, d));
        }
    }
    for g in &m.globals {
        if let GlobalInit::Import(name) = &g.init {
            let mut d = Vec::new();
            global_type(&mut d, g.ty);
            imports.push((name, 3, d));
        }
    }
    if !imports.is_empty() {
        e.section(2, |b| {
            vec(b, &imports, |b, (name, kind, desc)| {
                string(b, &name.module);
                string(b, &name.name);
                b.push(*kind);
                b.extend_from_slice(desc);
            });
        });
    }

    let defined: Vec<&Function> = m.functions[imported..].iter().collect();
    if !defined.is_empty() {
        e.section(3, |b| vec(b, &defined, |b, f| write_u32(b, f.type_idx)));
    }

    let tables: Vec<&Table> = m.tables.iter().filter(|t| t.import.is_none()).collect();
    if !tables.is_empty() {
        e.section(4, |b| {
            vec(b, &tables, |b, t| {
                b.push(0x70);
                limits(b, t.limits);
            })
        });
    }

    let memories: Vec<&Memory> = m.memories.iter().filter(|t| t.import.is_none()).collect();
    if !memories.is_empty() {
        e.section(5, |b| vec(b, &memories, |b, mem| limits(b, mem.limits)));
    }

    let globals: Vec<(GlobalType, ConstExpr)> = m
        .globals
        .iter()
        .filter_map(|g| match g.init {
            GlobalInit::Expr(expr) => Some((g.ty, expr)),
            GlobalInit::Import(_) => None,
        })
        .collect();
    if !globals.is_empty() {
        e.section(6, |b| {
            vec(b, &globals, |b, (ty, expr)| {
                global_type(b, *ty);
                const_expr(b, *expr);
            })
        });
    }

    if !m.exports.is_empty() {
        e.section(7, |b| {
            vec(b, &m.exports, |b, x| {
                string(b, &x.name);
                b.push(x.kind.byte());
                write_u32(b, x.index);
            })
        });
    }

    if let Some(start) = m.start {
        e.section(8, |b| write_u32(b, start));
    }

    if !m.elements.is_empty() {
        e.section(9, |b| {
            vec(b, &m.elements, |b, seg| {
                b.push(0x00);
                const_expr(b, seg.offset);
                vec(b, &seg.functions, |b, f| write_u32(b, *f));
            })
        });
    }

    if !defined.is_empty() {
        e.section(10, |b| {
            vec(b, &defined, |b, f| {
                let code = f.code().expect("defined function has code");
                let body = encode_code(code);
                write_u32(b, body.len() as u32);
                b.extend_from_slice(&body);
            })
        });
    }

    if !m.data.is_empty() {
        e.section(11, |b| {
            vec(b, &m.data, |b, seg| {
                b.push(0x00);
                const_expr(b, seg.offset);
                write_u32(b, seg.bytes.len() as u32);
                b.extend_from_slice(&seg.bytes);
            })
        });
    }

    e.flush_customs(u8::MAX);
    Ok(e.out)
}

/// Custom sections are placed after the section they followed in the input.
/// If that section is no longer emitted, they follow the closest earlier one.
struct Encoder<'m> {
    out: Vec<u8>,
    customs: Vec<&'m CustomSection>,
    next_custom: usize,
}

impl<'m> Encoder<'m> {
    fn section(&mut self, id: u8, f: impl FnOnce(&mut Vec<u8>)) {
        self.flush_customs(id - 1);
        let mut body = Vec::new();
        f(&mut body);
        self.out.push(id);
        write_u32(&mut self.out, body.len() as u32);
        self.out.extend_from_slice(&body);
        self.flush_customs(id);
    }

    fn flush_customs(&mut self, up_to: u8) {
        while let Some(c) = self.customs.get(self.next_custom) {
            if c.after > up_to {
                break;
            }
            custom(&mut self.out, c);
            self.next_custom += 1;
        }
    }
}

fn custom(out: &mut Vec<u8>, c: &CustomSection) {
    let mut body = Vec::new();
    string(&mut body, &c.name);
    body.extend_from_slice(&c.bytes);
    out.push(0);
    write_u32(out, body.len() as u32);
    out.extend_from_slice(&body);
}

fn vec<T>(b: &mut Vec<u8>, items: &[T], mut f: impl FnMut(&mut Vec<u8>, &T)) {
    write_u32(b, items.len() as u32);
    for item in items {
        f(b, item);
    }
}

fn string(b: &mut Vec<u8>, s: &str) {
    write_u32(b, s.len() as u32);
    b.extend_from_slice(s.as_bytes());
}

fn limits(b: &mut Vec<u8>, l: Limits) {
    match l.max {
        None => {
            b.push(0x00);
            write_u32(b, l.min);
        }
        Some(max) => {
            b.push(0x01);
            write_u32(b, l.min);
            write_u32(b, max);
        }
    }
}

fn global_type(b: &mut Vec<u8>, g: GlobalType) {
    b.push(g.ty.byte());
    b.push(u8::from(g.mutable));
}

fn const_expr(b: &mut Vec<u8>, e: ConstExpr) {
    match e {
        ConstExpr::Value(v) => value(b, v),
        ConstExpr::GlobalGet(idx) => {
            b.push(0x23);
            write_u32(b, idx);
        }
    }
    b.push(0x0b);
}

fn value(b: &mut Vec<u8>, v: Value) {
    match v {
        Value::I32(x) => {
            b.push(0x41);
            write_i32(b, x);
        }
        Value::I64(x) => {
            b.push(0x42);
            write_i64(b, x);
        }
        Value::F32(x) => {
            b.push(0x43);
            b.extend_from_slice(&x.0.to_le_bytes());
        }
        Value::F64(x) => {
            b.push(0x44);
            b.extend_from_slice(&x.0.to_le_bytes());
        }
    }
}

fn block_type(b: &mut Vec<u8>, t: BlockType) {
    match t {
        BlockType::Empty => b.push(0x40),
        BlockType::Value(v) => b.push(v.byte()),
    }
}

fn mem_arg(b: &mut Vec<u8>, a: MemArg) {
    write_u32(b, a.align);
    write_u32(b, a.offset);
}

/// Function body: local declarations followed by the instruction sequence.
pub fn encode_code(code: &Code) -> Vec<u8> {
    let mut b = Vec::with_capacity(code.body.len() * 2 + 8);
    let mut runs: Vec<(u32, ValType)> = Vec::new();
    for &t in &code.locals {
        match runs.last_mut() {
            Some((n, last)) if *last == t => *n += 1,
            _ => runs.push((1, t)),
        }
    }
    vec(&mut b, &runs, |b, (n, t)| {
        write_u32(b, *n);
        b.push(t.byte());
    });
    for instr in &code.body {
        encode_instr(&mut b, instr);
    }
    b
}

pub fn encode_instr(b: &mut Vec<u8>, instr: &Instr) {
    match instr {
        Instr::Unreachable => b.push(0x00),
        Instr::Nop => b.push(0x01),
        Instr::Block(t) => {
            b.push(0x02);
            block_type(b, *t);
        }
        Instr::Loop(t) => {
            b.push(0x03);
            block_type(b, *t);
        }
        Instr::If(t) => {
            b.push(0x04);
            block_type(b, *t);
        }
        Instr::Else => b.push(0x05),
        Instr::End => b.push(0x0b),
        Instr::Br(l) => {
            b.push(0x0c);
            write_u32(b, *l);
        }
        Instr::BrIf(l) => {
            b.push(0x0d);
            write_u32(b, *l);
        }
        Instr::BrTable { labels, default } => {
            b.push(0x0e);
            vec(b, labels, |b, l| write_u32(b, *l));
            write_u32(b, *default);
        }
        Instr::Return => b.push(0x0f),
        Instr::Call(f) => {
            b.push(0x10);
            write_u32(b, *f);
        }
        Instr::CallIndirect(t) => {
            b.push(0x11);
            write_u32(b, *t);
            b.push(0x00);
        }
        Instr::Drop => b.push(0x1a),
        Instr::Select => b.push(0x1b),
        Instr::LocalGet(i) => {
            b.push(0x20);
            write_u32(b, *i);
        }
        Instr::LocalSet(i) => {
            b.push(0x21);
            write_u32(b, *i);
        }
        Instr::LocalTee(i) => {
            b.push(0x22);
            write_u32(b, *i);
        }
        Instr::GlobalGet(i) => {
            b.push(0x23);
            write_u32(b, *i);
        }
        Instr::GlobalSet(i) => {
            b.push(0x24);
            write_u32(b, *i);
        }
        Instr::Load(op, arg) => {
            b.push(op.opcode());
            mem_arg(b, *arg);
        }
        Instr::Store(op, arg) => {
            b.push(op.opcode());
            mem_arg(b, *arg);
        }
        Instr::MemorySize => b.extend_from_slice(&[0x3f, 0x00]),
        Instr::MemoryGrow => b.extend_from_slice(&[0x40, 0x00]),
        Instr::Const(v) => value(b, *v),
        Instr::Unary(op) => b.push(op.opcode()),
        Instr::Binary(op) => b.push(op.opcode()),
    }
}
