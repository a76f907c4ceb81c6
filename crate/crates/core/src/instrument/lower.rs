use crate::ir::{BinaryOp, Instr, UnaryOp, ValType, Value};

/// Where a hook argument is read from. Every source can be read twice
/// without side effects, which i64 splitting relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Arg {
    I32(i32),
    Const(Value),
    Local(u32, ValType),
    Global(u32, ValType),
}

impl Arg {
    fn ty(self) -> ValType {
        match self {
            Arg::I32(_) => ValType::I32,
            Arg::Const(v) => v.ty(),
            Arg::Local(_, t) | Arg::Global(_, t) => t,
        }
    }

    fn read(self) -> Instr {
        match self {
            Arg::I32(v) => Instr::Const(Value::I32(v)),
            Arg::Const(v) => Instr::Const(v),
            Arg::Local(i, _) => Instr::LocalGet(i),
            Arg::Global(i, _) => Instr::GlobalGet(i),
        }
    }
}

/// Pushes `arg`, as a (low, high) pair of i32 if it is an i64.
pub(crate) fn push_arg(out: &mut Vec<Instr>, arg: Arg) {
    if arg.ty() == ValType::I64 {
        out.extend(lower_i64(&arg.read()));
    } else {
        out.push(arg.read());
    }
}

/// Splits the i64 produced by the side-effect-free `source` into its low and
/// high i32 halves, leaving `low, high` on the stack.
pub fn lower_i64(source: &Instr) -> [Instr; 6] {
    [
        source.clone(),
        Instr::Unary(UnaryOp::I32WrapI64),
        source.clone(),
        Instr::Const(Value::I64(32)),
        Instr::Binary(BinaryOp::I64ShrS),
        Instr::Unary(UnaryOp::I32WrapI64),
    ]
}
