//! Abstract-stack type checking of function bodies.
//!
//! Every instruction gets an [`InstrTypeAnnotation`] with concrete input and
//! output types. Polymorphic instructions (`drop`, `select`, calls, variable
//! access, branches) are resolved against the current abstract stack.

use std::fmt;

use thiserror::Error;

use crate::ir::*;

/// Type of an abstract stack slot. `Bottom` only arises in dead code, where
/// popping past the frame height is allowed and yields a value of any type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperandType {
    Known(ValType),
    Bottom,
}

impl OperandType {
    pub fn known(self) -> Option<ValType> {
        match self {
            OperandType::Known(t) => Some(t),
            OperandType::Bottom => None,
        }
    }

    fn matches(self, expected: ValType) -> bool {
        match self {
            OperandType::Known(t) => t == expected,
            OperandType::Bottom => true,
        }
    }
}

impl From<ValType> for OperandType {
    fn from(t: ValType) -> Self {
        OperandType::Known(t)
    }
}

impl fmt::Display for OperandType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperandType::Known(t) => t.fmt(f),
            OperandType::Bottom => f.write_str("bottom"),
        }
    }
}

fn known(tys: &[ValType]) -> Vec<OperandType> {
    tys.iter().copied().map(OperandType::Known).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstrTypeAnnotation {
    pub location: Location,
    pub inputs: Vec<OperandType>,
    pub outputs: Vec<OperandType>,
    /// False for statically dead code.
    pub reachable: bool,
}

impl InstrTypeAnnotation {
    /// Concrete input types; `None` if any input is `Bottom`.
    pub fn input_types(&self) -> Option<Vec<ValType>> {
        self.inputs.iter().map(|t| t.known()).collect()
    }

    pub fn output_types(&self) -> Option<Vec<ValType>> {
        self.outputs.iter().map(|t| t.known()).collect()
    }
}

struct Slot(Option<OperandType>);

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(t) => t.fmt(f),
            None => f.write_str("nothing"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    /// `expected == None` means the stack should have been empty at that
    /// point; `actual` is the offending operand.
    #[error("type mismatch at {location}: expected {}, found {}", Slot(expected.map(OperandType::Known)), Slot(*actual))]
    TypeMismatch { location: Location, expected: Option<ValType>, actual: Option<OperandType> },
    #[error("stack underflow at {location}")]
    StackUnderflow { location: Location },
    #[error("branch label {label} out of range at {location}")]
    BranchLabelOutOfRange { location: Location, label: u32 },
    #[error("invalid instruction at {location}: {reason}")]
    Invalid { location: Location, reason: &'static str },
    #[error("function {0} is imported and has no body")]
    NotDefined(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameKind {
    Function,
    Block,
    Loop,
    If,
    Else,
}

#[derive(Debug, Clone)]
struct Frame {
    kind: FrameKind,
    ty: BlockType,
    height: usize,
    unreachable: bool,
    /// Opened while the enclosing code was already dead.
    dead: bool,
}

impl Frame {
    fn label_types(&self) -> &'static [ValType] {
        match self.kind {
            FrameKind::Loop => &[],
            _ => self.ty.results(),
        }
    }
}

/// Operand and control stacks at one program point.
#[derive(Debug, Clone)]
pub struct AbstractStack {
    operands: Vec<OperandType>,
    frames: Vec<Frame>,
}

impl AbstractStack {
    /// Stack at entry of a function returning `results`.
    pub fn for_function(results: &[ValType]) -> Self {
        let ty = match results.first() {
            Some(&t) => BlockType::Value(t),
            None => BlockType::Empty,
        };
        AbstractStack {
            operands: Vec::new(),
            frames: vec![Frame { kind: FrameKind::Function, ty, height: 0, unreachable: false, dead: false }],
        }
    }

    pub fn operands(&self) -> &[OperandType] {
        &self.operands
    }

    pub fn depth(&self) -> usize {
        self.frames.len()
    }

    /// Whether the current program point can execute.
    pub fn is_reachable(&self) -> bool {
        self.frames.last().is_some_and(|f| !f.unreachable && !f.dead)
    }

    fn top(&self) -> &Frame {
        self.frames.last().expect("control stack is never empty while checking")
    }

    /// Operand `depth` slots below the top, `Bottom` if beyond the frame in dead code.
    fn peek(&self, depth: usize, loc: Location) -> Result<OperandType, TypeError> {
        let frame = self.top();
        let available = self.operands.len() - frame.height;
        if depth < available {
            Ok(self.operands[self.operands.len() - 1 - depth])
        } else if frame.unreachable {
            Ok(OperandType::Bottom)
        } else {
            Err(TypeError::StackUnderflow { location: loc })
        }
    }

    fn pop(&mut self, expected: Option<ValType>, loc: Location) -> Result<OperandType, TypeError> {
        let actual = self.peek(0, loc)?;
        if self.operands.len() > self.top().height {
            self.operands.pop();
        }
        if let Some(e) = expected {
            if !actual.matches(e) {
                return Err(TypeError::TypeMismatch { location: loc, expected: Some(e), actual: Some(actual) });
            }
        }
        Ok(actual)
    }

    /// Pops `inputs` (last on top), checking each against the stack.
    fn pop_all(&mut self, inputs: &[OperandType], loc: Location) -> Result<(), TypeError> {
        for t in inputs.iter().rev() {
            self.pop(t.known(), loc)?;
        }
        Ok(())
    }

    fn set_unreachable(&mut self) {
        let height = self.top().height;
        self.operands.truncate(height);
        self.frames.last_mut().expect("nonempty").unreachable = true;
    }

    fn label(&self, label: u32, loc: Location) -> Result<&Frame, TypeError> {
        let n = self.frames.len();
        if (label as usize) < n {
            Ok(&self.frames[n - 1 - label as usize])
        } else {
            Err(TypeError::BranchLabelOutOfRange { location: loc, label })
        }
    }

    /// Checks that the operands of the current frame are exactly `results`.
    fn check_frame_results(&mut self, results: &[ValType], loc: Location) -> Result<(), TypeError> {
        for &t in results.iter().rev() {
            self.pop(Some(t), loc)?;
        }
        if self.operands.len() > self.top().height {
            let extra = *self.operands.last().expect("above height");
            return Err(TypeError::TypeMismatch { location: loc, expected: None, actual: Some(extra) });
        }
        Ok(())
    }
}

/// Types of the function being checked.
pub struct FunctionContext<'m> {
    pub module: &'m Module,
    pub func: u32,
    pub locals: Vec<ValType>,
    pub results: Vec<ValType>,
}

impl<'m> FunctionContext<'m> {
    pub fn new(module: &'m Module, func: u32) -> Self {
        FunctionContext {
            module,
            func,
            locals: module.local_types(func),
            results: module.func_type(func).results.clone(),
        }
    }

    fn local(&self, idx: u32, loc: Location) -> Result<ValType, TypeError> {
        self.locals
            .get(idx as usize)
            .copied()
            .ok_or(TypeError::Invalid { location: loc, reason: "local index out of range" })
    }

    fn global(&self, idx: u32, loc: Location) -> Result<GlobalType, TypeError> {
        self.module
            .globals
            .get(idx as usize)
            .map(|g| g.ty)
            .ok_or(TypeError::Invalid { location: loc, reason: "global index out of range" })
    }

    fn memory(&self, loc: Location) -> Result<(), TypeError> {
        if self.module.memories.is_empty() {
            Err(TypeError::Invalid { location: loc, reason: "no memory" })
        } else {
            Ok(())
        }
    }
}

type Sig = (Vec<OperandType>, Vec<OperandType>);

/// Input and output types of a non-structured instruction at the given stack.
///
/// Monomorphic instructions get their fixed signature. Polymorphic ones are
/// resolved from the stack (`drop`, `select`) or from declarations (calls,
/// variables, branch labels). Structured instructions (`block`, `loop`,
/// `if`, `else`, `end`) are handled by the checker itself.
pub fn resolve_polymorphic(
    instr: &Instr,
    stack: &AbstractStack,
    ctx: &FunctionContext<'_>,
    loc: Location,
) -> Result<Sig, TypeError> {
    use OperandType::Known;
    let i32 = || Known(ValType::I32);
    Ok(match instr {
        Instr::Unreachable | Instr::Nop => (vec![], vec![]),
        Instr::Drop => (vec![stack.peek(0, loc)?], vec![]),
        Instr::Select => {
            let cond = stack.peek(0, loc)?;
            if !cond.matches(ValType::I32) {
                return Err(TypeError::TypeMismatch {
                    location: loc,
                    expected: Some(ValType::I32),
                    actual: Some(cond),
                });
            }
            let second = stack.peek(1, loc)?;
            let first = stack.peek(2, loc)?;
            let t = match (first, second) {
                (OperandType::Bottom, t) | (t, OperandType::Bottom) => t,
                (Known(a), Known(b)) if a == b => Known(a),
                (Known(a), actual) => {
                    return Err(TypeError::TypeMismatch { location: loc, expected: Some(a), actual: Some(actual) })
                }
            };
            (vec![t, t, i32()], vec![t])
        }
        Instr::Br(l) => (known(stack.label(*l, loc)?.label_types()), vec![]),
        Instr::BrIf(l) => {
            let tys = known(stack.label(*l, loc)?.label_types());
            let mut inputs = tys.clone();
            inputs.push(i32());
            (inputs, tys)
        }
        Instr::BrTable { labels, default } => {
            let default_tys = stack.label(*default, loc)?.label_types();
            for l in labels.iter() {
                let tys = stack.label(*l, loc)?.label_types();
                if tys.len() != default_tys.len() {
                    return Err(TypeError::Invalid { location: loc, reason: "br_table labels differ in arity" });
                }
                // Each label is checked against the operands below the index.
                for (depth, &t) in tys.iter().rev().enumerate() {
                    let actual = stack.peek(depth + 1, loc)?;
                    if !actual.matches(t) {
                        return Err(TypeError::TypeMismatch { location: loc, expected: Some(t), actual: Some(actual) });
                    }
                }
            }
            let mut inputs = known(default_tys);
            inputs.push(i32());
            (inputs, vec![])
        }
        Instr::Return => (known(&ctx.results), vec![]),
        Instr::Call(f) => {
            let idx = *f as usize;
            if idx >= ctx.module.functions.len() {
                return Err(TypeError::Invalid { location: loc, reason: "function index out of range" });
            }
            let ty = ctx.module.func_type(*f);
            (known(&ty.params), known(&ty.results))
        }
        Instr::CallIndirect(t) => {
            if ctx.module.tables.is_empty() {
                return Err(TypeError::Invalid { location: loc, reason: "no table" });
            }
            let ty = ctx
                .module
                .types
                .get(*t as usize)
                .ok_or(TypeError::Invalid { location: loc, reason: "type index out of range" })?;
            let mut inputs = known(&ty.params);
            inputs.push(i32());
            (inputs, known(&ty.results))
        }
        Instr::LocalGet(i) => (vec![], vec![Known(ctx.local(*i, loc)?)]),
        Instr::LocalSet(i) => (vec![Known(ctx.local(*i, loc)?)], vec![]),
        Instr::LocalTee(i) => {
            let t = Known(ctx.local(*i, loc)?);
            (vec![t], vec![t])
        }
        Instr::GlobalGet(i) => (vec![], vec![Known(ctx.global(*i, loc)?.ty)]),
        Instr::GlobalSet(i) => {
            let g = ctx.global(*i, loc)?;
            if !g.mutable {
                return Err(TypeError::Invalid { location: loc, reason: "global is immutable" });
            }
            (vec![Known(g.ty)], vec![])
        }
        Instr::Load(op, arg) => {
            ctx.memory(loc)?;
            if arg.align > op.natural_align() {
                return Err(TypeError::Invalid { location: loc, reason: "alignment larger than natural" });
            }
            (vec![i32()], vec![Known(op.value_type())])
        }
        Instr::Store(op, arg) => {
            ctx.memory(loc)?;
            if arg.align > op.natural_align() {
                return Err(TypeError::Invalid { location: loc, reason: "alignment larger than natural" });
            }
            (vec![i32(), Known(op.value_type())], vec![])
        }
        Instr::MemorySize => {
            ctx.memory(loc)?;
            (vec![], vec![i32()])
        }
        Instr::MemoryGrow => {
            ctx.memory(loc)?;
            (vec![i32()], vec![i32()])
        }
        Instr::Const(v) => (vec![], vec![Known(v.ty())]),
        Instr::Unary(op) => (known(op.inputs()), vec![Known(op.output())]),
        Instr::Binary(op) => (known(op.inputs()), vec![Known(op.output())]),
        Instr::Block(_) | Instr::Loop(_) | Instr::If(_) | Instr::Else | Instr::End => {
            unreachable!("structured instructions are handled by check_function")
        }
    })
}

/// Type-checks a defined function and annotates every instruction of its body.
pub fn check_function(m: &Module, f: u32) -> Result<Vec<InstrTypeAnnotation>, TypeError> {
    let code = m.functions.get(f as usize).and_then(Function::code).ok_or(TypeError::NotDefined(f))?;
    let ctx = FunctionContext::new(m, f);
    let mut stack = AbstractStack::for_function(&ctx.results);
    let mut annotations = Vec::with_capacity(code.body.len());

    for (i, instr) in code.body.iter().enumerate() {
        let loc = Location::new(f, i as i64);
        if stack.frames.is_empty() {
            return Err(TypeError::Invalid { location: loc, reason: "instruction after final end" });
        }
        let reachable = stack.is_reachable();
        let (inputs, outputs) = match instr {
            Instr::Block(bt) | Instr::Loop(bt) | Instr::If(bt) => {
                let kind = match instr {
                    Instr::Block(_) => FrameKind::Block,
                    Instr::Loop(_) => FrameKind::Loop,
                    _ => FrameKind::If,
                };
                let inputs = if kind == FrameKind::If {
                    stack.pop(Some(ValType::I32), loc)?;
                    vec![OperandType::Known(ValType::I32)]
                } else {
                    vec![]
                };
                stack.frames.push(Frame {
                    kind,
                    ty: *bt,
                    height: stack.operands.len(),
                    unreachable: false,
                    dead: !reachable,
                });
                (inputs, vec![])
            }
            Instr::Else => {
                let top = stack.top().clone();
                if top.kind != FrameKind::If {
                    return Err(TypeError::Invalid { location: loc, reason: "else without if" });
                }
                let results = top.ty.results();
                stack.check_frame_results(results, loc)?;
                let frame = stack.frames.last_mut().expect("nonempty");
                frame.kind = FrameKind::Else;
                frame.unreachable = false;
                (known(results), vec![])
            }
            Instr::End => {
                let top = stack.top().clone();
                let results = top.ty.results();
                stack.check_frame_results(results, loc)?;
                if top.kind == FrameKind::If && !results.is_empty() {
                    return Err(TypeError::TypeMismatch { location: loc, expected: Some(results[0]), actual: None });
                }
                stack.operands.truncate(top.height);
                stack.frames.pop();
                stack.operands.extend(results.iter().copied().map(OperandType::Known));
                (known(results), known(results))
            }
            _ => {
                let (inputs, outputs) = resolve_polymorphic(instr, &stack, &ctx, loc)?;
                stack.pop_all(&inputs, loc)?;
                stack.operands.extend(outputs.iter().copied());
                if matches!(instr, Instr::Unreachable | Instr::Br(_) | Instr::BrTable { .. } | Instr::Return) {
                    stack.set_unreachable();
                }
                (inputs, outputs)
            }
        };
        annotations.push(InstrTypeAnnotation { location: loc, inputs, outputs, reachable });
    }
    if !stack.frames.is_empty() {
        let location = Location::new(f, code.body.len() as i64);
        return Err(TypeError::Invalid { location, reason: "body not terminated by end" });
    }
    Ok(annotations)
}

/// Checks every defined function of `m`.
pub fn check_module(m: &Module) -> Result<Vec<Vec<InstrTypeAnnotation>>, TypeError> {
    m.defined_functions().map(|f| check_function(m, f)).collect()
}
