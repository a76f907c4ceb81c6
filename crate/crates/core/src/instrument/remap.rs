use crate::ir::{ExternalKind, Instr, Module};

/// Shifts every function reference of `m` up by `hook_count`, making room for
/// that many imports at the front of the function index space.
///
/// Covers call immediates, element segments, function exports and the start
/// function. Function entries themselves are not moved.
pub fn remap_indices(m: &mut Module, hook_count: u32) {
    if hook_count == 0 {
        return;
    }
    for f in &mut m.functions {
        if let Some(code) = f.code_mut() {
            for instr in &mut code.body {
                if let Instr::Call(idx) = instr {
                    *idx += hook_count;
                }
            }
        }
    }
    for seg in &mut m.elements {
        for idx in &mut seg.functions {
            *idx += hook_count;
        }
    }
    for e in &mut m.exports {
        if e.kind == ExternalKind::Func {
            e.index += hook_count;
        }
    }
    if let Some(start) = &mut m.start {
        *start += hook_count;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::*;

    fn sample() -> Module {
        Module {
            types: vec![FuncType::default()],
            functions: vec![Function {
                type_idx: 0,
                source: FunctionSource::Code(Code { locals: vec![], body: vec![Instr::Call(0), Instr::End] }),
            }],
            elements: vec![ElementSegment { offset: ConstExpr::Value(Value::I32(0)), functions: vec![2, 5] }],
            exports: vec![
                Export { name: "f".into(), kind: ExternalKind::Func, index: 0 },
                Export { name: "g".into(), kind: ExternalKind::Global, index: 0 },
            ],
            start: Some(0),
            ..Module::default()
        }
    }

    #[test]
    fn zero_is_identity() {
        let mut m = sample();
        remap_indices(&mut m, 0);
        assert_eq!(m, sample());
    }

    #[test]
    fn shifts_all_function_references() {
        let mut m = sample();
        remap_indices(&mut m, 23);
        assert_eq!(m.functions[0].code().unwrap().body[0], Instr::Call(23));
        assert_eq!(m.start, Some(23));
        assert_eq!(m.exports[0].index, 23);
        assert_eq!(m.exports[1].index, 0);
        let mut m = sample();
        remap_indices(&mut m, 10);
        assert_eq!(m.elements[0].functions, vec![12, 15]);
    }
}
