//! Single-instruction corruptions of valid function bodies.

use rand_chacha::rand_core::Rng;
use rand_chacha::ChaCha8Rng;

use wasm_probe_core::decode::decode_module;
use wasm_probe_core::ir::*;
use wasm_probe_core::typing::check_module;

fn pick<T: Clone>(rng: &mut ChaCha8Rng, items: &[T]) -> T {
    items[rng.next_u32() as usize % items.len()].clone()
}

fn below(rng: &mut ChaCha8Rng, n: usize) -> u32 {
    (rng.next_u32() as usize % n.max(1)) as u32
}

fn all_ops<T>(from: fn(u8) -> Option<T>) -> Vec<T> {
    (0..=u8::MAX).filter_map(from).collect()
}

/// A non-structured instruction whose indices sometimes run one past the
/// valid range.
pub fn random_instr(rng: &mut ChaCha8Rng, m: &Module, func: u32) -> Instr {
    let locals = m.local_types(func).len() + 1;
    let globals = m.globals.len() + 1;
    let funcs = m.functions.len() + 1;
    let types = m.types.len() + 1;
    let memarg = |rng: &mut ChaCha8Rng| MemArg { align: below(rng, 4), offset: below(rng, 64) };
    match rng.next_u32() % 20 {
        0 => pick(rng, &[Instr::Nop, Instr::Unreachable, Instr::Drop, Instr::Select, Instr::Return]),
        1 => Instr::LocalGet(below(rng, locals)),
        2 => Instr::LocalSet(below(rng, locals)),
        3 => Instr::LocalTee(below(rng, locals)),
        4 => Instr::GlobalGet(below(rng, globals)),
        5 => Instr::GlobalSet(below(rng, globals)),
        6 => Instr::Call(below(rng, funcs)),
        7 => Instr::CallIndirect(below(rng, types)),
        8 => Instr::Br(below(rng, 4)),
        9 => Instr::BrIf(below(rng, 4)),
        10 => Instr::BrTable { labels: vec![below(rng, 3), below(rng, 3)].into(), default: below(rng, 3) },
        11 => Instr::Load(pick(rng, &all_ops(LoadOp::from_opcode)), memarg(rng)),
        12 => Instr::Store(pick(rng, &all_ops(StoreOp::from_opcode)), memarg(rng)),
        13 => pick(rng, &[Instr::MemorySize, Instr::MemoryGrow]),
        14 => Instr::Const(match rng.next_u32() % 4 {
            0 => Value::I32(rng.next_u32() as i32),
            1 => Value::I64(rng.next_u64() as i64),
            2 => Value::F32(F32(rng.next_u32())),
            _ => Value::F64(F64(rng.next_u64())),
        }),
        15 | 16 => Instr::Unary(pick(rng, &all_ops(UnaryOp::from_opcode))),
        _ => Instr::Binary(pick(rng, &all_ops(BinaryOp::from_opcode))),
    }
}

fn is_structural(instr: &Instr) -> bool {
    matches!(instr, Instr::Block(_) | Instr::Loop(_) | Instr::If(_) | Instr::Else | Instr::End)
}

/// Replaces, inserts, or deletes one non-structured instruction.
pub fn mutate(m: &Module, rng: &mut ChaCha8Rng) -> Option<Module> {
    let defined: Vec<u32> = m.defined_functions().collect();
    if defined.is_empty() {
        return None;
    }
    let func = pick(rng, &defined);
    let instr = random_instr(rng, m, func);
    let mut mutant = m.clone();
    let body = &mut mutant.functions[func as usize].code_mut().unwrap().body;
    let plain: Vec<usize> = (0..body.len()).filter(|&i| !is_structural(&body[i])).collect();
    match rng.next_u32() % 3 {
        0 if !plain.is_empty() => body[pick(rng, &plain)] = instr,
        1 if !plain.is_empty() => {
            body.remove(pick(rng, &plain));
        }
        _ => body.insert(below(rng, body.len()) as usize, instr),
    }
    Some(mutant)
}

pub fn our_verdict(bytes: &[u8]) -> Result<(), String> {
    let m = decode_module(bytes).map_err(|e| e.to_string())?;
    check_module(&m).map(|_| ()).map_err(|e| e.to_string())
}

pub struct Campaign {
    pub accepted: usize,
    pub rejected: usize,
    pub disagreements: Vec<String>,
}

impl Campaign {
    pub fn total(&self) -> usize {
        self.accepted + self.rejected
    }
}

/// Compares verdicts on `per_module` mutants of every corpus module.
pub fn campaign(corpus: &[super::CorpusModule], seed: u64, per_module: usize) -> Campaign {
    use rand_chacha::rand_core::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut result = Campaign { accepted: 0, rejected: 0, disagreements: Vec::new() };
    for m in corpus {
        let module = decode_module(&m.bytes).unwrap();
        for i in 0..per_module {
            let Some(mutant) = mutate(&module, &mut rng) else { break };
            let bytes = wasm_probe_core::encode::encode_module(&mutant).expect("mutants keep the module structure");
            let ours = our_verdict(&bytes);
            let theirs = super::validate(&bytes);
            if ours.is_ok() != theirs.is_ok() {
                result.disagreements.push(format!("{} mutant {i}: ours {ours:?}, validator {theirs:?}", m.name));
            }
            if theirs.is_ok() {
                result.accepted += 1;
            } else {
                result.rejected += 1;
            }
        }
    }
    result
}
