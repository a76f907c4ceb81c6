mod common;

use proptest::prelude::*;

use wasm_probe_core::control::{match_ends, BlockKind, ControlStack};
use wasm_probe_core::decode::decode_module;
use wasm_probe_core::encode::encode_module;
use wasm_probe_core::hooks::{HookKey, HookKind, HookRegistry, HookSet};
use wasm_probe_core::instrument::{instrument_module, InstrumentOptions};
use wasm_probe_core::ir::{BlockType, Instr, ValType};
use wasm_probe_core::leb128 as ours;

fn leb_unsigned(v: u64) -> Vec<u8> {
    let mut out = Vec::new();
    leb128::write::unsigned(&mut out, v).unwrap();
    out
}

fn leb_signed(v: i64) -> Vec<u8> {
    let mut out = Vec::new();
    leb128::write::signed(&mut out, v).unwrap();
    out
}

/// Pads a LEB128 encoding to `len` bytes with redundant continuation groups.
fn pad(mut bytes: Vec<u8>, len: usize, negative: bool) -> Vec<u8> {
    let fill = if negative { 0x7f } else { 0x00 };
    while bytes.len() < len {
        *bytes.last_mut().unwrap() |= 0x80;
        bytes.push(fill);
    }
    bytes
}

proptest! {
    #[test]
    fn leb_u32_matches_reference(v: u32) {
        let mut mine = Vec::new();
        ours::write_u32(&mut mine, v);
        prop_assert_eq!(&mine, &leb_unsigned(v as u64));
        prop_assert_eq!(ours::encode_u32(v), mine.clone());
        prop_assert_eq!(ours::read_u32(&mine), Ok((v, mine.len())));
    }

    #[test]
    fn leb_i32_matches_reference(v: i32) {
        let mut mine = Vec::new();
        ours::write_i32(&mut mine, v);
        prop_assert_eq!(&mine, &leb_signed(v as i64));
        prop_assert_eq!(ours::read_i32(&mine), Ok((v, mine.len())));
    }

    #[test]
    fn leb_i64_matches_reference(v: i64) {
        let mut mine = Vec::new();
        ours::write_i64(&mut mine, v);
        prop_assert_eq!(&mine, &leb_signed(v));
        prop_assert_eq!(ours::read_i64(&mine), Ok((v, mine.len())));
    }

    #[test]
    fn padded_leb_is_accepted(v: u32, extra in 0usize..5) {
        let canonical = leb_unsigned(v as u64);
        let len = (canonical.len() + extra).min(5);
        let padded = pad(canonical, len, false);
        prop_assert_eq!(ours::read_u32(&padded), Ok((v, len)));
    }

    #[test]
    fn padded_signed_leb_is_accepted(v: i32, extra in 0usize..5) {
        let canonical = leb_signed(v as i64);
        let len = (canonical.len() + extra).min(5);
        let padded = pad(canonical, len, v < 0);
        prop_assert_eq!(ours::read_i32(&padded), Ok((v, len)));
    }

    #[test]
    fn hook_set_text_round_trips(mask in 0u32..(1 << 23)) {
        let set: HookSet = HookKind::ALL.iter().copied().filter(|k| mask & (1 << *k as u32) != 0).collect();
        prop_assert_eq!(set.len(), mask.count_ones() as usize);
        prop_assert_eq!(set.to_string().parse::<HookSet>().unwrap(), set);
    }

    #[test]
    fn registry_numbers_keys_by_first_request(picks in proptest::collection::vec(0usize..8, 0..64)) {
        let keys = [
            HookKey::Nop,
            HookKey::Const(ValType::I32),
            HookKey::Const(ValType::I64),
            HookKey::Drop(ValType::F64),
            HookKey::CallPost(vec![]),
            HookKey::CallPost(vec![ValType::I32]),
            HookKey::CallPre { indirect: false, args: vec![ValType::I32] },
            HookKey::CallPre { indirect: true, args: vec![ValType::I32] },
        ];
        let registry = HookRegistry::new();
        let mut first_seen: Vec<usize> = Vec::new();
        for &p in &picks {
            if !first_seen.contains(&p) {
                first_seen.push(p);
            }
            let r = registry.get_or_create(&keys[p]);
            prop_assert_eq!(r.import_index as usize, first_seen.iter().position(|&x| x == p).unwrap());
        }
        prop_assert_eq!(registry.len(), first_seen.len());
    }
}

/// Builds a well-nested body from a stream of actions, with `br` placeholders.
fn structured_body(actions: &[u8]) -> Vec<Instr> {
    let mut body = Vec::new();
    // open frames: true for an if still awaiting its else
    let mut open: Vec<bool> = Vec::new();
    for &a in actions {
        match a % 7 {
            0 => {
                body.push(Instr::Block(BlockType::Empty));
                open.push(false);
            }
            1 => {
                body.push(Instr::Loop(BlockType::Empty));
                open.push(false);
            }
            2 => {
                body.push(Instr::If(BlockType::Empty));
                open.push(true);
            }
            3 if open.last() == Some(&true) => {
                body.push(Instr::Else);
                *open.last_mut().unwrap() = false;
            }
            4 if !open.is_empty() => {
                body.push(Instr::End);
                open.pop();
            }
            5 => body.push(Instr::Nop),
            _ => body.push(Instr::Br(0)),
        }
    }
    body.extend(std::iter::repeat_n(Instr::End, open.len() + 1));
    body
}

/// Index of the `end` closing the block opened at `opener`.
fn matching_end(body: &[Instr], opener: usize) -> usize {
    let mut depth = 0;
    for (i, instr) in body.iter().enumerate().skip(opener) {
        match instr {
            Instr::Block(_) | Instr::Loop(_) | Instr::If(_) => depth += 1,
            Instr::End => {
                depth -= 1;
                if depth == 0 {
                    return i;
                }
            }
            _ => {}
        }
    }
    unreachable!("balanced body")
}

/// Enclosing frames at `pos` as (kind, begin, end), innermost first, found by
/// scanning backwards.
fn enclosing(body: &[Instr], pos: usize) -> Vec<(BlockKind, i64, i64)> {
    let mut frames = Vec::new();
    let mut closed = 0;
    let mut in_else = false;
    for i in (0..pos).rev() {
        match &body[i] {
            Instr::End => closed += 1,
            Instr::Else if closed == 0 => {
                frames.push((BlockKind::Else, i as i64, 0));
                in_else = true;
            }
            Instr::Block(_) | Instr::Loop(_) | Instr::If(_) if closed > 0 => closed -= 1,
            opener @ (Instr::Block(_) | Instr::Loop(_) | Instr::If(_)) => {
                let end = matching_end(body, i) as i64;
                if std::mem::take(&mut in_else) {
                    frames.last_mut().unwrap().2 = end;
                    continue;
                }
                let kind = match opener {
                    Instr::Block(_) => BlockKind::Block,
                    Instr::Loop(_) => BlockKind::Loop,
                    _ => BlockKind::If,
                };
                frames.push((kind, i as i64, end));
            }
            _ => {}
        }
    }
    frames.push((BlockKind::Function, -1, body.len() as i64 - 1));
    frames
}

proptest! {
    #[test]
    fn label_resolution_matches_backward_scan(actions in proptest::collection::vec(any::<u8>(), 0..60)) {
        let body = structured_body(&actions);
        let ends = match_ends(0, &body).unwrap();
        let mut stack = ControlStack::new(0, body.len());
        for (pos, instr) in body.iter().enumerate() {
            if matches!(instr, Instr::Br(_)) {
                let expected = enclosing(&body, pos);
                prop_assert_eq!(stack.frames().len(), expected.len());
                for (label, &(kind, begin, end)) in expected.iter().enumerate() {
                    let target = stack.resolve_label(label as u32).unwrap();
                    let instr = if kind == BlockKind::Loop { begin + 1 } else { end + 1 };
                    prop_assert_eq!(target.location.instr, instr);
                    let ended: Vec<(BlockKind, i64, i64)> =
                        target.ended_blocks.iter().map(|f| (f.kind, f.begin.instr, f.end.instr)).collect();
                    prop_assert_eq!(&ended[..], &expected[..=label]);
                }
                prop_assert!(stack.resolve_label(expected.len() as u32).is_err());
            }
            stack.update(instr, pos, &ends).unwrap();
        }
        prop_assert!(stack.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_modules_instrument_deterministically(seed in 1000u64..u64::MAX) {
        let bytes = common::smith_module(seed);
        prop_assume!(common::validate(&bytes).is_ok());
        let module = decode_module(&bytes).unwrap();
        let serial = instrument_module(&module, &InstrumentOptions::new(HookSet::all())).unwrap();
        let parallel = instrument_module(&module, &InstrumentOptions::new(HookSet::all()).threads(4)).unwrap();
        let out = encode_module(&serial.module).unwrap();
        prop_assert_eq!(&encode_module(&parallel.module).unwrap(), &out);
        prop_assert!(common::validate(&out).is_ok(), "{:?}", common::validate(&out));
    }
}

#[test]
fn hook_halves_join_back_to_the_original_i64() {
    use rand_chacha::rand_core::{Rng, SeedableRng};

    let bytes = wat::parse_str(r#"(module (func (export "id") (param i64) (result i64) local.get 0))"#).unwrap();
    let module = decode_module(&bytes).unwrap();
    let out = instrument_module(&module, &InstrumentOptions::new(HookSet::only(HookKind::Local))).unwrap();
    let encoded = encode_module(&out.module).unwrap();

    let mut values = vec![
        0,
        1,
        -1,
        i32::MAX as i64,
        i32::MIN as i64,
        1 << 31,
        -(1 << 31) - 1,
        (1 << 32) - 1,
        1 << 32,
        (1 << 32) + 1,
        -(1 << 32),
        i64::MAX,
        i64::MIN,
        i64::MAX - 1,
        i64::MIN + 1,
        0x0123_4567_89ab_cdef,
    ];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(64);
    values.extend((0..10_000).map(|_| rng.next_u64() as i64));

    let log = common::new_log();
    let mut config = wasmi::Config::default();
    config.consume_fuel(false);
    let engine = wasmi::Engine::new(&config);
    let wasm = wasmi::Module::new(&engine, &encoded).unwrap();
    let mut store = wasmi::Store::new(&engine, ());
    let mut linker = <wasmi::Linker<()>>::new(&engine);
    for import in wasm.imports() {
        let wasmi::ExternType::Func(ty) = import.ty() else { unreachable!() };
        let log = log.clone();
        linker
            .func_new(import.module(), import.name(), ty.clone(), move |_, params, _| {
                log.lock().unwrap().push((String::new(), params.iter().map(common::Bits::of).collect()));
                Ok(())
            })
            .unwrap();
    }
    let instance = linker.instantiate_and_start(&mut store, &wasm).unwrap();
    let id = instance.get_typed_func::<i64, i64>(&store, "id").unwrap();
    for &v in &values {
        assert_eq!(id.call(&mut store, v).unwrap(), v);
        let (_, args) = log.lock().unwrap().pop().unwrap();
        // func, instr, local index, low, high
        let (common::Bits::I32(low), common::Bits::I32(high)) = (args[3], args[4]) else { panic!("{args:?}") };
        let joined = ((high as i64) << 32) | (low as u32 as i64);
        assert_eq!(joined, v);
    }
}
