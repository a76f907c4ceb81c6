//! Abstract control stack used while rewriting a function body.
//!
//! Each open block is a [`ControlFrame`] with the locations of its opening
//! instruction and matching `end`. Relative branch labels resolve against the
//! stack to an absolute target [`Location`] plus the frames the branch exits.

use serde::Serialize;
use thiserror::Error;

use crate::ir::{Instr, Location};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Function,
    Block,
    Loop,
    If,
    Else,
}

impl BlockKind {
    pub const ALL: [BlockKind; 5] =
        [BlockKind::Function, BlockKind::Block, BlockKind::Loop, BlockKind::If, BlockKind::Else];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::Function => "function",
            BlockKind::Block => "block",
            BlockKind::Loop => "loop",
            BlockKind::If => "if",
            BlockKind::Else => "else",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ControlFrame {
    #[serde(rename = "type")]
    pub kind: BlockKind,
    pub begin: Location,
    pub end: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchTarget {
    pub label: u32,
    pub location: Location,
    /// Frames exited by the branch, innermost first, ending with the target.
    #[serde(rename = "endedBlocks")]
    pub ended_blocks: Vec<ControlFrame>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ControlError {
    #[error("unbalanced end at {0}")]
    UnbalancedEnd(Location),
    #[error("unterminated block opened at {0}")]
    Unterminated(Location),
    #[error("else without if at {0}")]
    ElseWithoutIf(Location),
    #[error("branch label {label} out of range (stack depth {depth})")]
    BranchLabelOutOfRange { label: u32, depth: usize },
}

/// Index of the matching `end` for every `block`, `loop`, `if` and `else`,
/// and the `else` belonging to each `if`, computed in one pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEnds {
    ends: Vec<Option<u32>>,
    elses: Vec<Option<u32>>,
}

impl BlockEnds {
    pub fn end_of(&self, opener: usize) -> Option<u32> {
        self.ends.get(opener).copied().flatten()
    }

    pub fn else_of(&self, if_instr: usize) -> Option<u32> {
        self.elses.get(if_instr).copied().flatten()
    }
}

pub fn match_ends(func: u32, body: &[Instr]) -> Result<BlockEnds, ControlError> {
    let mut ends = vec![None; body.len()];
    let mut elses = vec![None; body.len()];
    // Open blocks as (opener index, pending else index).
    let mut open: Vec<(usize, Option<usize>)> = Vec::new();
    let mut closed_function = false;
    for (i, instr) in body.iter().enumerate() {
        let loc = Location::new(func, i as i64);
        if closed_function {
            return Err(ControlError::UnbalancedEnd(loc));
        }
        match instr {
            Instr::Block(_) | Instr::Loop(_) | Instr::If(_) => open.push((i, None)),
            Instr::Else => match open.last_mut() {
                Some((opener, slot @ None)) if matches!(body[*opener], Instr::If(_)) => {
                    *slot = Some(i);
                    elses[*opener] = Some(i as u32);
                }
                _ => return Err(ControlError::ElseWithoutIf(loc)),
            },
            Instr::End => match open.pop() {
                Some((opener, else_idx)) => {
                    ends[opener] = Some(i as u32);
                    if let Some(e) = else_idx {
                        ends[e] = Some(i as u32);
                    }
                }
                None => closed_function = true,
            },
            _ => {}
        }
    }
    if let Some(&(opener, _)) = open.last() {
        return Err(ControlError::Unterminated(Location::new(func, opener as i64)));
    }
    if !closed_function {
        return Err(ControlError::Unterminated(Location::entry(func)));
    }
    Ok(BlockEnds { ends, elses })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlStack {
    func: u32,
    frames: Vec<ControlFrame>,
}

impl ControlStack {
    /// Stack holding only the function frame. `body_len` counts the final `end`.
    pub fn new(func: u32, body_len: usize) -> Self {
        let function = ControlFrame {
            kind: BlockKind::Function,
            begin: Location::entry(func),
            end: Location::new(func, body_len as i64 - 1),
        };
        ControlStack { func, frames: vec![function] }
    }

    /// Frames bottom to top.
    pub fn frames(&self) -> &[ControlFrame] {
        &self.frames
    }

    pub fn top(&self) -> Option<&ControlFrame> {
        self.frames.last()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Applies the effect of the instruction at `instr` on the frame structure.
    pub fn update(&mut self, instr: &Instr, index: usize, ends: &BlockEnds) -> Result<(), ControlError> {
        let loc = Location::new(self.func, index as i64);
        let kind = match instr {
            Instr::Block(_) => BlockKind::Block,
            Instr::Loop(_) => BlockKind::Loop,
            Instr::If(_) => BlockKind::If,
            Instr::Else => {
                let frame = match self.frames.pop() {
                    Some(f) if f.kind == BlockKind::If => f,
                    _ => return Err(ControlError::ElseWithoutIf(loc)),
                };
                self.frames.push(ControlFrame { kind: BlockKind::Else, begin: loc, end: frame.end });
                return Ok(());
            }
            Instr::End => {
                if self.frames.pop().is_none() {
                    return Err(ControlError::UnbalancedEnd(loc));
                }
                return Ok(());
            }
            _ => return Ok(()),
        };
        let end = ends.end_of(index).ok_or(ControlError::Unterminated(loc))?;
        self.frames.push(ControlFrame { kind, begin: loc, end: Location::new(self.func, end as i64) });
        Ok(())
    }

    pub fn resolve_label(&self, label: u32) -> Result<BranchTarget, ControlError> {
        let depth = self.frames.len();
        if label as usize >= depth {
            return Err(ControlError::BranchLabelOutOfRange { label, depth });
        }
        let target = self.frames[depth - 1 - label as usize];
        let instr = match target.kind {
            BlockKind::Loop => target.begin.instr + 1,
            // For the function frame this is one past the final end: function exit.
            _ => target.end.instr + 1,
        };
        let ended_blocks = self.frames[depth - 1 - label as usize..].iter().rev().copied().collect();
        Ok(BranchTarget { label, location: Location::new(self.func, instr), ended_blocks })
    }

    /// All frames, innermost first, ending with the function frame.
    pub fn ended_blocks_for_return(&self) -> Vec<ControlFrame> {
        self.frames.iter().rev().copied().collect()
    }
}
