use crate::ir::ValType;

/// Scratch locals of one function, appended after its original locals.
///
/// Hook sites never overlap, so each site restarts numbering with
/// [`TempLocalPool::begin_site`] and reuses locals allocated by earlier sites.
#[derive(Debug, Clone)]
pub struct TempLocalPool {
    first: u32,
    added: Vec<ValType>,
    by_type: [Vec<u32>; 4],
    used: [usize; 4],
}

fn slot(ty: ValType) -> usize {
    match ty {
        ValType::I32 => 0,
        ValType::I64 => 1,
        ValType::F32 => 2,
        ValType::F64 => 3,
    }
}

impl TempLocalPool {
    /// `first` is the number of parameters plus original locals.
    pub fn new(first: u32) -> Self {
        TempLocalPool { first, added: Vec::new(), by_type: Default::default(), used: [0; 4] }
    }

    pub fn begin_site(&mut self) {
        self.used = [0; 4];
    }

    /// A local of type `ty` not yet used by the current site.
    pub fn take(&mut self, ty: ValType) -> u32 {
        let s = slot(ty);
        let n = self.used[s];
        self.used[s] += 1;
        if let Some(&idx) = self.by_type[s].get(n) {
            return idx;
        }
        let idx = self.first + self.added.len() as u32;
        self.added.push(ty);
        self.by_type[s].push(idx);
        idx
    }

    /// Types of the allocated scratch locals, in index order.
    pub fn added(&self) -> &[ValType] {
        &self.added
    }
}
