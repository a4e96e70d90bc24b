//! Optional instrumentation: per-slot tracking of the distinct correct
//! identifiers presented since the slot's last reset (the empirical c(t)).

/// Dense index over the correct population. The simulator assigns correct
/// nodes a contiguous address range.
#[derive(Clone, Copy, Debug)]
pub struct CorrectRange {
    pub base: u32,
    pub len: u32,
}

impl CorrectRange {
    pub(crate) fn index(&self, addr: u32) -> Option<usize> {
        addr.checked_sub(self.base)
            .filter(|&i| i < self.len)
            .map(|i| i as usize)
    }
}

/// Bitset over the correct population.
#[derive(Clone, Debug)]
pub(crate) struct SeenSet {
    bits: Box<[u64]>,
}

impl SeenSet {
    pub(crate) fn new(len: u32) -> Self {
        SeenSet {
            bits: vec![0u64; (len as usize).div_ceil(64)].into_boxed_slice(),
        }
    }

    #[inline]
    pub(crate) fn set(&mut self, idx: usize) {
        self.bits[idx / 64] |= 1 << (idx % 64);
    }

    pub(crate) fn clear(&mut self) {
        self.bits.fill(0);
    }

    pub(crate) fn count(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }
}
