//! Operation counting, time-step accounting and memory models.

use serde::Serialize;

pub const ADD_WEIGHT: u64 = 1;
pub const CMP_WEIGHT: u64 = 1;
pub const MULT_WEIGHT: u64 = 3;
pub const DIV_WEIGHT: u64 = 24;

/// Comparisons charged for merge-sorting `m` values.
pub fn mergesort_cost(m: usize) -> u64 {
    if m <= 1 {
        return 0;
    }
    let m = m as u64;
    let c = ceil_log2(m as usize) as u64;
    if m.is_power_of_two() {
        m * c
    } else {
        m * c - (1u64 << c) + 1
    }
}

pub fn ceil_log2(m: usize) -> u32 {
    if m <= 1 {
        0
    } else {
        usize::BITS - (m - 1).leading_zeros()
    }
}

/// Running tally of weighted operations and sequential time steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CostLedger {
    pub adds: u64,
    pub cmps: u64,
    pub mults: u64,
    pub divs: u64,
    pub steps: u64,
}

impl CostLedger {
    #[inline]
    pub fn add(&mut self, n: u64) {
        self.adds += n;
    }

    #[inline]
    pub fn cmp(&mut self, n: u64) {
        self.cmps += n;
    }

    #[inline]
    pub fn mult(&mut self, n: u64) {
        self.mults += n;
    }

    #[inline]
    pub fn div(&mut self, n: u64) {
        self.divs += n;
    }

    #[inline]
    pub fn step(&mut self, n: u64) {
        self.steps += n;
    }

    /// One merge sort of `m` values: its comparisons plus `ceil(log2 m)` steps.
    #[inline]
    pub fn sort(&mut self, m: usize) {
        self.cmps += mergesort_cost(m);
        self.steps += u64::from(ceil_log2(m));
    }

    /// Same comparisons for each of `copies` independent sorts run side by side.
    #[inline]
    pub fn parallel_sorts(&mut self, m: usize, copies: usize) {
        self.cmps += mergesort_cost(m) * copies as u64;
        self.steps += u64::from(ceil_log2(m));
    }

    pub fn complexity(&self) -> u64 {
        self.adds * ADD_WEIGHT
            + self.cmps * CMP_WEIGHT
            + self.mults * MULT_WEIGHT
            + self.divs * DIV_WEIGHT
    }

    pub fn absorb(&mut self, other: &CostLedger) {
        self.adds += other.adds;
        self.cmps += other.cmps;
        self.mults += other.mults;
        self.divs += other.divs;
        self.steps += other.steps;
    }
}

/// Decoders with a closed-form memory requirement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryModel {
    Scl,
    Fscl,
    Sclf,
    /// Single-path SC-flip style storage with one metric per information bit.
    Ssclf,
    FastSclf,
}

/// Sizes entering the memory formulas.
#[derive(Clone, Copy, Debug)]
pub struct MemoryParams {
    pub n: usize,
    /// `K + C`.
    pub info_len: usize,
    pub list: usize,
    /// Bits per stored real value.
    pub float_bits: usize,
    /// Bits per stored small integer.
    pub int_bits: usize,
    /// Bits per entry of the one-hot training target.
    pub target_bits: usize,
}

impl MemoryParams {
    pub fn new(n: usize, info_len: usize, list: usize) -> Self {
        MemoryParams {
            n,
            info_len,
            list,
            float_bits: 32,
            int_bits: 2,
            target_bits: 1,
        }
    }
}

pub fn memory_bits(model: MemoryModel, p: &MemoryParams) -> u64 {
    let (n, kc, l, bf, bi, bo) = (
        p.n as u64,
        p.info_len as u64,
        p.list as u64,
        p.float_bits as u64,
        p.int_bits as u64,
        p.target_bits as u64,
    );
    let list = n * (l + 1) * bf + 2 * l * n;
    match model {
        MemoryModel::Scl | MemoryModel::Fscl => list,
        MemoryModel::Sclf => list + (kc + l + 1) * bf,
        MemoryModel::Ssclf => list + kc * bf,
        MemoryModel::FastSclf => list + (kc + l + 7) * bf + (kc + l) * bi + kc * bo,
    }
}

pub fn memory_kbits(model: MemoryModel, p: &MemoryParams) -> f64 {
    memory_bits(model, p) as f64 / 1024.0
}
