//! Polar code construction, encoding and CRC handling.
//!
//! A code is described by its length `N = 2^n`, payload size `K`, CRC length
//! `C` and the set of `K + C` information positions. Payload bits fill the
//! first `K` information positions in increasing order and the CRC fills the
//! last `C`.

mod crc;
mod reliability;

use thiserror::Error;

pub use crc::Crc;
pub use reliability::{gaussian_approximation, nr_reliability, parse_reliability, read_reliability};

/// Largest supported code length exponent.
pub const MAX_STAGES: usize = 16;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("code length {0} is not a power of two in 2..=65536")]
    BadLength(usize),
    #[error("K + C = {info} does not fit in N = {n}")]
    BadRate { n: usize, info: usize },
    #[error("reliability order is not a permutation: {0}")]
    NotPermutation(String),
    #[error("bad reliability entry at line {line}: {text:?}")]
    BadReliabilityLine { line: usize, text: String },
    #[error("invalid CRC polynomial {0:#x}")]
    BadPolynomial(u64),
    #[error("no default CRC polynomial of length {0}")]
    NoStandardCrc(usize),
    #[error("expected {expected} bits, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug)]
pub struct PolarCode {
    stages: usize,
    k: usize,
    crc: Crc,
    frozen: Vec<bool>,
    info: Vec<usize>,
}

impl PolarCode {
    /// Picks the `K + C` most reliable positions of a 0-based reliability order.
    pub fn from_reliability(
        n: usize,
        k: usize,
        crc: Crc,
        order: &[usize],
    ) -> Result<Self, CodebookError> {
        check_length(n)?;
        reliability::validate_order(order, n)?;
        let info_len = k + crc.len();
        if info_len > n || k == 0 {
            return Err(CodebookError::BadRate { n, info: info_len });
        }
        let mut frozen = vec![true; n];
        for &i in &order[n - info_len..] {
            frozen[i] = false;
        }
        Ok(Self::assemble(n, k, crc, frozen))
    }

    /// Builds a code from an explicit 0-based frozen set.
    pub fn from_frozen(
        n: usize,
        k: usize,
        crc: Crc,
        frozen_positions: &[usize],
    ) -> Result<Self, CodebookError> {
        check_length(n)?;
        let mut frozen = vec![false; n];
        for &i in frozen_positions {
            if i >= n || frozen[i] {
                return Err(CodebookError::NotPermutation(format!(
                    "frozen index {} repeated or out of range",
                    i + 1
                )));
            }
            frozen[i] = true;
        }
        let info_len = n - frozen_positions.len();
        if info_len != k + crc.len() || k == 0 {
            return Err(CodebookError::BadRate { n, info: k + crc.len() });
        }
        Ok(Self::assemble(n, k, crc, frozen))
    }

    fn assemble(n: usize, k: usize, crc: Crc, frozen: Vec<bool>) -> Self {
        let info = (0..n).filter(|&i| !frozen[i]).collect();
        PolarCode {
            stages: n.trailing_zeros() as usize,
            k,
            crc,
            frozen,
            info,
        }
    }

    pub fn len(&self) -> usize {
        self.frozen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frozen.is_empty()
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Payload size `K`.
    pub fn payload_len(&self) -> usize {
        self.k
    }

    pub fn crc(&self) -> &Crc {
        &self.crc
    }

    pub fn crc_len(&self) -> usize {
        self.crc.len()
    }

    /// `K + C`.
    pub fn info_len(&self) -> usize {
        self.info.len()
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.len() as f64
    }

    pub fn frozen_mask(&self) -> &[bool] {
        &self.frozen
    }

    /// Information positions in increasing order.
    pub fn info_positions(&self) -> &[usize] {
        &self.info
    }

    /// Places a payload plus its CRC into a full-length input vector.
    pub fn build_input(&self, payload: &[u8]) -> Result<Vec<u8>, CodebookError> {
        if payload.len() != self.k {
            return Err(CodebookError::WrongLength {
                expected: self.k,
                got: payload.len(),
            });
        }
        let word = self.crc.attach(payload);
        let mut u = vec![0u8; self.len()];
        for (&pos, &b) in self.info.iter().zip(&word) {
            u[pos] = b;
        }
        Ok(u)
    }

    /// Collects the `K + C` information bits of an input vector.
    pub fn info_bits(&self, u: &[u8]) -> Vec<u8> {
        self.info.iter().map(|&i| u[i]).collect()
    }

    /// The first `K` information bits.
    pub fn payload(&self, u: &[u8]) -> Vec<u8> {
        self.info[..self.k].iter().map(|&i| u[i]).collect()
    }

    /// CRC verdict on the information bits of an input vector.
    pub fn crc_passes(&self, u: &[u8]) -> bool {
        if self.crc.is_empty() {
            return true;
        }
        let word = self.info_bits(u);
        self.crc.check(&word)
    }

    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>, CodebookError> {
        if u.len() != self.len() {
            return Err(CodebookError::WrongLength {
                expected: self.len(),
                got: u.len(),
            });
        }
        let mut x = u.to_vec();
        polar_transform(&mut x);
        Ok(x)
    }
}

fn check_length(n: usize) -> Result<(), CodebookError> {
    if n < 2 || !n.is_power_of_two() || n > 1 << MAX_STAGES {
        return Err(CodebookError::BadLength(n));
    }
    Ok(())
}

/// In-place `x <- x G^{(x)n}` over GF(2). The transform is its own inverse.
pub fn polar_transform(x: &mut [u8]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut half = 1;
    while half < n {
        for block in x.chunks_exact_mut(2 * half) {
            let (a, b) = block.split_at_mut(half);
            for (ai, bi) in a.iter_mut().zip(b.iter()) {
                *ai ^= *bi;
            }
        }
        half *= 2;
    }
}
