//! MSB-first cyclic redundancy checks with a zero initial register.

use super::CodebookError;

/// A CRC generator polynomial of degree `len`.
///
/// `poly` carries the leading `x^len` term, e.g. `0x107` for `x^8 + x^2 + x + 1`.
/// A zero-length CRC is accepted and behaves as "no check": it attaches nothing
/// and every word passes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Crc {
    poly: u64,
    len: usize,
}

impl Crc {
    /// CRC-24C (5G NR downlink).
    pub const CRC24C: u64 = 0x1B2_B117;
    /// CRC-16 (CCITT).
    pub const CRC16: u64 = 0x1_1021;
    /// CRC-11 (5G NR uplink).
    pub const CRC11: u64 = 0xE21;
    /// CRC-8 `x^8 + x^2 + x + 1`.
    pub const CRC8: u64 = 0x107;
    /// CRC-6 (5G NR uplink).
    pub const CRC6: u64 = 0x61;

    pub fn none() -> Self {
        Crc { poly: 0, len: 0 }
    }

    /// Builds a CRC from an explicit generator polynomial (leading term included).
    pub fn new(poly: u64) -> Result<Self, CodebookError> {
        if poly < 2 {
            return Err(CodebookError::BadPolynomial(poly));
        }
        let len = 63 - poly.leading_zeros() as usize;
        if len > 32 || poly & 1 == 0 {
            return Err(CodebookError::BadPolynomial(poly));
        }
        Ok(Crc { poly, len })
    }

    /// Default polynomial for a CRC length.
    pub fn standard(len: usize) -> Result<Self, CodebookError> {
        match len {
            0 => Ok(Crc::none()),
            6 => Crc::new(Self::CRC6),
            8 => Crc::new(Self::CRC8),
            11 => Crc::new(Self::CRC11),
            16 => Crc::new(Self::CRC16),
            24 => Crc::new(Self::CRC24C),
            _ => Err(CodebookError::NoStandardCrc(len)),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn poly(&self) -> u64 {
        self.poly
    }

    /// Remainder of `bits(x) * x^len` modulo the generator.
    pub fn remainder(&self, bits: &[u8]) -> u64 {
        if self.len == 0 {
            return 0;
        }
        let top = self.len - 1;
        let mask = (1u64 << self.len) - 1;
        let low = self.poly & mask;
        let mut reg = 0u64;
        for &b in bits {
            let fb = ((reg >> top) & 1) ^ u64::from(b & 1);
            reg = (reg << 1) & mask;
            if fb == 1 {
                reg ^= low;
            }
        }
        reg
    }

    /// Appends the CRC of `msg`, MSB first.
    pub fn attach(&self, msg: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(msg.len() + self.len);
        out.extend_from_slice(msg);
        let r = self.remainder(msg);
        out.extend((0..self.len).rev().map(|i| ((r >> i) & 1) as u8));
        out
    }

    /// Checks a word laid out as payload followed by `len` CRC bits.
    pub fn check(&self, word: &[u8]) -> bool {
        if self.len == 0 {
            return true;
        }
        if word.len() < self.len {
            return false;
        }
        let (msg, tail) = word.split_at(word.len() - self.len);
        let r = self.remainder(msg);
        tail.iter()
            .enumerate()
            .all(|(i, &b)| u64::from(b) == (r >> (self.len - 1 - i)) & 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Long division over GF(2) with the polynomial as a bit vector.
    fn divide(msg: &[u8], poly: u64, len: usize) -> Vec<u8> {
        let mut work: Vec<u8> = msg.to_vec();
        work.extend(std::iter::repeat_n(0, len));
        let g: Vec<u8> = (0..=len).rev().map(|i| ((poly >> i) & 1) as u8).collect();
        for i in 0..msg.len() {
            if work[i] == 1 {
                for (j, &gj) in g.iter().enumerate() {
                    work[i + j] ^= gj;
                }
            }
        }
        work[msg.len()..].to_vec()
    }

    #[test]
    fn register_matches_long_division() {
        let crc = Crc::new(Crc::CRC24C).unwrap();
        let mut state = 0x1234_5678_u32;
        for n in [1usize, 7, 24, 40, 100] {
            let msg: Vec<u8> = (0..n)
                .map(|_| {
                    state ^= state << 13;
                    state ^= state >> 17;
                    state ^= state << 5;
                    (state & 1) as u8
                })
                .collect();
            let word = crc.attach(&msg);
            assert_eq!(&word[n..], divide(&msg, Crc::CRC24C, 24).as_slice());
            assert!(crc.check(&word));
        }
    }

    #[test]
    fn degree_three_detects_every_single_and_double_error() {
        // x^3 + x + 1 is primitive, so every burst of weight <= 2 within
        // a length-7 codeword is caught.
        let crc = Crc::new(0b1011).unwrap();
        for m in 0u8..16 {
            let msg: Vec<u8> = (0..4).map(|i| (m >> i) & 1).collect();
            let word = crc.attach(&msg);
            assert!(crc.check(&word));
            for a in 0..7 {
                let mut w = word.clone();
                w[a] ^= 1;
                assert!(!crc.check(&w));
                for b in a + 1..7 {
                    let mut w2 = w.clone();
                    w2[b] ^= 1;
                    assert!(!crc.check(&w2));
                }
            }
        }
    }

    #[test]
    fn standard_lengths_and_rejections() {
        for len in [0, 6, 8, 11, 16, 24] {
            assert_eq!(Crc::standard(len).unwrap().len(), len);
        }
        assert!(Crc::standard(5).is_err());
        assert!(Crc::new(0b1010).is_err());
        assert!(Crc::none().check(&[1, 0, 1]));
        assert_eq!(Crc::none().attach(&[1, 0]), vec![1, 0]);
    }
}
