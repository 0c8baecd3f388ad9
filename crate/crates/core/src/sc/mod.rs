//! Min-sum processing elements, the path-metric update and plain SC decoding.
//!
//! List decoding lives in [`list`], which handles both bit-by-bit schedules
//! and schedules with multi-bit special nodes.

pub mod list;
mod pool;

use crate::codebook::PolarCode;
use crate::instrument::CostLedger;

/// Hard decision of an LLR. Zero maps to bit 0.
#[inline(always)]
pub fn hard(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Sign with `sgn(0) = +1`.
#[inline(always)]
pub fn sgn(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Min-sum check-node update.
#[inline(always)]
pub fn f(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Variable-node update given the left partial sum `c`.
#[inline(always)]
pub fn g(a: f64, b: f64, c: u8) -> f64 {
    if c == 0 {
        b + a
    } else {
        b - a
    }
}

/// Path metric after deciding `bit` on a leaf with LLR `llr`.
#[inline]
pub fn pm_update(pm: f64, llr: f64, bit: u8) -> f64 {
    if bit == hard(llr) {
        pm
    } else {
        pm + llr.abs()
    }
}

/// Successive-cancellation decoder with per-stage scratch buffers.
#[derive(Clone, Debug)]
pub struct ScDecoder {
    code: PolarCode,
    alpha: Vec<Vec<f64>>,
    beta: Vec<Vec<u8>>,
    left: Vec<Vec<u8>>,
    u: Vec<u8>,
}

impl ScDecoder {
    pub fn new(code: &PolarCode) -> Self {
        let n = code.stages();
        ScDecoder {
            code: code.clone(),
            alpha: (0..=n).map(|s| vec![0.0; 1 << s]).collect(),
            beta: (0..=n).map(|s| vec![0; 1 << s]).collect(),
            left: (0..=n).map(|s| vec![0; 1 << s]).collect(),
            u: vec![0; code.len()],
        }
    }

    /// Decodes channel LLRs into an input-vector estimate.
    pub fn decode(&mut self, llr: &[f64], ledger: &mut CostLedger) -> Vec<u8> {
        let n = self.code.stages();
        assert_eq!(llr.len(), self.code.len(), "LLR length must equal N");
        self.alpha[n].copy_from_slice(llr);
        self.node(n, 0, ledger);
        self.u.clone()
    }

    fn node(&mut self, s: usize, start: usize, ledger: &mut CostLedger) {
        if s == 0 {
            let bit = if self.code.frozen_mask()[start] {
                0
            } else {
                hard(self.alpha[0][0])
            };
            self.u[start] = bit;
            self.beta[0][0] = bit;
            return;
        }
        let half = 1 << (s - 1);
        {
            let (lo, hi) = self.alpha.split_at_mut(s);
            let (a, out) = (&hi[0], &mut lo[s - 1]);
            for j in 0..half {
                out[j] = f(a[j], a[j + half]);
            }
        }
        ledger.cmp(half as u64);
        ledger.step(1);
        self.node(s - 1, start, ledger);
        self.left[s][..half].copy_from_slice(&self.beta[s - 1]);
        {
            let (lo, hi) = self.alpha.split_at_mut(s);
            let (a, out) = (&hi[0], &mut lo[s - 1]);
            let c = &self.left[s];
            for j in 0..half {
                out[j] = g(a[j], a[j + half], c[j]);
            }
        }
        ledger.add(half as u64);
        ledger.step(1);
        self.node(s - 1, start + half, ledger);
        let (lo, hi) = self.beta.split_at_mut(s);
        let (right, out) = (&lo[s - 1], &mut hi[0]);
        let l = &self.left[s];
        for j in 0..half {
            out[j] = l[j] ^ right[j];
            out[j + half] = right[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{nr_reliability, polar_transform, Crc};
    use crate::channel::{frame_rng, llr, transmit};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn kernel_values() {
        assert_eq!(f(2.0, -3.0), -2.0);
        assert_eq!(f(1.5, 1.0), 1.0);
        assert_eq!(g(2.0, 3.0, 0), 5.0);
        assert_eq!(g(2.0, 3.0, 1), 1.0);
        assert_eq!(f(0.0, -1.0), -0.0);
        assert_eq!(hard(0.0), 0);
        assert_eq!(sgn(0.0), 1.0);
    }

    #[test]
    fn metric_update_values() {
        assert_eq!(pm_update(0.0, -1.2, 1), 0.0);
        assert!((pm_update(0.0, -1.2, 0) - 1.2).abs() < 1e-12);
    }

    /// Exact max-log SC: each leaf LLR is the difference of best-path
    /// correlations over all completions consistent with the past decisions.
    fn brute_force_leaf_llr(llr: &[f64], u_past: &[u8]) -> f64 {
        let n = llr.len();
        let i = u_past.len();
        let free = n - i - 1;
        let mut best = [f64::NEG_INFINITY; 2];
        for b in 0..2u8 {
            for tail in 0..1usize << free {
                let mut u = u_past.to_vec();
                u.push(b);
                u.extend((0..free).map(|t| ((tail >> t) & 1) as u8));
                polar_transform(&mut u);
                let corr: f64 = u.iter().zip(llr).map(|(x, l)| (1.0 - 2.0 * *x as f64) * l / 2.0).sum();
                best[b as usize] = best[b as usize].max(corr);
            }
        }
        best[0] - best[1]
    }

    #[test]
    fn min_sum_sc_matches_max_log_brute_force() {
        let order = nr_reliability(8).unwrap();
        let code = PolarCode::from_reliability(8, 4, Crc::none(), &order).unwrap();
        let mut rng = frame_rng(11, 0);
        for _ in 0..200 {
            let llrs: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..4.0)).collect();
            let mut dec = ScDecoder::new(&code);
            let u = dec.decode(&llrs, &mut CostLedger::default());
            let mut past = Vec::new();
            for (i, &ui) in u.iter().enumerate() {
                let l = brute_force_leaf_llr(&llrs, &past);
                let bit = if code.frozen_mask()[i] { 0 } else { hard(l) };
                // Ties at zero are measure-zero for continuous LLRs.
                assert_eq!(ui, bit, "leaf {i}");
                past.push(bit);
            }
        }
    }

    #[test]
    fn sc_step_count() {
        let order = nr_reliability(16).unwrap();
        let code = PolarCode::from_reliability(16, 8, Crc::none(), &order).unwrap();
        let mut ledger = CostLedger::default();
        ScDecoder::new(&code).decode(&[1.0; 16], &mut ledger);
        assert_eq!(ledger.steps, 30);
        assert_eq!(ledger.cmps, 32);
        assert_eq!(ledger.adds, 32);
    }

    #[test]
    fn noiseless_decoding_recovers_input() {
        let order = nr_reliability(128).unwrap();
        let code = PolarCode::from_reliability(128, 60, Crc::standard(8).unwrap(), &order).unwrap();
        let mut rng = frame_rng(5, 1);
        let mut dec = ScDecoder::new(&code);
        for _ in 0..20 {
            let payload: Vec<u8> = (0..60).map(|_| rng.random_range(0..2)).collect();
            let u = code.build_input(&payload).unwrap();
            let x = code.encode(&u).unwrap();
            let y = transmit(&x, 1e-6, &mut rng);
            let out = dec.decode(&llr(&y, 1.0), &mut CostLedger::default());
            assert_eq!(out, u);
        }
    }

    proptest! {
        #[test]
        fn f_is_symmetric_and_bounded(a in -50.0f64..50.0, b in -50.0f64..50.0) {
            prop_assert_eq!(f(a, b), f(b, a));
            prop_assert!(f(a, b).abs() <= a.abs().min(b.abs()));
            prop_assert_eq!(f(-a, b), -f(a, b));
        }

        #[test]
        fn metric_never_decreases(pm in 0.0f64..100.0, l in -20.0f64..20.0, bit in 0u8..2) {
            prop_assert!(pm_update(pm, l, bit) >= pm);
        }
    }
}
