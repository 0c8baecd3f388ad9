#![allow(dead_code)]

use fast_sclf::channel::{frame_rng, llr, transmit};
use fast_sclf::codebook::{nr_reliability, Crc, PolarCode};
use fast_sclf::sc::list::{HardEvent, Observer, SplitEvent};
use rand::Rng;

pub fn nr_code(n: usize, k: usize, crc_bits: usize) -> PolarCode {
    let crc = Crc::standard(crc_bits).unwrap();
    PolarCode::from_reliability(n, k, crc, &nr_reliability(n).unwrap()).unwrap()
}

/// Random payload, its input vector and channel LLRs for one frame.
pub struct Frame {
    pub payload: Vec<u8>,
    pub u: Vec<u8>,
    pub x: Vec<u8>,
    pub y: Vec<f64>,
    pub llr: Vec<f64>,
}

pub fn frame(code: &PolarCode, sigma: f64, seed: u64, index: u64) -> Frame {
    let mut rng = frame_rng(seed, index);
    let payload: Vec<u8> = (0..code.payload_len()).map(|_| rng.random_range(0..2u8)).collect();
    let u = code.build_input(&payload).unwrap();
    let x = code.encode(&u).unwrap();
    let y = transmit(&x, sigma, &mut rng);
    let l = llr(&y, sigma);
    Frame {
        payload,
        u,
        x,
        y,
        llr: l,
    }
}

/// Rebuilds every path's decision history from the observed events and
/// evaluates the flip metric from scratch at each recorded index.
pub struct HistoryOracle {
    theta: f64,
    dq_limit: i32,
    /// Per path: (decision LLR, reversed) at every split index so far.
    paths: Vec<Vec<(f64, bool)>>,
    pub q: Vec<f64>,
    pub dq: Vec<i32>,
}

impl HistoryOracle {
    pub fn new(theta: f64, dq_limit: i32, positions: usize) -> Self {
        HistoryOracle {
            theta,
            dq_limit,
            paths: vec![Vec::new()],
            q: vec![f64::INFINITY; positions],
            dq: vec![0; positions],
        }
    }

    fn metric(&self, hist: &[(f64, bool)]) -> f64 {
        let relu: f64 = hist.iter().map(|(g, _)| (self.theta - g.abs()).max(0.0)).sum();
        let reversed: f64 = hist.iter().filter(|h| h.1).map(|(g, _)| g.abs() - self.theta).sum();
        relu + reversed
    }

    fn derivative(&self, hist: &[(f64, bool)]) -> i32 {
        hist.iter().fold(0i32, |d, &(g, rev)| {
            let step = i32::from(self.theta > g.abs()) - i32::from(rev);
            (d + step).clamp(-self.dq_limit, self.dq_limit)
        })
    }

    /// Applies the masking of the first `log2 L` indices.
    pub fn finish(&mut self, list: usize) {
        let masked = (list.ilog2() as usize).min(self.q.len());
        self.q[..masked].fill(f64::INFINITY);
        self.dq[..masked].fill(0);
    }
}

impl Observer for HistoryOracle {
    fn split(&mut self, e: &SplitEvent<'_>) {
        let a = e.parents;
        let candidate = |c: usize| {
            let (p, rev) = if c < a { (c, false) } else { (c - a, true) };
            let mut h = self.paths[p].clone();
            h.push((e.gammas[p], rev));
            h
        };
        if e.pruned {
            let mut best: Option<(f64, i32)> = None;
            for c in (0..2 * a).filter(|c| !e.kept.contains(c)) {
                let h = candidate(c);
                let q = self.metric(&h);
                if best.is_none_or(|(b, _)| q < b) {
                    best = Some((q, self.derivative(&h)));
                }
            }
            let (q, dq) = best.unwrap();
            self.q[e.k - 1] = q;
            self.dq[e.k - 1] = dq;
        }
        self.paths = e.kept.iter().map(|&c| candidate(c)).collect();
    }

    fn hard(&mut self, e: &HardEvent<'_>) {
        let mut best: Option<(f64, i32)> = None;
        for (i, p) in self.paths.iter().enumerate() {
            let mut h = p.clone();
            h.push((e.gammas[i], true));
            let q = self.metric(&h);
            if best.is_none_or(|(b, _)| q < b) {
                best = Some((q, self.derivative(&h)));
            }
        }
        let (q, dq) = best.unwrap();
        self.q[e.k - 1] = q;
        self.dq[e.k - 1] = dq;
        for (i, p) in self.paths.iter_mut().enumerate() {
            p.push((e.gammas[i], e.flipped));
        }
    }
}
