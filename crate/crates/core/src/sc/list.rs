//! List decoding over a [`Schedule`].
//!
//! Paths share LLR and partial-sum storage through reference-counted
//! per-stage pools, so forking a path copies only slot indices. The same
//! engine runs SCL (bitwise schedule) and FSCL (fast schedule), optionally
//! tracking the flip metric, applying a single flip, or following the true
//! input vector to find where the correct path is lost.

use smallvec::SmallVec;
use thiserror::Error;

use super::pool::{Pool, NONE};
use super::{f, g, hard};
use crate::codebook::{polar_transform, PolarCode, MAX_STAGES};
use crate::fscl::{NodeKind, Schedule, SpecialNode, TreeNode};
use crate::instrument::CostLedger;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("LLR vector has length {got}, code length is {expected}")]
    LlrLength { expected: usize, got: usize },
    #[error("truth vector has length {got}, code length is {expected}")]
    TruthLength { expected: usize, got: usize },
    #[error("list size must be at least 1")]
    EmptyList,
    #[error("flip index {0} was never reached as a pruning fork or a hard decision")]
    FlipNotApplied(usize),
}

/// Settings of the flip metric tracked during an attempt.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricConfig {
    pub theta: f64,
    /// Saturation bound of the derivative counter.
    pub dq_limit: i32,
}

impl MetricConfig {
    /// Counter range of a signed `bits`-wide register.
    pub fn with_bits(theta: f64, bits: u32) -> Self {
        let dq_limit = if bits >= 32 {
            i32::MAX
        } else {
            (1i32 << (bits.max(1) - 1)) - 1
        };
        MetricConfig { theta, dq_limit: dq_limit.max(1) }
    }
}

/// Which final path is reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Selection {
    /// Smallest-metric path passing the CRC, else the smallest-metric path.
    #[default]
    Crc,
    /// The true input vector if it survived, else as [`Selection::Crc`].
    Genie,
}

/// Per-attempt options.
#[derive(Clone, Copy, Debug, Default)]
pub struct AttemptConfig<'a> {
    pub metric: Option<MetricConfig>,
    /// 1-based split index whose decision is reversed.
    pub flip: Option<usize>,
    /// True input vector, enabling elimination tracking.
    pub truth: Option<&'a [u8]>,
    pub selection: Selection,
}

/// Result of one decoding attempt.
#[derive(Clone, Debug, PartialEq)]
pub struct Attempt {
    pub u_hat: Vec<u8>,
    pub pm: f64,
    pub crc_ok: bool,
    /// Index of the reported path in the final list.
    pub path: usize,
}

/// A fork at split index `k`. Candidate `c < parents` follows path `c`'s
/// preferred decision; candidate `parents + i` reverses path `i`'s.
#[derive(Debug)]
pub struct SplitEvent<'a> {
    pub k: usize,
    pub parents: usize,
    /// Decision LLR of each parent.
    pub gammas: &'a [f64],
    /// Surviving candidates, in the order they form the new list.
    pub kept: &'a [usize],
    pub pruned: bool,
}

/// A hard decision at split index `k` taken by every path.
#[derive(Debug)]
pub struct HardEvent<'a> {
    pub k: usize,
    pub gammas: &'a [f64],
    /// All paths took the reversed decision.
    pub flipped: bool,
}

/// Hooks into the decision sequence; the default methods ignore it.
pub trait Observer {
    fn split(&mut self, _event: &SplitEvent<'_>) {}
    fn hard(&mut self, _event: &HardEvent<'_>) {}
}

/// Observer that ignores everything.
pub struct Quiet;

impl Observer for Quiet {}

type Slots = [u32; MAX_STAGES + 1];

#[derive(Clone, Debug)]
struct Path {
    alpha: Slots,
    beta: Slots,
    left: Slots,
    pm: f64,
    q: f64,
    dq: i32,
    on_truth: bool,
    ctx: u32,
    parity: u8,
    flips: SmallVec<[u16; 8]>,
}

impl Default for Path {
    fn default() -> Self {
        Path {
            alpha: [NONE; MAX_STAGES + 1],
            beta: [NONE; MAX_STAGES + 1],
            left: [NONE; MAX_STAGES + 1],
            pm: 0.0,
            q: 0.0,
            dq: 0,
            on_truth: true,
            ctx: 0,
            parity: 0,
            flips: SmallVec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Fork {
    follow_pm: f64,
    flip_pm: f64,
    gamma: f64,
    pos: u16,
    follow_ok: bool,
}

#[derive(Clone, Debug)]
struct Memory {
    alpha: Vec<Pool<f64>>,
    beta: Vec<Pool<u8>>,
    zeros: Vec<u32>,
    ones: Vec<u32>,
}

impl Memory {
    fn new(stages: usize) -> Self {
        Memory {
            alpha: (0..=stages).map(|s| Pool::new(1 << s)).collect(),
            beta: (0..=stages).map(|s| Pool::new(1 << s)).collect(),
            zeros: Vec::new(),
            ones: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for p in &mut self.alpha {
            p.clear();
        }
        self.zeros.clear();
        self.ones.clear();
        for (s, p) in self.beta.iter_mut().enumerate() {
            p.clear();
            let z = p.alloc();
            p.get_mut(z).fill(0);
            let o = p.alloc();
            p.get_mut(o).fill(1);
            self.zeros.push(z);
            self.ones.push(o);
            debug_assert_eq!(self.zeros.len(), s + 1);
        }
    }

    fn retain(&mut self, path: &Path) {
        for (s, pool) in self.alpha.iter_mut().enumerate() {
            pool.retain(path.alpha[s]);
        }
        for (s, pool) in self.beta.iter_mut().enumerate() {
            pool.retain(path.beta[s]);
            // The left half held at stage s + 1 lives in the stage-s pool.
            if s < MAX_STAGES {
                pool.retain(path.left[s + 1]);
            }
        }
    }

    fn release(&mut self, path: &Path) {
        for (s, pool) in self.alpha.iter_mut().enumerate() {
            pool.release(path.alpha[s]);
        }
        for (s, pool) in self.beta.iter_mut().enumerate() {
            pool.release(path.beta[s]);
            // The left half held at stage s + 1 lives in the stage-s pool.
            if s < MAX_STAGES {
                pool.release(path.left[s + 1]);
            }
        }
    }
}

/// Reusable list decoder for one code and schedule.
#[derive(Clone, Debug)]
pub struct ListDecoder {
    code: PolarCode,
    schedule: Schedule,
    list: usize,
    mem: Memory,
    paths: Vec<Path>,
    spare: Vec<Path>,
    // Node entry contexts: hard decisions and magnitude order per entering path.
    ctx_hard: Vec<u8>,
    ctx_order: Vec<u16>,
    forks: Vec<Fork>,
    cand_pm: Vec<f64>,
    cand_q: Vec<f64>,
    cand_dq: Vec<i32>,
    order: Vec<usize>,
    kept: Vec<usize>,
    keep_flag: Vec<bool>,
    uses: Vec<u8>,
    gammas: Vec<f64>,
    truth_nodes: Vec<Vec<u8>>,
    // Attempt state.
    metric: Option<MetricConfig>,
    flip: Option<usize>,
    flip_applied: bool,
    tracking: bool,
    eliminated: Option<usize>,
    q_rec: Vec<f64>,
    dq_rec: Vec<i32>,
    ledger: CostLedger,
}

impl ListDecoder {
    pub fn new(code: &PolarCode, schedule: Schedule, list: usize) -> Result<Self, DecodeError> {
        if list == 0 {
            return Err(DecodeError::EmptyList);
        }
        let stages = code.stages();
        Ok(ListDecoder {
            code: code.clone(),
            list,
            mem: Memory::new(stages),
            paths: Vec::with_capacity(2 * list),
            spare: Vec::with_capacity(2 * list),
            ctx_hard: Vec::new(),
            ctx_order: Vec::new(),
            forks: Vec::new(),
            cand_pm: Vec::new(),
            cand_q: Vec::new(),
            cand_dq: Vec::new(),
            order: Vec::new(),
            kept: Vec::new(),
            keep_flag: Vec::new(),
            uses: Vec::new(),
            gammas: Vec::new(),
            truth_nodes: Vec::new(),
            metric: None,
            flip: None,
            flip_applied: false,
            tracking: false,
            eliminated: None,
            q_rec: vec![f64::INFINITY; schedule.positions()],
            dq_rec: vec![0; schedule.positions()],
            ledger: CostLedger::default(),
            schedule,
        })
    }

    /// SCL decoder: bitwise schedule.
    pub fn scl(code: &PolarCode, list: usize) -> Result<Self, DecodeError> {
        Self::new(code, Schedule::bitwise(code), list)
    }

    /// FSCL decoder: special-node schedule.
    pub fn fscl(code: &PolarCode, list: usize) -> Result<Self, DecodeError> {
        Self::new(code, Schedule::fast(code), list)
    }

    pub fn code(&self) -> &PolarCode {
        &self.code
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn list_size(&self) -> usize {
        self.list
    }

    /// Costs of the last attempt.
    pub fn cost(&self) -> &CostLedger {
        &self.ledger
    }

    /// Per-index minimum discarded metric of the last attempt with metrics on.
    /// Indices up to `floor(log2 L)` are always infinite.
    pub fn flip_metrics(&self) -> (&[f64], &[i32]) {
        (&self.q_rec, &self.dq_rec)
    }

    /// First split index at which the true path was lost, if tracked.
    pub fn first_elimination(&self) -> Option<usize> {
        self.eliminated
    }

    /// Final list metrics, in list order.
    pub fn path_metrics(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.pm).collect()
    }

    /// Input-vector estimates of the final list.
    pub fn list_inputs(&self) -> Vec<Vec<u8>> {
        (0..self.paths.len()).map(|i| self.input_of(i)).collect()
    }

    fn input_of(&self, i: usize) -> Vec<u8> {
        let n = self.code.stages();
        let mut u = self.mem.beta[n].get(self.paths[i].beta[n]).to_vec();
        polar_transform(&mut u);
        u
    }

    pub fn decode(&mut self, llr: &[f64], cfg: &AttemptConfig<'_>) -> Result<Attempt, DecodeError> {
        self.decode_observed(llr, cfg, &mut Quiet)
    }

    pub fn decode_observed<O: Observer>(
        &mut self,
        llr: &[f64],
        cfg: &AttemptConfig<'_>,
        obs: &mut O,
    ) -> Result<Attempt, DecodeError> {
        let n = self.code.len();
        if llr.len() != n {
            return Err(DecodeError::LlrLength { expected: n, got: llr.len() });
        }
        if let Some(t) = cfg.truth {
            if t.len() != n {
                return Err(DecodeError::TruthLength { expected: n, got: t.len() });
            }
        }
        self.start(llr, cfg);
        self.visit(0, obs);
        if let Some(k) = self.flip {
            if !self.flip_applied {
                return Err(DecodeError::FlipNotApplied(k));
            }
        }
        if self.metric.is_some() {
            let masked = (self.list.ilog2() as usize).min(self.q_rec.len());
            self.q_rec[..masked].fill(f64::INFINITY);
            self.dq_rec[..masked].fill(0);
        }
        Ok(self.select(cfg))
    }

    fn start(&mut self, llr: &[f64], cfg: &AttemptConfig<'_>) {
        let stages = self.code.stages();
        self.paths.clear();
        self.mem.reset();
        self.ledger = CostLedger::default();
        self.metric = cfg.metric;
        self.flip = cfg.flip;
        self.flip_applied = false;
        self.tracking = cfg.truth.is_some();
        self.eliminated = None;
        self.q_rec.fill(f64::INFINITY);
        self.dq_rec.fill(0);
        if let Some(u) = cfg.truth {
            self.truth_nodes.clear();
            for node in self.schedule.nodes() {
                let mut b = u[node.start..node.start + node.len()].to_vec();
                polar_transform(&mut b);
                self.truth_nodes.push(b);
            }
        }
        let mut root = Path::default();
        let slot = self.mem.alpha[stages].alloc();
        self.mem.alpha[stages].get_mut(slot).copy_from_slice(llr);
        root.alpha[stages] = slot;
        self.paths.push(root);
    }

    fn select(&mut self, cfg: &AttemptConfig<'_>) -> Attempt {
        let count = self.paths.len();
        self.ledger.cmp(count.saturating_sub(1) as u64);
        let mut idx: Vec<usize> = (0..count).collect();
        idx.sort_by(|&a, &b| self.paths[a].pm.total_cmp(&self.paths[b].pm));
        let mut chosen = None;
        if let (Selection::Genie, Some(t)) = (cfg.selection, cfg.truth) {
            let n = self.code.stages();
            let mut x = t.to_vec();
            polar_transform(&mut x);
            chosen = idx
                .iter()
                .copied()
                .find(|&i| self.mem.beta[n].get(self.paths[i].beta[n]) == x.as_slice())
                .map(|i| (i, self.input_of(i)));
        }
        if chosen.is_none() {
            chosen = idx.iter().copied().find_map(|i| {
                let u = self.input_of(i);
                self.code.crc_passes(&u).then_some((i, u))
            });
        }
        let (path, u_hat) = chosen.unwrap_or_else(|| (idx[0], self.input_of(idx[0])));
        Attempt {
            crc_ok: self.code.crc_passes(&u_hat),
            pm: self.paths[path].pm,
            u_hat,
            path,
        }
    }

    fn visit<O: Observer>(&mut self, id: u32, obs: &mut O) {
        match self.schedule.tree[id as usize] {
            TreeNode::Branch { stage, left, right } => {
                self.step_f(stage);
                self.visit(left, obs);
                self.stash_left(stage);
                self.step_g(stage);
                self.visit(right, obs);
                self.combine(stage);
            }
            TreeNode::Terminal(t) => {
                let node = self.schedule.nodes()[t as usize];
                match node.kind {
                    NodeKind::Rate0 => self.rate0(&node),
                    NodeKind::Rep => self.rep(&node, t as usize, obs),
                    NodeKind::Rate1 | NodeKind::Spc => self.bitwise_node(&node, t as usize, obs),
                }
            }
        }
    }

    fn step_f(&mut self, s: usize) {
        let half = 1 << (s - 1);
        let (lo, hi) = self.mem.alpha.split_at_mut(s);
        let (src_pool, dst_pool) = (&hi[0], &mut lo[s - 1]);
        for p in self.paths.iter_mut() {
            let dst = dst_pool.writable(&mut p.alpha[s - 1]);
            let a = src_pool.get(p.alpha[s]);
            let out = dst_pool.get_mut(dst);
            let (a0, a1) = a.split_at(half);
            for ((o, &x), &y) in out.iter_mut().zip(a0).zip(a1) {
                *o = f(x, y);
            }
        }
        self.ledger.cmp((half * self.paths.len()) as u64);
        self.ledger.step(1);
    }

    fn stash_left(&mut self, s: usize) {
        let pool = &mut self.mem.beta[s - 1];
        for p in self.paths.iter_mut() {
            pool.release(p.left[s]);
            p.left[s] = p.beta[s - 1];
            p.beta[s - 1] = NONE;
        }
    }

    fn step_g(&mut self, s: usize) {
        let half = 1 << (s - 1);
        let (lo, hi) = self.mem.alpha.split_at_mut(s);
        let (src_pool, dst_pool) = (&hi[0], &mut lo[s - 1]);
        let bpool = &self.mem.beta[s - 1];
        for p in self.paths.iter_mut() {
            let dst = dst_pool.writable(&mut p.alpha[s - 1]);
            let a = src_pool.get(p.alpha[s]);
            let c = bpool.get(p.left[s]);
            let out = dst_pool.get_mut(dst);
            let (a0, a1) = a.split_at(half);
            for (((o, &x), &y), &b) in out.iter_mut().zip(a0).zip(a1).zip(c) {
                *o = g(x, y, b);
            }
        }
        self.ledger.add((half * self.paths.len()) as u64);
        self.ledger.step(1);
    }

    fn combine(&mut self, s: usize) {
        let half = 1 << (s - 1);
        let (lo, hi) = self.mem.beta.split_at_mut(s);
        let (child, parent) = (&mut lo[s - 1], &mut hi[0]);
        for p in self.paths.iter_mut() {
            let dst = parent.writable(&mut p.beta[s]);
            let out = parent.get_mut(dst);
            let l = child.get(p.left[s]);
            let r = child.get(p.beta[s - 1]);
            for j in 0..half {
                out[j] = l[j] ^ r[j];
                out[half + j] = r[j];
            }
            child.release(p.left[s]);
            child.release(p.beta[s - 1]);
            p.left[s] = NONE;
            p.beta[s - 1] = NONE;
        }
    }

    fn set_uniform_beta(&mut self, s: usize, path: usize, bit: u8) {
        let slot = if bit == 0 { self.mem.zeros[s] } else { self.mem.ones[s] };
        let pool = &mut self.mem.beta[s];
        let p = &mut self.paths[path];
        pool.release(p.beta[s]);
        pool.retain(slot);
        p.beta[s] = slot;
    }

    fn rate0(&mut self, node: &SpecialNode) {
        let s = node.stage;
        for i in 0..self.paths.len() {
            let a = self.mem.alpha[s].get(self.paths[i].alpha[s]);
            let pen: f64 = a.iter().filter(|v| **v < 0.0).map(|v| -v).sum();
            self.paths[i].pm += pen;
            self.set_uniform_beta(s, i, 0);
        }
        self.ledger.add((node.len() * self.paths.len()) as u64);
        self.ledger.step(1);
    }

    fn rep<O: Observer>(&mut self, node: &SpecialNode, t: usize, obs: &mut O) {
        let s = node.stage;
        let m = node.len();
        self.forks.clear();
        self.ctx_hard.clear();
        for (i, p) in self.paths.iter_mut().enumerate() {
            let a = self.mem.alpha[s].get(p.alpha[s]);
            let sum: f64 = a.iter().sum();
            let h = hard(sum);
            let pen: f64 = a
                .iter()
                .filter(|v| hard(**v) != h)
                .map(|v| v.abs())
                .sum();
            let follow_pm = p.pm + pen;
            let follow_ok = if self.tracking { self.truth_nodes[t][0] == h } else { true };
            self.forks.push(Fork {
                follow_pm,
                flip_pm: follow_pm + sum.abs(),
                gamma: sum,
                pos: 0,
                follow_ok,
            });
            self.ctx_hard.push(h);
            p.ctx = i as u32;
            p.flips.clear();
        }
        let per_path = if m == 1 { 1 } else { 2 * m as u64 };
        self.ledger.add(per_path * self.paths.len() as u64);
        self.split(node.k_start + 1, false, obs);
        for i in 0..self.paths.len() {
            let p = &self.paths[i];
            let bit = self.ctx_hard[p.ctx as usize] ^ (p.flips.len() as u8 & 1);
            self.set_uniform_beta(s, i, bit);
        }
    }

    /// Rate-1 and SPC nodes: bits are decided one at a time in order of
    /// increasing reliability.
    fn bitwise_node<O: Observer>(&mut self, node: &SpecialNode, t: usize, obs: &mut O) {
        let s = node.stage;
        let m = node.len();
        let spc = node.kind == NodeKind::Spc;
        let entering = self.paths.len();
        self.ctx_hard.clear();
        self.ctx_order.clear();
        for (i, p) in self.paths.iter_mut().enumerate() {
            let a = self.mem.alpha[s].get(p.alpha[s]);
            let base = self.ctx_order.len();
            self.ctx_order.extend(0..m as u16);
            self.ctx_order[base..].sort_by(|&x, &y| a[x as usize].abs().total_cmp(&a[y as usize].abs()));
            let mut parity = 0;
            for &v in a {
                let h = hard(v);
                parity ^= h;
                self.ctx_hard.push(h);
            }
            p.ctx = i as u32;
            p.parity = parity;
            p.flips.clear();
        }
        self.ledger.parallel_sorts(m, entering);
        let first = if spc {
            for p in self.paths.iter_mut() {
                if p.parity == 1 {
                    let a = self.mem.alpha[s].get(p.alpha[s]);
                    let weakest = self.ctx_order[p.ctx as usize * m] as usize;
                    p.pm += a[weakest].abs();
                }
            }
            self.ledger.add(entering as u64);
            self.ledger.step(1);
            1
        } else {
            0
        };
        let forks = node.fork_limit(self.list);
        for j in first..m {
            let k = node.k_start + j + 1 - first;
            let forking = j - first < forks;
            self.forks.clear();
            for p in self.paths.iter() {
                let c = p.ctx as usize;
                let a = self.mem.alpha[s].get(p.alpha[s]);
                let pos = self.ctx_order[c * m + j];
                let gamma = a[pos as usize];
                let mut delta = gamma.abs();
                if spc {
                    let weakest = a[self.ctx_order[c * m] as usize].abs();
                    delta += if p.parity == 0 { weakest } else { -weakest };
                }
                let follow_ok = if self.tracking {
                    self.truth_nodes[t][pos as usize] == self.ctx_hard[c * m + pos as usize]
                } else {
                    true
                };
                self.forks.push(Fork {
                    follow_pm: p.pm,
                    flip_pm: p.pm + delta,
                    gamma,
                    pos,
                    follow_ok,
                });
            }
            let adds = if spc { 2 } else { 1 };
            if forking {
                self.ledger.add(adds * self.paths.len() as u64);
                self.split(k, spc, obs);
            } else {
                self.hard_step(k, spc, adds, obs);
            }
        }
        for i in 0..self.paths.len() {
            let slot = {
                let p = &mut self.paths[i];
                self.mem.beta[s].writable(&mut p.beta[s])
            };
            let p = &self.paths[i];
            let c = p.ctx as usize;
            let out = self.mem.beta[s].get_mut(slot);
            out.copy_from_slice(&self.ctx_hard[c * m..(c + 1) * m]);
            for &fp in &p.flips {
                out[fp as usize] ^= 1;
            }
            if spc {
                let weakest = self.ctx_order[c * m] as usize;
                let rest = out.iter().enumerate().filter(|(i, _)| *i != weakest).fold(0, |acc, (_, b)| acc ^ b);
                out[weakest] = rest;
            }
        }
    }

    #[inline]
    fn follow_metric(&self, q: f64, dq: i32, gamma: f64, mc: &MetricConfig) -> (f64, i32, f64, i32) {
        let mag = gamma.abs();
        let below = mc.theta > mag;
        let qf = if below { q + (mc.theta - mag) } else { q };
        let dqf = (dq + i32::from(below)).clamp(-mc.dq_limit, mc.dq_limit);
        let qr = qf + (mag - mc.theta);
        let dqr = (dq + i32::from(below) - 1).clamp(-mc.dq_limit, mc.dq_limit);
        (qf, dqf, qr, dqr)
    }

    fn charge_metric(&mut self, gamma: f64, theta: f64) {
        // |gamma| - theta, sign test, optional accumulate, reversed-branch add.
        self.ledger.add(2);
        self.ledger.cmp(1);
        if theta > gamma.abs() {
            self.ledger.add(1);
        }
    }

    fn split<O: Observer>(&mut self, k: usize, toggles_parity: bool, obs: &mut O) {
        let a = self.paths.len();
        let total = 2 * a;
        self.cand_pm.clear();
        self.cand_pm.extend(self.forks.iter().map(|f| f.follow_pm));
        self.cand_pm.extend(self.forks.iter().map(|f| f.flip_pm));
        if let Some(mc) = self.metric {
            self.cand_q.clear();
            self.cand_dq.clear();
            self.cand_q.resize(total, 0.0);
            self.cand_dq.resize(total, 0);
            for i in 0..a {
                let gamma = self.forks[i].gamma;
                let (qf, dqf, qr, dqr) = self.follow_metric(self.paths[i].q, self.paths[i].dq, gamma, &mc);
                self.cand_q[i] = qf;
                self.cand_dq[i] = dqf;
                self.cand_q[a + i] = qr;
                self.cand_dq[a + i] = dqr;
                self.charge_metric(gamma, mc.theta);
            }
        }
        let pruned = total > self.list;
        self.kept.clear();
        self.keep_flag.clear();
        if pruned {
            self.order.clear();
            self.order.extend(0..total);
            let pm = &self.cand_pm;
            self.order.sort_by(|&x, &y| pm[x].total_cmp(&pm[y]));
            let reversed = self.flip == Some(k);
            if reversed {
                self.flip_applied = true;
            }
            let range = if reversed { total - self.list..total } else { 0..self.list };
            self.keep_flag.resize(total, false);
            for &c in &self.order[range] {
                self.keep_flag[c] = true;
            }
            self.kept.extend((0..total).filter(|&c| self.keep_flag[c]));
            self.ledger.sort(total);
            if self.metric.is_some() {
                let mut best: Option<usize> = None;
                for c in 0..total {
                    if !self.keep_flag[c] && best.is_none_or(|b| self.cand_q[c] < self.cand_q[b]) {
                        best = Some(c);
                    }
                }
                let b = best.expect("pruning discards at least one candidate");
                self.q_rec[k - 1] = self.cand_q[b];
                self.dq_rec[k - 1] = self.cand_dq[b];
                self.ledger.cmp((total - self.list - 1) as u64);
            }
        } else {
            self.kept.extend(0..total);
            self.keep_flag.resize(total, true);
        }
        self.ledger.step(1);
        if self.tracking && self.eliminated.is_none() {
            for c in 0..total {
                let (p, flip) = if c < a { (c, false) } else { (c - a, true) };
                let ok = self.paths[p].on_truth && (self.forks[p].follow_ok != flip);
                if ok && !self.keep_flag[c] {
                    self.eliminated = Some(k);
                }
            }
        }
        self.gammas.clear();
        self.gammas.extend(self.forks.iter().map(|f| f.gamma));
        obs.split(&SplitEvent {
            k,
            parents: a,
            gammas: &self.gammas,
            kept: &self.kept,
            pruned,
        });

        self.uses.clear();
        self.uses.resize(a, 0);
        for &c in &self.kept {
            self.uses[c % a] += 1;
        }
        let mut taken = std::mem::take(&mut self.keep_flag);
        taken.clear();
        taken.resize(a, false);
        self.spare.clear();
        for idx in 0..self.kept.len() {
            let c = self.kept[idx];
            let (p, flip) = if c < a { (c, false) } else { (c - a, true) };
            let mut np = if self.uses[p] > 1 {
                self.uses[p] -= 1;
                let clone = self.paths[p].clone();
                self.mem.retain(&clone);
                clone
            } else {
                taken[p] = true;
                std::mem::take(&mut self.paths[p])
            };
            np.pm = self.cand_pm[c];
            if self.metric.is_some() {
                np.q = self.cand_q[c];
                np.dq = self.cand_dq[c];
            }
            np.on_truth = np.on_truth && (self.forks[p].follow_ok != flip);
            if flip {
                np.flips.push(self.forks[p].pos);
                if toggles_parity {
                    np.parity ^= 1;
                }
            }
            self.spare.push(np);
        }
        for (p, was_taken) in taken.iter().enumerate() {
            if !was_taken {
                let old = std::mem::take(&mut self.paths[p]);
                self.mem.release(&old);
            }
        }
        self.keep_flag = taken;
        std::mem::swap(&mut self.paths, &mut self.spare);
        self.spare.clear();
    }

    fn hard_step<O: Observer>(&mut self, k: usize, toggles_parity: bool, flip_adds: u64, obs: &mut O) {
        let a = self.paths.len();
        if let Some(mc) = self.metric {
            let mut best: Option<(f64, i32)> = None;
            for i in 0..a {
                let gamma = self.forks[i].gamma;
                let (qf, dqf, qr, dqr) = self.follow_metric(self.paths[i].q, self.paths[i].dq, gamma, &mc);
                self.paths[i].q = qf;
                self.paths[i].dq = dqf;
                if best.is_none_or(|(bq, _)| qr < bq) {
                    best = Some((qr, dqr));
                }
                self.charge_metric(gamma, mc.theta);
            }
            let (bq, bdq) = best.expect("list is never empty");
            self.q_rec[k - 1] = bq;
            self.dq_rec[k - 1] = bdq;
            self.ledger.cmp(a.saturating_sub(1) as u64);
        }
        let flipped = self.flip == Some(k);
        for i in 0..a {
            let fk = self.forks[i];
            let p = &mut self.paths[i];
            if self.tracking && p.on_truth && (fk.follow_ok == flipped) {
                p.on_truth = false;
                if self.eliminated.is_none() {
                    self.eliminated = Some(k);
                }
            }
            if flipped {
                p.pm = fk.flip_pm;
                p.flips.push(fk.pos);
                if toggles_parity {
                    p.parity ^= 1;
                }
            }
        }
        if flipped {
            self.flip_applied = true;
            self.ledger.add(flip_adds * a as u64);
            self.ledger.step(1);
        }
        self.gammas.clear();
        self.gammas.extend(self.forks.iter().map(|f| f.gamma));
        obs.hard(&HardEvent {
            k,
            gammas: &self.gammas,
            flipped,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{frame_rng, llr, transmit};
    use crate::codebook::{nr_reliability, Crc};
    use crate::sc::{pm_update, ScDecoder};
    use rand::Rng;

    /// Leaf LLR recomputed from scratch for a known prefix.
    fn leaf_llr(alpha: &[f64], u: &[u8], i: usize) -> f64 {
        if alpha.len() == 1 {
            return alpha[0];
        }
        let half = alpha.len() / 2;
        if i < half {
            let a: Vec<f64> = (0..half).map(|j| f(alpha[j], alpha[j + half])).collect();
            leaf_llr(&a, u, i)
        } else {
            let mut left = u[..half].to_vec();
            polar_transform(&mut left);
            let a: Vec<f64> = (0..half).map(|j| g(alpha[j], alpha[j + half], left[j])).collect();
            leaf_llr(&a, &u[half..], i - half)
        }
    }

    /// Textbook list decoder with full per-path copies.
    fn naive_scl(code: &PolarCode, llrs: &[f64], list: usize) -> Vec<(f64, Vec<u8>)> {
        let n = code.len();
        let mut paths: Vec<(f64, Vec<u8>)> = vec![(0.0, vec![0; n])];
        for i in 0..n {
            if code.frozen_mask()[i] {
                for p in paths.iter_mut() {
                    let l = leaf_llr(llrs, &p.1, i);
                    p.0 = pm_update(p.0, l, 0);
                }
                continue;
            }
            let a = paths.len();
            let mut cands = Vec::with_capacity(2 * a);
            for flip in [false, true] {
                for p in &paths {
                    let l = leaf_llr(llrs, &p.1, i);
                    let bit = hard(l) ^ u8::from(flip);
                    let mut u = p.1.clone();
                    u[i] = bit;
                    cands.push((pm_update(p.0, l, bit), u));
                }
            }
            if cands.len() > list {
                let mut order: Vec<usize> = (0..cands.len()).collect();
                order.sort_by(|&x, &y| cands[x].0.total_cmp(&cands[y].0));
                let mut keep = order[..list].to_vec();
                keep.sort_unstable();
                paths = keep.into_iter().map(|c| cands[c].clone()).collect();
            } else {
                paths = cands;
            }
        }
        paths
    }

    fn noisy_frame(code: &PolarCode, sigma: f64, seed: u64, frame: u64) -> (Vec<u8>, Vec<f64>) {
        let mut rng = frame_rng(seed, frame);
        let payload: Vec<u8> = (0..code.payload_len()).map(|_| rng.random_range(0..2)).collect();
        let u = code.build_input(&payload).unwrap();
        let y = transmit(&code.encode(&u).unwrap(), sigma, &mut rng);
        (u, llr(&y, sigma))
    }

    #[test]
    fn bitwise_list_matches_naive_list() {
        for (n, k, c) in [(16, 8, 0), (64, 26, 6)] {
            let order = nr_reliability(n).unwrap();
            let code = PolarCode::from_reliability(n, k, Crc::standard(c).unwrap(), &order).unwrap();
            for list in [1, 2, 4, 8] {
                let mut dec = ListDecoder::scl(&code, list).unwrap();
                for frame in 0..60 {
                    let (_, l) = noisy_frame(&code, 0.9, 3, frame);
                    dec.decode(&l, &AttemptConfig::default()).unwrap();
                    let want = naive_scl(&code, &l, list);
                    let got_pm = dec.path_metrics();
                    let got_u = dec.list_inputs();
                    assert_eq!(got_pm.len(), want.len());
                    for (i, (pm, u)) in want.iter().enumerate() {
                        assert!((pm - got_pm[i]).abs() < 1e-9, "n={n} L={list} frame={frame}");
                        assert_eq!(u, &got_u[i]);
                    }
                }
            }
        }
    }

    #[test]
    fn single_path_list_is_sc() {
        let order = nr_reliability(128).unwrap();
        let code = PolarCode::from_reliability(128, 64, Crc::none(), &order).unwrap();
        let mut list = ListDecoder::scl(&code, 1).unwrap();
        let mut sc = ScDecoder::new(&code);
        for frame in 0..200 {
            let (_, l) = noisy_frame(&code, 1.0, 8, frame);
            let a = list.decode(&l, &AttemptConfig::default()).unwrap();
            assert_eq!(a.u_hat, sc.decode(&l, &mut CostLedger::default()));
        }
    }

    /// All input vectors of a one-node code, with their exact penalties.
    fn exhaustive_penalties(code: &PolarCode, l: &[f64]) -> Vec<f64> {
        let info = code.info_positions();
        let mut pens = Vec::new();
        for w in 0..1usize << info.len() {
            let mut u = vec![0u8; code.len()];
            for (b, &pos) in info.iter().enumerate() {
                u[pos] = ((w >> b) & 1) as u8;
            }
            let x = code.encode(&u).unwrap();
            pens.push(x.iter().zip(l).filter(|(b, a)| **b != hard(**a)).map(|(_, a)| a.abs()).sum());
        }
        pens.sort_by(f64::total_cmp);
        pens
    }

    #[test]
    fn root_special_nodes_enumerate_exactly() {
        // Rate-1, SPC and repetition codes of length 8 with a list large
        // enough that nothing is pruned.
        let cases: [(&[usize], NodeKind); 3] = [(&[], NodeKind::Rate1), (&[0], NodeKind::Spc), (&[0, 1, 2, 3, 4, 5, 6], NodeKind::Rep)];
        let mut rng = frame_rng(21, 0);
        for (frozen, kind) in cases {
            let k = 8 - frozen.len();
            let code = PolarCode::from_frozen(8, k, Crc::none(), frozen).unwrap();
            let mut dec = ListDecoder::fscl(&code, 1 << k).unwrap();
            assert_eq!(dec.schedule().nodes().len(), 1);
            assert_eq!(dec.schedule().nodes()[0].kind, kind);
            for _ in 0..50 {
                let l: Vec<f64> = (0..8).map(|_| rng.random_range(-3.0..3.0)).collect();
                dec.decode(&l, &AttemptConfig::default()).unwrap();
                let mut got = dec.path_metrics();
                got.sort_by(f64::total_cmp);
                let want = exhaustive_penalties(&code, &l);
                assert_eq!(got.len(), want.len());
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).abs() < 1e-9, "{kind:?}");
                }
                for u in dec.list_inputs() {
                    for &p in frozen {
                        assert_eq!(u[p], 0);
                    }
                }
            }
        }
    }

    #[test]
    fn rate_one_with_single_path_thresholds() {
        let code = PolarCode::from_frozen(32, 32, Crc::none(), &[]).unwrap();
        let mut dec = ListDecoder::fscl(&code, 1).unwrap();
        let mut rng = frame_rng(2, 2);
        for _ in 0..20 {
            let l: Vec<f64> = (0..32).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = dec.decode(&l, &AttemptConfig::default()).unwrap();
            let mut x = a.u_hat.clone();
            polar_transform(&mut x);
            let thresholded: Vec<u8> = l.iter().map(|&v| hard(v)).collect();
            assert_eq!(x, thresholded);
            assert_eq!(a.pm, 0.0);
        }
    }

    #[test]
    fn rate_zero_metric() {
        let code = PolarCode::from_frozen(4, 1, Crc::none(), &[0, 1, 2]).unwrap();
        let mut dec = ListDecoder::new(&code, Schedule::from_frozen_mask(&[true; 4], true), 2).unwrap();
        let a = dec.decode(&[2.0, -1.0, 3.0, -4.0], &AttemptConfig::default()).unwrap();
        assert_eq!(a.pm, 5.0);
        assert_eq!(a.u_hat, vec![0; 4]);
    }

    #[test]
    fn reversed_selection_keeps_worst() {
        // Two information leaves, L = 2: the second fork has candidates
        // with metrics built from known LLRs; reversing keeps the worst two.
        let code = PolarCode::from_frozen(4, 2, Crc::none(), &[0, 1]).unwrap();
        let mut dec = ListDecoder::scl(&code, 2).unwrap();
        let l = [1.0, 2.0, 3.0, 4.0];
        dec.decode(&l, &AttemptConfig::default()).unwrap();
        let mut best = dec.path_metrics();
        dec.decode(&l, &AttemptConfig { flip: Some(2), ..Default::default() }).unwrap();
        let mut worst = dec.path_metrics();
        best.sort_by(f64::total_cmp);
        worst.sort_by(f64::total_cmp);
        assert!(worst[0] >= best[1]);
        assert_eq!(
            dec.decode(&l, &AttemptConfig { flip: Some(1), ..Default::default() }),
            Err(DecodeError::FlipNotApplied(1))
        );
    }

    #[test]
    fn hard_flip_adds_magnitude() {
        // Rate-1 root, L = 1: every position is a hard decision and a flip
        // costs exactly the magnitude at that position.
        let code = PolarCode::from_frozen(4, 4, Crc::none(), &[]).unwrap();
        let mut dec = ListDecoder::fscl(&code, 1).unwrap();
        let l = [2.0, -0.7, 1.5, 3.0];
        let a = dec.decode(&l, &AttemptConfig { flip: Some(1), ..Default::default() }).unwrap();
        assert!((a.pm - 0.7).abs() < 1e-12);
        let mut x = a.u_hat;
        polar_transform(&mut x);
        assert_eq!(x, vec![0, 0, 0, 0]);
    }

    #[test]
    fn metric_step_values() {
        let code = PolarCode::from_frozen(2, 1, Crc::none(), &[0]).unwrap();
        let dec = ListDecoder::scl(&code, 2).unwrap();
        let mc = MetricConfig::with_bits(0.5, 2);
        let (qf, dqf, qr, dqr) = dec.follow_metric(0.0, 0, 0.3, &mc);
        assert!((qf - 0.2).abs() < 1e-12 && dqf == 1);
        assert!(qr.abs() < 1e-12 && dqr == 0);
        let (_, _, qr, dqr) = dec.follow_metric(0.0, 0, -0.9, &mc);
        assert!((qr - 0.4).abs() < 1e-12 && dqr == -1);
        let (_, dqf, _, _) = dec.follow_metric(0.0, 1, 0.1, &mc);
        assert_eq!(dqf, 1, "counter saturates");
    }

    #[test]
    fn storage_is_released_between_frames() {
        let order = nr_reliability(256).unwrap();
        let code = PolarCode::from_reliability(256, 120, Crc::standard(8).unwrap(), &order).unwrap();
        let mut dec = ListDecoder::fscl(&code, 8).unwrap();
        for frame in 0..20 {
            let (_, l) = noisy_frame(&code, 0.8, 4, frame);
            dec.decode(&l, &AttemptConfig::default()).unwrap();
            // Every live slot is referenced by some surviving path.
            let live: usize = dec.mem.alpha.iter().map(|p| p.live()).sum();
            assert!(live <= 8 * (code.stages() + 1) + 1, "{live}");
        }
    }
}
