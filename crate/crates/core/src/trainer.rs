//! Online training of the flip-metric threshold.
//!
//! Each CRC-fixed frame yields a sample: the per-index metrics `Q`, their
//! derivatives `dQ` with respect to the threshold, and the index that fixed
//! the frame. A softmin over `-Q` predicts that index; the threshold follows
//! mini-batch gradient descent on the binary cross-entropy of the prediction
//! and stops moving after a fixed number of updates.

use rand::Rng;
use serde::Serialize;

use crate::flip::TrainingSample;
use crate::instrument::CostLedger;

/// Floor applied inside logarithms.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpMode {
    Exact,
    /// Truncated series of the given order, clipped at zero.
    Taylor(u32),
}

impl ExpMode {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ExpMode::Exact => x.exp(),
            ExpMode::Taylor(t) => exp_taylor(x, t),
        }
    }
}

/// `max(0, sum_{t=0}^{order} x^t / t!)`.
pub fn exp_taylor(x: f64, order: u32) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for t in 1..=order {
        term *= x / f64::from(t);
        sum += term;
    }
    sum.max(0.0)
}

/// Normalised weights `phi(-Q_k) / sum_j phi(-Q_j)`. Infinite entries get
/// zero weight. `None` when every weight vanishes.
pub fn softmin(q: &[f64], mode: ExpMode) -> Option<Vec<f64>> {
    let phi: Vec<f64> = q
        .iter()
        .map(|&v| if v.is_finite() { mode.eval(-v) } else { 0.0 })
        .collect();
    let total: f64 = phi.iter().sum();
    if total <= 0.0 {
        return None;
    }
    Some(phi.into_iter().map(|p| p / total).collect())
}

/// Binary cross-entropy of a one-hot target against a prediction.
pub fn bce(target: usize, o_hat: &[f64]) -> f64 {
    o_hat
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            if k == target {
                -p.max(LOG_FLOOR).ln()
            } else {
                -(1.0 - p).max(LOG_FLOOR).ln()
            }
        })
        .sum()
}

/// Derivative of [`bce`] with respect to the threshold, given the metric
/// derivatives `dq`. Terms whose weight or complement vanish are skipped.
pub fn loss_gradient(q: &[f64], dq: &[f64], target: usize, mode: ExpMode) -> Option<f64> {
    gradient_counted(q, dq, target, mode, None)
}

fn gradient_counted(
    q: &[f64],
    dq: &[f64],
    target: usize,
    mode: ExpMode,
    mut ledger: Option<&mut CostLedger>,
) -> Option<f64> {
    let mut phi = Vec::with_capacity(q.len());
    let mut finite = 0u64;
    for &v in q {
        if v.is_finite() {
            finite += 1;
            phi.push(mode.eval(-v));
        } else {
            phi.push(0.0);
        }
    }
    let total: f64 = phi.iter().sum();
    if let Some(l) = ledger.as_deref_mut() {
        let order = match mode {
            ExpMode::Taylor(t) => u64::from(t),
            ExpMode::Exact => 3,
        };
        l.mult(order * finite);
        l.add(order * finite + finite.saturating_sub(1));
        l.cmp(finite);
        l.div(finite);
    }
    if total <= 0.0 {
        return None;
    }
    let dphi: Vec<f64> = phi.iter().zip(dq).map(|(p, d)| -p * d).collect();
    let dsum: f64 = dphi.iter().sum();
    let mut grad = 0.0;
    let mut terms = 0u64;
    for k in 0..q.len() {
        if phi[k] == 0.0 {
            continue;
        }
        let o_hat = phi[k] / total;
        let denom = (1.0 - o_hat) * phi[k];
        if denom == 0.0 {
            continue;
        }
        let o = if k == target { 1.0 } else { 0.0 };
        grad += (o_hat - o) / denom * (dphi[k] - o_hat * dsum);
        terms += 1;
    }
    if let Some(l) = ledger {
        l.mult(finite + 3 * terms);
        l.add(finite.saturating_sub(1) + 4 * terms);
        l.div(terms);
    }
    Some(grad)
}

/// Initial threshold drawn uniformly from `(0, 1)`.
pub fn init_theta<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainerConfig {
    pub learning_rate: f64,
    pub batch: usize,
    pub exp: ExpMode,
    pub update_cap: usize,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            learning_rate: 1.0 / 16.0,
            batch: 32,
            exp: ExpMode::Taylor(3),
            update_cap: 50,
        }
    }
}

impl TrainerConfig {
    /// Step applied per unit of accumulated gradient, `learning_rate / batch`.
    pub fn step(&self) -> f64 {
        self.learning_rate / self.batch as f64
    }
}

/// One threshold update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ThetaUpdate {
    pub update_index: usize,
    pub theta: f64,
    /// Fraction of the batch whose first retry was the fixing one.
    pub train_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct OnlineTrainer {
    cfg: TrainerConfig,
    theta: f64,
    delta: f64,
    count: usize,
    updates: usize,
    batch_hits: usize,
    history: Vec<ThetaUpdate>,
}

impl OnlineTrainer {
    pub fn new(cfg: TrainerConfig, theta0: f64) -> Self {
        OnlineTrainer {
            cfg,
            theta: theta0,
            delta: 0.0,
            count: 0,
            updates: 0,
            batch_hits: 0,
            history: Vec::new(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    /// Accepted samples so far.
    pub fn samples(&self) -> usize {
        self.count
    }

    pub fn is_frozen(&self) -> bool {
        self.updates >= self.cfg.update_cap
    }

    pub fn history(&self) -> &[ThetaUpdate] {
        &self.history
    }

    /// Feeds one sample. `top1` tells whether the first retry fixed the frame.
    /// Returns whether the threshold moved.
    pub fn submit(&mut self, sample: &TrainingSample, top1: bool, ledger: &mut CostLedger) -> bool {
        if self.is_frozen() {
            return false;
        }
        let dq: Vec<f64> = sample.dq.iter().map(|&d| f64::from(d)).collect();
        let Some(grad) = gradient_counted(&sample.q, &dq, sample.target, self.cfg.exp, Some(ledger)) else {
            return false;
        };
        self.count += 1;
        self.delta += grad;
        self.batch_hits += usize::from(top1);
        ledger.add(1);
        if self.count.is_multiple_of(self.cfg.batch) {
            self.theta -= self.cfg.step() * self.delta;
            self.delta = 0.0;
            self.updates += 1;
            ledger.mult(1);
            ledger.add(1);
            self.history.push(ThetaUpdate {
                update_index: self.updates,
                theta: self.theta,
                train_accuracy: self.batch_hits as f64 / self.cfg.batch as f64,
            });
            self.batch_hits = 0;
            return true;
        }
        false
    }

    /// Applies an externally computed accumulated gradient as if a batch closed.
    pub fn apply_accumulated(&mut self, delta: f64) {
        self.theta -= self.cfg.step() * delta;
    }
}
