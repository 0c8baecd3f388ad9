//! List-flip decoding: one list attempt, then up to `m` retries, each
//! reversing a single decision chosen by the flip metric.

use serde::Serialize;

use crate::codebook::PolarCode;
use crate::fscl::{PositionKind, Schedule};
use crate::instrument::CostLedger;
use crate::sc::list::{Attempt, AttemptConfig, DecodeError, ListDecoder, MetricConfig, Selection};

/// How a retry reverses the decision at its target index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipAction {
    /// Keep the `L` worst candidates of the pruning fork instead of the best.
    ReversedSelection,
    /// Every path takes the opposite hard decision.
    HardFlip,
}

pub fn flip_action(schedule: &Schedule, k: usize, list: usize) -> Option<FlipAction> {
    schedule.position_kind(k, list).map(|p| match p {
        PositionKind::Fork => FlipAction::ReversedSelection,
        PositionKind::Hard => FlipAction::HardFlip,
    })
}

/// 1-based indices of the `m` smallest finite metrics, ties to the lower index.
pub fn select_candidates(q: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..q.len()).filter(|&i| q[i].is_finite()).collect();
    idx.sort_by(|&a, &b| q[a].total_cmp(&q[b]));
    idx.truncate(m);
    idx.into_iter().map(|i| i + 1).collect()
}

/// One labelled example for threshold training.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingSample {
    pub q: Vec<f64>,
    pub dq: Vec<i32>,
    /// 0-based index of the decision whose reversal fixed the frame.
    pub target: usize,
}

#[derive(Clone, Debug)]
pub struct FlipOutcome {
    pub attempt: Attempt,
    /// Attempts run, the initial one included.
    pub attempts: usize,
    pub initial_crc_ok: bool,
    /// Retry rank (0-based) that passed the CRC.
    pub fixed_by: Option<usize>,
    pub sample: Option<TrainingSample>,
    /// First index where the true path was lost (ideal decoding only).
    pub elimination: Option<usize>,
    pub cost: CostLedger,
}

/// Flip decoder over either schedule.
#[derive(Clone, Debug)]
pub struct FlipDecoder {
    engine: ListDecoder,
    max_flips: usize,
    dq_bits: u32,
}

impl FlipDecoder {
    pub fn new(engine: ListDecoder, max_flips: usize, dq_bits: u32) -> Self {
        FlipDecoder {
            engine,
            max_flips,
            dq_bits,
        }
    }

    /// Flip decoding over the special-node schedule.
    pub fn fast(code: &PolarCode, list: usize, max_flips: usize, dq_bits: u32) -> Result<Self, DecodeError> {
        Ok(Self::new(ListDecoder::fscl(code, list)?, max_flips, dq_bits))
    }

    /// Flip decoding over the bitwise schedule.
    pub fn bitwise(code: &PolarCode, list: usize, max_flips: usize, dq_bits: u32) -> Result<Self, DecodeError> {
        Ok(Self::new(ListDecoder::scl(code, list)?, max_flips, dq_bits))
    }

    pub fn engine(&self) -> &ListDecoder {
        &self.engine
    }

    pub fn max_flips(&self) -> usize {
        self.max_flips
    }

    pub fn decode(&mut self, llr: &[f64], theta: f64) -> Result<FlipOutcome, DecodeError> {
        let cfg = AttemptConfig {
            metric: Some(MetricConfig::with_bits(theta, self.dq_bits)),
            ..Default::default()
        };
        let first = self.engine.decode(llr, &cfg)?;
        let mut cost = *self.engine.cost();
        if first.crc_ok {
            return Ok(FlipOutcome {
                attempt: first,
                attempts: 1,
                initial_crc_ok: true,
                fixed_by: None,
                sample: None,
                elimination: None,
                cost,
            });
        }
        let (q, dq) = self.engine.flip_metrics();
        let (q, dq) = (q.to_vec(), dq.to_vec());
        let finite = q.iter().filter(|v| v.is_finite()).count();
        cost.sort(finite);
        let candidates = select_candidates(&q, self.max_flips);
        let mut attempts = 1;
        for (rank, &k) in candidates.iter().enumerate() {
            let retry = self.engine.decode(
                llr,
                &AttemptConfig {
                    flip: Some(k),
                    ..Default::default()
                },
            )?;
            attempts += 1;
            cost.absorb(self.engine.cost());
            if retry.crc_ok {
                return Ok(FlipOutcome {
                    attempt: retry,
                    attempts,
                    initial_crc_ok: false,
                    fixed_by: Some(rank),
                    sample: Some(TrainingSample { q, dq, target: k - 1 }),
                    elimination: None,
                    cost,
                });
            }
        }
        Ok(FlipOutcome {
            attempt: first,
            attempts,
            initial_crc_ok: false,
            fixed_by: None,
            sample: None,
            elimination: None,
            cost,
        })
    }

    /// Genie-aided decoding: the true input vector reveals where the correct
    /// path is first lost, and a single retry reverses exactly that decision.
    pub fn decode_ideal(&mut self, llr: &[f64], truth: &[u8], selection: Selection) -> Result<FlipOutcome, DecodeError> {
        let first = self.engine.decode(
            llr,
            &AttemptConfig {
                truth: Some(truth),
                selection,
                ..Default::default()
            },
        )?;
        let mut cost = *self.engine.cost();
        let elimination = self.engine.first_elimination();
        let Some(k) = elimination else {
            return Ok(FlipOutcome {
                initial_crc_ok: first.crc_ok,
                attempt: first,
                attempts: 1,
                fixed_by: None,
                sample: None,
                elimination,
                cost,
            });
        };
        let retry = self.engine.decode(
            llr,
            &AttemptConfig {
                flip: Some(k),
                truth: Some(truth),
                selection,
                ..Default::default()
            },
        )?;
        cost.absorb(self.engine.cost());
        Ok(FlipOutcome {
            initial_crc_ok: first.crc_ok,
            fixed_by: retry.crc_ok.then_some(0),
            attempt: retry,
            attempts: 2,
            sample: None,
            elimination,
            cost,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Crc;

    #[test]
    fn candidate_selection() {
        let inf = f64::INFINITY;
        assert_eq!(select_candidates(&[inf, 3.0, 1.0, 2.0], 2), vec![3, 4]);
        assert_eq!(select_candidates(&[1.0, 1.0, 1.0, 1.0], 3), vec![1, 2, 3]);
        assert_eq!(select_candidates(&[inf, inf], 3), Vec::<usize>::new());
        assert_eq!(select_candidates(&[2.0, inf, 0.5], 10), vec![3, 1]);
    }

    #[test]
    fn actions_follow_fork_limits() {
        let frozen: Vec<usize> = [1, 2, 3, 4, 5, 9, 10, 11].iter().map(|i| i - 1).collect();
        let code = PolarCode::from_frozen(16, 8, Crc::none(), &frozen).unwrap();
        let s = Schedule::fast(&code);
        assert_eq!(flip_action(&s, 4, 2), Some(FlipAction::ReversedSelection));
        assert_eq!(flip_action(&s, 5, 2), Some(FlipAction::ReversedSelection));
        assert_eq!(flip_action(&s, 6, 2), Some(FlipAction::HardFlip));
        assert_eq!(flip_action(&s, 8, 8), Some(FlipAction::ReversedSelection));
        assert_eq!(flip_action(&s, 9, 8), None);
    }
}
