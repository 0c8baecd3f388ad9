//! Decoding schedules and special-node metrics.
//!
//! A schedule partitions the decoding tree into terminal nodes. The bitwise
//! schedule stops at every leaf; the fast schedule stops at the largest
//! subtrees whose frozen pattern is Rate-0, Rate-1, repetition or single
//! parity check. Every information position that can fork a path gets a
//! 1-based split index `k`; the SPC parity bit gets none.

use crate::codebook::PolarCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Rate0,
    Rate1,
    Rep,
    Spc,
}

/// A terminal node of a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpecialNode {
    pub kind: NodeKind,
    pub stage: usize,
    pub start: usize,
    /// Number of split positions in all earlier nodes.
    pub k_start: usize,
}

impl SpecialNode {
    pub fn len(&self) -> usize {
        1 << self.stage
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Split positions contributed by this node.
    pub fn positions(&self) -> usize {
        match self.kind {
            NodeKind::Rate0 => 0,
            NodeKind::Rep => 1,
            NodeKind::Rate1 => self.len(),
            NodeKind::Spc => self.len() - 1,
        }
    }

    /// Positions decided by forking before the node switches to hard decisions.
    pub fn fork_limit(&self, list: usize) -> usize {
        let l = list.saturating_sub(1);
        match self.kind {
            NodeKind::Rate0 => 0,
            NodeKind::Rep => 1,
            NodeKind::Rate1 => l.min(self.len()),
            NodeKind::Spc => l.min(self.len() - 1),
        }
    }
}

/// How the decoder treats one split index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PositionKind {
    /// Paths fork and the list is pruned on path metric.
    Fork,
    /// Every path takes its hard decision.
    Hard,
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum TreeNode {
    Branch { stage: usize, left: u32, right: u32 },
    Terminal(u32),
}

#[derive(Clone, Debug)]
pub struct Schedule {
    pub(crate) tree: Vec<TreeNode>,
    nodes: Vec<SpecialNode>,
    positions: usize,
    stages: usize,
}

impl Schedule {
    /// Greedy top-down special-node decomposition.
    pub fn fast(code: &PolarCode) -> Self {
        Self::build(code.frozen_mask(), true)
    }

    /// One terminal per leaf: frozen leaves are Rate-0 and information
    /// leaves are length-1 repetition nodes.
    pub fn bitwise(code: &PolarCode) -> Self {
        Self::build(code.frozen_mask(), false)
    }

    pub fn from_frozen_mask(frozen: &[bool], fast: bool) -> Self {
        Self::build(frozen, fast)
    }

    fn build(frozen: &[bool], fast: bool) -> Self {
        assert!(frozen.len().is_power_of_two());
        let stages = frozen.len().trailing_zeros() as usize;
        let mut s = Schedule {
            tree: Vec::new(),
            nodes: Vec::new(),
            positions: 0,
            stages,
        };
        s.grow(frozen, stages, 0, fast);
        s
    }

    fn grow(&mut self, frozen: &[bool], stage: usize, start: usize, fast: bool) -> u32 {
        let m = 1 << stage;
        let kind = if fast {
            classify(&frozen[start..start + m])
        } else if m == 1 {
            Some(if frozen[start] { NodeKind::Rate0 } else { NodeKind::Rep })
        } else {
            None
        };
        let id = self.tree.len() as u32;
        match kind {
            Some(kind) => {
                let node = SpecialNode {
                    kind,
                    stage,
                    start,
                    k_start: self.positions,
                };
                self.positions += node.positions();
                self.tree.push(TreeNode::Terminal(self.nodes.len() as u32));
                self.nodes.push(node);
            }
            None => {
                self.tree.push(TreeNode::Branch {
                    stage,
                    left: 0,
                    right: 0,
                });
                let left = self.grow(frozen, stage - 1, start, fast);
                let right = self.grow(frozen, stage - 1, start + m / 2, fast);
                self.tree[id as usize] = TreeNode::Branch { stage, left, right };
            }
        }
        id
    }

    /// Terminals in decoding order.
    pub fn nodes(&self) -> &[SpecialNode] {
        &self.nodes
    }

    /// Total number of split indices; equals `K + C`.
    pub fn positions(&self) -> usize {
        self.positions
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Terminal holding split index `k` (1-based) and the offset inside it.
    pub fn locate(&self, k: usize) -> Option<(&SpecialNode, usize)> {
        if k == 0 || k > self.positions {
            return None;
        }
        let idx = self.nodes.partition_point(|n| n.k_start < k) - 1;
        let node = &self.nodes[idx];
        Some((node, k - 1 - node.k_start))
    }

    pub fn position_kind(&self, k: usize, list: usize) -> Option<PositionKind> {
        let (node, j) = self.locate(k)?;
        Some(if j < node.fork_limit(list) {
            PositionKind::Fork
        } else {
            PositionKind::Hard
        })
    }

    pub fn count(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }
}

/// Classifies a frozen pattern, or `None` if it is not a special node.
pub fn classify(frozen: &[bool]) -> Option<NodeKind> {
    let m = frozen.len();
    let n_frozen = frozen.iter().filter(|&&f| f).count();
    if n_frozen == m {
        Some(NodeKind::Rate0)
    } else if m == 1 {
        Some(NodeKind::Rep)
    } else if n_frozen == 0 {
        Some(NodeKind::Rate1)
    } else if n_frozen == m - 1 && !frozen[m - 1] {
        Some(NodeKind::Rep)
    } else if n_frozen == 1 && frozen[0] {
        Some(NodeKind::Spc)
    } else {
        None
    }
}

/// Metric penalty of forcing all bits of a Rate-0 node to zero.
pub fn rate0_penalty(alpha: &[f64]) -> f64 {
    alpha.iter().map(|a| (a.abs() - a) / 2.0).sum()
}

/// Repetition-node quantities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepMetrics {
    /// Sum of the node LLRs; its sign gives the preferred bit.
    pub gamma: f64,
    /// Penalty of deciding all zeros.
    pub pen0: f64,
    /// Penalty of deciding all ones.
    pub pen1: f64,
}

pub fn rep_metrics(alpha: &[f64]) -> RepMetrics {
    let gamma: f64 = alpha.iter().sum();
    let pen0: f64 = alpha.iter().filter(|a| **a < 0.0).map(|a| -a).sum();
    RepMetrics {
        gamma,
        pen0,
        pen1: pen0 + gamma,
    }
}

/// Positions sorted by increasing `|alpha|`, ties to the lower index.
pub fn magnitude_order(alpha: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..alpha.len()).collect();
    order.sort_by(|&a, &b| alpha[a].abs().total_cmp(&alpha[b].abs()));
    order
}

/// Parity of the hard decisions and the least reliable position.
pub fn spc_parity(alpha: &[f64]) -> (u8, usize) {
    let p = alpha.iter().fold(0u8, |acc, &a| acc ^ crate::sc::hard(a));
    let weakest = magnitude_order(alpha)[0];
    (p, weakest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::{nr_reliability, Crc};
    use proptest::prelude::*;

    fn code16() -> PolarCode {
        let frozen: Vec<usize> = [1, 2, 3, 4, 5, 9, 10, 11].iter().map(|i| i - 1).collect();
        PolarCode::from_frozen(16, 8, Crc::none(), &frozen).unwrap()
    }

    #[test]
    fn sixteen_bit_decomposition() {
        let s = Schedule::fast(&code16());
        let got: Vec<(NodeKind, usize, usize)> = s
            .nodes()
            .iter()
            .map(|n| (n.kind, n.start + 1, n.start + n.len()))
            .collect();
        assert_eq!(
            got,
            vec![
                (NodeKind::Rate0, 1, 4),
                (NodeKind::Spc, 5, 8),
                (NodeKind::Rep, 9, 12),
                (NodeKind::Rate1, 13, 16),
            ]
        );
        assert_eq!(s.positions(), 8);
        let ks: Vec<usize> = s.nodes().iter().map(|n| n.k_start).collect();
        assert_eq!(ks, vec![0, 0, 3, 4]);
    }

    #[test]
    fn bitwise_schedule_has_every_leaf() {
        let s = Schedule::bitwise(&code16());
        assert_eq!(s.nodes().len(), 16);
        assert_eq!(s.count(NodeKind::Rep), 8);
        assert_eq!(s.positions(), 8);
    }

    #[test]
    fn node_metric_values() {
        assert_eq!(rate0_penalty(&[2.0, -1.0, 3.0, -4.0]), 5.0);
        let r = rep_metrics(&[1.0, -2.0, 3.0, -1.0]);
        assert_eq!((r.pen0, r.pen1, r.gamma), (3.0, 4.0, 1.0));
        assert_eq!(spc_parity(&[-1.0, 2.0, -3.0, 4.0]), (0, 0));
    }

    #[test]
    fn classification_edges() {
        assert_eq!(classify(&[true, false]), Some(NodeKind::Rep));
        assert_eq!(classify(&[false, true]), None);
        assert_eq!(classify(&[false]), Some(NodeKind::Rep));
        assert_eq!(classify(&[true]), Some(NodeKind::Rate0));
        assert_eq!(classify(&[true, false, false, false]), Some(NodeKind::Spc));
        assert_eq!(classify(&[true, true, false, false]), None);
    }

    #[test]
    fn locate_and_fork_limits() {
        let s = Schedule::fast(&code16());
        // SPC of length 4 holds k = 1..3, all forks when L = 4.
        assert_eq!(s.position_kind(1, 4), Some(PositionKind::Fork));
        assert_eq!(s.position_kind(3, 4), Some(PositionKind::Fork));
        assert_eq!(s.position_kind(4, 4), Some(PositionKind::Fork));
        // Rate-1 of length 4 with L = 2 forks once, then hard decisions.
        assert_eq!(s.position_kind(5, 2), Some(PositionKind::Fork));
        assert_eq!(s.position_kind(6, 2), Some(PositionKind::Hard));
        assert_eq!(s.position_kind(0, 2), None);
        assert_eq!(s.position_kind(9, 2), None);
    }

    proptest! {
        #[test]
        fn fast_schedule_tiles_the_code(k in 1usize..=120, seed in 0usize..4) {
            let order = nr_reliability(128).unwrap();
            let crc = [Crc::none(), Crc::standard(6).unwrap(), Crc::standard(8).unwrap(), Crc::standard(11).unwrap()][seed];
            prop_assume!(k + crc.len() <= 128);
            let code = PolarCode::from_reliability(128, k, crc, &order).unwrap();
            let s = Schedule::fast(&code);
            prop_assert_eq!(s.positions(), code.info_len());
            let mut next = 0;
            for node in s.nodes() {
                prop_assert_eq!(node.start, next);
                prop_assert_eq!(classify(&code.frozen_mask()[node.start..node.start + node.len()]), Some(node.kind));
                next += node.len();
            }
            prop_assert_eq!(next, 128);
        }

        #[test]
        fn rep_penalties_are_consistent(a in proptest::collection::vec(-10.0f64..10.0, 1..16)) {
            let r = rep_metrics(&a);
            let p0: f64 = a.iter().map(|x| if *x < 0.0 { -x } else { 0.0 }).sum();
            let p1: f64 = a.iter().map(|x| if *x > 0.0 { *x } else { 0.0 }).sum();
            prop_assert!((r.pen0 - p0).abs() < 1e-9);
            prop_assert!((r.pen1 - p1).abs() < 1e-9);
        }
    }
}
