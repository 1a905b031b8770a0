//! Recursive best-first tree search over a factorized distribution.
//!
//! Nodes are popped from a max-priority queue of global masses. Each popped
//! node extends the current partial solution; while complexity budget
//! remains, the search recurses on a private copy of the queue. Children are
//! pushed only after the recursive call returns, so every queued node is
//! leaf-disjoint from the current partial solution and masses add.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use web_time::Instant;

use crate::error::{Error, Result};
use crate::hierarchy::{Budgets, ClassSet, Hierarchy, NodeId};
use crate::prediction::{elapsed_us, Prediction};
use crate::prob::HierarchicalDistribution;

/// Queue entry ordered by mass, larger first, then by node id, smaller first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueEntry {
    pub node: NodeId,
    pub mass: f64,
}

impl Eq for QueueEntry {}

impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mass
            .total_cmp(&other.mass)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub type SearchQueue = BinaryHeap<QueueEntry>;

/// One pop, as seen by [`solve_rts_traced`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopEvent {
    /// Sequence number of the recursive call that popped the node.
    pub call: usize,
    /// Remaining complexity budget of that call.
    pub depth_left: usize,
    pub node: NodeId,
    pub mass: f64,
    /// Queue length just before the pop.
    pub queue_len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtsRun {
    pub prediction: Prediction,
    /// Nodes forming the returned set, ordered by class interval.
    pub selection: Vec<NodeId>,
    pub trace: Vec<PopEvent>,
}

struct Search<'a> {
    h: &'a Hierarchy,
    d: &'a HierarchicalDistribution,
    k: usize,
    best: Vec<NodeId>,
    best_mass: f64,
    best_size: usize,
    pops: u64,
    calls: usize,
    trace: Option<Vec<PopEvent>>,
}

impl Search<'_> {
    fn find(
        &mut self,
        depth_left: usize,
        current: &mut Vec<NodeId>,
        cur_size: usize,
        cur_mass: f64,
        mut queue: SearchQueue,
    ) {
        let call = self.calls;
        self.calls += 1;
        while let Some(QueueEntry { node: v, mass: p_v }) = queue.peek().copied() {
            if let Some(t) = self.trace.as_mut() {
                t.push(PopEvent {
                    call,
                    depth_left,
                    node: v,
                    mass: p_v,
                    queue_len: queue.len(),
                });
            }
            queue.pop();
            self.pops += 1;
            let iv = self.h.interval(v);
            debug_assert!(
                current.iter().all(|&u| self.h.interval(u).is_disjoint(&iv)),
                "popped node overlaps the partial solution"
            );
            let size = cur_size + iv.width();
            let mass = cur_mass + p_v;
            if size <= self.k {
                current.push(v);
                if mass >= self.best_mass {
                    self.best.clone_from(current);
                    self.best_mass = mass;
                    self.best_size = size;
                }
                if depth_left > 1 {
                    if size != self.k {
                        self.find(depth_left - 1, current, size, mass, queue.clone());
                    }
                    current.pop();
                } else {
                    current.pop();
                    break;
                }
            }
            if self.h.is_leaf(v) {
                break;
            }
            for (&c, &p) in self.h.children(v).iter().zip(self.d.child_conditionals(v)) {
                queue.push(QueueEntry {
                    node: c,
                    mass: p_v * p,
                });
            }
        }
    }
}

fn run(h: &Hierarchy, d: &HierarchicalDistribution, b: Budgets, trace: bool) -> Result<RtsRun> {
    let start = Instant::now();
    let mut search = Search {
        h,
        d,
        k: b.k,
        best: Vec::new(),
        best_mass: 0.0,
        best_size: 0,
        pops: 0,
        calls: 0,
        trace: trace.then(Vec::new),
    };
    let mut queue = SearchQueue::new();
    queue.push(QueueEntry {
        node: h.root(),
        mass: 1.0,
    });
    search.find(b.r, &mut Vec::with_capacity(b.r), 0, 0.0, queue);
    if search.best.is_empty() {
        return Err(Error::InfeasibleBudget);
    }
    let time_us = elapsed_us(start);

    let mut selection = search.best;
    selection.sort_by_key(|&v| h.interval(v).lo);
    let set = ClassSet::new(selection.iter().flat_map(|&v| {
        let iv = h.interval(v);
        iv.lo..iv.hi
    }));
    debug_assert_eq!(set.len(), search.best_size);
    Ok(RtsRun {
        prediction: Prediction {
            set,
            mass: search.best_mass,
            n: search.pops,
            time_us,
        },
        selection,
        trace: search.trace.unwrap_or_default(),
    })
}

pub fn solve_rts(h: &Hierarchy, d: &HierarchicalDistribution, b: Budgets) -> Result<Prediction> {
    run(h, d, b, false).map(|r| r.prediction)
}

/// Like [`solve_rts`], also recording every pop.
pub fn solve_rts_traced(h: &Hierarchy, d: &HierarchicalDistribution, b: Budgets) -> Result<RtsRun> {
    run(h, d, b, true)
}

/// `(ceil(log2 K))^r`, the pop bound stated for complete binary trees.
pub fn pop_bound(classes: usize, r: usize) -> f64 {
    let depth = (classes as f64).log2().ceil();
    depth.powi(r as i32)
}

/// Total pops for one instance; the complete-binary-tree bound is logged
/// alongside.
pub fn pop_count_report(h: &Hierarchy, d: &HierarchicalDistribution, b: Budgets) -> Result<u64> {
    let n = solve_rts(h, d, b)?.n;
    log::info!(
        "tree search popped {n} nodes (K={}, r={}, k={}); (ceil log2 K)^r = {}",
        h.class_count(),
        b.r,
        b.k,
        pop_bound(h.class_count(), b.r)
    );
    Ok(n)
}
