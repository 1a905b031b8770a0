//! Knapsack with conflict graph over tree nodes, solved by depth-first
//! branch-and-bound.
//!
//! Items are tree nodes with profit `P(v | x)` and weight `|v|`. A selection
//! is feasible when it holds at most `r` items, its weights sum to at most
//! `k`, and no two selected items share a conflict edge. On a tree the
//! conflict edges are exactly the ancestor-descendant pairs, so feasible
//! selections are disjoint node families and their unions are the feasible
//! class sets.

use web_time::Instant;

use crate::hierarchy::{Budgets, ClassSet, Hierarchy, NodeId};
use crate::prediction::{elapsed_us, Prediction};
use crate::prob::{all_node_masses, FlatDistribution};

/// Undirected conflict graph on item indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    items: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl ConflictGraph {
    pub fn new(items: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); items];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        ConflictGraph {
            items,
            edges,
            adjacency,
        }
    }

    /// Every ancestor-descendant pair of the tree, as `(ancestor, descendant)`.
    pub fn from_tree(h: &Hierarchy) -> Self {
        let mut edges = Vec::new();
        for v in 0..h.node_count() {
            let mut cur = h.parent(v);
            while let Some(a) = cur {
                edges.push((a, v));
                cur = h.parent(a);
            }
        }
        Self::new(h.node_count(), edges)
    }

    pub fn item_count(&self) -> usize {
        self.items
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn conflicts(&self, a: usize, b: usize) -> bool {
        let (x, y) = if self.adjacency[a].len() <= self.adjacency[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adjacency[x].binary_search(&y).is_ok()
    }

    /// Shape of the constraint matrix: one count row, one weight row and one
    /// row per conflict edge, over all items.
    pub fn ilp_dimensions(&self) -> (usize, usize) {
        (2 + self.edges.len(), self.items)
    }
}

pub fn build_conflict_graph(h: &Hierarchy) -> ConflictGraph {
    ConflictGraph::from_tree(h)
}

pub fn ilp_dimensions(h: &Hierarchy) -> (usize, usize) {
    let edges: usize = (0..h.node_count()).map(|v| h.depth(v)).sum();
    (2 + edges, h.node_count())
}

/// One knapsack instance over the nodes of `hierarchy`.
#[derive(Debug, Clone)]
pub struct KcgInstance<'a> {
    pub hierarchy: &'a Hierarchy,
    pub conflicts: &'a ConflictGraph,
    pub item_mass: Vec<f64>,
    pub item_weight: Vec<usize>,
    pub count_budget: usize,
    pub weight_budget: usize,
}

impl<'a> KcgInstance<'a> {
    pub fn new(
        hierarchy: &'a Hierarchy,
        conflicts: &'a ConflictGraph,
        d: &FlatDistribution,
        b: Budgets,
    ) -> Self {
        KcgInstance {
            hierarchy,
            conflicts,
            item_mass: all_node_masses(hierarchy, d).mass,
            item_weight: (0..hierarchy.node_count())
                .map(|v| hierarchy.weight(v))
                .collect(),
            count_budget: b.r,
            weight_budget: b.k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KcgOptions {
    /// Cut subtrees whose bound cannot beat the incumbent. Off only to
    /// check the bound in tests.
    pub prune: bool,
}

impl Default for KcgOptions {
    fn default() -> Self {
        KcgOptions { prune: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KcgSolution {
    /// `n` is the number of branch-and-bound nodes visited.
    pub prediction: Prediction,
    /// Selected nodes, ordered by class interval.
    pub selection: Vec<NodeId>,
    pub ilp_dims: (usize, usize),
}

struct Search<'s> {
    mass: &'s [f64],
    weight: &'s [usize],
    conflicts: &'s ConflictGraph,
    order: Vec<usize>,
    prune: bool,
    chosen: Vec<usize>,
    best: Vec<usize>,
    best_mass: f64,
    visited: u64,
}

impl Search<'_> {
    fn eligible(&self, item: usize, weight_left: usize) -> bool {
        self.weight[item] <= weight_left
            && self
                .chosen
                .iter()
                .all(|&c| !self.conflicts.conflicts(c, item))
    }

    /// Current mass plus the largest `count_left` masses still eligible.
    fn bound(&self, from: usize, cur: f64, count_left: usize, weight_left: usize) -> f64 {
        cur + self.order[from..]
            .iter()
            .filter(|&&i| self.eligible(i, weight_left))
            .take(count_left)
            .map(|&i| self.mass[i])
            .sum::<f64>()
    }

    fn dfs(&mut self, from: usize, cur: f64, count_left: usize, weight_left: usize) {
        self.visited += 1;
        if !self.chosen.is_empty() && cur > self.best_mass {
            self.best_mass = cur;
            self.best.clone_from(&self.chosen);
        }
        if count_left == 0 || weight_left == 0 {
            return;
        }
        if self.prune
            && !self.best.is_empty()
            && self.bound(from, cur, count_left, weight_left) <= self.best_mass
        {
            return;
        }
        let Some(pos) =
            (from..self.order.len()).find(|&p| self.eligible(self.order[p], weight_left))
        else {
            return;
        };
        let item = self.order[pos];
        self.chosen.push(item);
        self.dfs(
            pos + 1,
            cur + self.mass[item],
            count_left - 1,
            weight_left - self.weight[item],
        );
        self.chosen.pop();
        self.dfs(pos + 1, cur, count_left, weight_left);
    }
}

pub fn solve_kcg(inst: &KcgInstance) -> KcgSolution {
    solve_kcg_with(inst, KcgOptions::default())
}

/// Builds the instance from a flat distribution and solves it; the reported
/// time includes computing the node masses.
pub fn solve_kcg_flat(
    h: &Hierarchy,
    g: &ConflictGraph,
    d: &FlatDistribution,
    b: Budgets,
) -> KcgSolution {
    let start = Instant::now();
    let mut sol = solve_kcg(&KcgInstance::new(h, g, d, b));
    sol.prediction.time_us = elapsed_us(start);
    sol
}

pub fn solve_kcg_with(inst: &KcgInstance, opts: KcgOptions) -> KcgSolution {
    let start = Instant::now();
    let mut order: Vec<usize> = (0..inst.item_mass.len())
        .filter(|&i| inst.item_weight[i] <= inst.weight_budget)
        .collect();
    order.sort_by(|&a, &b| {
        inst.item_mass[b]
            .total_cmp(&inst.item_mass[a])
            .then(a.cmp(&b))
    });
    let mut search = Search {
        mass: &inst.item_mass,
        weight: &inst.item_weight,
        conflicts: inst.conflicts,
        order,
        prune: opts.prune,
        chosen: Vec::with_capacity(inst.count_budget),
        best: Vec::new(),
        best_mass: f64::NEG_INFINITY,
        visited: 0,
    };
    search.dfs(0, 0.0, inst.count_budget, inst.weight_budget);

    let h = inst.hierarchy;
    let mut selection = search.best;
    selection.sort_by_key(|&v| h.interval(v).lo);
    let set = ClassSet::new(selection.iter().flat_map(|&v| {
        let iv = h.interval(v);
        iv.lo..iv.hi
    }));
    KcgSolution {
        prediction: Prediction {
            set,
            mass: search.best_mass.max(0.0),
            n: search.visited,
            time_us: elapsed_us(start),
        },
        selection,
        ilp_dims: inst.conflicts.ilp_dimensions(),
    }
}
