//! Class hierarchy, representation complexity and feasible-set enumeration.
//!
//! Every node of the tree owns a contiguous, half-open interval of class
//! indices. Classes are numbered by the depth-first order of their leaves,
//! visiting children in declaration order, so that two node leaf-sets are
//! either nested or disjoint and both tests reduce to interval comparisons.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Index of a node inside a [`Hierarchy`] (its position in the input list).
pub type NodeId = usize;

/// Half-open range `[lo, hi)` of class indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lo: usize,
    pub hi: usize,
}

impl Interval {
    pub fn width(&self) -> usize {
        self.hi - self.lo
    }

    pub fn contains_class(&self, c: usize) -> bool {
        self.lo <= c && c < self.hi
    }

    /// `other` is a (not necessarily strict) subset of `self`.
    pub fn contains(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_disjoint(&self, other: &Interval) -> bool {
        self.hi <= other.lo || other.hi <= self.lo
    }

    pub fn overlap(&self, other: &Interval) -> usize {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        hi.saturating_sub(lo)
    }
}

/// One declared node: external id, parent id (`None` for the root) and label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub id: u64,
    pub parent: Option<u64>,
    pub name: String,
}

impl NodeSpec {
    pub fn new(id: u64, parent: Option<u64>, name: impl Into<String>) -> Self {
        NodeSpec {
            id,
            parent,
            name: name.into(),
        }
    }
}

/// Validated rooted tree over `K` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct Hierarchy {
    ids: Vec<u64>,
    names: Vec<String>,
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
    interval: Vec<Interval>,
    depth: Vec<usize>,
    leaf_of_class: Vec<NodeId>,
    preorder: Vec<NodeId>,
    root: NodeId,
    by_id: HashMap<u64, NodeId>,
}

impl Hierarchy {
    /// Builds a hierarchy from `(child id, parent id)` pairs where a parent
    /// id of `0` marks the root. Node names default to the id.
    pub fn from_edges(edges: &[(u64, u64)]) -> Result<Self> {
        let specs = edges
            .iter()
            .map(|&(child, parent)| {
                NodeSpec::new(child, (parent != 0).then_some(parent), child.to_string())
            })
            .collect();
        Self::build(specs)
    }

    pub fn build(specs: Vec<NodeSpec>) -> Result<Self> {
        let m = specs.len();
        let mut by_id = HashMap::with_capacity(m);
        for (idx, s) in specs.iter().enumerate() {
            if s.id == 0 {
                return Err(Error::ReservedNodeId);
            }
            if by_id.insert(s.id, idx).is_some() {
                return Err(Error::DuplicateNode(s.id));
            }
        }

        let mut parent = vec![None; m];
        let mut children = vec![Vec::new(); m];
        let mut root = None;
        for (idx, s) in specs.iter().enumerate() {
            match s.parent {
                None => match root {
                    None => root = Some(idx),
                    Some(r) => return Err(Error::MultipleRoots(specs[r].id, s.id)),
                },
                Some(pid) => {
                    let p = *by_id.get(&pid).ok_or(Error::UnknownParent {
                        node: s.id,
                        parent: pid,
                    })?;
                    parent[idx] = Some(p);
                    children[p].push(idx);
                }
            }
        }
        // Every node has a known parent but none is parentless: the parent
        // map is a function on a finite set, so it has a cycle.
        let root = match root {
            Some(r) => r,
            None if m == 0 => return Err(Error::TooFewClasses),
            None => return Err(Error::CycleDetected(specs[0].id)),
        };

        // Iterative DFS from the root; nodes never reached sit on a cycle.
        let mut preorder = Vec::with_capacity(m);
        let mut depth = vec![0usize; m];
        let mut seen = vec![false; m];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            if seen[v] {
                return Err(Error::CycleDetected(specs[v].id));
            }
            seen[v] = true;
            preorder.push(v);
            for &c in children[v].iter().rev() {
                depth[c] = depth[v] + 1;
                stack.push(c);
            }
        }
        if let Some(v) = (0..m).find(|&v| !seen[v]) {
            return Err(Error::CycleDetected(specs[v].id));
        }
        if let Some(v) = (0..m).find(|&v| children[v].len() == 1) {
            return Err(Error::UnaryInternalNode(specs[v].id));
        }
        if children[root].is_empty() {
            return Err(Error::TooFewClasses);
        }

        // Leaves in preorder are exactly the depth-first leaf order.
        let mut interval = vec![Interval { lo: 0, hi: 0 }; m];
        let mut leaf_of_class = Vec::new();
        for &v in &preorder {
            if children[v].is_empty() {
                let c = leaf_of_class.len();
                interval[v] = Interval { lo: c, hi: c + 1 };
                leaf_of_class.push(v);
            }
        }
        for &v in preorder.iter().rev() {
            if let (Some(&first), Some(&last)) = (children[v].first(), children[v].last()) {
                interval[v] = Interval {
                    lo: interval[first].lo,
                    hi: interval[last].hi,
                };
            }
        }

        let (ids, names) = specs.into_iter().map(|s| (s.id, s.name)).unzip();
        Ok(Hierarchy {
            ids,
            names,
            parent,
            children,
            interval,
            depth,
            leaf_of_class,
            preorder,
            root,
            by_id,
        })
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn class_count(&self) -> usize {
        self.leaf_of_class.len()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v]
    }

    pub fn children(&self, v: NodeId) -> &[NodeId] {
        &self.children[v]
    }

    pub fn is_leaf(&self, v: NodeId) -> bool {
        self.children[v].is_empty()
    }

    pub fn interval(&self, v: NodeId) -> Interval {
        self.interval[v]
    }

    /// Number of classes below `v`.
    pub fn weight(&self, v: NodeId) -> usize {
        self.interval[v].width()
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v]
    }

    pub fn id(&self, v: NodeId) -> u64 {
        self.ids[v]
    }

    pub fn name(&self, v: NodeId) -> &str {
        &self.names[v]
    }

    pub fn node_by_id(&self, id: u64) -> Option<NodeId> {
        self.by_id.get(&id).copied()
    }

    /// Leaf node carrying class `c`.
    pub fn class_node(&self, c: usize) -> NodeId {
        self.leaf_of_class[c]
    }

    /// Nodes in depth-first order, root first, children in declaration order.
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    pub fn internal_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).filter(move |&v| !self.is_leaf(v))
    }

    pub fn leaf_set(&self, v: NodeId) -> ClassSet {
        let iv = self.interval[v];
        ClassSet((iv.lo..iv.hi).collect())
    }

    /// Specs that rebuild this hierarchy, in original declaration order.
    pub fn specs(&self) -> Vec<NodeSpec> {
        (0..self.node_count())
            .map(|v| {
                NodeSpec::new(
                    self.ids[v],
                    self.parent[v].map(|p| self.ids[p]),
                    &*self.names[v],
                )
            })
            .collect()
    }
}

/// Sorted set of class indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ClassSet(Vec<usize>);

impl ClassSet {
    pub fn new(members: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = members.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        ClassSet(v)
    }

    pub fn empty() -> Self {
        ClassSet(Vec::new())
    }

    /// Set whose members are the set bits of `mask`.
    pub fn from_mask(mask: u64) -> Self {
        ClassSet((0..64).filter(|&c| mask >> c & 1 == 1).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn into_members(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    /// Number of members inside `iv`.
    pub fn count_in(&self, iv: Interval) -> usize {
        let lo = self.0.partition_point(|&c| c < iv.lo);
        let hi = self.0.partition_point(|&c| c < iv.hi);
        hi - lo
    }

    pub fn to_mask(&self) -> u64 {
        self.0.iter().fold(0u64, |m, &c| m | 1 << c)
    }

    pub fn max_member(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

/// Disjoint tree nodes whose leaf sets union to a class set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    /// Ordered by the lower end of their class interval.
    pub nodes: Vec<NodeId>,
}

impl Cover {
    pub fn complexity(&self) -> usize {
        self.nodes.len()
    }
}

/// Upper limits on representation complexity (`r`) and set size (`k`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Budgets {
    pub r: usize,
    pub k: usize,
}

impl Budgets {
    pub fn new(r: usize, k: usize) -> Result<Self> {
        if r == 0 || k == 0 {
            return Err(Error::InvalidBudget { r, k });
        }
        Ok(Budgets { r, k })
    }
}

fn check_members(h: &Hierarchy, y: &ClassSet) -> Result<()> {
    match y.max_member() {
        Some(c) if c >= h.class_count() => Err(Error::ClassOutOfRange {
            class: c,
            classes: h.class_count(),
        }),
        None => Err(Error::EmptySet),
        _ => Ok(()),
    }
}

/// Minimum cover of `y`: the maximal nodes whose leaf sets lie inside `y`.
pub fn min_cover(h: &Hierarchy, y: &ClassSet) -> Result<Cover> {
    check_members(h, y)?;
    let mut nodes = Vec::new();
    let mut stack = vec![h.root()];
    while let Some(v) = stack.pop() {
        let iv = h.interval(v);
        match y.count_in(iv) {
            0 => {}
            n if n == iv.width() => nodes.push(v),
            _ => stack.extend(h.children(v).iter().rev()),
        }
    }
    Ok(Cover { nodes })
}

/// Largest hierarchy the exhaustive cover search accepts.
pub const ORACLE_MAX_NODES: usize = 24;

/// Every family of pairwise-disjoint nodes whose leaf sets union to `y`,
/// found by exhaustive search over node subsets.
pub fn cover_family(h: &Hierarchy, y: &ClassSet) -> Result<Vec<Vec<NodeId>>> {
    if h.node_count() > ORACLE_MAX_NODES {
        return Err(Error::TooLarge(format!(
            "exhaustive cover search needs at most {ORACLE_MAX_NODES} nodes, got {}",
            h.node_count()
        )));
    }
    check_members(h, y)?;
    let target = y.to_mask();
    let node_mask = |v: NodeId| {
        let iv = h.interval(v);
        (iv.lo..iv.hi).fold(0u64, |m, c| m | 1 << c)
    };
    let candidates: Vec<(NodeId, u64)> = (0..h.node_count())
        .map(|v| (v, node_mask(v)))
        .filter(|&(_, m)| m & !target == 0)
        .collect();

    fn search(
        cands: &[(NodeId, u64)],
        target: u64,
        union: u64,
        chosen: &mut Vec<NodeId>,
        out: &mut Vec<Vec<NodeId>>,
    ) {
        let Some((&(v, m), rest)) = cands.split_first() else {
            if union == target {
                out.push(chosen.clone());
            }
            return;
        };
        if union & m == 0 {
            chosen.push(v);
            search(rest, target, union | m, chosen, out);
            chosen.pop();
        }
        search(rest, target, union, chosen, out);
    }

    let mut out = Vec::new();
    search(&candidates, target, 0, &mut Vec::new(), &mut out);
    Ok(out)
}

/// Minimum-cardinality disjoint cover found by exhaustive search. Test oracle
/// for [`min_cover`].
pub fn min_cover_oracle(h: &Hierarchy, y: &ClassSet) -> Result<Cover> {
    let family = cover_family(h, y)?;
    let mut nodes = family
        .into_iter()
        .min_by_key(|f| f.len())
        .ok_or_else(|| Error::InvalidParameter("set has no disjoint cover".into()))?;
    nodes.sort_by_key(|&v| h.interval(v).lo);
    Ok(Cover { nodes })
}

/// Largest class count for which complexity classes are enumerated.
pub const ENUM_MAX_CLASSES: usize = 12;

/// All non-empty class sets of representation complexity exactly `r`,
/// sorted lexicographically by member list.
pub fn enumerate_complexity_class(h: &Hierarchy, r: usize) -> Result<Vec<ClassSet>> {
    let k = h.class_count();
    if k > ENUM_MAX_CLASSES {
        return Err(Error::TooLarge(format!(
            "complexity classes are enumerated for at most {ENUM_MAX_CLASSES} classes, got {k}"
        )));
    }
    let mut out = Vec::new();
    for mask in 1u64..(1 << k) {
        let y = ClassSet::from_mask(mask);
        if min_cover(h, &y)?.complexity() == r {
            out.push(y);
        }
    }
    out.sort();
    Ok(out)
}

/// Exact size of the feasible family `{Y != {} : R(Y) <= r, |Y| <= k}`,
/// computed by a tree dynamic program over (size, complexity) counts.
/// Saturates at `u128::MAX`.
pub fn feasible_count(h: &Hierarchy, b: Budgets) -> u128 {
    let (r, k) = (b.r, b.k);
    // tables[v][s * (r + 1) + c]: subsets of v's classes with size s and
    // complexity c, for s <= min(|v|, k), c <= r.
    let mut tables: Vec<Option<Vec<u128>>> = vec![None; h.node_count()];
    let width = r + 1;
    for &v in h.preorder().iter().rev() {
        let cap = h.weight(v).min(k);
        let mut t = vec![0u128; (cap + 1) * width];
        if h.is_leaf(v) {
            t[0] = 1;
            if cap >= 1 {
                t[width + 1] = 1;
            }
        } else {
            let mut acc = vec![0u128; width];
            acc[0] = 1;
            let mut acc_cap = 0;
            for &c in h.children(v) {
                let ct = tables[c].take().expect("child processed before parent");
                let c_cap = ct.len() / width - 1;
                let new_cap = (acc_cap + c_cap).min(cap);
                let mut next = vec![0u128; (new_cap + 1) * width];
                for s1 in 0..=acc_cap {
                    for c1 in 0..width {
                        let a = acc[s1 * width + c1];
                        if a == 0 {
                            continue;
                        }
                        for s2 in 0..=c_cap.min(new_cap - s1) {
                            for c2 in 0..width - c1 {
                                let x = ct[s2 * width + c2];
                                if x == 0 {
                                    continue;
                                }
                                let slot = &mut next[(s1 + s2) * width + c1 + c2];
                                *slot = slot.saturating_add(a.saturating_mul(x));
                            }
                        }
                    }
                }
                acc = next;
                acc_cap = new_cap;
            }
            t[..acc.len()].copy_from_slice(&acc);
            // The full set was counted as one piece per child; it is a
            // single node.
            let full = h.weight(v);
            if full <= k {
                let nc = h.children(v).len();
                if nc <= r {
                    t[full * width + nc] -= 1;
                }
                t[full * width + 1] += 1;
            }
        }
        tables[v] = Some(t);
    }
    let root = tables[h.root()].take().expect("root table");
    root.chunks(width)
        .skip(1)
        .flat_map(|row| row.iter().skip(1))
        .fold(0u128, |a, &x| a.saturating_add(x))
}

/// Feasible family in compressed-row form: row `i` holds the members of the
/// `i`-th set in `members[offsets[i]..offsets[i + 1]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct FeasibleRows {
    pub offsets: Vec<usize>,
    pub members: Vec<u32>,
}

impl FeasibleRows {
    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.members[self.offsets[i]..self.offsets[i + 1]]
    }
}

pub(crate) fn guard_check(h: &Hierarchy, b: Budgets, guard: u64) -> Result<u64> {
    let count = feasible_count(h, b);
    if count > guard as u128 {
        return Err(Error::TooLarge(format!(
            "feasible family has {count} sets, guard is {guard}"
        )));
    }
    Ok(count as u64)
}

pub(crate) fn feasible_rows(h: &Hierarchy, b: Budgets, guard: u64) -> Result<FeasibleRows> {
    let expected = guard_check(h, b, guard)? as usize;

    // Nodes that fit the size budget, by interval start, larger first on ties
    // (ancestors before descendants). A later node is disjoint from an
    // earlier one iff it starts at or after the earlier one's end.
    let mut nodes: Vec<NodeId> = (0..h.node_count())
        .filter(|&v| h.weight(v) <= b.k)
        .collect();
    nodes.sort_by_key(|&v| {
        let iv = h.interval(v);
        (iv.lo, std::cmp::Reverse(iv.hi))
    });
    let starts: Vec<usize> = nodes.iter().map(|&v| h.interval(v).lo).collect();

    struct Walk<'a> {
        h: &'a Hierarchy,
        b: Budgets,
        nodes: &'a [NodeId],
        starts: &'a [usize],
        chosen: Vec<NodeId>,
        rows: FeasibleRows,
    }

    impl Walk<'_> {
        fn canonical(&self) -> bool {
            // A family is the minimum cover of its union iff no chosen node's
            // parent is entirely covered.
            self.chosen.iter().all(|&v| match self.h.parent(v) {
                None => true,
                Some(p) => {
                    let piv = self.h.interval(p);
                    let covered: usize = self
                        .chosen
                        .iter()
                        .map(|&u| self.h.interval(u).overlap(&piv))
                        .sum();
                    covered < piv.width()
                }
            })
        }

        fn emit(&mut self) {
            for &v in &self.chosen {
                let iv = self.h.interval(v);
                self.rows.members.extend((iv.lo..iv.hi).map(|c| c as u32));
            }
            self.rows.offsets.push(self.rows.members.len());
        }

        fn extend(&mut self, from_class: usize, weight_left: usize) {
            let first = self.starts.partition_point(|&s| s < from_class);
            for j in first..self.nodes.len() {
                let v = self.nodes[j];
                let iv = self.h.interval(v);
                if iv.width() > weight_left {
                    continue;
                }
                self.chosen.push(v);
                if self.canonical() {
                    self.emit();
                }
                // Adding nodes never uncovers a parent, so a non-canonical
                // prefix has no canonical extension.
                if self.chosen.len() < self.b.r && self.canonical() {
                    self.extend(iv.hi, weight_left - iv.width());
                }
                self.chosen.pop();
            }
        }
    }

    let mut walk = Walk {
        h,
        b,
        nodes: &nodes,
        starts: &starts,
        chosen: Vec::with_capacity(b.r),
        rows: FeasibleRows {
            offsets: Vec::with_capacity(expected + 1),
            members: Vec::new(),
        },
    };
    walk.rows.offsets.push(0);
    walk.extend(0, b.k);
    let rows = walk.rows;
    debug_assert_eq!(rows.len(), expected);

    // Lexicographic order by member list.
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_unstable_by(|&a, &b| rows.row(a).cmp(rows.row(b)));
    let mut sorted = FeasibleRows {
        offsets: Vec::with_capacity(rows.offsets.len()),
        members: Vec::with_capacity(rows.members.len()),
    };
    sorted.offsets.push(0);
    for i in order {
        sorted.members.extend_from_slice(rows.row(i));
        sorted.offsets.push(sorted.members.len());
    }
    Ok(sorted)
}

/// All feasible sets for the budgets, sorted lexicographically by member
/// list. Fails with `TooLarge` when the family exceeds `guard` sets.
pub fn enumerate_feasible(h: &Hierarchy, b: Budgets, guard: u64) -> Result<Vec<ClassSet>> {
    let rows = feasible_rows(h, b, guard)?;
    Ok((0..rows.len())
        .map(|i| ClassSet::new(rows.row(i).iter().map(|&c| c as usize)))
        .collect())
}
