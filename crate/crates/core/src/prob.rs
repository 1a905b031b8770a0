//! Flat and hierarchically factorized conditional class distributions.

use crate::error::{Error, Result};
use crate::hierarchy::{ClassSet, Hierarchy, NodeId};

/// Accepted deviation of an input distribution from unit mass.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// Inputs off by more than [`INPUT_TOLERANCE`] but at most this much are
/// renormalized with a warning; anything further is rejected.
pub const RENORMALIZE_LIMIT: f64 = 1e-3;

fn normalize(values: &mut [f64], what: &str) -> Result<()> {
    if let Some(x) = values
        .iter()
        .find(|x| !x.is_finite() || **x < 0.0 || **x > 1.0 + INPUT_TOLERANCE)
    {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {x} outside [0, 1]"
        )));
    }
    let sum: f64 = values.iter().sum();
    let off = (sum - 1.0).abs();
    if off > RENORMALIZE_LIMIT {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entries sum to {sum}"
        )));
    }
    if off > INPUT_TOLERANCE {
        log::warn!("{what}: entries sum to {sum}, renormalizing");
        values.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(())
}

/// `P(c | x)` for every class `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatDistribution {
    probs: Vec<f64>,
}

impl FlatDistribution {
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no classes".into()));
        }
        normalize(&mut probs, "class distribution")?;
        Ok(FlatDistribution { probs })
    }

    pub fn uniform(classes: usize) -> Self {
        FlatDistribution {
            probs: vec![1.0 / classes as f64; classes],
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn class_count(&self) -> usize {
        self.probs.len()
    }

    /// Sum of the `k` largest class probabilities.
    pub fn top_k_mass(&self, k: usize) -> f64 {
        let mut p = self.probs.clone();
        p.sort_unstable_by(|a, b| b.total_cmp(a));
        p.iter().take(k).sum()
    }
}

/// Parent-to-child conditionals `P(child | parent, x)`, one vector per
/// internal node aligned with its children. Leaves hold empty vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalDistribution {
    cond: Vec<Vec<f64>>,
}

impl HierarchicalDistribution {
    pub fn new(h: &Hierarchy, mut cond: Vec<Vec<f64>>) -> Result<Self> {
        if cond.len() != h.node_count() {
            return Err(Error::DimensionMismatch {
                expected: h.node_count(),
                got: cond.len(),
            });
        }
        for (v, c) in cond.iter_mut().enumerate() {
            if c.len() != h.children(v).len() {
                return Err(Error::DimensionMismatch {
                    expected: h.children(v).len(),
                    got: c.len(),
                });
            }
            if !c.is_empty() {
                normalize(c, &format!("conditionals of node {}", h.id(v)))?;
            }
        }
        Ok(HierarchicalDistribution { cond })
    }

    /// Every internal node splits its mass evenly between its children.
    pub fn uniform(h: &Hierarchy) -> Self {
        let cond = (0..h.node_count())
            .map(|v| {
                let n = h.children(v).len();
                vec![1.0 / n as f64; n]
            })
            .collect();
        HierarchicalDistribution { cond }
    }

    /// Conditionals of `v`'s children, in child order.
    pub fn child_conditionals(&self, v: NodeId) -> &[f64] {
        &self.cond[v]
    }
}

/// `P(v | x)` for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMasses {
    pub mass: Vec<f64>,
}

impl NodeMasses {
    pub fn get(&self, v: NodeId) -> f64 {
        self.mass[v]
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        comp += if sum.abs() >= x.abs() {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
    }
    sum + comp
}

/// `P(Y | x)`; zero for the empty set.
pub fn set_mass(d: &FlatDistribution, y: &ClassSet) -> f64 {
    compensated_sum(y.members().iter().map(|&c| d.probs[c]))
}

/// Node mass as the product of conditionals along the root path.
pub fn node_mass_chain(h: &Hierarchy, d: &HierarchicalDistribution, v: NodeId) -> Result<f64> {
    if v >= h.node_count() {
        return Err(Error::UnknownNode(v));
    }
    let mut mass = 1.0;
    let mut cur = v;
    while let Some(p) = h.parent(cur) {
        let slot = h
            .children(p)
            .iter()
            .position(|&c| c == cur)
            .expect("child listed under parent");
        mass *= d.cond[p][slot];
        cur = p;
    }
    Ok(mass)
}

/// Node masses by leaf summation, one bottom-up pass.
pub fn all_node_masses(h: &Hierarchy, d: &FlatDistribution) -> NodeMasses {
    let mut mass = vec![0.0; h.node_count()];
    for &v in h.preorder().iter().rev() {
        mass[v] = if h.is_leaf(v) {
            d.probs[h.interval(v).lo]
        } else {
            h.children(v).iter().map(|&c| mass[c]).sum()
        };
    }
    NodeMasses { mass }
}

/// Node masses from conditionals, one top-down pass.
pub fn chain_node_masses(h: &Hierarchy, d: &HierarchicalDistribution) -> NodeMasses {
    let mut mass = vec![0.0; h.node_count()];
    mass[h.root()] = 1.0;
    for &v in h.preorder() {
        for (&c, &p) in h.children(v).iter().zip(&d.cond[v]) {
            mass[c] = mass[v] * p;
        }
    }
    NodeMasses { mass }
}

/// Conditionals as child mass over parent mass. Zero-mass parents get the
/// uniform conditional.
pub fn flat_to_hier(h: &Hierarchy, d: &FlatDistribution) -> HierarchicalDistribution {
    let masses = all_node_masses(h, d);
    let cond = (0..h.node_count())
        .map(|v| {
            let kids = h.children(v);
            let pm = masses.mass[v];
            if pm > 0.0 {
                kids.iter().map(|&c| masses.mass[c] / pm).collect()
            } else {
                vec![1.0 / kids.len() as f64; kids.len()]
            }
        })
        .collect();
    HierarchicalDistribution { cond }
}

/// Leaf masses of a factorized distribution.
pub fn hier_to_flat(h: &Hierarchy, d: &HierarchicalDistribution) -> FlatDistribution {
    let masses = chain_node_masses(h, d);
    let probs = (0..h.class_count())
        .map(|c| masses.mass[h.class_node(c)])
        .collect();
    FlatDistribution { probs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::tests::seven_node;

    fn example_probs() -> FlatDistribution {
        FlatDistribution::new(vec![0.5, 0.1, 0.3, 0.1]).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn set_masses() {
        let d = example_probs();
        assert!(close(set_mass(&d, &ClassSet::new([0, 2])), 0.8, 1e-15));
        assert!(close(set_mass(&d, &ClassSet::new(0..4)), 1.0, 1e-9));
        assert_eq!(set_mass(&d, &ClassSet::empty()), 0.0);
    }

    #[test]
    fn seven_node_masses() {
        let h = seven_node();
        let m = all_node_masses(&h, &example_probs());
        let expected = [1.0, 0.6, 0.4, 0.5, 0.1, 0.3, 0.1];
        for (v, e) in expected.iter().enumerate() {
            assert!(close(m.mass[v], *e, 1e-12), "v{} = {}", v + 1, m.mass[v]);
        }
        let u = all_node_masses(&h, &FlatDistribution::uniform(4));
        assert_eq!((u.mass[1], u.mass[2]), (0.5, 0.5));
        let one = all_node_masses(
            &h,
            &FlatDistribution::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
        );
        assert_eq!(one.mass, vec![1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn seven_node_conditionals() {
        let h = seven_node();
        let hd = flat_to_hier(&h, &example_probs());
        assert!(close(hd.child_conditionals(0)[0], 0.6, 1e-12));
        assert!(close(hd.child_conditionals(1)[0], 5.0 / 6.0, 1e-12));
        assert!(close(hd.child_conditionals(2)[1], 0.25, 1e-12));

        assert!(close(node_mass_chain(&h, &hd, 0).unwrap(), 1.0, 0.0));
        assert!(close(node_mass_chain(&h, &hd, 3).unwrap(), 0.5, 1e-12));
        assert!(close(node_mass_chain(&h, &hd, 5).unwrap(), 0.3, 1e-12));
        assert_eq!(node_mass_chain(&h, &hd, 7), Err(Error::UnknownNode(7)));

        let u = flat_to_hier(&h, &FlatDistribution::uniform(4));
        for v in h.internal_nodes() {
            assert_eq!(u.child_conditionals(v), &[0.5, 0.5]);
        }

        let z = flat_to_hier(
            &h,
            &FlatDistribution::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap(),
        );
        assert_eq!(z.child_conditionals(0), &[1.0, 0.0]);
        assert_eq!(z.child_conditionals(2), &[0.5, 0.5]);
    }

    #[test]
    fn factorized_to_flat() {
        let h = seven_node();
        let back = hier_to_flat(&h, &flat_to_hier(&h, &example_probs()));
        for (a, b) in back.probs().iter().zip(example_probs().probs()) {
            assert!(close(*a, *b, 1e-12));
        }
        assert_eq!(
            hier_to_flat(&h, &HierarchicalDistribution::uniform(&h)).probs(),
            &[0.25; 4]
        );
        let skewed = HierarchicalDistribution::new(
            &h,
            vec![
                vec![1.0, 0.0],
                vec![0.5, 0.5],
                vec![0.5, 0.5],
                vec![],
                vec![],
                vec![],
                vec![],
            ],
        )
        .unwrap();
        assert_eq!(hier_to_flat(&h, &skewed).probs(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn input_validation() {
        assert!(FlatDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(FlatDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(FlatDistribution::new(vec![f64::NAN, 1.0]).is_err());
        let d = FlatDistribution::new(vec![0.5, 0.5 + 1e-6]).unwrap();
        assert!(close(d.probs().iter().sum(), 1.0, 1e-15));
        let h = seven_node();
        assert!(HierarchicalDistribution::new(&h, vec![vec![1.0]; 7]).is_err());
    }

    #[test]
    fn top_k() {
        assert!(close(example_probs().top_k_mass(2), 0.8, 1e-15));
        assert!(close(example_probs().top_k_mass(10), 1.0, 1e-15));
    }
}
