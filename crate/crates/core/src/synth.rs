//! Seeded synthetic hierarchies and Dirichlet class distributions.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, NodeSpec};
use crate::prob::FlatDistribution;

/// Grows a tree top-down from a block of `classes` leaves. `split` returns
/// the child block sizes of a block with more than one leaf. Ids are
/// assigned breadth-first starting at 1; children keep split order.
fn grow(classes: usize, mut split: impl FnMut(usize) -> Vec<usize>) -> Vec<NodeSpec> {
    let mut specs = vec![NodeSpec::new(1, None, "n1")];
    let mut queue = VecDeque::from([(1u64, classes)]);
    let mut next = 2u64;
    while let Some((id, n)) = queue.pop_front() {
        if n < 2 {
            continue;
        }
        for size in split(n) {
            specs.push(NodeSpec::new(next, Some(id), format!("n{next}")));
            queue.push_back((next, size));
            next += 1;
        }
    }
    specs
}

/// Tree where every internal node splits its leaves as evenly as possible
/// into `arity` children.
pub fn balanced_specs(classes: usize, arity: usize) -> Vec<NodeSpec> {
    let arity = arity.max(2);
    grow(classes, |n| {
        let c = arity.min(n);
        (0..c).map(|i| n / c + usize::from(i < n % c)).collect()
    })
}

/// Random recursive splits. The child count of a block is `2 + Poisson(b - 2)`
/// capped at the block size, so `b` is the mean branching factor away from
/// the leaves; split points are uniform.
pub fn random_specs(classes: usize, branching: f64, rng: &mut impl Rng) -> Vec<NodeSpec> {
    let extra = (branching > 2.0).then(|| Poisson::new(branching - 2.0).expect("positive rate"));
    grow(classes, |n| {
        let add = extra.as_ref().map_or(0, |p| p.sample(rng) as usize);
        let c = (2 + add).min(n);
        let mut cuts: Vec<usize> = rand::seq::index::sample(rng, n - 1, c - 1)
            .into_iter()
            .map(|i| i + 1)
            .collect();
        cuts.sort_unstable();
        cuts.push(n);
        let mut prev = 0;
        cuts.into_iter()
            .map(|cut| {
                let size = cut - prev;
                prev = cut;
                size
            })
            .collect()
    })
}

/// Symmetric Dirichlet sample via normalized Gamma draws.
pub fn dirichlet(classes: usize, alpha: f64, rng: &mut impl Rng) -> FlatDistribution {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    loop {
        let draws: Vec<f64> = (0..classes).map(|_| gamma.sample(rng)).collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            let probs = draws.into_iter().map(|x| x / sum).collect();
            if let Ok(d) = FlatDistribution::new(probs) {
                return d;
            }
        }
    }
}

/// Class drawn from `d`.
pub fn sample_class(d: &FlatDistribution, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (c, &p) in d.probs().iter().enumerate() {
        acc += p;
        if u < acc {
            return c;
        }
    }
    d.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TreeShape {
    Balanced,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenConfig {
    pub classes: usize,
    pub branching: f64,
    pub shape: TreeShape,
    pub alpha: f64,
    pub instances: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthRow {
    pub y_true: usize,
    pub dist: FlatDistribution,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub hierarchy: Hierarchy,
    pub rows: Vec<SynthRow>,
}

pub fn generate(cfg: &GenConfig) -> Result<Dataset> {
    if cfg.classes < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 classes, got {}",
            cfg.classes
        )));
    }
    if !(cfg.branching >= 2.0 && cfg.branching.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "branching factor must be at least 2, got {}",
            cfg.branching
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Dirichlet concentration must be positive, got {}",
            cfg.alpha
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let specs = match cfg.shape {
        TreeShape::Balanced => balanced_specs(cfg.classes, cfg.branching.round() as usize),
        TreeShape::Random => random_specs(cfg.classes, cfg.branching, &mut rng),
    };
    let hierarchy = Hierarchy::build(specs)?;
    let rows = (0..cfg.instances)
        .map(|_| {
            let dist = dirichlet(cfg.classes, cfg.alpha, &mut rng);
            let y_true = sample_class(&dist, &mut rng);
            SynthRow { y_true, dist }
        })
        .collect();
    Ok(Dataset { hierarchy, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_shapes() {
        let h = Hierarchy::build(balanced_specs(8, 2)).unwrap();
        assert_eq!(h.node_count(), 15);
        assert!((0..15).all(|v| h.is_leaf(v) || h.children(v).len() == 2));
        let h = Hierarchy::build(balanced_specs(2, 2)).unwrap();
        assert_eq!(h.node_count(), 3);
        let h = Hierarchy::build(balanced_specs(10, 3)).unwrap();
        assert_eq!(h.class_count(), 10);
    }

    #[test]
    fn random_trees_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 2..40 {
            for b in [2.0, 2.5, 4.0] {
                let h = Hierarchy::build(random_specs(k, b, &mut rng)).unwrap();
                assert_eq!(h.class_count(), k);
                assert!(h.node_count() < 2 * k);
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let cfg = GenConfig {
            classes: 4,
            branching: 2.0,
            shape: TreeShape::Random,
            alpha: 1.0,
            instances: 10,
            seed: 7,
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.hierarchy, b.hierarchy);
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.hierarchy.node_count(), 7);
        for row in &a.rows {
            assert!((row.dist.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        assert!(generate(&GenConfig { classes: 1, ..cfg }).is_err());
        assert!(generate(&GenConfig { alpha: 0.0, ..cfg }).is_err());
    }
}
