#![allow(dead_code)]

use hsvp::synth::{dirichlet, random_specs};
use hsvp::{FlatDistribution, Hierarchy};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random hierarchy over `classes` leaves; branching drawn from the seed.
pub fn random_hierarchy(classes: usize, seed: u64) -> Hierarchy {
    let mut rng = rng(seed);
    let branching = [2.0, 2.5, 3.0, 4.0][(seed % 4) as usize];
    Hierarchy::build(random_specs(classes, branching, &mut rng)).unwrap()
}

pub fn random_dist(classes: usize, seed: u64) -> FlatDistribution {
    dirichlet(classes, 1.0, &mut rng(seed ^ 0x9e37_79b9_7f4a_7c15))
}

/// Brute-force leaf-set bitmask of every node.
pub fn node_masks(h: &Hierarchy) -> Vec<u64> {
    (0..h.node_count())
        .map(|v| {
            h.leaf_set(v)
                .members()
                .iter()
                .fold(0u64, |m, &c| m | 1 << c)
        })
        .collect()
}
