mod common;

use common::{random_dist, random_hierarchy};
use hsvp::prob::{all_node_masses, flat_to_hier, hier_to_flat, node_mass_chain};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn flat_hier_round_trip(k in 2usize..=40, seed in any::<u64>()) {
        let h = random_hierarchy(k, seed);
        let d = random_dist(k, seed);
        let hd = flat_to_hier(&h, &d);
        let back = hier_to_flat(&h, &hd);
        for (a, b) in back.probs().iter().zip(d.probs()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        let masses = all_node_masses(&h, &d);
        for v in 0..h.node_count() {
            let chain = node_mass_chain(&h, &hd, v).unwrap();
            prop_assert!((chain - masses.get(v)).abs() <= 1e-12);
        }
        prop_assert!((masses.get(h.root()) - 1.0).abs() <= 1e-9);
        for v in h.internal_nodes() {
            let kids: f64 = h.children(v).iter().map(|&c| masses.get(c)).sum();
            prop_assert!((kids - masses.get(v)).abs() <= 1e-9);
            let cond: f64 = hd.child_conditionals(v).iter().sum();
            prop_assert!((cond - 1.0).abs() <= 1e-9);
        }
    }
}
