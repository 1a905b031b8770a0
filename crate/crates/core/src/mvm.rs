//! Exhaustive solver: explicit feasible family times the probability vector.

use web_time::Instant;

use crate::error::{Error, Result};
use crate::hierarchy::{feasible_rows, Budgets, ClassSet, FeasibleRows, Hierarchy};
use crate::prediction::{elapsed_us, Prediction};
use crate::prob::{compensated_sum, FlatDistribution};

/// Binary incidence matrix of the feasible family, one row per set in
/// lexicographic order, stored row-compressed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibleMatrix {
    classes: usize,
    rows: FeasibleRows,
}

impl FeasibleMatrix {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    /// Class indices with a one in row `i`, ascending.
    pub fn row(&self, i: usize) -> &[u32] {
        self.rows.row(i)
    }

    pub fn row_set(&self, i: usize) -> ClassSet {
        ClassSet::new(self.row(i).iter().map(|&c| c as usize))
    }

    pub fn incidence(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&(j as u32)).is_ok()
    }

    /// The product `M p`: mass of every feasible set.
    pub fn multiply(&self, p: &[f64]) -> Vec<f64> {
        (0..self.row_count())
            .map(|i| compensated_sum(self.row(i).iter().map(|&c| p[c as usize])))
            .collect()
    }
}

pub fn build_matrix(h: &Hierarchy, b: Budgets, guard: u64) -> Result<FeasibleMatrix> {
    Ok(FeasibleMatrix {
        classes: h.class_count(),
        rows: feasible_rows(h, b, guard)?,
    })
}

/// Highest-mass row; the earliest row wins ties.
pub fn solve_mvm(m: &FeasibleMatrix, d: &FlatDistribution) -> Result<Prediction> {
    if d.class_count() != m.classes {
        return Err(Error::DimensionMismatch {
            expected: m.classes,
            got: d.class_count(),
        });
    }
    let start = Instant::now();
    let masses = m.multiply(d.probs());
    let mut best: Option<(usize, f64)> = None;
    for (i, &mass) in masses.iter().enumerate() {
        if best.is_none_or(|(_, b)| mass > b) {
            best = Some((i, mass));
        }
    }
    let (row, mass) = best.ok_or(Error::InfeasibleBudget)?;
    Ok(Prediction {
        set: m.row_set(row),
        mass,
        n: m.row_count() as u64,
        time_us: elapsed_us(start),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{enumerate_feasible, tests::seven_node};
    use crate::prob::set_mass;
    use crate::DEFAULT_ENUM_GUARD as G;

    fn example_probs() -> FlatDistribution {
        FlatDistribution::new(vec![0.5, 0.1, 0.3, 0.1]).unwrap()
    }

    fn solve(r: usize, k: usize, d: &FlatDistribution) -> Prediction {
        let m = build_matrix(&seven_node(), Budgets::new(r, k).unwrap(), G).unwrap();
        solve_mvm(&m, d).unwrap()
    }

    #[test]
    fn matrix_shapes() {
        let h = seven_node();
        let m = build_matrix(&h, Budgets::new(1, 4).unwrap(), G).unwrap();
        assert_eq!((m.row_count(), m.class_count()), (7, 4));
        let m = build_matrix(&h, Budgets::new(2, 4).unwrap(), G).unwrap();
        assert_eq!(m.row_count(), 15);
        let sets = enumerate_feasible(&h, Budgets::new(2, 4).unwrap(), G).unwrap();
        for (i, s) in sets.iter().enumerate() {
            for j in 0..4 {
                assert_eq!(m.incidence(i, j), s.contains(j));
            }
        }
    }

    #[test]
    fn seven_node_solutions() {
        let d = example_probs();
        let p = solve(1, 2, &d);
        assert_eq!(p.set, ClassSet::new([0, 1]));
        assert!((p.mass - 0.6).abs() < 1e-12);
        assert_eq!(p.n, 6);

        let p = solve(2, 2, &d);
        assert_eq!(p.set, ClassSet::new([0, 2]));
        assert!((p.mass - 0.8).abs() < 1e-12);
        assert_eq!(p.n, 10);

        let p = solve(
            1,
            4,
            &FlatDistribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        );
        assert_eq!(p.set, ClassSet::new(0..4));
        assert!((p.mass - 1.0).abs() < 1e-12);

        // {1,2,3} and {1,3,4} both carry 0.9 up to rounding.
        let p = solve(2, 3, &d);
        assert!((p.mass - 0.9).abs() < 1e-12);
        assert!(p.set == ClassSet::new([0, 1, 2]) || p.set == ClassSet::new([0, 2, 3]));
        assert_eq!(p.mass, set_mass(&d, &p.set));

        // Exact tie with dyadic masses: the earlier row {1,2,3} wins.
        let dyadic = FlatDistribution::new(vec![0.5, 0.125, 0.25, 0.125]).unwrap();
        let p = solve(2, 3, &dyadic);
        assert_eq!(p.mass, 0.875);
        assert_eq!(p.set, ClassSet::new([0, 1, 2]));
    }

    #[test]
    fn dimension_mismatch() {
        let m = build_matrix(&seven_node(), Budgets::new(1, 1).unwrap(), G).unwrap();
        let d = FlatDistribution::uniform(3);
        assert!(matches!(
            solve_mvm(&m, &d),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn guard_trips_on_large_trees() {
        let h = Hierarchy::build(crate::synth::balanced_specs(1000, 2)).unwrap();
        assert!(matches!(
            build_matrix(&h, Budgets::new(3, 1000).unwrap(), G),
            Err(Error::TooLarge(_))
        ));
    }
}
