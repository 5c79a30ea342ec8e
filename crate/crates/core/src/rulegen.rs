//! Initial rule base: evenly spaced partitions and grid partitioning.

use crate::error::{Error, Result};
use crate::fuzzy::{
    FuzzyRule, FuzzyVariable, MembershipFunction, MfShape, TsConsequent, Universe, MAX_LABELS,
    MIN_LABELS,
};

/// `m` evenly spaced MFs whose neighbours cross at degree 0.5.
pub fn default_partition(
    universe: Universe,
    m: usize,
    shape: MfShape,
) -> Result<Vec<MembershipFunction>> {
    if !(MIN_LABELS..=MAX_LABELS).contains(&m) {
        return Err(Error::InvalidCount {
            count: m,
            min: MIN_LABELS,
            max: MAX_LABELS,
        });
    }
    let spacing = universe.width() / (m - 1) as f64;
    (0..m)
        .map(|k| {
            let center = if k == m - 1 {
                universe.hi
            } else {
                universe.lo + k as f64 * spacing
            };
            match shape {
                MfShape::Bell => MembershipFunction::bell(0.5 * spacing, 2.0, center),
                MfShape::Gaussian => MembershipFunction::gaussian(
                    center,
                    0.5 * spacing / (2.0 * std::f64::consts::LN_2).sqrt(),
                ),
            }
        })
        .collect()
}

/// One rule per combination of labels, lexicographic in the label indices
/// (the last variable varies fastest). Every rule is active with a zero
/// consequent of the template's length.
pub fn grid_partition(
    variables: &[FuzzyVariable],
    consequent_init: &TsConsequent,
) -> Vec<FuzzyRule> {
    let counts: Vec<usize> = variables.iter().map(|v| v.partitions.len()).collect();
    let total: usize = counts.iter().product();
    let zero = TsConsequent {
        coeffs: vec![0.0; consequent_init.coeffs.len()],
    };
    (0..total)
        .map(|index| FuzzyRule {
            antecedent: grid_labels(index, &counts)
                .into_iter()
                .map(|label| 1u8 << label)
                .collect(),
            consequent: zero.clone(),
            active: true,
        })
        .collect()
}

/// Label tuple of the `index`-th grid rule for per-variable `counts`.
pub fn grid_labels(mut index: usize, counts: &[usize]) -> Vec<usize> {
    let mut labels = vec![0; counts.len()];
    for (slot, &m) in labels.iter_mut().zip(counts).rev() {
        *slot = index % m;
        index /= m;
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vars(counts: &[usize]) -> Vec<FuzzyVariable> {
        counts
            .iter()
            .map(|&m| {
                FuzzyVariable::new(
                    "v",
                    Universe::unit(),
                    default_partition(Universe::unit(), m, MfShape::Gaussian).unwrap(),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn centers_are_evenly_spaced() {
        let mfs = default_partition(Universe::unit(), 2, MfShape::Gaussian).unwrap();
        let centers: Vec<f64> = mfs.iter().map(MembershipFunction::center).collect();
        assert_eq!(centers, vec![0.0, 1.0]);
        let mfs = default_partition(Universe::unit(), 3, MfShape::Bell).unwrap();
        let centers: Vec<f64> = mfs.iter().map(MembershipFunction::center).collect();
        assert_eq!(centers, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn neighbours_cross_at_one_half() {
        let u = Universe::new(-2.0, 5.0).unwrap();
        for m in 2..=4 {
            for shape in [MfShape::Bell, MfShape::Gaussian] {
                let mfs = default_partition(u, m, shape).unwrap();
                for pair in mfs.windows(2) {
                    let mid = 0.5 * (pair[0].center() + pair[1].center());
                    assert!((pair[0].eval(mid) - 0.5).abs() < 1e-9, "{shape:?} m={m}");
                    assert!((pair[1].eval(mid) - 0.5).abs() < 1e-9, "{shape:?} m={m}");
                }
            }
        }
    }

    #[test]
    fn invalid_counts() {
        for m in [0, 1, 5] {
            assert!(matches!(
                default_partition(Universe::unit(), m, MfShape::Bell),
                Err(Error::InvalidCount { .. })
            ));
        }
    }

    #[test]
    fn grid_sizes() {
        let init = TsConsequent::zeros(4);
        assert_eq!(grid_partition(&vars(&[4, 4, 4, 4]), &init).len(), 256);
        let init = TsConsequent::zeros(2);
        assert_eq!(grid_partition(&vars(&[3, 3]), &init).len(), 9);
        assert_eq!(grid_partition(&vars(&[2, 2]), &init).len(), 4);
    }

    #[test]
    fn grid_rules_are_lexicographic_and_zeroed() {
        let rules = grid_partition(&vars(&[2, 3]), &TsConsequent { coeffs: vec![1.0; 3] });
        let masks: Vec<Vec<u8>> = rules.iter().map(|r| r.antecedent.clone()).collect();
        assert_eq!(
            masks,
            vec![vec![1, 1], vec![1, 2], vec![1, 4], vec![2, 1], vec![2, 2], vec![2, 4]]
        );
        assert!(rules.iter().all(|r| r.active && r.consequent.coeffs == vec![0.0; 3]));
    }

    proptest! {
        #[test]
        fn grid_is_a_bijection(counts in prop::collection::vec(2usize..=4, 1..=4)) {
            let rules = grid_partition(&vars(&counts), &TsConsequent::zeros(counts.len()));
            prop_assert_eq!(rules.len(), counts.iter().product::<usize>());
            let mut seen = std::collections::HashSet::new();
            for (i, r) in rules.iter().enumerate() {
                let labels: Vec<usize> = r.antecedent.iter().map(|m| {
                    assert_eq!(m.count_ones(), 1);
                    m.trailing_zeros() as usize
                }).collect();
                prop_assert_eq!(&labels, &grid_labels(i, &counts));
                prop_assert!(seen.insert(labels));
            }
        }
    }
}
