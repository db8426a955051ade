use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::rng;

/// Train and test indices for one fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Grouped k-fold partition. Distinct group keys are shuffled with the seed
/// and dealt to folds round-robin, so every group lands in exactly one test
/// fold and fold sizes differ by at most one group. Indices stay in input
/// order within each side.
pub fn kfold_split<S: AsRef<str>>(groups: &[S], k: usize, seed: u64) -> Result<Vec<Fold>> {
    let mut keys: Vec<&str> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let member: Vec<usize> = groups
        .iter()
        .map(|g| {
            let g = g.as_ref();
            *index.entry(g).or_insert_with(|| {
                keys.push(g);
                keys.len() - 1
            })
        })
        .collect();
    if k < 2 || keys.len() < k {
        return Err(Error::TooFewGroups { k, groups: keys.len() });
    }

    let mut order: Vec<usize> = (0..keys.len()).collect();
    rng::shuffle(&mut order, &mut rng::seeded(seed));
    let mut fold_of = vec![0; keys.len()];
    for (pos, &g) in order.iter().enumerate() {
        fold_of[g] = pos % k;
    }

    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..groups.len()).partition(|&i| fold_of[member[i]] == f);
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn groups() -> Vec<String> {
        (0..23).flat_map(|g| [format!("s{g}"), format!("s{g}"), format!("s{g}")]).collect()
    }

    #[test]
    fn partition_and_grouping() {
        let g = groups();
        let folds = kfold_split(&g, 5, 3).unwrap();
        assert_eq!(folds.len(), 5);
        let mut seen = vec![0; g.len()];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            assert_eq!(f.train.len() + f.test.len(), g.len());
            for &i in &f.test {
                assert!(f.train.iter().all(|&j| g[j] != g[i]));
            }
            let n_groups = f.test.len() / 3;
            assert!(n_groups == 4 || n_groups == 5);
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let g = groups();
        assert_eq!(kfold_split(&g, 5, 3).unwrap(), kfold_split(&g, 5, 3).unwrap());
        assert_ne!(kfold_split(&g, 5, 3).unwrap(), kfold_split(&g, 5, 4).unwrap());
    }

    #[test]
    fn too_few_groups() {
        let g = ["a", "a", "b"];
        assert!(matches!(kfold_split(&g, 3, 0), Err(Error::TooFewGroups { k: 3, groups: 2 })));
        assert!(matches!(kfold_split(&g, 1, 0), Err(Error::TooFewGroups { .. })));
    }
}
