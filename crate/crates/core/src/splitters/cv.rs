use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{splits_from_folds, ResamplingPlan, Scheme, Split};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::split(format!("k = {k} must be at least 2")));
    }
    if k > n {
        return Err(Error::split(format!("k = {k} exceeds the number of observations {n}")));
    }
    Ok(())
}

/// Shuffle item positions and deal them round-robin into `k` folds.
fn deal(items: usize, k: usize, rng: &mut SimRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..items).collect();
    order.shuffle(rng);
    let mut fold = vec![0; items];
    for (pos, &item) in order.iter().enumerate() {
        fold[item] = pos % k;
    }
    fold
}

/// Single random split with `round(n * test_fraction)` test rows.
pub fn holdout(n: usize, test_fraction: f64, seed: u64) -> Result<ResamplingPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::split(format!("test fraction {test_fraction} must lie in (0, 1)")));
    }
    if n < 2 {
        return Err(Error::split("holdout needs at least two observations"));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::rng(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    ResamplingPlan::new(Scheme::Holdout { test_fraction }, seed, n, vec![Split { train, test, repeat: 0 }])
}

pub fn kfold(n: usize, k: usize, seed: u64) -> Result<ResamplingPlan> {
    let p = repeated_kfold(n, k, 1, seed)?;
    Ok(ResamplingPlan { scheme: Scheme::Kfold { k }, ..p })
}

/// `repeats` independent k-fold partitions drawn from one stream, so the
/// first repeat equals `kfold(n, k, seed)`.
pub fn repeated_kfold(n: usize, k: usize, repeats: usize, seed: u64) -> Result<ResamplingPlan> {
    check_k(n, k)?;
    if repeats == 0 {
        return Err(Error::split("repeats must be at least 1"));
    }
    let mut rng = rng::rng(seed);
    let mut splits = Vec::with_capacity(k * repeats);
    for r in 0..repeats {
        splits.extend(splits_from_folds(&deal(n, k, &mut rng), k, r));
    }
    ResamplingPlan::new(Scheme::RepeatedKfold { k, repeats }, seed, n, splits)
}

pub fn grouped_kfold(groups: &[i64], k: usize, seed: u64) -> Result<ResamplingPlan> {
    repeated_grouped_kfold(groups, k, 1, seed)
}

/// Distinct groups (in sorted id order) are dealt into `k` folds; rows
/// inherit their group's fold. `k` = number of groups gives
/// leave-one-group-out.
pub fn repeated_grouped_kfold(groups: &[i64], k: usize, repeats: usize, seed: u64) -> Result<ResamplingPlan> {
    let mut ids: Vec<i64> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if k < 2 {
        return Err(Error::split(format!("k = {k} must be at least 2")));
    }
    if ids.len() < k {
        return Err(Error::split(format!("{} distinct groups, fewer than k = {k}", ids.len())));
    }
    if repeats == 0 {
        return Err(Error::split("repeats must be at least 1"));
    }
    let group_index: BTreeMap<i64, usize> = ids.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let row_group: Vec<usize> = groups.iter().map(|g| group_index[g]).collect();
    let mut rng = rng::rng(seed);
    let mut splits = Vec::with_capacity(k * repeats);
    for r in 0..repeats {
        let gfold = deal(ids.len(), k, &mut rng);
        let fold_of: Vec<usize> = row_group.iter().map(|&g| gfold[g]).collect();
        splits.extend(splits_from_folds(&fold_of, k, r));
    }
    ResamplingPlan::new(Scheme::GroupedKfold { k, repeats }, seed, groups.len(), splits)
}

pub fn stratified_kfold(labels: &[usize], k: usize, seed: u64) -> Result<ResamplingPlan> {
    repeated_stratified_kfold(labels, k, 1, seed)
}

const STRATIFY_RETRIES: usize = 100;

/// Per class, members are shuffled and dealt over a random permutation of
/// the folds. Classes with at least `k` members get per-fold counts within
/// one of each other; smaller classes land in distinct random folds.
pub fn repeated_stratified_kfold(labels: &[usize], k: usize, repeats: usize, seed: u64) -> Result<ResamplingPlan> {
    check_k(labels.len(), k)?;
    if repeats == 0 {
        return Err(Error::split("repeats must be at least 1"));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut rng = rng::rng(seed);
    let mut splits = Vec::with_capacity(k * repeats);
    for r in 0..repeats {
        let mut attempt = 0;
        let fold_of = loop {
            let mut fold_of = vec![0; labels.len()];
            let mut sizes = vec![0usize; k];
            for members in by_class.values() {
                let mut m = members.clone();
                m.shuffle(&mut rng);
                let mut folds: Vec<usize> = (0..k).collect();
                folds.shuffle(&mut rng);
                for (j, &i) in m.iter().enumerate() {
                    let f = folds[j % k];
                    fold_of[i] = f;
                    sizes[f] += 1;
                }
            }
            if sizes.iter().all(|&s| s > 0) {
                break fold_of;
            }
            attempt += 1;
            if attempt >= STRATIFY_RETRIES {
                return Err(Error::split("could not draw a stratified assignment without empty folds"));
            }
            // burn one draw so the retry differs even for tiny inputs
            let _: u64 = rng.random();
        };
        splits.extend(splits_from_folds(&fold_of, k, r));
    }
    ResamplingPlan::new(Scheme::StratifiedKfold { k, repeats }, seed, labels.len(), splits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sizes(p: &ResamplingPlan) -> Vec<usize> {
        let mut s: Vec<usize> = p.splits.iter().map(|s| s.test.len()).collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn kfold_examples() {
        let p = kfold(10, 5, 1).unwrap();
        assert_eq!(p.len(), 5);
        assert_eq!(sizes(&p), vec![2; 5]);
        let mut all: Vec<usize> = p.splits.iter().flat_map(|s| s.test.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(sizes(&kfold(7, 3, 9).unwrap()), vec![2, 2, 3]);
        assert_eq!(kfold(7, 3, 9).unwrap(), kfold(7, 3, 9).unwrap());
        assert!(kfold(3, 4, 0).is_err());
        assert!(kfold(3, 1, 0).is_err());
    }

    #[test]
    fn repeated_kfold_examples() {
        let p = repeated_kfold(40, 5, 10, 3).unwrap();
        assert_eq!(p.len(), 50);
        assert_eq!(p.by_repeat().len(), 10);
        let one = repeated_kfold(40, 5, 1, 3).unwrap();
        assert_eq!(one.splits, kfold(40, 5, 3).unwrap().splits);
        assert_eq!(one.splits[..], p.splits[..5]);
        assert!(repeated_kfold(40, 5, 0, 3).is_err());
    }

    #[test]
    fn grouped_examples() {
        let g = [1, 1, 2, 2, 3, 3];
        let p = grouped_kfold(&g, 3, 4).unwrap();
        let mut tests: Vec<Vec<usize>> = p.splits.iter().map(|s| s.test.clone()).collect();
        tests.sort();
        assert_eq!(tests, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        let g10: Vec<i64> = (0..30).map(|i| i / 3).collect();
        let p = grouped_kfold(&g10, 5, 8).unwrap();
        for s in &p.splits {
            assert_eq!(s.test.len(), 6);
            let mut ids: Vec<i64> = s.test.iter().map(|&i| g10[i]).collect();
            ids.dedup();
            assert_eq!(ids.len(), 2);
        }
        assert!(grouped_kfold(&g, 4, 0).is_err());
    }

    #[test]
    fn stratified_examples() {
        let labels = [0, 0, 0, 0, 1, 1];
        let p = stratified_kfold(&labels, 2, 11).unwrap();
        for s in &p.splits {
            let a = s.test.iter().filter(|&&i| labels[i] == 0).count();
            let b = s.test.iter().filter(|&&i| labels[i] == 1).count();
            assert_eq!((a, b), (2, 1));
        }
        let single = [0, 0, 0, 0, 0, 1, 0, 0, 0, 0];
        let p = stratified_kfold(&single, 5, 2).unwrap();
        assert_eq!(p.splits.iter().filter(|s| s.test.contains(&5)).count(), 1);
        let p = stratified_kfold(&[7, 7, 7], 2, 0).unwrap();
        assert_eq!(sizes(&p), vec![1, 2]);
        assert!(stratified_kfold(&[1, 2], 1, 0).is_err());
    }

    #[test]
    fn holdout_sizes() {
        let p = holdout(10, 1.0 / 3.0, 2).unwrap();
        assert_eq!(p.splits[0].test.len(), 3);
        assert_eq!(p.splits[0].train.len(), 7);
        assert!(holdout(10, 1.0, 2).is_err());
    }
}
