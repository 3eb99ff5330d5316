use std::path::Path;
use std::sync::Arc;

use proptest::prelude::*;

use geest::data::{parse_dataset, render_dataset, Dataset, Label, Schema};
use geest::hierarchy::{CategoryTree, NodeId};
use geest::metrics::{h_loss, hier_prf, shortest_path_loss, sym_diff_loss, win_score, Averaging};
use geest::splitters::{
    grouped_kfold, repeated_kfold, stratified_kfold, timeseries_cv, ResamplingPlan,
};

fn dataset() -> impl Strategy<Value = Dataset> {
    (2usize..30, 1usize..4).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(-1e6f64..1e6, n * p),
            prop::collection::vec(-1e3f64..1e3, n),
            prop::collection::vec(0i64..5, n),
            prop::collection::vec(0.001f64..1.0, n),
            prop::collection::vec((0.0f64..100.0, -50.0f64..50.0), n),
        )
            .prop_map(move |(x, y, g, pi, c)| {
                let names = (0..p).map(|j| format!("f{j}")).collect();
                Dataset::new(names, x, Label::Real(y))
                    .unwrap()
                    .with_cluster_ids(g)
                    .unwrap()
                    .with_inclusion_prob(pi)
                    .unwrap()
                    .with_coords(c.into_iter().map(|(a, b)| [a, b]).collect())
                    .unwrap()
                    .with_population_size(1000)
                    .unwrap()
            })
    })
}

fn figure6() -> Arc<CategoryTree> {
    Arc::new(CategoryTree::from_leaf_labels(&["1", "2.1", "2.2.1", "2.2.2", "2.3", "3.1", "3.2"]).unwrap())
}

fn leaf_pairs() -> impl Strategy<Value = (Vec<NodeId>, Vec<NodeId>)> {
    let leaves = figure6().leaves().to_vec();
    prop::collection::vec((0..leaves.len(), 0..leaves.len()), 1..40)
        .prop_map(move |v| v.into_iter().map(|(a, b)| (leaves[a], leaves[b])).unzip())
}

fn check_partition(plan: &ResamplingPlan) -> Result<(), TestCaseError> {
    for group in plan.by_repeat() {
        let mut seen = vec![0; plan.n];
        for s in group {
            for &i in &s.test {
                seen[i] += 1;
            }
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..plan.n).collect::<Vec<_>>());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip(d in dataset()) {
        let text = render_dataset(&d, None);
        let back = parse_dataset(&text, &Schema::inferred(), Path::new(".")).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn subset_composes(d in dataset(), seed in any::<u64>()) {
        let n = d.n();
        let a: Vec<usize> = (0..n).map(|i| (i * 7 + seed as usize) % n).collect();
        let b: Vec<usize> = (0..a.len()).rev().step_by(2).collect();
        let composed: Vec<usize> = b.iter().map(|&j| a[j]).collect();
        prop_assert_eq!(d.subset(&a).unwrap().subset(&b).unwrap(), d.subset(&composed).unwrap());
    }

    #[test]
    fn kfold_partitions(n in 2usize..200, k in 2usize..10, repeats in 1usize..4, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let plan = repeated_kfold(n, k, repeats, seed).unwrap();
        prop_assert_eq!(plan.len(), k * repeats);
        check_partition(&plan)?;
        for s in &plan.splits {
            prop_assert!(s.test.len() == n / k || s.test.len() == n / k + 1);
        }
        prop_assert_eq!(ResamplingPlan::parse(&plan.render()).unwrap(), plan);
    }

    #[test]
    fn grouped_kfold_keeps_groups_whole(groups in prop::collection::vec(0i64..12, 10..100), k in 2usize..5, seed in any::<u64>()) {
        let distinct = { let mut g = groups.clone(); g.sort_unstable(); g.dedup(); g.len() };
        prop_assume!(distinct >= k);
        let plan = grouped_kfold(&groups, k, seed).unwrap();
        check_partition(&plan)?;
        for s in &plan.splits {
            for &i in &s.test {
                prop_assert!(s.train.iter().all(|&j| groups[j] != groups[i]));
            }
        }
    }

    #[test]
    fn stratified_counts_within_one(labels in prop::collection::vec(0usize..4, 20..120), k in 2usize..6, seed in any::<u64>()) {
        let plan = stratified_kfold(&labels, k, seed).unwrap();
        check_partition(&plan)?;
        for c in 0..4 {
            let counts: Vec<usize> = plan.splits.iter().map(|s| s.test.iter().filter(|&&i| labels[i] == c).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn timeseries_trains_on_the_past(per in prop::collection::vec(1usize..6, 2..10), gap in 0u32..2) {
        prop_assume!(per.len() as u32 >= 2 + gap);
        let seasons: Vec<u32> = per.iter().enumerate().flat_map(|(s, &c)| std::iter::repeat_n(s as u32 + 1, c)).collect();
        let plan = timeseries_cv(&seasons, gap).unwrap();
        prop_assert_eq!(plan.len(), per.len() - 1 - gap as usize);
        for s in &plan.splits {
            let last = s.train.iter().map(|&i| seasons[i]).max().unwrap();
            let first = s.test.iter().map(|&i| seasons[i]).min().unwrap();
            prop_assert!(last + gap < first);
        }
    }

    #[test]
    fn hierarchical_metric_ranges((y, yhat) in leaf_pairs()) {
        let t = figure6();
        for avg in [Averaging::Micro, Averaging::Macro] {
            let prf = hier_prf(&t, &y, &yhat, avg).unwrap();
            for v in [prf.precision, prf.recall, prf.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
        let sd = sym_diff_loss(&t, &y, &yhat).unwrap();
        let sp = shortest_path_loss(&t, &y, &yhat, None).unwrap();
        prop_assert_eq!(sd.per_observation, sp.per_observation);
        let hl = h_loss(&t, &y, &yhat, &[1.0, 0.5, 0.25]).unwrap();
        for ((a, b), l) in y.iter().zip(&yhat).zip(hl.per_observation.unwrap()) {
            prop_assert_eq!(l == 0.0, a == b);
        }
    }

    #[test]
    fn win_score_is_bounded(y in prop::collection::vec(0usize..7, 1..20), raw in prop::collection::vec(0.01f64..1.0, 7)) {
        let t = figure6();
        let total: f64 = raw.iter().sum();
        let row: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let probs: Vec<f64> = y.iter().flat_map(|_| row.iter().copied()).collect();
        let labels: Vec<NodeId> = y.iter().map(|&i| t.leaves()[i]).collect();
        let w = win_score(&t, &labels, &probs).unwrap();
        prop_assert!(w.value >= 0.0 && w.value <= 2.0);
    }
}
