use nepdf_core::eval::{auroc, combine, kfold_split, mutual_information, weighted_accuracy, accuracy};
use nepdf_core::nepdf::{augment_with_transposes, build_dataset, build_epdf, Label, NepdfOptions, PairSample};
use proptest::prelude::*;

fn brute_force_auroc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] && !labels[j] {
                den += 1.0;
                num += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
            }
        }
    }
    num / den
}

/// Scores drawn from a small set of levels so ties are common.
fn scored_labels() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (2usize..120).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![(0i32..6).prop_map(|v| v as f64 / 5.0), -10.0f64..10.0], n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter("both classes", |(_, l)| l.iter().any(|&b| b) && l.iter().any(|&b| !b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn auroc_matches_pair_counting((s, l) in scored_labels()) {
        prop_assert!((auroc(&s, &l).unwrap() - brute_force_auroc(&s, &l)).abs() < 1e-12);
    }

    #[test]
    fn auroc_invariant_under_increasing_maps((s, l) in scored_labels(), a in 0.1f64..10.0, b in -5.0f64..5.0) {
        let base = auroc(&s, &l).unwrap();
        let affine: Vec<f64> = s.iter().map(|v| a * v + b).collect();
        let exp: Vec<f64> = s.iter().map(|v| v.exp()).collect();
        prop_assert_eq!(auroc(&affine, &l).unwrap(), base);
        prop_assert_eq!(auroc(&exp, &l).unwrap(), base);
    }

    #[test]
    fn auroc_complement(n in 2usize..80, seed in any::<u64>()) {
        let mut r = nepdf_core::rng::seeded(seed);
        let mut s: Vec<f64> = (0..n).map(|i| i as f64).collect();
        nepdf_core::rng::shuffle(&mut s, &mut r);
        let l: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let flipped: Vec<bool> = l.iter().map(|b| !b).collect();
        prop_assert!((auroc(&s, &l).unwrap() + auroc(&s, &flipped).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn combine_is_bounded_and_monotone(c1 in 0.0f64..=1.0, c2 in 0.0f64..=1.0, i in 0.0f64..=1.0) {
        let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
        let a = combine(lo, i).unwrap();
        let b = combine(hi, i).unwrap();
        prop_assert!(a <= b);
        prop_assert!(a.abs() <= i && b.abs() <= i);
    }

    #[test]
    fn unit_weights_give_plain_accuracy(labels in prop::collection::vec(0usize..3, 1..60), preds in prop::collection::vec(0usize..3, 60)) {
        let l: Vec<Label> = labels.iter().map(|&c| Label::from_class_index(c).unwrap()).collect();
        let p: Vec<Label> = preds[..l.len()].iter().map(|&c| Label::from_class_index(c).unwrap()).collect();
        let hits = l.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / l.len() as f64;
        prop_assert_eq!(weighted_accuracy(&p, &l, &vec![1.0; l.len()]).unwrap(), hits);
        prop_assert_eq!(accuracy(&p, &l).unwrap(), hits);
    }

    #[test]
    fn mutual_information_is_nonnegative(x in prop::collection::vec(-100.0f64..100.0, 2..300), seed in any::<u64>()) {
        let mut y = x.clone();
        nepdf_core::rng::shuffle(&mut y, &mut nepdf_core::rng::seeded(seed));
        let pair = PairSample::new("p", x, y, Label::Independent).unwrap();
        let mi = mutual_information(&build_epdf(&pair, 8, false).unwrap()).unwrap();
        prop_assert!(mi >= 0.0);
    }

    #[test]
    fn folds_never_split_twins(systems in 3usize..30, k in 2usize..4, seed in any::<u64>()) {
        let pairs: Vec<PairSample> = (0..systems)
            .flat_map(|s| {
                ["X-Y", "Y-X", "X-Z"].map(|suffix| {
                    PairSample::new(format!("sys{s}:{suffix}"), vec![1.0, 2.0, 3.0], vec![3.0, 1.0, 2.0], Label::Causal).unwrap()
                })
            })
            .collect();
        let data = augment_with_transposes(&build_dataset(&pairs, &NepdfOptions { k: 2, ..Default::default() }).unwrap());
        let groups: Vec<&str> = data.iter().map(|e| e.group.as_str()).collect();
        let folds = kfold_split(&groups, k, seed).unwrap();
        let mut count = vec![0; data.len()];
        for f in &folds {
            for &i in &f.test {
                count[i] += 1;
                for &j in &f.train {
                    prop_assert_ne!(&data[i].group, &data[j].group);
                }
            }
        }
        prop_assert!(count.iter().all(|&c| c == 1));
    }
}

#[test]
fn mutual_information_zero_iff_factorized() {
    use nepdf_core::nepdf::{BinGrid, NepdfMatrix};
    let grid = BinGrid { edges_x: vec![0.0, 1.0, 2.0], edges_y: vec![0.0, 1.0, 2.0], log_space: false };
    let m = |values: Vec<f64>| NepdfMatrix { k: 2, values, grid: grid.clone(), n_obs: 4, normalized: false };
    assert_eq!(mutual_information(&m(vec![0.12, 0.28, 0.18, 0.42])).unwrap().abs() < 1e-15, true);
    assert!(mutual_information(&m(vec![0.3, 0.1, 0.1, 0.5])).unwrap() > 1e-3);
}
