use bookrating_core::features::BlockMap;
use bookrating_core::rng;
use bookrating_core::tree::*;
use bookrating_core::FeatureVector;
use proptest::prelude::*;
use rand::Rng;

fn dense(rows: &[&[f64]]) -> Vec<FeatureVector> {
    rows.iter().map(|r| FeatureVector::dense(r.to_vec())).collect()
}

fn random_rows(n: usize, d: usize, levels: u32, seed: u64) -> (Vec<FeatureVector>, Vec<usize>) {
    let mut r = rng::seeded(seed);
    let rows: Vec<FeatureVector> = (0..n)
        .map(|_| FeatureVector::dense((0..d).map(|_| r.gen_range(0..levels) as f64).collect()))
        .collect();
    let labels = (0..n).map(|_| r.gen_range(0..3)).collect();
    (rows, labels)
}

fn accuracy(pred: impl Fn(&FeatureVector) -> usize, rows: &[FeatureVector], y: &[usize]) -> f64 {
    rows.iter().zip(y).filter(|(x, l)| pred(x) == **l).count() as f64 / rows.len() as f64
}

fn gini_counts(labels: &[usize], k: usize) -> f64 {
    let mut c = vec![0.0; k];
    for l in labels {
        c[*l] += 1.0;
    }
    gini(&c).unwrap()
}

/// Exhaustive midpoint search, independent of the library's split code.
fn oracle_split(rows: &[FeatureVector], labels: &[usize]) -> Option<(usize, f64, f64)> {
    let k = labels.iter().max().unwrap() + 1;
    let n = rows.len() as f64;
    let parent = gini_counts(labels, k);
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..rows[0].dim() {
        let mut vals: Vec<f64> = rows.iter().map(|r| r.get(f)).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = {
                let mut l = vec![];
                let mut r = vec![];
                for (x, y) in rows.iter().zip(labels) {
                    if x.get(f) <= t {
                        l.push(*y)
                    } else {
                        r.push(*y)
                    }
                }
                (l, r)
            };
            let gain = parent
                - l.len() as f64 / n * gini_counts(&l, k)
                - r.len() as f64 / n * gini_counts(&r, k);
            if gain > 1e-12 && best.map_or(true, |b| gain > b.2 + 1e-12) {
                best = Some((f, t, gain));
            }
        }
    }
    best
}

#[test]
fn gini_examples() {
    assert_eq!(gini(&[3.0, 0.0]).unwrap(), 0.0);
    assert!((gini(&[1.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
    assert!((gini(&[1.0; 4]).unwrap() - 0.75).abs() < 1e-15);
    assert!(gini(&[]).is_err());
}

#[test]
fn best_split_examples() {
    let s = best_split(&dense(&[&[0.0], &[1.0]]), &[0, 1], &[0], 32).unwrap().unwrap();
    assert!(s.threshold >= 0.0 && s.threshold < 1.0);
    assert!((s.gain - 0.5).abs() < 1e-12);
    assert!(best_split(&dense(&[&[0.0], &[1.0]]), &[1, 1], &[0], 32).unwrap().is_none());
    let s = best_split(&dense(&[&[0.0, 0.0], &[1.0, 1.0]]), &[0, 1], &[0, 1], 32).unwrap().unwrap();
    assert_eq!(s.feature, 0);
}

#[test]
fn tree_fixtures() {
    let cfg = TreeConfig::default();
    let rows = dense(&[&[0.0], &[1.0]]);
    let t = train_decision_tree(&rows, &[0, 1], 2, &cfg).unwrap();
    assert_eq!(t.depth(), 1);
    assert_eq!(accuracy(|x| predict_tree(&t, x).0, &rows, &[0, 1]), 1.0);

    let stump = train_decision_tree(&rows, &[1, 1], 2, &TreeConfig { max_depth: 0, ..cfg.clone() }).unwrap();
    assert_eq!(stump.depth(), 0);
    assert_eq!(predict_tree(&stump, &rows[0]).0, 1);

    let mut xor = vec![];
    let mut y = vec![];
    for _ in 0..25 {
        for (a, b, l) in [(0.0, 0.0, 0), (0.0, 1.0, 1), (1.0, 0.0, 1), (1.0, 1.0, 0)] {
            xor.push(FeatureVector::dense(vec![a, b]));
            y.push(l);
        }
    }
    // Every first split of balanced XOR has zero Gini gain, so the
    // positive-gain rule stops at the root; one extra row breaks the symmetry.
    let flat = train_decision_tree(&xor, &y, 2, &TreeConfig { max_depth: 2, ..cfg.clone() }).unwrap();
    assert_eq!(flat.depth(), 0);
    xor.push(FeatureVector::dense(vec![0.0, 0.0]));
    y.push(0);
    let t = train_decision_tree(&xor, &y, 2, &TreeConfig { max_depth: 2, ..cfg.clone() }).unwrap();
    assert_eq!(accuracy(|x| predict_tree(&t, x).0, &xor, &y), 1.0);

    assert!(train_decision_tree(&[], &[], 2, &cfg).is_err());
}

#[test]
fn prediction_rules() {
    let leaf = TreeNode::Leaf {
        value: LeafValue::Distribution(vec![0.7, 0.3]),
        n_samples: 10,
    };
    assert_eq!(predict_tree(&leaf, &FeatureVector::dense(vec![0.0])).0, 0);
    let node = TreeNode::Internal {
        feature: 0,
        threshold: 0.5,
        impurity_gain: 0.1,
        n_samples: 10,
        left: Box::new(TreeNode::Leaf { value: LeafValue::Distribution(vec![1.0, 0.0]), n_samples: 5 }),
        right: Box::new(TreeNode::Leaf { value: LeafValue::Distribution(vec![0.0, 1.0]), n_samples: 5 }),
    };
    assert_eq!(predict_tree(&node, &FeatureVector::dense(vec![0.5])).0, 0);
    assert_eq!(predict_tree(&node, &FeatureVector::dense(vec![0.50001])).0, 1);
}

/// Brute-force evaluation of every root-to-leaf path predicate.
fn leaf_by_predicates(t: &TreeNode, x: &FeatureVector) -> Vec<f64> {
    fn paths(t: &TreeNode, preds: Vec<(usize, f64, bool)>, out: &mut Vec<(Vec<(usize, f64, bool)>, Vec<f64>)>) {
        match t {
            TreeNode::Leaf { value: LeafValue::Distribution(d), .. } => out.push((preds, d.clone())),
            TreeNode::Leaf { .. } => unreachable!(),
            TreeNode::Internal { feature, threshold, left, right, .. } => {
                let mut l = preds.clone();
                l.push((*feature, *threshold, true));
                paths(left, l, out);
                let mut r = preds;
                r.push((*feature, *threshold, false));
                paths(right, r, out);
            }
        }
    }
    let mut all = vec![];
    paths(t, vec![], &mut all);
    let hits: Vec<_> = all
        .into_iter()
        .filter(|(p, _)| p.iter().all(|(f, th, left)| (x.get(*f) <= *th) == *left))
        .collect();
    assert_eq!(hits.len(), 1);
    hits[0].1.clone()
}

fn check_counts(t: &TreeNode) {
    if let TreeNode::Internal { n_samples, left, right, impurity_gain, .. } = t {
        assert_eq!(left.n_samples() + right.n_samples(), *n_samples);
        assert!(*impurity_gain > 0.0);
        check_counts(left);
        check_counts(right);
    }
}

#[test]
fn routing_matches_predicate_oracle() {
    let (rows, y) = random_rows(300, 4, 10, 7);
    let t = train_decision_tree(&rows, &y, 3, &TreeConfig { max_depth: 6, ..Default::default() }).unwrap();
    check_counts(&t);
    let mut r = rng::seeded(99);
    for _ in 0..100 {
        let x = FeatureVector::dense((0..4).map(|_| r.gen_range(-1.0..11.0)).collect());
        assert_eq!(predict_tree(&t, &x).1, leaf_by_predicates(&t, &x));
    }
}

#[test]
fn sparse_rows_train_like_dense_rows() {
    let (rows, y) = random_rows(200, 6, 3, 11);
    let sparse: Vec<FeatureVector> = rows
        .iter()
        .map(|r| FeatureVector::sparse(r.dim(), r.iter_nonzero().map(|(i, v)| (i as u32, v)).collect::<Vec<_>>()).unwrap())
        .collect();
    let cfg = TreeConfig { max_depth: 5, ..Default::default() };
    assert_eq!(
        train_decision_tree(&rows, &y, 3, &cfg).unwrap(),
        train_decision_tree(&sparse, &y, 3, &cfg).unwrap()
    );
}

#[test]
fn forest_fixtures() {
    let (rows, y) = random_rows(150, 5, 6, 3);
    let tree_cfg = TreeConfig { max_depth: 4, ..Default::default() };
    let single = ForestConfig {
        num_trees: 1,
        max_depth: 4,
        feature_subset_size: Some(5),
        bootstrap: false,
        ..Default::default()
    };
    let f = train_random_forest(&rows, &y, 3, &single).unwrap();
    let t = train_decision_tree(&rows, &y, 3, &tree_cfg).unwrap();
    let mut r = rng::seeded(5);
    for _ in 0..200 {
        let x = FeatureVector::dense((0..5).map(|_| r.gen_range(-1.0..7.0)).collect());
        assert_eq!(predict_forest(&f, &x), predict_tree(&t, &x).0);
    }

    let cfg = ForestConfig { num_trees: 7, seed: 42, ..Default::default() };
    assert_eq!(train_random_forest(&rows, &y, 3, &cfg).unwrap(), train_random_forest(&rows, &y, 3, &cfg).unwrap());

    let bad = ForestConfig { feature_subset_size: Some(6), ..Default::default() };
    assert!(train_random_forest(&rows, &y, 3, &bad).is_err());

    let sep = dense(&[&[0.0], &[1.0], &[2.0], &[3.0], &[10.0], &[11.0], &[12.0], &[13.0]]);
    let sy = [0, 0, 0, 0, 1, 1, 1, 1];
    let f = train_random_forest(&sep, &sy, 2, &ForestConfig { num_trees: 50, seed: 1, ..Default::default() }).unwrap();
    assert_eq!(accuracy(|x| predict_forest(&f, x), &sep, &sy), 1.0);
}

fn constant_tree(class: usize, k: usize) -> TreeNode {
    let mut d = vec![0.0; k];
    d[class] = 1.0;
    TreeNode::Leaf { value: LeafValue::Distribution(d), n_samples: 1 }
}

#[test]
fn forest_voting() {
    let x = FeatureVector::dense(vec![0.0]);
    let f = |v: &[usize]| ForestModel { trees: v.iter().map(|c| constant_tree(*c, 3)).collect(), num_classes: 3, seed: 0 };
    assert_eq!(predict_forest(&f(&[0, 0, 1]), &x), 0);
    assert_eq!(predict_forest(&f(&[0, 1]), &x), 0);
    assert_eq!(predict_forest(&f(&[2, 1, 2]), &x), 2);

    let (rows, y) = random_rows(120, 4, 5, 21);
    let forest = train_random_forest(&rows, &y, 3, &ForestConfig { num_trees: 5, seed: 8, ..Default::default() }).unwrap();
    let mut r = rng::seeded(2);
    for _ in 0..100 {
        let x = FeatureVector::dense((0..4).map(|_| r.gen_range(0.0..5.0)).collect());
        let mut tally = [0usize; 3];
        for t in &forest.trees {
            tally[predict_tree(t, &x).0] += 1;
        }
        let max = *tally.iter().max().unwrap();
        let expected = tally.iter().position(|c| *c == max).unwrap();
        assert_eq!(predict_forest(&forest, &x), expected);
    }

    let t = train_decision_tree(&rows, &y, 3, &TreeConfig::default()).unwrap();
    let dup = ForestModel { trees: vec![t.clone(), t.clone(), t.clone()], num_classes: 3, seed: 0 };
    for x in &rows {
        assert_eq!(predict_forest(&dup, x), predict_tree(&t, x).0);
    }
}

#[test]
fn gbt_fixtures() {
    let sep = dense(&[&[0.0], &[1.0], &[2.0], &[3.0], &[10.0], &[11.0], &[12.0], &[13.0]]);
    let sy = [0, 0, 0, 0, 1, 1, 1, 1];
    let m = train_gbt(&sep, &sy, &GbtConfig { num_iters: 10, learning_rate: 0.1, ..Default::default() }).unwrap();
    assert_eq!(accuracy(|x| predict_gbt(&m, x).0, &sep, &sy), 1.0);

    let skew = [0, 1, 1, 1, 0, 1, 1, 1];
    let prior = train_gbt(&sep, &skew, &GbtConfig { num_iters: 0, ..Default::default() }).unwrap();
    assert!(sep.iter().all(|x| predict_gbt(&prior, x).0 == 1));

    assert!(train_gbt(&sep, &[1; 8], &GbtConfig::default()).is_err());

    let mut r = rng::seeded(4);
    let rows: Vec<FeatureVector> = (0..200).map(|_| FeatureVector::dense((0..3).map(|_| r.gen_range(0.0..1.0)).collect())).collect();
    let y: Vec<usize> = rows.iter().map(|x| usize::from(x.get(0) + 0.3 * r.gen_range(-1.0..1.0) > 0.5)).collect();
    let m = train_gbt(&rows, &y, &GbtConfig { num_iters: 20, learning_rate: 0.05, ..Default::default() }).unwrap();
    assert_eq!(m.train_loss.len(), 21);
    for w in m.train_loss.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{:?}", m.train_loss);
    }
}

#[test]
fn gbt_prediction_rules() {
    let x = FeatureVector::dense(vec![1.0]);
    let empty = GbtModel { initial_score: 0.0, learning_rate: 0.1, trees: vec![], train_loss: vec![] };
    assert_eq!(predict_gbt(&empty, &x), (0, 0.5));
    let two = GbtModel { initial_score: 2.0, ..empty.clone() };
    assert!((predict_gbt(&two, &x).1 - 0.880797).abs() < 1e-6);

    let leaf = |s| TreeNode::Leaf { value: LeafValue::Score(s), n_samples: 1 };
    let m = GbtModel { initial_score: 0.3, learning_rate: 0.5, trees: vec![leaf(1.0), leaf(-0.2)], train_loss: vec![] };
    let neg = GbtModel { initial_score: -0.3, learning_rate: 0.5, trees: vec![leaf(-1.0), leaf(0.2)], train_loss: vec![] };
    assert_ne!(predict_gbt(&m, &x).0, predict_gbt(&neg, &x).0);
}

#[test]
fn importances() {
    let rows = dense(&[&[0.0, 5.0, 5.0], &[1.0, 5.0, 5.0]]);
    let t = train_decision_tree(&rows, &[0, 1], 2, &TreeConfig::default()).unwrap();
    let blocks = BlockMap::from_dims(&[("a", 1), ("b", 2)]);
    let imp = feature_importances(TreeModelRef::Tree(&t), &blocks);
    assert_eq!(imp.blocks, vec![("a".to_string(), 1.0), ("b".to_string(), 0.0)]);
    assert!(!imp.degenerate);

    let leaf = constant_tree(0, 2);
    let imp = feature_importances(TreeModelRef::Tree(&leaf), &blocks);
    assert!(imp.degenerate);
    assert!(imp.blocks.iter().all(|b| b.1 == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn best_split_matches_exhaustive_oracle(seed in 0u64..10_000, n in 2usize..64, d in 1usize..4, levels in 2u32..12) {
        let (rows, y) = random_rows(n, d, levels, seed);
        let features: Vec<usize> = (0..d).collect();
        let got = best_split(&rows, &y, &features, 32).unwrap();
        let want = oracle_split(&rows, &y);
        match (got, want) {
            (None, None) => {}
            (Some(g), Some((f, t, gain))) => {
                prop_assert!((g.gain - gain).abs() < 1e-9);
                prop_assert_eq!(g.feature, f);
                // any threshold in the same gap routes identically
                for x in &rows {
                    prop_assert_eq!(x.get(f) <= g.threshold, x.get(f) <= t);
                }
            }
            (g, w) => prop_assert!(false, "got {:?}, oracle {:?}", g, w),
        }
    }

    #[test]
    fn forest_importances_normalize(seed in 0u64..1000) {
        let (rows, y) = random_rows(80, 6, 4, seed);
        let f = train_random_forest(&rows, &y, 3, &ForestConfig { num_trees: 4, seed, ..Default::default() }).unwrap();
        let blocks = BlockMap::from_dims(&[("p", 1), ("t", 1), ("s", 2), ("r", 2)]);
        let imp = feature_importances(TreeModelRef::Forest(&f), &blocks);
        prop_assume!(!imp.degenerate);
        let total: f64 = imp.blocks.iter().map(|b| b.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        prop_assert!(imp.blocks.iter().all(|b| b.1 >= 0.0));
    }

    #[test]
    fn prediction_is_piecewise_constant(seed in 0u64..1000) {
        let (rows, y) = random_rows(100, 3, 8, seed);
        let t = train_decision_tree(&rows, &y, 3, &TreeConfig::default()).unwrap();
        let mut thresholds: Vec<Vec<f64>> = vec![vec![]; 3];
        collect_thresholds(&t, &mut thresholds);
        let mut r = rng::seeded(seed + 1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| r.gen_range(-1.0..9.0)).collect();
            let base = predict_tree(&t, &FeatureVector::dense(x.clone())).1;
            let f = r.gen_range(0..3);
            // nudge within the cell containing x[f]
            let lo = thresholds[f].iter().filter(|v| **v < x[f]).fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let hi = thresholds[f].iter().filter(|v| **v >= x[f]).fold(f64::INFINITY, |a, b| a.min(*b));
            let lo = lo.max(-2.0);
            let hi = hi.min(10.0);
            let mut y2 = x.clone();
            y2[f] = lo + (hi - lo) * r.gen_range(0.01..1.0);
            if y2[f] > lo && y2[f] <= hi {
                prop_assert_eq!(predict_tree(&t, &FeatureVector::dense(y2)).1, base);
            }
        }
    }
}

fn collect_thresholds(t: &TreeNode, out: &mut [Vec<f64>]) {
    if let TreeNode::Internal { feature, threshold, left, right, .. } = t {
        out[*feature].push(*threshold);
        collect_thresholds(left, out);
        collect_thresholds(right, out);
    }
}
