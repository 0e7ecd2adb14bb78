mod common;

use common::{jacobi_eigenvalues, planted_parallelogram, rng, sorted_rank};
use pctadw::eval::{
    analogy_all_pairs, analogy_rank, analogy_with_anchor, classify, folds_for_fraction, pca_project, stratified_folds,
    Distance, LogRegConfig, TRAINING_FRACTIONS,
};
use pctadw::{Embeddings, LabelSet};
use proptest::prelude::*;
use rand::Rng;

fn to_rows(reps: &Embeddings) -> Vec<Vec<f64>> {
    reps.rows().map(|r| r.iter().map(|&x| x as f64).collect()).collect()
}

#[test]
fn planted_parallelogram_is_rank_one() {
    for seed in 0..10 {
        let reps = planted_parallelogram(seed);
        for metric in [Distance::Euclidean, Distance::Cosine] {
            let all = analogy_all_pairs(&reps, &[("a1", "a2"), ("b1", "b2")], metric).unwrap();
            assert_eq!(all.ranks(), vec![1, 1], "seed {seed} {metric:?}");
        }
        let anchored =
            analogy_with_anchor(&reps, &[("a1", "a2"), ("b1", "b2")], ("a1", "a2"), Distance::Euclidean).unwrap();
        assert_eq!(anchored.ranks(), vec![1]);
    }
}

proptest! {
    #[test]
    fn ranks_match_exhaustive_sort(seed in any::<u64>(), n in 5usize..25, dim in 1usize..6, cosine in any::<bool>()) {
        let mut r = rng(seed);
        // Coarse grid values make exact distance ties common.
        let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..dim).map(|_| r.random_range(-3i32..=3) as f32).collect()).collect();
        let reps = Embeddings::from_rows(&rows);
        let wide = to_rows(&reps);
        let metric = if cosine { Distance::Cosine } else { Distance::Euclidean };
        for _ in 0..10 {
            let mut ids: Vec<usize> = Vec::new();
            while ids.len() < 4 {
                let c = r.random_range(0..n);
                if !ids.contains(&c) {
                    ids.push(c);
                }
            }
            let got = analogy_rank(&reps, ids[0], ids[1], ids[2], ids[3], metric);
            prop_assert_eq!(got, sorted_rank(&wide, ids[0], ids[1], ids[2], ids[3], cosine));
            prop_assert!(got >= 1 && got <= n - 3);
        }
    }

    #[test]
    fn histograms_are_monotone(seed in any::<u64>(), n in 6usize..20, pairs in 2usize..6) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f32>> = (0..n).map(|_| (0..3).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let reps = Embeddings::from_rows(&rows);
        let names: Vec<(String, String)> = (0..pairs).map(|_| (format!("{}", r.random_range(0..n)), format!("{}", r.random_range(0..n)))).collect();
        let valid: Vec<(String, String)> = names.into_iter().filter(|(a, b)| a != b).collect();
        prop_assume!(valid.len() >= 2);
        let result = analogy_all_pairs(&reps, &valid, Distance::Euclidean);
        // Pairs may share nodes; analogies degenerate but must still rank.
        let result = match result {
            Ok(r) => r,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assert_eq!(result.tests.len(), valid.len() * (valid.len() - 1));
        let hist = result.histogram();
        prop_assert!(hist.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        prop_assert_eq!(hist.last().unwrap(), &(n, result.tests.len()));
        let mut previous = 0;
        for k in 1..=n {
            let c = result.cumulative(k);
            prop_assert!(c >= previous);
            previous = c;
        }
    }

    #[test]
    fn euclidean_ranks_are_invariant_under_rotation_and_translation(seed in any::<u64>(), angle in 0.0..std::f64::consts::TAU) {
        let mut r = rng(seed);
        let rows: Vec<Vec<f32>> = (0..12).map(|_| (0..2).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let shift = [r.random_range(-2.0..2.0), r.random_range(-2.0..2.0)];
        let (c, s) = (angle.cos(), angle.sin());
        let moved: Vec<Vec<f32>> = rows
            .iter()
            .map(|p| {
                let (x, y) = (p[0] as f64, p[1] as f64);
                vec![(c * x - s * y + shift[0]) as f32, (s * x + c * y + shift[1]) as f32]
            })
            .collect();
        let (a, b) = (Embeddings::from_rows(&rows), Embeddings::from_rows(&moved));
        for (a1, a2, b1, b2) in [(0, 1, 2, 3), (4, 5, 6, 7), (8, 9, 10, 11)] {
            let ra = analogy_rank(&a, a1, a2, b1, b2, Distance::Euclidean);
            let rb = analogy_rank(&b, a1, a2, b1, b2, Distance::Euclidean);
            // f32 rounding may reorder near-ties by at most a place or two.
            prop_assert!((ra as i64 - rb as i64).abs() <= 2);
        }
    }
}

#[test]
fn pca_matches_jacobi_eigenvalues() {
    let mut r = rng(4);
    let (n, d) = (40, 6);
    let rows: Vec<Vec<f32>> = (0..n)
        .map(|_| (0..d).map(|j| r.random_range(-1.0..1.0) * (j + 1) as f32).collect())
        .collect();
    let reps = Embeddings::from_rows(&rows);
    let projection = pca_project(&reps, d).unwrap();

    let x = to_rows(&reps);
    let means: Vec<f64> = (0..d)
        .map(|j| x.iter().map(|row| row[j]).sum::<f64>() / n as f64)
        .collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    x.iter()
                        .map(|row| (row[a] - means[a]) * (row[b] - means[b]))
                        .sum::<f64>()
                        / (n as f64 - 1.0)
                })
                .collect()
        })
        .collect();
    let expected = jacobi_eigenvalues(cov);
    for (got, want) in projection.explained_variance.iter().zip(&expected) {
        assert!((got - want).abs() <= 1e-8, "{got} vs {want}");
    }
    // Coordinate variance along each axis equals its eigenvalue.
    for k in 0..d {
        let var = projection.coords.iter().map(|c| c[k] * c[k]).sum::<f64>() / (n as f64 - 1.0);
        assert!((var - expected[k]).abs() <= 1e-8);
    }
}

#[test]
fn pca_preserves_distances_of_planar_points() {
    let mut r = rng(12);
    let dim = 128;
    let u: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let mut v: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let uu = dot(&u, &u);
    let proj = dot(&u, &v) / uu;
    v.iter_mut().zip(&u).for_each(|(x, y)| *x -= proj * y);
    let points: Vec<(f64, f64)> = (0..30)
        .map(|_| (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    let rows: Vec<Vec<f32>> = points
        .iter()
        .map(|&(a, b)| (0..dim).map(|i| (0.5 + a * u[i] + b * v[i]) as f32).collect())
        .collect();
    let reps = Embeddings::from_rows(&rows);
    let wide = to_rows(&reps);
    let p = pca_project(&reps, 2).unwrap();
    for i in 0..30 {
        for j in 0..30 {
            let orig = wide[i]
                .iter()
                .zip(&wide[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let flat = ((p.coords[i][0] - p.coords[j][0]).powi(2) + (p.coords[i][1] - p.coords[j][1]).powi(2)).sqrt();
            assert!((orig - flat).abs() <= 1e-5, "{orig} vs {flat}");
        }
    }
}

#[test]
fn one_hot_labels_classify_perfectly() {
    let report = common::one_hot_report(30, 3);
    assert_eq!(report.fractions.len(), 6);
    let folds: Vec<usize> = report.fractions.iter().map(|f| f.folds).collect();
    assert_eq!(folds, vec![20, 10, 5, 4, 3, 2]);
    for f in &report.fractions {
        assert_eq!(f.micro_f1, 1.0, "{}", f.fraction);
        assert_eq!(f.fold_scores.len(), f.folds);
    }
    let csv = report.to_csv();
    assert!(csv.starts_with("fraction,fold,micro_f1\n"));
    assert_eq!(csv.lines().count(), 1 + 20 + 10 + 5 + 4 + 3 + 2);
}

#[test]
fn fold_counts_follow_fractions() {
    let folds: Vec<usize> = TRAINING_FRACTIONS.iter().map(|&f| folds_for_fraction(f)).collect();
    assert_eq!(folds, vec![20, 10, 5, 4, 3, 2]);
}

proptest! {
    #[test]
    fn stratified_folds_balance_each_label_signature(seed in any::<u64>(), n in 10usize..80, k in 2usize..8, classes in 1usize..4) {
        let mut r = rng(seed);
        let signatures: Vec<Vec<usize>> = (0..n).map(|_| vec![r.random_range(0..classes)]).collect();
        let folds = stratified_folds(&signatures, k, &mut r);
        prop_assert_eq!(folds.len(), n);
        prop_assert!(folds.iter().all(|&f| f < k));
        for c in 0..classes {
            let mut per_fold = vec![0usize; k];
            for (s, &f) in signatures.iter().zip(&folds) {
                if s[0] == c {
                    per_fold[f] += 1;
                }
            }
            let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
    }
}

#[test]
fn classification_is_seeded() {
    let mut r = rng(2);
    let rows: Vec<Vec<f32>> = (0..60)
        .map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect())
        .collect();
    let label_rows: Vec<Vec<usize>> = (0..60)
        .map(|v| if v % 7 == 0 { vec![0, 1] } else { vec![v % 2] })
        .collect();
    let labels = LabelSet::from_ids(2, &label_rows);
    let reps = Embeddings::from_rows(&rows);
    let a = classify(&reps, &labels, &[0.1, 0.5], &LogRegConfig::default(), 5).unwrap();
    let b = classify(&reps, &labels, &[0.1, 0.5], &LogRegConfig::default(), 5).unwrap();
    assert_eq!(a, b);
    assert!(a.fractions.iter().all(|f| (0.0..=1.0).contains(&f.micro_f1)));
}

#[test]
fn classification_rejects_misaligned_input() {
    let labels = LabelSet::from_ids(1, &[vec![0], vec![0]]);
    let reps = Embeddings::from_rows(&[vec![1.0]]);
    assert!(classify(&reps, &labels, &[0.5], &LogRegConfig::default(), 1).is_err());
    let reps = Embeddings::from_rows(&[vec![1.0], vec![2.0]]);
    assert!(classify(&reps, &labels, &[0.9], &LogRegConfig::default(), 1).is_err());
}
