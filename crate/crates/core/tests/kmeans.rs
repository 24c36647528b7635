mod support;

use proptest::prelude::*;
use rand::Rng;

use rbmvec::baselines::{kmeans, kmeans_points, KMeansConfig};
use rbmvec::rbm::Supervector;
use rbmvec::rng::seeded;

use support::*;

#[test]
fn two_blobs_reach_exhaustive_optimum() {
    let points = vec![
        vec![0.0, 0.1],
        vec![0.3, -0.2],
        vec![-0.1, 0.0],
        vec![5.0, 5.2],
        vec![5.3, 4.9],
        vec![4.8, 5.0],
    ];
    let (best, labels) = best_two_split(&points);
    for seed in 0..10 {
        let fit = kmeans_points(&points, &KMeansConfig::new(2, seed)).unwrap();
        assert!((fit.objective() - best).abs() < 1e-12, "seed {seed}");
        assert_eq!(canonical(&fit.labels), canonical(&labels));
    }
}

#[test]
fn supervector_wrapper_keeps_ids() {
    let vs: Vec<Supervector<f64>> = [[0.0, 0.0], [0.1, 0.0], [9.0, 9.0]]
        .iter()
        .enumerate()
        .map(|(i, v)| Supervector {
            source_item: format!("s{i}"),
            values: v.to_vec(),
        })
        .collect();
    let (part, fit) = kmeans(&vs, &KMeansConfig::new(2, 0)).unwrap();
    assert_eq!(part.ids(), ["s0", "s1", "s2"]);
    assert_eq!(part.n_clusters(), 2);
    assert_eq!(part.label_of("s0"), part.label_of("s1"));
    assert_eq!(fit.centroids.len(), 2);
}

proptest! {
    #[test]
    fn objective_never_increases(seed in any::<u64>(), n in 2usize..60, k in 1usize..8) {
        let mut rng = seeded(seed);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-5.0..5.0)).collect())
            .collect();
        let k = k.min(n);
        let fit = kmeans_points(&points, &KMeansConfig::new(k, seed)).unwrap();
        for w in fit.objective_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", fit.objective_history);
        }
        let mut used = fit.labels.clone();
        used.sort();
        used.dedup();
        prop_assert_eq!(used.len(), k);
        prop_assert!(fit.iterations <= 300);
    }
}
