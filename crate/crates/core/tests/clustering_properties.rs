use ddie_core::clustering::{agglomerative, birch, davies_bouldin, kmeans, silhouette, BirchConfig, Linkage};
use proptest::prelude::*;

fn points() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| [x, y]), 12..60)
}

fn sse(p: &[[f64; 2]], labels: &[usize], k: usize) -> f64 {
    let mut c = vec![[0.0; 3]; k];
    for (q, &l) in p.iter().zip(labels) {
        c[l][0] += q[0];
        c[l][1] += q[1];
        c[l][2] += 1.0;
    }
    p.iter()
        .zip(labels)
        .map(|(q, &l)| {
            let m = [c[l][0] / c[l][2], c[l][1] / c[l][2]];
            (q[0] - m[0]).powi(2) + (q[1] - m[1]).powi(2)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_method_yields_k_nonempty_clusters(p in points(), k in 2usize..8) {
        let km = kmeans(&p, k, 1).unwrap();
        let ag = agglomerative(&p, k, Linkage::Ward).unwrap();
        let bi = birch(&p, k, &BirchConfig::default()).unwrap();
        for a in [&km.assignment, &ag, &bi] {
            prop_assert_eq!(a.len(), p.len());
            prop_assert!(a.n_clusters() <= k);
            prop_assert!(a.sizes().iter().all(|&s| s > 0));
        }
        prop_assert_eq!(km.assignment.n_clusters(), k.min(distinct(&p)));
    }

    #[test]
    fn kmeans_inertia_is_monotone_and_matches_partition(p in points(), k in 2usize..8, seed in any::<u64>()) {
        let r = kmeans(&p, k, seed).unwrap();
        for w in r.inertia_history.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-9);
        }
        let direct = sse(&p, r.assignment.labels(), r.assignment.n_clusters());
        prop_assert!((direct - r.inertia).abs() <= 1e-9 * direct.max(1.0));
    }

    #[test]
    fn quality_scores_stay_in_range(p in points(), k in 2usize..6) {
        let a = kmeans(&p, k, 3).unwrap().assignment;
        if a.n_clusters() >= 2 {
            let s = silhouette(&p, a.labels()).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!(davies_bouldin(&p, a.labels()).unwrap() >= 0.0);
        }
    }
}

fn distinct(p: &[[f64; 2]]) -> usize {
    let mut v: Vec<[u64; 2]> = p.iter().map(|q| [q[0].to_bits(), q[1].to_bits()]).collect();
    v.sort();
    v.dedup();
    v.len()
}
