//! Randomized invariants of the engine, the census and the dataset
//! generator.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use perclab::analysis::census;
use perclab::datagen::*;
use perclab::percolation::*;
use perclab::{Boundary, Ensemble, LatticeGeometry};
use proptest::prelude::*;

fn geometry() -> impl Strategy<Value = LatticeGeometry> {
    (1usize..=3, any::<bool>())
        .prop_flat_map(|(d, periodic)| {
            let lo = if periodic { 3 } else { 1 };
            (prop::collection::vec(lo..=6usize, d), Just(periodic))
        })
        .prop_map(|(sides, periodic)| {
            let b = if periodic { Boundary::Periodic } else { Boundary::Free };
            LatticeGeometry::new(sides, b).unwrap()
        })
}

fn partition(l: &ClusterLabeling) -> BTreeSet<Vec<usize>> {
    l.clusters().into_iter().map(|(_, s)| s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sweep_prefix_matches_fresh_labeling(g in geometry(), seed in any::<u64>(), frac in 0.0f64..=1.0) {
        let n = (frac * g.site_count() as f64) as usize;
        let mut nz = NewmanZiff::new(&g, seed);
        for _ in 0..n {
            nz.step();
        }
        let fresh = label_clusters(&Configuration::from_sites(&g, &nz.order()[..n]).unwrap());
        let swept = nz.labeling();
        prop_assert_eq!(partition(&fresh), partition(&swept));
        prop_assert_eq!(nz.spanning(), fresh.roots().any(|r| fresh.spans(r)));
        prop_assert_eq!(nz.largest(), fresh.roots().map(|r| fresh.cluster_size(r)).max().unwrap_or(0));
    }

    #[test]
    fn largest_curve_never_decreases(g in geometry(), seed in any::<u64>()) {
        let curves = newman_ziff_sweep(&g, &Ensemble::new(3, seed), &[Observable::Largest]).unwrap();
        prop_assert!(curves[0].mean.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn curves_do_not_depend_on_workers(g in geometry(), seed in any::<u64>(), workers in 2usize..9) {
        let one = newman_ziff_sweep(&g, &Ensemble::new(7, seed), &Observable::ALL).unwrap();
        let many = newman_ziff_sweep(&g, &Ensemble::new(7, seed).with_workers(workers), &Observable::ALL).unwrap();
        for (a, b) in one.iter().zip(&many) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&a.mean), bits(&b.mean));
            prop_assert_eq!(bits(&a.stderr), bits(&b.stderr));
        }
    }

    #[test]
    fn census_conserves_mass(g in geometry(), seed in any::<u64>(), p in 0.0f64..=1.0) {
        let c = Configuration::sample(&g, p, seed).unwrap();
        let k = census(&label_clusters(&c));
        let mass: usize = k.histogram.iter().map(|(s, n)| s * n).sum();
        prop_assert_eq!(mass, c.occupied_count());
        prop_assert_eq!(k.largest, k.histogram.keys().next_back().copied().unwrap_or(0));
    }

    #[test]
    fn dataset_labels_follow_cluster_functions(g in geometry(), seed in any::<u64>(), p in 0.0f64..=1.0, labels in 2u64..50) {
        let spec = DatasetSpec { geometry: g.clone(), p, labels, seed, min_cluster_size: 1 };
        let ds = generate_dataset(&spec).unwrap();
        prop_assert_eq!(ds.examples.len(), ds.configuration.occupied_count());
        let mut key_of_root = BTreeMap::new();
        for e in &ds.examples {
            prop_assert_eq!(e.in_distribution, ds.configuration.has_occupied_neighbor(e.site_index));
            prop_assert!(e.label < labels);
            match e.cluster_id {
                Some(id) => {
                    let key = ds.functions.keys[&id];
                    prop_assert_eq!(e.label, cluster_function(key, &e.coords, labels));
                    let root = ds.labeling.root(e.site_index).unwrap();
                    prop_assert_eq!(*key_of_root.entry(root).or_insert(key), key);
                    prop_assert!(id <= e.site_index);
                }
                None => prop_assert_eq!(e.label, memorized_label(seed, e.site_index, labels)),
            }
        }
        let distinct: HashSet<u64> = ds.functions.keys.values().copied().collect();
        prop_assert_eq!(distinct.len(), ds.functions.keys.len());

        let bytes = |ds: &Dataset| {
            let mut v = Vec::new();
            write_dataset(ds, DatasetFormat::Csv, &mut v).unwrap();
            v
        };
        prop_assert_eq!(bytes(&ds), bytes(&generate_dataset(&spec).unwrap()));
    }

    #[test]
    fn regime_is_monotone_in_p(a in 0.0f64..=1.0, b in 0.0f64..=1.0, p_c in 0.01f64..0.9, band in 1.01f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(classify_regime(lo, p_c, band).unwrap() <= classify_regime(hi, p_c, band).unwrap());
    }
}
