use crate::lattice::LatticeGeometry;

use super::config::Configuration;
use super::forest::{ClusterForest, EMPTY};

/// Cluster partition of a configuration, fully path-compressed: every
/// occupied site points directly at its root.
#[derive(Debug, Clone)]
pub struct ClusterLabeling {
    forest: ClusterForest,
}

/// Labels nearest-neighbor clusters with union by size and path compression.
pub fn label_clusters(config: &Configuration) -> ClusterLabeling {
    let geometry = config.geometry();
    let mut forest = ClusterForest::new(geometry);
    for i in config.occupied_sites() {
        forest.occupy(i);
    }
    // Each bond once: only the +1 step along every axis.
    for i in 0..geometry.site_count() {
        if !forest.is_occupied(i) {
            continue;
        }
        geometry.for_each_neighbor(i, |j, axis, step| {
            if step == 1 && forest.is_occupied(j) {
                forest.bond(i, j, axis, step);
            }
        });
    }
    ClusterLabeling::from_forest(forest)
}

impl ClusterLabeling {
    pub(crate) fn from_forest(mut forest: ClusterForest) -> Self {
        forest.compress_all();
        ClusterLabeling { forest }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        self.forest.geometry()
    }

    /// Root of an occupied site, `None` for empty sites.
    #[inline]
    pub fn root(&self, site: usize) -> Option<usize> {
        match self.forest.parent[site] {
            EMPTY => None,
            r => Some(r),
        }
    }

    /// Raw union-find parent array; empty sites hold `usize::MAX`.
    pub fn parents(&self) -> &[usize] {
        &self.forest.parent
    }

    pub fn cluster_count(&self) -> usize {
        self.forest.clusters
    }

    pub fn occupied_count(&self) -> usize {
        self.forest.occupied
    }

    /// Roots in increasing site order.
    pub fn roots(&self) -> impl Iterator<Item = usize> + '_ {
        self.forest
            .parent
            .iter()
            .enumerate()
            .filter(|&(i, &p)| p == i)
            .map(|(i, _)| i)
    }

    pub fn cluster_size(&self, root: usize) -> usize {
        debug_assert_eq!(self.forest.parent[root], root);
        self.forest.size[root]
    }

    /// Wraps around a periodic axis, or touches opposite free faces.
    pub fn spans(&self, root: usize) -> bool {
        self.forest.root_spans(root)
    }

    /// Whether the cluster wraps around a periodic axis. Always false
    /// under free boundaries.
    pub fn wraps(&self, root: usize) -> bool {
        self.geometry().is_periodic() && self.forest.root_spans(root)
    }

    /// Member sites of every cluster, keyed by root in increasing order.
    pub fn clusters(&self) -> Vec<(usize, Vec<usize>)> {
        let n = self.forest.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut out: Vec<(usize, Vec<usize>)> = Vec::with_capacity(self.forest.clusters);
        for (k, r) in self.roots().enumerate() {
            slot[r] = k;
            out.push((r, Vec::with_capacity(self.forest.size[r])));
        }
        for (i, &p) in self.forest.parent.iter().enumerate() {
            if p != EMPTY {
                out[slot[p]].1.push(i);
            }
        }
        out
    }

    /// Unwrapped position of `site`: root coordinates plus the tracked
    /// displacement. Consistent within any non-wrapping cluster.
    pub fn unwrapped_position(&self, site: usize) -> Option<Vec<i64>> {
        let root = self.root(site)?;
        let g = self.geometry();
        let d = g.dim();
        Some(
            (0..d)
                .map(|a| g.coord(root, a) as i64 + self.forest.offset[site * d + a] as i64)
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::rng;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn sizes(l: &ClusterLabeling) -> Vec<usize> {
        let mut s: Vec<usize> = l.roots().map(|r| l.cluster_size(r)).collect();
        s.sort_unstable();
        s
    }

    #[test]
    fn full_square() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let l = label_clusters(&Configuration::full(&g));
        assert_eq!(l.cluster_count(), 1);
        assert_eq!(sizes(&l), vec![9]);
        let r = l.roots().next().unwrap();
        assert!(l.spans(r));
        assert!(!l.wraps(r));
    }

    #[test]
    fn diagonal_sites_are_separate() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let c = Configuration::from_sites(&g, &[0, 4]).unwrap();
        let l = label_clusters(&c);
        assert_eq!(sizes(&l), vec![1, 1]);
    }

    #[test]
    fn full_ring_wraps() {
        let g = LatticeGeometry::new(vec![5], Boundary::Periodic).unwrap();
        let l = label_clusters(&Configuration::full(&g));
        assert_eq!(sizes(&l), vec![5]);
        assert!(l.wraps(l.roots().next().unwrap()));
    }

    #[test]
    fn open_ring_does_not_wrap() {
        let g = LatticeGeometry::new(vec![5], Boundary::Periodic).unwrap();
        // Sites 3, 4, 0, 1 form one chain across the seam.
        let l = label_clusters(&Configuration::from_sites(&g, &[0, 1, 3, 4]).unwrap());
        assert_eq!(sizes(&l), vec![4]);
        let r = l.roots().next().unwrap();
        assert!(!l.wraps(r));
        let mut xs: Vec<i64> = [0, 1, 3, 4]
            .iter()
            .map(|&i| l.unwrapped_position(i).unwrap()[0])
            .collect();
        xs.sort_unstable();
        assert!(xs.windows(2).all(|w| w[1] - w[0] == 1), "{xs:?}");
    }

    #[test]
    fn empty_configuration() {
        let g = LatticeGeometry::new(vec![4, 4], Boundary::Free).unwrap();
        let l = label_clusters(&Configuration::from_sites(&g, &[]).unwrap());
        assert_eq!(l.cluster_count(), 0);
        assert_eq!(l.roots().count(), 0);
    }

    #[test]
    fn free_spanning_requires_opposite_faces() {
        let g = LatticeGeometry::new(vec![4, 4], Boundary::Free).unwrap();
        // Row 0 across columns 0..3: touches the low and high faces of axis 1.
        let row = Configuration::from_sites(&g, &[0, 1, 2, 3]).unwrap();
        let l = label_clusters(&row);
        assert!(l.spans(l.roots().next().unwrap()));
        let partial = Configuration::from_sites(&g, &[0, 1, 2]).unwrap();
        let l = label_clusters(&partial);
        assert!(!l.spans(l.roots().next().unwrap()));
    }

    fn partition(l: &ClusterLabeling) -> BTreeSet<Vec<usize>> {
        l.clusters().into_iter().map(|(_, s)| s).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        /// Bond processing order does not change the partition.
        #[test]
        fn partition_is_order_independent(seed in any::<u64>(), p in 0.2f64..0.8, periodic in any::<bool>()) {
            let b = if periodic { Boundary::Periodic } else { Boundary::Free };
            let g = LatticeGeometry::new(vec![6, 5], b).unwrap();
            let c = Configuration::sample(&g, p, seed).unwrap();
            let reference = label_clusters(&c);

            let mut sites: Vec<usize> = c.occupied_sites().collect();
            rng::shuffle(&mut sites, &mut rng::stream(seed ^ 1));
            let mut forest = ClusterForest::new(&g);
            for &i in &sites {
                forest.occupy(i);
            }
            for &i in &sites {
                g.for_each_neighbor(i, |j, axis, step| {
                    if forest.is_occupied(j) {
                        forest.bond(i, j, axis, step);
                    }
                });
            }
            let shuffled = ClusterLabeling::from_forest(forest);
            prop_assert_eq!(partition(&reference), partition(&shuffled));
            for r in reference.roots() {
                let members = &reference.clusters().into_iter().find(|(k, _)| *k == r).unwrap().1;
                let r2 = shuffled.root(members[0]).unwrap();
                prop_assert_eq!(reference.spans(r), shuffled.spans(r2));
            }
            let total: usize = reference.roots().map(|r| reference.cluster_size(r)).sum();
            prop_assert_eq!(total, c.occupied_count());
        }

        /// Unwrapped positions of bonded sites in a non-wrapping cluster
        /// differ by exactly one lattice step.
        #[test]
        fn unwrapped_positions_consistent(seed in any::<u64>()) {
            let g = LatticeGeometry::new(vec![7, 7], Boundary::Periodic).unwrap();
            let c = Configuration::sample(&g, 0.5, seed).unwrap();
            let l = label_clusters(&c);
            for i in c.occupied_sites() {
                let r = l.root(i).unwrap();
                if l.wraps(r) {
                    continue;
                }
                let pi = l.unwrapped_position(i).unwrap();
                let mut check = Ok(());
                g.for_each_neighbor(i, |j, axis, step| {
                    if c.is_occupied(j) {
                        let pj = l.unwrapped_position(j).unwrap();
                        for a in 0..2 {
                            let want = pi[a] + if a == axis { step as i64 } else { 0 };
                            if pj[a] != want {
                                check = Err(format!("{i} -> {j}: {pi:?} vs {pj:?}"));
                            }
                        }
                    }
                });
                prop_assert!(check.is_ok(), "{:?}", check);
            }
        }
    }
}
