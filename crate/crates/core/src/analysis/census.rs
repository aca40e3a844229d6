use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::percolation::ClusterLabeling;

/// Geometry of one cluster. `radius_sq` is absent for clusters that wrap a
/// periodic axis, whose radius of gyration is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterShape {
    pub size: usize,
    pub radius_sq: Option<f64>,
    pub spans: bool,
}

/// Cluster-size statistics of one configuration, or of several pooled.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClusterCensus {
    /// Lattice sites covered (summed over pooled configurations).
    pub sites: usize,
    pub occupied: usize,
    /// Cluster size `s` to number of clusters of that size.
    pub histogram: BTreeMap<usize, usize>,
    pub largest: usize,
    pub spanning: bool,
    /// Sizes of the spanning (or wrapping) clusters.
    pub spanning_sizes: Vec<usize>,
    /// Per-cluster shapes, filled by [`census_with_shapes`].
    pub shapes: Option<Vec<ClusterShape>>,
}

/// Size histogram of a labeling.
pub fn census(labeling: &ClusterLabeling) -> ClusterCensus {
    let mut c = ClusterCensus {
        sites: labeling.geometry().site_count(),
        occupied: labeling.occupied_count(),
        ..Default::default()
    };
    for r in labeling.roots() {
        let s = labeling.cluster_size(r);
        *c.histogram.entry(s).or_default() += 1;
        c.largest = c.largest.max(s);
        if labeling.spans(r) {
            c.spanning = true;
            c.spanning_sizes.push(s);
        }
    }
    c
}

/// Census plus the radius of gyration of every non-wrapping cluster,
/// computed from unwrapped site positions.
pub fn census_with_shapes(labeling: &ClusterLabeling) -> ClusterCensus {
    let mut c = census(labeling);
    let g = labeling.geometry();
    let d = g.dim();
    let n = g.site_count();

    // Exact integer moments per root: sum of x and of x^2 on every axis.
    let mut slot = vec![usize::MAX; n];
    let roots: Vec<usize> = labeling.roots().collect();
    for (k, &r) in roots.iter().enumerate() {
        slot[r] = k;
    }
    let mut first = vec![0i64; roots.len() * d];
    let mut second = vec![0i128; roots.len() * d];
    for site in 0..n {
        let Some(r) = labeling.root(site) else { continue };
        let k = slot[r];
        let pos = labeling.unwrapped_position(site).expect("occupied");
        for (a, x) in pos.into_iter().enumerate() {
            first[k * d + a] += x;
            second[k * d + a] += (x as i128) * (x as i128);
        }
    }
    let shapes = roots
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let size = labeling.cluster_size(r);
            let radius_sq = (!labeling.wraps(r)).then(|| {
                let s = size as i128;
                let num: i128 = (0..d)
                    .map(|a| s * second[k * d + a] - (first[k * d + a] as i128).pow(2))
                    .sum();
                num as f64 / (s * s) as f64
            });
            ClusterShape {
                size,
                radius_sq,
                spans: labeling.spans(r),
            }
        })
        .collect();
    c.shapes = Some(shapes);
    c
}

impl ClusterCensus {
    /// Census of clusters with the given sizes, none spanning.
    pub fn from_sizes(sites: usize, sizes: &[usize]) -> Self {
        let mut c = ClusterCensus {
            sites,
            ..Default::default()
        };
        for &s in sizes {
            *c.histogram.entry(s).or_default() += 1;
            c.occupied += s;
            c.largest = c.largest.max(s);
        }
        c
    }

    /// Pools another census into this one.
    pub fn merge(&mut self, other: ClusterCensus) {
        let fresh = self.sites == 0;
        self.shapes = match (self.shapes.take(), other.shapes) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (None, b) if fresh => b,
            _ => None,
        };
        self.sites += other.sites;
        self.occupied += other.occupied;
        for (s, k) in other.histogram {
            *self.histogram.entry(s).or_default() += k;
        }
        self.largest = self.largest.max(other.largest);
        self.spanning |= other.spanning;
        self.spanning_sizes.extend(other.spanning_sizes);
    }

    pub fn cluster_count(&self) -> usize {
        self.histogram.values().sum()
    }

    /// `n_s`: clusters of size `s` per lattice site.
    pub fn cluster_number(&self, s: usize) -> f64 {
        self.histogram.get(&s).copied().unwrap_or(0) as f64 / self.sites as f64
    }

    /// Histogram with spanning clusters removed.
    pub fn finite_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = self.histogram.clone();
        for s in &self.spanning_sizes {
            if let Some(k) = h.get_mut(s) {
                *k -= 1;
                if *k == 0 {
                    h.remove(s);
                }
            }
        }
        h
    }

    /// One entry per non-spanning cluster.
    pub fn finite_sizes(&self) -> Vec<usize> {
        self.finite_histogram()
            .into_iter()
            .flat_map(|(s, k)| std::iter::repeat_n(s, k))
            .collect()
    }

    /// `(s, R_s)` for every cluster with a defined radius.
    pub fn size_radius_pairs(&self) -> Vec<(f64, f64)> {
        self.shapes
            .iter()
            .flatten()
            .filter_map(|c| c.radius_sq.map(|r2| (c.size as f64, r2.sqrt())))
            .collect()
    }

    /// `(s, R_s)` with `R_s^2` the mean squared radius of the non-spanning
    /// clusters of size `s` that have one; one pair per distinct size.
    pub fn radius_by_size(&self) -> Vec<(f64, f64)> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for c in self.shapes.iter().flatten().filter(|c| !c.spans) {
            if let Some(r2) = c.radius_sq {
                let e = acc.entry(c.size).or_default();
                e.0 += r2;
                e.1 += 1;
            }
        }
        acc.into_iter()
            .map(|(s, (r2, k))| (s as f64, (r2 / k as f64).sqrt()))
            .collect()
    }

    /// Writes `s,count` rows in increasing `s`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "s,count")?;
        for (s, k) in &self.histogram {
            writeln!(out, "{s},{k}")?;
        }
        Ok(())
    }

    /// Parses `s,count` rows into a histogram.
    pub fn read_histogram_csv(text: &str) -> Result<BTreeMap<usize, usize>> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("s,count") => {}
            other => {
                return Err(Error::InvalidArgument(format!(
                    "expected header `s,count`, found {other:?}"
                )))
            }
        }
        let mut h = BTreeMap::new();
        for (k, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("line {}: malformed row `{line}`", k + 2));
            let (s, c) = line.split_once(',').ok_or_else(bad)?;
            let s: usize = s.trim().parse().map_err(|_| bad())?;
            let c: usize = c.trim().parse().map_err(|_| bad())?;
            if s == 0 {
                return Err(bad());
            }
            *h.entry(s).or_default() += c;
        }
        Ok(h)
    }
}

/// Size-weighted mean cluster size `sum s^2 n_s / sum s n_s`, optionally
/// leaving out one copy of the largest cluster.
pub fn mean_cluster_size(census: &ClusterCensus, exclude_largest: bool) -> Result<f64> {
    let mut first = 0u128;
    let mut second = 0u128;
    for (&s, &k) in &census.histogram {
        first += (s * k) as u128;
        second += (s as u128) * (s as u128) * k as u128;
    }
    if exclude_largest && census.largest > 0 {
        let l = census.largest as u128;
        first -= l;
        second -= l * l;
    }
    if first == 0 {
        return Err(Error::Undefined("mean cluster size of an empty census".into()));
    }
    Ok(second as f64 / first as f64)
}

/// Fraction of occupied sites in the largest cluster.
pub fn percolation_strength(census: &ClusterCensus) -> Result<f64> {
    if census.occupied == 0 {
        return Err(Error::Undefined("percolation strength with no occupied sites".into()));
    }
    Ok(census.largest as f64 / census.occupied as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, LatticeGeometry};
    use crate::percolation::{label_clusters, Configuration};

    #[test]
    fn histogram_of_small_clusters() {
        let c = ClusterCensus::from_sizes(20, &[2, 1, 1]);
        assert_eq!(c.histogram, BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(c.occupied, 4);
        assert_eq!(c.largest, 2);
        assert!((mean_cluster_size(&c, false).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn empty_census() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let c = census(&label_clusters(&Configuration::from_sites(&g, &[]).unwrap()));
        assert!(c.histogram.is_empty());
        assert_eq!(c.largest, 0);
        assert!(matches!(mean_cluster_size(&c, false), Err(Error::Undefined(_))));
        assert!(matches!(percolation_strength(&c), Err(Error::Undefined(_))));
    }

    #[test]
    fn full_square_spans() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let c = census(&label_clusters(&Configuration::full(&g)));
        assert_eq!(c.histogram, BTreeMap::from([(9, 1)]));
        assert!(c.spanning);
        assert_eq!(percolation_strength(&c).unwrap(), 1.0);
        assert!(c.finite_sizes().is_empty());
    }

    #[test]
    fn single_cluster_mean_size() {
        let c = ClusterCensus::from_sizes(10, &[5]);
        assert_eq!(mean_cluster_size(&c, false).unwrap(), 5.0);
        assert!(mean_cluster_size(&c, true).is_err());
        let c = ClusterCensus::from_sizes(10, &[3, 1]);
        assert_eq!(percolation_strength(&c).unwrap(), 0.75);
        assert_eq!(mean_cluster_size(&c, true).unwrap(), 1.0);
    }

    #[test]
    fn shapes_of_line_segments() {
        let g = LatticeGeometry::new(vec![5, 5], Boundary::Periodic).unwrap();
        // A 3-site line across the seam at x = 4, 0, 1 and an isolated site.
        let sites = [
            g.coords_to_index(&[2, 4]).unwrap(),
            g.coords_to_index(&[2, 0]).unwrap(),
            g.coords_to_index(&[2, 1]).unwrap(),
            g.coords_to_index(&[0, 2]).unwrap(),
        ];
        let c = census_with_shapes(&label_clusters(&Configuration::from_sites(&g, &sites).unwrap()));
        let mut shapes = c.shapes.clone().unwrap();
        shapes.sort_by_key(|s| s.size);
        assert_eq!(shapes[0].radius_sq, Some(0.0));
        assert!((shapes[1].radius_sq.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn wrapping_cluster_has_no_radius() {
        let g = LatticeGeometry::new(vec![4, 4], Boundary::Periodic).unwrap();
        let row: Vec<usize> = (0..4).collect();
        let c = census_with_shapes(&label_clusters(&Configuration::from_sites(&g, &row).unwrap()));
        assert_eq!(c.shapes.unwrap()[0].radius_sq, None);
        assert!(c.spanning);
        assert_eq!(c.spanning_sizes, vec![4]);
    }

    #[test]
    fn radius_averaged_per_size() {
        let mut c = ClusterCensus::from_sizes(100, &[2, 2, 3, 5]);
        c.shapes = Some(vec![
            ClusterShape { size: 2, radius_sq: Some(0.25), spans: false },
            ClusterShape { size: 2, radius_sq: Some(1.0), spans: false },
            ClusterShape { size: 3, radius_sq: None, spans: true },
            ClusterShape { size: 5, radius_sq: Some(4.0), spans: true },
        ]);
        assert_eq!(c.radius_by_size(), vec![(2.0, 0.625f64.sqrt())]);
    }

    #[test]
    fn merge_and_csv() {
        let mut a = ClusterCensus::from_sizes(9, &[2, 1]);
        a.merge(ClusterCensus::from_sizes(9, &[2]));
        assert_eq!(a.sites, 18);
        assert_eq!(a.occupied, 5);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "s,count\n1,1\n2,2\n");
        assert_eq!(ClusterCensus::read_histogram_csv(&text).unwrap(), a.histogram);
        assert!(ClusterCensus::read_histogram_csv("s,n\n1,2\n").is_err());
        assert!(ClusterCensus::read_histogram_csv("s,count\n1;2\n").is_err());
    }
}
