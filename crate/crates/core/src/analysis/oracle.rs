//! Exact cluster statistics of tiny lattices by enumerating every
//! configuration.
//!
//! Clusters are found with a flood fill that is independent of the
//! union-find engine, so this module can serve as its reference.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::lattice::LatticeGeometry;

pub const MAX_ORACLE_SITES: usize = 20;

/// First and second moments of the number of size-`s` clusters in one
/// configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CountMoments {
    pub mean: f64,
    pub mean_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactStatistics {
    pub p: f64,
    pub sites: usize,
    /// `n_s`: expected clusters of size `s` per site.
    pub cluster_numbers: BTreeMap<usize, f64>,
    /// Per-configuration count of size-`s` clusters.
    pub cluster_counts: BTreeMap<usize, CountMoments>,
    /// `sum s^2 n_s / sum s n_s`, the ratio of expectations.
    pub mean_size: f64,
    pub spanning_probability: f64,
    /// Moments of `A = sum s^2` and `B = sum s` over clusters of one
    /// configuration: E[A], E[B], E[A^2], E[B^2], E[AB].
    pub size_moments: [f64; 5],
}

/// Exact expectations over all `2^N` configurations, each weighted by
/// `p^k (1-p)^(N-k)`.
pub fn exact_enumeration(geometry: &LatticeGeometry, p: f64) -> Result<ExactStatistics> {
    check_probability(p)?;
    let n = geometry.site_count();
    if n > MAX_ORACLE_SITES {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration supports at most {MAX_ORACLE_SITES} sites, got {n}"
        )));
    }
    let d = geometry.dim();
    let neighbors: Vec<Vec<(usize, usize, i64)>> = (0..n)
        .map(|i| {
            let mut v = Vec::new();
            geometry.for_each_neighbor(i, |j, axis, step| v.push((j, axis, step as i64)));
            v
        })
        .collect();
    let coords: Vec<Vec<usize>> = (0..n).map(|i| geometry.index_to_coords(i).unwrap()).collect();

    let mut counts: BTreeMap<usize, CountMoments> = BTreeMap::new();
    let mut spanning = 0.0;
    let mut moments = [0.0; 5];
    let mut seen = vec![false; n];
    let mut pos: Vec<Vec<i64>> = vec![vec![0; d]; n];
    let mut queue = VecDeque::new();
    let mut per_config: BTreeMap<usize, usize> = BTreeMap::new();

    for mask in 0u32..(1u32 << n) {
        let k = mask.count_ones() as i32;
        let weight = p.powi(k) * (1.0 - p).powi(n as i32 - k);
        if weight == 0.0 {
            continue;
        }
        let occupied = |i: usize| mask >> i & 1 == 1;
        seen.iter_mut().for_each(|s| *s = false);
        per_config.clear();
        let mut any_spans = false;
        let (mut a, mut b) = (0.0, 0.0);
        for start in 0..n {
            if !occupied(start) || seen[start] {
                continue;
            }
            seen[start] = true;
            pos[start] = vec![0; d];
            queue.push_back(start);
            let mut size = 0usize;
            let mut wraps = false;
            let mut low = vec![false; d];
            let mut high = vec![false; d];
            while let Some(i) = queue.pop_front() {
                size += 1;
                for axis in 0..d {
                    let side = geometry.sides()[axis];
                    if side > 1 {
                        low[axis] |= coords[i][axis] == 0;
                        high[axis] |= coords[i][axis] == side - 1;
                    }
                }
                for &(j, axis, step) in &neighbors[i] {
                    if !occupied(j) {
                        continue;
                    }
                    let mut want = pos[i].clone();
                    want[axis] += step;
                    if seen[j] {
                        wraps |= pos[j] != want;
                    } else {
                        seen[j] = true;
                        pos[j] = want;
                        queue.push_back(j);
                    }
                }
            }
            let spans = if geometry.is_periodic() {
                wraps
            } else {
                (0..d).any(|ax| low[ax] && high[ax])
            };
            any_spans |= spans;
            *per_config.entry(size).or_default() += 1;
            a += (size * size) as f64;
            b += size as f64;
        }
        for (&s, &c) in &per_config {
            let e = counts.entry(s).or_default();
            e.mean += weight * c as f64;
            e.mean_sq += weight * (c * c) as f64;
        }
        if any_spans {
            spanning += weight;
        }
        moments[0] += weight * a;
        moments[1] += weight * b;
        moments[2] += weight * a * a;
        moments[3] += weight * b * b;
        moments[4] += weight * a * b;
    }

    let cluster_numbers = counts.iter().map(|(&s, m)| (s, m.mean / n as f64)).collect();
    let mean_size = if moments[1] > 0.0 { moments[0] / moments[1] } else { 0.0 };
    Ok(ExactStatistics {
        p,
        sites: n,
        cluster_numbers,
        cluster_counts: counts,
        mean_size,
        spanning_probability: spanning,
        size_moments: moments,
    })
}

impl ExactStatistics {
    /// Standard error of the ratio estimator `mean(A) / mean(B)` of the
    /// mean cluster size from `samples` independent configurations (delta
    /// method, exact moments).
    pub fn mean_size_stderr(&self, samples: usize) -> f64 {
        let [ea, eb, eaa, ebb, eab] = self.size_moments;
        if eb == 0.0 {
            return 0.0;
        }
        let s = ea / eb;
        let var_a = eaa - ea * ea;
        let var_b = ebb - eb * eb;
        let cov = eab - ea * eb;
        let v = (var_a - 2.0 * s * cov + s * s * var_b) / (eb * eb);
        (v.max(0.0) / samples as f64).sqrt()
    }

    /// Standard error of the sample mean of the size-`s` cluster count.
    pub fn count_stderr(&self, s: usize, samples: usize) -> f64 {
        let m = self.cluster_counts.get(&s).copied().unwrap_or_default();
        ((m.mean_sq - m.mean * m.mean).max(0.0) / samples as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn two_site_strip() {
        let g = LatticeGeometry::new(vec![1, 2], Boundary::Free).unwrap();
        for p in [0.2, 0.5, 0.9] {
            let ex = exact_enumeration(&g, p).unwrap();
            // Per configuration: E[#size-2] = p^2, E[#size-1] = 2p(1-p).
            assert!((ex.cluster_counts[&2].mean - p * p).abs() < 1e-15);
            assert!((ex.cluster_counts[&1].mean - 2.0 * p * (1.0 - p)).abs() < 1e-15);
            assert!((ex.spanning_probability - p * p).abs() < 1e-15);
        }
        let ex = exact_enumeration(&g, 0.5).unwrap();
        assert_eq!(ex.cluster_counts[&2].mean, 0.25);
        assert_eq!(ex.cluster_counts[&1].mean, 0.5);
    }

    #[test]
    fn full_occupation() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let ex = exact_enumeration(&g, 1.0).unwrap();
        assert_eq!(ex.cluster_counts.len(), 1);
        assert_eq!(ex.cluster_counts[&9].mean, 1.0);
        assert_eq!(ex.spanning_probability, 1.0);
        assert_eq!(ex.mean_size, 9.0);
    }

    /// Reference values from an independent brute-force enumeration in
    /// exact rational arithmetic.
    #[test]
    fn frozen_reference_values() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let ex = exact_enumeration(&g, 0.5).unwrap();
        assert!((ex.mean_size - 379.0 / 96.0).abs() < 1e-13);
        assert!((ex.spanning_probability - 271.0 / 512.0).abs() < 1e-15);
        let counts = [
            0.78125, 0.28125, 0.20703125, 0.1640625, 0.134765625, 0.1015625, 0.0625,
            0.017578125, 0.001953125,
        ];
        for (k, want) in counts.iter().enumerate() {
            assert!((ex.cluster_counts[&(k + 1)].mean - want).abs() < 1e-15, "s = {}", k + 1);
        }

        let g = LatticeGeometry::new(vec![1, 4], Boundary::Free).unwrap();
        let ex = exact_enumeration(&g, 0.5).unwrap();
        assert!((ex.mean_size - 33.0 / 16.0).abs() < 1e-15);
        assert!((ex.spanning_probability - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let ex = exact_enumeration(&g, 0.5).unwrap();
        let mass: f64 = ex.cluster_numbers.iter().map(|(&s, &n)| s as f64 * n).sum();
        assert!((mass - 0.5).abs() < 1e-14);
    }

    #[test]
    fn ring_wrapping() {
        let g = LatticeGeometry::new(vec![5], Boundary::Periodic).unwrap();
        let ex = exact_enumeration(&g, 0.6).unwrap();
        assert!((ex.spanning_probability - 0.6f64.powi(5)).abs() < 1e-15);
    }

    #[test]
    fn too_large() {
        let g = LatticeGeometry::new(vec![3, 7], Boundary::Free).unwrap();
        assert!(exact_enumeration(&g, 0.5).is_err());
    }
}
