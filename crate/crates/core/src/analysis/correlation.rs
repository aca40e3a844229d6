//! Correlation functions and lengths, chemical and Euclidean.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::percolation::{ClusterLabeling, Configuration};
use crate::rng;

use super::census::ClusterCensus;

/// Which occupied sites serve as correlation origins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origins {
    /// Every occupied site once.
    All,
    /// `count` occupied sites drawn uniformly with replacement.
    Sample { count: usize, seed: u64 },
}

/// Mean number of same-cluster sites at each chemical distance from an
/// occupied origin. Origins are uniform over occupied sites, so larger
/// clusters are sampled in proportion to their size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub values: BTreeMap<usize, f64>,
    pub stderr: BTreeMap<usize, f64>,
    pub samples: usize,
}

impl CorrelationEstimate {
    /// Estimate from known values, with zero error.
    pub fn from_values(values: BTreeMap<usize, f64>) -> Self {
        let stderr = values.keys().map(|&l| (l, 0.0)).collect();
        CorrelationEstimate {
            values,
            stderr,
            samples: 1,
        }
    }
}

/// Breadth-first search over occupied neighbors from each origin, counting
/// sites at chemical distance `1..=l_max`.
pub fn chemical_correlation(
    config: &Configuration,
    labeling: &ClusterLabeling,
    origins: Origins,
    l_max: usize,
) -> Result<CorrelationEstimate> {
    if l_max == 0 {
        return Err(Error::InvalidArgument("l_max must be at least 1".into()));
    }
    let occupied: Vec<usize> = config.occupied_sites().collect();
    if occupied.is_empty() {
        return Err(Error::InsufficientData("no occupied sites to use as origins".into()));
    }
    let chosen: Vec<usize> = match origins {
        Origins::All => occupied.clone(),
        Origins::Sample { count, seed } => {
            let mut r = rng::stream(seed);
            (0..count)
                .map(|_| occupied[rng::below_inclusive(&mut r, occupied.len() as u64 - 1) as usize])
                .collect()
        }
    };
    if chosen.is_empty() {
        return Err(Error::InvalidArgument("origin sample is empty".into()));
    }

    let g = config.geometry();
    let mut stamp = vec![u32::MAX; g.site_count()];
    let mut queue = VecDeque::new();
    let mut sum = vec![0f64; l_max + 1];
    let mut sum_sq = vec![0f64; l_max + 1];
    let mut shell = vec![0usize; l_max + 1];

    for (k, &origin) in chosen.iter().enumerate() {
        shell.iter_mut().for_each(|x| *x = 0);
        let root = labeling.root(origin).expect("origin is occupied");
        if labeling.cluster_size(root) > 1 {
            let mark = k as u32;
            stamp[origin] = mark;
            queue.clear();
            queue.push_back((origin, 0usize));
            while let Some((site, dist)) = queue.pop_front() {
                if dist == l_max {
                    continue;
                }
                g.for_each_neighbor(site, |j, _, _| {
                    if stamp[j] != mark && config.is_occupied(j) {
                        stamp[j] = mark;
                        shell[dist + 1] += 1;
                        queue.push_back((j, dist + 1));
                    }
                });
            }
        }
        for l in 1..=l_max {
            let x = shell[l] as f64;
            sum[l] += x;
            sum_sq[l] += x * x;
        }
    }

    let m = chosen.len() as f64;
    let mut values = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    for l in 1..=l_max {
        let mean = sum[l] / m;
        values.insert(l, mean);
        let se = if chosen.len() > 1 {
            (((sum_sq[l] - m * mean * mean) / (m - 1.0)).max(0.0) / m).sqrt()
        } else {
            0.0
        };
        stderr.insert(l, se);
    }
    Ok(CorrelationEstimate {
        values,
        stderr,
        samples: chosen.len(),
    })
}

/// `xi_l = sqrt(sum l^2 g(l) / sum g(l))` over the measured distances.
pub fn chemical_correlation_length(estimate: &CorrelationEstimate) -> Result<f64> {
    let (num, den) = estimate
        .values
        .iter()
        .fold((0.0, 0.0), |(n, d), (&l, &g)| (n + (l * l) as f64 * g, d + g));
    if den <= 0.0 {
        return Err(Error::Undefined("correlation function is zero at every distance".into()));
    }
    Ok((num / den).sqrt())
}

/// Radius of gyration about the center of mass.
pub fn radius_of_gyration(points: &[Vec<f64>]) -> Result<f64> {
    let Some(first) = points.first() else {
        return Err(Error::InvalidArgument("radius of gyration of an empty cluster".into()));
    };
    let d = first.len();
    let s = points.len() as f64;
    let mut center = vec![0.0; d];
    for p in points {
        for (c, x) in center.iter_mut().zip(p) {
            *c += x / s;
        }
    }
    let r2 = points
        .iter()
        .map(|p| p.iter().zip(&center).map(|(x, c)| (x - c).powi(2)).sum::<f64>())
        .sum::<f64>()
        / s;
    Ok(r2.sqrt())
}

/// Radius of gyration from all pair distances, `R^2 = sum_ij |r_i - r_j|^2 / 2s^2`.
pub fn radius_of_gyration_pairwise(points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("radius of gyration of an empty cluster".into()));
    }
    let s = points.len() as f64;
    let mut total = 0.0;
    for a in points {
        for b in points {
            total += a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        }
    }
    Ok((total / (2.0 * s * s)).sqrt())
}

/// Euclidean correlation length from measured cluster radii:
/// `xi_r^2 = 2 sum_s R_s^2 s^2 n_s / sum_s s^2 n_s`, over clusters with a
/// defined radius.
pub fn euclidean_correlation_length(census: &ClusterCensus) -> Result<f64> {
    let shapes = census
        .shapes
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("census lacks per-cluster radii".into()))?;
    let (num, den) = shapes
        .iter()
        .filter_map(|c| c.radius_sq.map(|r2| (c.size as f64, r2)))
        .fold((0.0, 0.0), |(n, d), (s, r2)| (n + r2 * s * s, d + s * s));
    if den == 0.0 {
        return Err(Error::InsufficientData("no clusters with a defined radius".into()));
    }
    Ok((2.0 * num / den).sqrt())
}
