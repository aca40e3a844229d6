//! Newman-Ziff single-pass sweeps and binomial convolution to fixed `p`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{check_probability, Error, Result};
use crate::lattice::LatticeGeometry;
use crate::rng;

use super::forest::ClusterForest;
use super::labeling::ClusterLabeling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Largest,
    Spanning,
    MeanFiniteSize,
    ClusterCount,
}

impl Observable {
    pub const ALL: [Observable; 4] = [
        Observable::Largest,
        Observable::Spanning,
        Observable::MeanFiniteSize,
        Observable::ClusterCount,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Observable::Largest => "largest",
            Observable::Spanning => "spanning",
            Observable::MeanFiniteSize => "mean_finite_size",
            Observable::ClusterCount => "cluster_count",
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .into_iter()
            .find(|o| o.id() == s)
            .ok_or_else(|| Error::UnknownObservable(s.to_string()))
    }
}

/// One realization of the sweep: sites are occupied one at a time in a
/// seeded random order while cluster statistics are kept current.
#[derive(Debug, Clone)]
pub struct NewmanZiff {
    geometry: LatticeGeometry,
    forest: ClusterForest,
    order: Vec<usize>,
    next: usize,
    largest: usize,
    sum_sq: u64,
    spanning: bool,
}

impl NewmanZiff {
    pub fn new(geometry: &LatticeGeometry, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..geometry.site_count()).collect();
        rng::shuffle(&mut order, &mut rng::stream(seed));
        NewmanZiff {
            geometry: geometry.clone(),
            forest: ClusterForest::new(geometry),
            order,
            next: 0,
            largest: 0,
            sum_sq: 0,
            spanning: false,
        }
    }

    /// Occupation order of the sites.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Occupies the next site and returns it, or `None` once full.
    pub fn step(&mut self) -> Option<usize> {
        let site = *self.order.get(self.next)?;
        self.next += 1;
        let f = &mut self.forest;
        f.occupy(site);
        self.sum_sq += 1;
        self.largest = self.largest.max(1);

        self.geometry.for_each_neighbor(site, |j, axis, step| {
            if !f.is_occupied(j) {
                return;
            }
            let ra = f.find(site);
            let rb = f.find(j);
            if ra != rb {
                self.sum_sq += 2 * (f.size[ra] as u64) * (f.size[rb] as u64);
            }
            let root = f.bond(site, j, axis, step);
            self.largest = self.largest.max(f.size[root]);
            if !self.spanning && f.root_spans(root) {
                self.spanning = true;
            }
        });
        Some(site)
    }

    pub fn occupied(&self) -> usize {
        self.next
    }

    pub fn largest(&self) -> usize {
        self.largest
    }

    pub fn cluster_count(&self) -> usize {
        self.forest.clusters
    }

    /// Some cluster wraps (periodic) or joins opposite faces (free).
    pub fn spanning(&self) -> bool {
        self.spanning
    }

    /// Size-weighted mean cluster size, `sum s^2 / sum s`, with the largest
    /// cluster left out once the system spans. Zero when nothing is left.
    pub fn mean_finite_size(&self) -> f64 {
        let n = self.next as u64;
        let (num, den) = if self.spanning {
            let l = self.largest as u64;
            (self.sum_sq - l * l, n - l)
        } else {
            (self.sum_sq, n)
        };
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn observe(&self, observable: Observable) -> f64 {
        match observable {
            Observable::Largest => self.largest as f64,
            Observable::Spanning => self.spanning as u8 as f64,
            Observable::MeanFiniteSize => self.mean_finite_size(),
            Observable::ClusterCount => self.forest.clusters as f64,
        }
    }

    /// Snapshot of the current partition.
    pub fn labeling(&self) -> ClusterLabeling {
        ClusterLabeling::from_forest(self.forest.clone())
    }

    /// Number of occupied sites at which the system first spans, if ever.
    pub fn run_until_spanning(&mut self) -> Option<usize> {
        while !self.spanning {
            self.step()?;
        }
        Some(self.next)
    }
}

/// Ensemble mean of an observable after `n` occupied sites, `n = 0..=N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrocanonicalCurve {
    pub observable: Observable,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub realizations: usize,
}

impl MicrocanonicalCurve {
    /// Curve with the given means and zero error, for a single realization
    /// or analytic input.
    pub fn from_values(observable: Observable, mean: Vec<f64>) -> Self {
        let stderr = vec![0.0; mean.len()];
        MicrocanonicalCurve {
            observable,
            mean,
            stderr,
            realizations: 1,
        }
    }

    /// Number of sites `N`; the curve has `N + 1` points.
    pub fn sites(&self) -> usize {
        self.mean.len() - 1
    }
}

fn trace(geometry: &LatticeGeometry, seed: u64, observables: &[Observable]) -> Vec<Vec<f64>> {
    let n = geometry.site_count();
    let mut out: Vec<Vec<f64>> = observables
        .iter()
        .map(|_| {
            let mut v = Vec::with_capacity(n + 1);
            v.push(0.0);
            v
        })
        .collect();
    let mut nz = NewmanZiff::new(geometry, seed);
    while nz.step().is_some() {
        for (k, &o) in observables.iter().enumerate() {
            out[k].push(nz.observe(o));
        }
    }
    out
}

/// Runs one sweep per realization and averages each observable over the
/// ensemble at every occupation count.
pub fn newman_ziff_sweep(
    geometry: &LatticeGeometry,
    ensemble: &Ensemble,
    observables: &[Observable],
) -> Result<Vec<MicrocanonicalCurve>> {
    if observables.is_empty() {
        return Err(Error::InvalidArgument("no observables selected".into()));
    }
    let len = geometry.site_count() + 1;
    let init = vec![(vec![0.0f64; len], vec![0.0f64; len]); observables.len()];
    let sums = ensemble.fold(
        init,
        |_, seed| trace(geometry, seed, observables),
        |mut acc, run| {
            for (slot, values) in acc.iter_mut().zip(run) {
                for (i, v) in values.into_iter().enumerate() {
                    slot.0[i] += v;
                    slot.1[i] += v * v;
                }
            }
            acc
        },
    )?;
    let r = ensemble.realizations as f64;
    Ok(observables
        .iter()
        .zip(sums)
        .map(|(&observable, (sum, sum_sq))| {
            let mean: Vec<f64> = sum.iter().map(|s| s / r).collect();
            let stderr = sum_sq
                .iter()
                .zip(&mean)
                .map(|(sq, m)| {
                    if ensemble.realizations < 2 {
                        0.0
                    } else {
                        let var = ((sq - r * m * m) / (r - 1.0)).max(0.0);
                        (var / r).sqrt()
                    }
                })
                .collect();
            MicrocanonicalCurve {
                observable,
                mean,
                stderr,
                realizations: ensemble.realizations,
            }
        })
        .collect())
}

/// Writes curves as CSV with columns `n,observable,mean,stderr`.
pub fn write_curves_csv<W: Write>(curves: &[MicrocanonicalCurve], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,observable,mean,stderr")?;
    let Some(first) = curves.first() else {
        return Ok(());
    };
    for n in 0..first.mean.len() {
        for c in curves {
            writeln!(out, "{n},{},{},{}", c.observable, c.mean[n], c.stderr[n])?;
        }
    }
    Ok(())
}

/// Normalized binomial weights `B(total, n, p)` over the window of `n`
/// that carries non-negligible mass. Returns the first `n` of the window.
pub fn binomial_weights(total: usize, p: f64) -> Result<(usize, Vec<f64>)> {
    check_probability(p)?;
    if p == 0.0 {
        return Ok((0, vec![1.0]));
    }
    if p == 1.0 {
        return Ok((total, vec![1.0]));
    }
    let nf = total as f64;
    let mode = (((nf + 1.0) * p).floor() as usize).min(total);
    let log_odds = (p / (1.0 - p)).ln();
    const CUTOFF: f64 = -40.0; // e^-40 ~ 4e-18 relative to the mode

    // Log weights relative to the mode, walked outwards with the ratio
    // B(n+1)/B(n) = (N - n)/(n + 1) * p/(1 - p).
    let mut upper = Vec::new();
    let mut lw = 0.0;
    let mut n = mode;
    while n < total {
        lw += ((nf - n as f64) / (n as f64 + 1.0)).ln() + log_odds;
        if lw < CUTOFF {
            break;
        }
        upper.push(lw);
        n += 1;
    }
    let mut lower = Vec::new();
    let mut lw = 0.0;
    let mut n = mode;
    while n > 0 {
        lw -= ((nf - n as f64 + 1.0) / n as f64).ln() + log_odds;
        if lw < CUTOFF {
            break;
        }
        lower.push(lw);
        n -= 1;
    }
    let start = mode - lower.len();
    let mut weights: Vec<f64> = lower
        .iter()
        .rev()
        .chain(std::iter::once(&0.0))
        .chain(upper.iter())
        .map(|l| l.exp())
        .collect();
    let norm: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= norm);
    Ok((start, weights))
}

/// Canonical value `Q(p) = sum_n B(N, n, p) Q_n` of a microcanonical curve.
pub fn canonical_convolve(curve: &MicrocanonicalCurve, p: f64) -> Result<f64> {
    convolve_values(&curve.mean, p)
}

pub(crate) fn convolve_values(values: &[f64], p: f64) -> Result<f64> {
    let total = values.len() - 1;
    let (start, w) = binomial_weights(total, p)?;
    Ok(w.iter().zip(&values[start..]).map(|(w, q)| w * q).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub p_c: f64,
    pub stderr: f64,
    pub realizations: usize,
}

const BOOTSTRAP_RESAMPLES: usize = 200;

/// Occupation count at which each realization first spans.
pub fn first_spanning_counts(geometry: &LatticeGeometry, ensemble: &Ensemble) -> Result<Vec<Option<usize>>> {
    ensemble.map(|_, seed| NewmanZiff::new(geometry, seed).run_until_spanning())
}

/// Estimates `p_c` as the point where the canonical spanning (periodic:
/// wrapping) probability crosses 1/2. The error is the bootstrap standard
/// deviation over realizations.
pub fn estimate_threshold(geometry: &LatticeGeometry, ensemble: &Ensemble) -> Result<ThresholdEstimate> {
    let counts = first_spanning_counts(geometry, ensemble)?;
    let n = geometry.site_count();
    let p_c = crossing_from_counts(&counts, n)?;

    let mut rng = rng::stream(rng::derive_seed(ensemble.master_seed, u64::MAX));
    let r = counts.len();
    let mut boot = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    if r > 1 {
        let mut sample = vec![None; r];
        for _ in 0..BOOTSTRAP_RESAMPLES {
            for slot in sample.iter_mut() {
                *slot = counts[rng::below_inclusive(&mut rng, r as u64 - 1) as usize];
            }
            if let Ok(p) = crossing_from_counts(&sample, n) {
                boot.push(p);
            }
        }
    }
    let stderr = if boot.len() > 1 {
        let m = boot.iter().sum::<f64>() / boot.len() as f64;
        (boot.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (boot.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(ThresholdEstimate {
        p_c,
        stderr,
        realizations: r,
    })
}

/// Spanning curve `R_n` (fraction spanning after `n` sites) from first
/// spanning counts.
pub fn spanning_curve(counts: &[Option<usize>], sites: usize) -> Vec<f64> {
    let mut hist = vec![0usize; sites + 1];
    for c in counts.iter().flatten() {
        hist[*c] += 1;
    }
    let r = counts.len() as f64;
    let mut acc = 0usize;
    hist.iter()
        .map(|h| {
            acc += h;
            acc as f64 / r
        })
        .collect()
}

fn crossing_from_counts(counts: &[Option<usize>], sites: usize) -> Result<f64> {
    let curve = spanning_curve(counts, sites);
    let f = |p: f64| convolve_values(&curve, p).map(|v| v - 0.5);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if f(lo)? >= 0.0 || f(hi)? < 0.0 {
        return Err(Error::NoCrossing);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
