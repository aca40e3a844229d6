//! Site percolation on the Bethe lattice: closed-form results and a
//! cluster-growth Monte Carlo sampler to check them.
//!
//! The lattice is an infinite tree of uniform degree `z`. All quantities
//! below the threshold follow from the shell correlation
//! `g(l) = z (z-1)^(l-1) p^l`; the exponents are the mean-field values.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{check_probability, Error, Result};
use crate::rng;

/// Default growth cap for [`grow_cluster`].
pub const DEFAULT_GROWTH_CAP: usize = 1_000_000;

/// Relative size of the last term at which moment sums stop.
const MOMENT_TOLERANCE: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetheParams {
    pub z: u32,
    pub p: f64,
}

impl BetheParams {
    pub fn new(z: u32, p: f64) -> Result<Self> {
        check_coordination(z)?;
        check_probability(p)?;
        Ok(BetheParams { z, p })
    }

    pub fn p_c(&self) -> f64 {
        1.0 / (self.z as f64 - 1.0)
    }

    fn require_subcritical(&self, what: &str) -> Result<()> {
        if self.p < self.p_c() {
            Ok(())
        } else {
            Err(Error::Divergent(format!(
                "{what} diverges for p = {} >= p_c = {}",
                self.p,
                self.p_c()
            )))
        }
    }
}

fn check_coordination(z: u32) -> Result<()> {
    if z < 2 {
        return Err(Error::InvalidArgument(format!("coordination number {z} < 2")));
    }
    Ok(())
}

/// Percolation threshold `1 / (z - 1)`.
pub fn bethe_pc(z: u32) -> Result<f64> {
    check_coordination(z)?;
    Ok(1.0 / (z as f64 - 1.0))
}

/// Expected number of same-cluster sites at chemical distance `l` from an
/// occupied site.
pub fn bethe_correlation(z: u32, p: f64, l: u32) -> Result<f64> {
    BetheParams::new(z, p)?;
    if l < 1 {
        return Err(Error::InvalidArgument("distance must be at least 1".into()));
    }
    let z = z as f64;
    Ok(z * (z - 1.0).powi(l as i32 - 1) * p.powi(l as i32))
}

/// Squared chemical correlation length `p_c (p + p_c) / (p_c - p)^2`.
pub fn bethe_xi_l_sq(z: u32, p: f64) -> Result<f64> {
    let b = BetheParams::new(z, p)?;
    b.require_subcritical("correlation length")?;
    let pc = b.p_c();
    Ok(pc * (p + pc) / (pc - p).powi(2))
}

/// Mean size of the cluster containing an occupied site,
/// `1 + sum_l g(l) = p_c (1 + p) / (p_c - p)`.
pub fn bethe_mean_size(z: u32, p: f64) -> Result<f64> {
    let b = BetheParams::new(z, p)?;
    b.require_subcritical("mean cluster size")?;
    let pc = b.p_c();
    Ok(pc * (1.0 + p) / (pc - p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub a: f64,
    pub sigma: f64,
    pub c: f64,
}

/// Cutoff of `n_s(p) / n_s(p_c) ~ exp(-c s)` to lowest order in
/// `p_c - p`: `a = 1 / (2 p_c^2 (1 - p_c))`, `sigma = 1/2`,
/// `c = -ln(1 - a (p_c - p)^(1/sigma))`.
pub fn bethe_cutoff(z: u32, p: f64) -> Result<CutoffParams> {
    let b = BetheParams::new(z, p)?;
    let pc = b.p_c();
    let sigma = EXPONENTS.sigma;
    let a = 1.0 / (2.0 * pc * pc * (1.0 - pc));
    let arg = 1.0 - a * (pc - p).abs().powf(1.0 / sigma);
    if arg <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "p = {p} is too far from p_c = {pc}: 1 - a (p_c - p)^2 = {arg} <= 0"
        )));
    }
    Ok(CutoffParams { a, sigma, c: -arg.ln() })
}

/// Exact `n_s(p) / n_s(p_c)` on the Bethe lattice, where the configuration
/// count cancels: `((1-p)/(1-p_c))^2 [ (p/p_c) ((1-p)/(1-p_c))^(z-2) ]^s`.
pub fn bethe_cluster_number_ratio(z: u32, p: f64, s: u64) -> Result<f64> {
    let b = BetheParams::new(z, p)?;
    let pc = b.p_c();
    let q = (1.0 - p) / (1.0 - pc);
    let per_site = (p / pc) * q.powi(z as i32 - 2);
    Ok(q * q * per_site.powf(s as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub tau: f64,
    pub sigma: f64,
    pub nu: f64,
    pub fractal_dim: f64,
}

const EXPONENTS: Exponents = Exponents {
    tau: 2.5,
    sigma: 0.5,
    nu: 0.5,
    fractal_dim: 4.0,
};

/// Mean-field exponents. `tau` and `D` are derived from `sigma` and `nu`
/// through `(3 - tau)/sigma = 1` and `D = 1/(sigma nu)`.
pub fn bethe_exponents() -> Exponents {
    let Exponents { sigma, nu, .. } = EXPONENTS;
    let e = Exponents {
        tau: 3.0 - sigma,
        sigma,
        nu,
        fractal_dim: 1.0 / (sigma * nu),
    };
    debug_assert_eq!(e, EXPONENTS);
    e
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentScaling {
    pub k: f64,
    /// `M_k = sum_s s^(k - tau) exp(-c s)`.
    pub moment: f64,
    /// Predicted divergence exponent `(k + 1 - tau) / sigma`.
    pub exponent: f64,
    pub terms: u64,
}

/// Sums `M_k` with the cutoff `c(p)` of [`bethe_cutoff`] until the next
/// term is negligible.
pub fn bethe_moment_scaling(z: u32, p: f64, k: f64) -> Result<MomentScaling> {
    let b = BetheParams::new(z, p)?;
    b.require_subcritical("moment sum")?;
    let Exponents { tau, sigma, .. } = bethe_exponents();
    let c = bethe_cutoff(z, p)?.c;
    if !(c > 0.0) {
        return Err(Error::Divergent(format!("cutoff c = {c} gives a divergent sum")));
    }
    let power = k - tau;
    // Terms grow until s = power / c when power > 0.
    let peak = if power > 0.0 { power / c } else { 0.0 };
    let mut sum = 0.0;
    let mut s = 1u64;
    loop {
        let x = s as f64;
        let term = x.powf(power) * (-c * x).exp();
        sum += term;
        if x > peak && term < MOMENT_TOLERANCE * sum {
            break;
        }
        if s == u64::MAX {
            return Err(Error::Divergent("moment sum did not converge".into()));
        }
        s += 1;
    }
    Ok(MomentScaling {
        k,
        moment: sum,
        exponent: (k + 1.0 - tau) / sigma,
        terms: s,
    })
}

/// Every closed-form quantity at `(z, p)`. Quantities that diverge at or
/// above the threshold are `None` there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheExact {
    pub z: u32,
    pub p: f64,
    pub p_c: f64,
    /// `g(l)` for `l = 1..=len`.
    pub correlation: Vec<f64>,
    pub xi_l_sq: Option<f64>,
    pub mean_size: Option<f64>,
    pub cutoff: Option<CutoffParams>,
    pub exponents: Exponents,
}

pub fn bethe_exact(z: u32, p: f64, shells: u32) -> Result<BetheExact> {
    let b = BetheParams::new(z, p)?;
    let correlation = (1..=shells)
        .map(|l| bethe_correlation(z, p, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(BetheExact {
        z,
        p,
        p_c: b.p_c(),
        correlation,
        xi_l_sq: bethe_xi_l_sq(z, p).ok(),
        mean_size: bethe_mean_size(z, p).ok(),
        cutoff: bethe_cutoff(z, p).ok(),
        exponents: bethe_exponents(),
    })
}

/// The cluster grown from one occupied origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetheClusterRealization {
    pub size: usize,
    /// Empty sites adjacent to the cluster.
    pub perimeter: usize,
    /// Occupied sites per chemical shell, starting with the origin.
    pub shells: Vec<usize>,
    /// Growth stopped at the cap before extinction.
    pub truncated: bool,
}

/// Grows the cluster of an occupied origin shell by shell: the origin has
/// `z` neighbor slots and every later site `z - 1` new ones, each occupied
/// independently with probability `p`.
pub fn grow_cluster(z: u32, p: f64, seed: u64, cap: usize) -> Result<BetheClusterRealization> {
    BetheParams::new(z, p)?;
    if cap < 1 {
        return Err(Error::InvalidArgument("growth cap must be at least 1".into()));
    }
    let mut rng = rng::stream(seed);
    let mut size = 1usize;
    let mut perimeter = 0usize;
    let mut shells = vec![1usize];
    let mut slots = z as usize;
    while slots > 0 {
        let mut occupied = 0usize;
        for _ in 0..slots {
            if rng.random_bool(p) {
                if size == cap {
                    shells.push(occupied);
                    return Ok(BetheClusterRealization {
                        size,
                        perimeter,
                        shells,
                        truncated: true,
                    });
                }
                occupied += 1;
                size += 1;
            } else {
                perimeter += 1;
            }
        }
        if occupied == 0 {
            break;
        }
        shells.push(occupied);
        slots = occupied * (z as usize - 1);
    }
    Ok(BetheClusterRealization {
        size,
        perimeter,
        shells,
        truncated: false,
    })
}

/// Ensemble statistics of grown clusters. Truncated realizations are
/// counted but excluded from every average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetheMonteCarlo {
    pub z: u32,
    pub p: f64,
    pub realizations: usize,
    pub truncated: usize,
    pub mean_size: f64,
    pub mean_size_stderr: f64,
    /// Mean occupied count in shells `1..=len`.
    pub shell_mean: Vec<f64>,
    pub shell_stderr: Vec<f64>,
    /// Finished realizations violating `t = (z - 2) s + 2`.
    pub perimeter_violations: usize,
    /// Origin-cluster sizes of finished realizations.
    pub size_histogram: BTreeMap<usize, usize>,
}

pub fn bethe_monte_carlo(
    z: u32,
    p: f64,
    ensemble: &Ensemble,
    cap: usize,
    shells: usize,
) -> Result<BetheMonteCarlo> {
    BetheParams::new(z, p)?;
    struct Acc {
        done: usize,
        truncated: usize,
        size: (f64, f64),
        shell: Vec<(f64, f64)>,
        violations: usize,
        hist: BTreeMap<usize, usize>,
    }
    let init = Acc {
        done: 0,
        truncated: 0,
        size: (0.0, 0.0),
        shell: vec![(0.0, 0.0); shells],
        violations: 0,
        hist: BTreeMap::new(),
    };
    let acc = ensemble.fold(
        init,
        |_, seed| grow_cluster(z, p, seed, cap),
        |mut acc, r| {
            let r = r.expect("parameters validated");
            if r.truncated {
                acc.truncated += 1;
                return acc;
            }
            acc.done += 1;
            let s = r.size as f64;
            acc.size.0 += s;
            acc.size.1 += s * s;
            for (l, slot) in acc.shell.iter_mut().enumerate() {
                let x = r.shells.get(l + 1).copied().unwrap_or(0) as f64;
                slot.0 += x;
                slot.1 += x * x;
            }
            if r.perimeter != (z as usize - 2) * r.size + 2 {
                acc.violations += 1;
            }
            *acc.hist.entry(r.size).or_default() += 1;
            acc
        },
    )?;
    let n = acc.done as f64;
    let mean_se = |(sum, sq): (f64, f64)| {
        if acc.done == 0 {
            return (f64::NAN, f64::NAN);
        }
        let m = sum / n;
        let se = if acc.done > 1 {
            (((sq - n * m * m) / (n - 1.0)).max(0.0) / n).sqrt()
        } else {
            0.0
        };
        (m, se)
    };
    let (mean_size, mean_size_stderr) = mean_se(acc.size);
    let (shell_mean, shell_stderr) = acc.shell.iter().map(|&x| mean_se(x)).unzip();
    Ok(BetheMonteCarlo {
        z,
        p,
        realizations: ensemble.realizations,
        truncated: acc.truncated,
        mean_size,
        mean_size_stderr,
        shell_mean,
        shell_stderr,
        perimeter_violations: acc.violations,
        size_histogram: acc.hist,
    })
}

/// Writes `quantity,exact,mc_mean,mc_stderr` rows comparing a Monte Carlo
/// run with the closed forms.
pub fn write_comparison_csv<W: Write>(mc: &BetheMonteCarlo, mut out: W) -> Result<()> {
    let io = |e| Error::io("<comparison>", e);
    writeln!(out, "quantity,exact,mc_mean,mc_stderr").map_err(io)?;
    let exact_s = bethe_mean_size(mc.z, mc.p).map(|v| v.to_string()).unwrap_or_default();
    writeln!(out, "mean_size,{exact_s},{},{}", mc.mean_size, mc.mean_size_stderr).map_err(io)?;
    for (k, (m, se)) in mc.shell_mean.iter().zip(&mc.shell_stderr).enumerate() {
        let l = k as u32 + 1;
        let g = bethe_correlation(mc.z, mc.p, l)?;
        writeln!(out, "g_{l},{g},{m},{se}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(bethe_pc(2).unwrap(), 1.0);
        assert_eq!(bethe_pc(3).unwrap(), 0.5);
        assert!((bethe_pc(12).unwrap() - 1.0 / 11.0).abs() < 1e-15);
        assert!(bethe_pc(1).is_err());
    }

    #[test]
    fn correlation_values() {
        assert!((bethe_correlation(3, 0.5, 2).unwrap() - 1.5).abs() < 1e-15);
        assert!((bethe_correlation(3, 0.3, 1).unwrap() - 0.9).abs() < 1e-15);
        for l in 1..20 {
            let g = bethe_correlation(5, 0.25, l).unwrap();
            assert!((g - 5.0 / 4.0).abs() < 1e-12, "l = {l}: {g}");
        }
        assert!(bethe_correlation(3, 0.5, 0).is_err());
    }

    #[test]
    fn correlation_length_values() {
        assert!((bethe_xi_l_sq(3, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((bethe_xi_l_sq(3, 0.25).unwrap() - 6.0).abs() < 1e-12);
        assert!(matches!(bethe_xi_l_sq(3, 0.5), Err(Error::Divergent(_))));
        // xi^2 (p_c - p)^2 -> 2 p_c^2 as p -> p_c.
        let pc = 0.5;
        let p = pc - 1e-7;
        let limit = bethe_xi_l_sq(3, p).unwrap() * (pc - p).powi(2);
        assert!((limit - 2.0 * pc * pc).abs() < 1e-6);
    }

    /// The closed form matches the second-moment ratio of g(l) summed
    /// directly.
    #[test]
    fn correlation_length_matches_direct_sum() {
        for (z, p) in [(3u32, 0.25), (4, 0.2), (12, 0.06), (3, 0.45)] {
            let (mut num, mut den) = (0.0, 0.0);
            let mut l = 1;
            loop {
                let g = bethe_correlation(z, p, l).unwrap();
                num += (l as f64).powi(2) * g;
                den += g;
                if (l as f64).powi(2) * g < 1e-18 * num {
                    break;
                }
                l += 1;
            }
            let exact = bethe_xi_l_sq(z, p).unwrap();
            assert!(((num / den) - exact).abs() < 1e-6 * exact, "z={z} p={p}");
            let s = bethe_mean_size(z, p).unwrap();
            assert!((1.0 + den - s).abs() < 1e-9 * s);
        }
    }

    #[test]
    fn mean_size_values() {
        assert_eq!(bethe_mean_size(3, 0.0).unwrap(), 1.0);
        assert!((bethe_mean_size(3, 0.25).unwrap() - 2.5).abs() < 1e-12);
        assert!((bethe_mean_size(3, 0.4).unwrap() - 7.0).abs() < 1e-12);
        assert!(bethe_mean_size(3, 0.6).is_err());
    }

    #[test]
    fn cutoff_values() {
        let c = bethe_cutoff(3, 0.45).unwrap();
        assert!((c.a - 4.0).abs() < 1e-12);
        assert_eq!(c.sigma, 0.5);
        assert!((c.c - 0.01).abs() < 0.02 * 0.01);
        assert_eq!(bethe_cutoff(3, 0.5).unwrap().c, 0.0);
        assert!(bethe_cutoff(3, 0.0).is_err());
    }

    #[test]
    fn cluster_ratio_for_z3_is_the_cutoff() {
        // For z = 3 the lowest-order form is exact: 4 p (1 - p) = 1 - 4 (1/2 - p)^2.
        let p = 0.4;
        let c = bethe_cutoff(3, p).unwrap().c;
        let r1 = bethe_cluster_number_ratio(3, p, 10).unwrap();
        let r2 = bethe_cluster_number_ratio(3, p, 11).unwrap();
        assert!(((r1 / r2).ln() - c).abs() < 1e-12);
    }

    #[test]
    fn exponent_identities() {
        let e = bethe_exponents();
        assert_eq!(e.fractal_dim, 4.0);
        assert_eq!(e.fractal_dim, 1.0 / (e.sigma * e.nu));
        assert_eq!(e.tau, 2.5);
        assert_eq!((3.0 - e.tau) / e.sigma, 1.0);
    }

    #[test]
    fn moment_exponents() {
        let m = bethe_moment_scaling(3, 0.45, 2.0).unwrap();
        assert_eq!(m.exponent, 1.0);
        assert!(m.moment > 0.0);
        assert_eq!(bethe_moment_scaling(3, 0.45, 1.5).unwrap().exponent, 0.0);
        assert!(matches!(bethe_moment_scaling(3, 0.5, 2.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn moment_divergence_slope() {
        let pts: Vec<(f64, f64)> = [0.45, 0.47, 0.49]
            .iter()
            .map(|&p: &f64| ((0.5 - p).ln(), bethe_moment_scaling(3, p, 2.0).unwrap().moment.ln()))
            .collect();
        let (slope, _) = crate::analysis::least_squares(&pts).unwrap();
        assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn lone_origin() {
        let r = grow_cluster(3, 0.0, 1, 10).unwrap();
        assert_eq!(r.size, 1);
        assert_eq!(r.perimeter, 3);
        assert!(!r.truncated);
        assert_eq!(r.shells, vec![1]);
    }

    #[test]
    fn perimeter_identity() {
        for seed in 0..2000 {
            for z in [3u32, 4, 6] {
                let p = 0.8 * bethe_pc(z).unwrap();
                let r = grow_cluster(z, p, seed, 100_000).unwrap();
                assert!(!r.truncated);
                assert_eq!(r.perimeter, (z as usize - 2) * r.size + 2);
                assert_eq!(r.shells.iter().sum::<usize>(), r.size);
            }
        }
    }

    #[test]
    fn growth_cap() {
        let r = grow_cluster(3, 1.0, 1, 50).unwrap();
        assert!(r.truncated);
        assert_eq!(r.size, 50);
        assert!(grow_cluster(3, 0.5, 1, 0).is_err());
    }

    #[test]
    fn subcritical_truncation_vanishes() {
        let frac = |cap| {
            let mc = bethe_monte_carlo(3, 0.45, &Ensemble::new(4000, 17), cap, 1).unwrap();
            mc.truncated as f64 / mc.realizations as f64
        };
        let (a, b, c) = (frac(10), frac(100), frac(10_000));
        assert!(a > b && b > c, "{a} {b} {c}");
        assert!(c < 1e-3);
    }

    #[test]
    fn mean_size_across_p() {
        for p in [0.2, 0.3, 0.4] {
            let mc = bethe_monte_carlo(3, p, &Ensemble::new(100_000, 3), DEFAULT_GROWTH_CAP, 8).unwrap();
            let s = bethe_mean_size(3, p).unwrap();
            assert!((mc.mean_size - s).abs() < 3.0 * mc.mean_size_stderr, "p={p}: {} vs {s}", mc.mean_size);
            for l in 1..=8u32 {
                let g = bethe_correlation(3, p, l).unwrap();
                let k = l as usize - 1;
                assert!(
                    (mc.shell_mean[k] - g).abs() < 3.0 * mc.shell_stderr[k].max(1e-12),
                    "p={p} l={l}: {} vs {g}",
                    mc.shell_mean[k]
                );
            }
        }
    }

    #[test]
    fn comparison_table() {
        let mc = bethe_monte_carlo(3, 0.3, &Ensemble::new(100, 1), 1000, 2).unwrap();
        let mut buf = Vec::new();
        write_comparison_csv(&mc, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "quantity,exact,mc_mean,mc_stderr");
        assert!(lines[1].starts_with("mean_size,"));
        assert!(lines[3].starts_with("g_2,"));
    }
}
