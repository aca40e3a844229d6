//! Estimators for the size exponent, fractal dimension and exponential
//! cutoff of cluster statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fewest tail samples accepted by [`fit_power_law`].
pub const MIN_POWER_LAW_SAMPLES: usize = 100;
/// Fewest `(s, R_s)` pairs accepted by [`fit_fractal_dimension`].
pub const MIN_FRACTAL_PAIRS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub tau: f64,
    pub stderr: f64,
    pub s_min: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractalFit {
    pub dimension: f64,
    pub stderr: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFit {
    pub c: f64,
    pub stderr: f64,
    pub s_lo: usize,
    pub s_hi: usize,
    pub samples: usize,
}

/// Hurwitz zeta `sum_{k>=0} (q + k)^-s` for `s > 1`, `q > 0`, by
/// Euler-Maclaurin summation after a direct head.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q > 0.0);
    // B_2j / (2j)!
    const COEF: [f64; 7] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30_240.0,
        -1.0 / 1_209_600.0,
        1.0 / 47_900_160.0,
        -691.0 / 1_307_674_368_000.0,
        1.0 / 74_724_249_600.0,
    ];
    const HEAD: usize = 12;
    let mut sum = 0.0;
    for k in 0..HEAD {
        sum += (q + k as f64).powf(-s);
    }
    let x = q + HEAD as f64;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // Rising factorial s (s+1) ... (s+2j-2) times x^(-s-2j+1).
    let mut rising = s;
    let mut xp = x.powf(-s - 1.0);
    for (j, c) in COEF.iter().enumerate() {
        sum += c * rising * xp;
        let k = 2.0 * j as f64;
        rising *= (s + k + 1.0) * (s + k + 2.0);
        xp /= x * x;
    }
    sum
}

/// Discrete maximum-likelihood exponent of `P(s) = s^-tau / zeta(tau, s_min)`
/// over the samples `s >= s_min`. The error is `(tau - 1)/sqrt(n)`.
pub fn fit_power_law(samples: &[usize], s_min: usize) -> Result<PowerLawFit> {
    if s_min == 0 {
        return Err(Error::InvalidArgument("s_min must be at least 1".into()));
    }
    let tail: Vec<usize> = samples.iter().copied().filter(|&s| s >= s_min).collect();
    if tail.len() < MIN_POWER_LAW_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples at or above s_min = {s_min}, need {MIN_POWER_LAW_SAMPLES}",
            tail.len()
        )));
    }
    if tail.iter().all(|&s| s == tail[0]) {
        return Err(Error::DegenerateFit(format!("all samples equal {}", tail[0])));
    }
    let n = tail.len() as f64;
    let log_sum: f64 = tail.iter().map(|&s| (s as f64).ln()).sum();
    let q = s_min as f64;
    let nll = |tau: f64| n * hurwitz_zeta(tau, q).ln() + tau * log_sum;
    let tau = golden_min(nll, 1.0 + 1e-9, 20.0, 1e-12);
    Ok(PowerLawFit {
        tau,
        stderr: (tau - 1.0) / n.sqrt(),
        s_min,
        samples: tail.len(),
    })
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Fits `log R_s = log A + log(s) / D` by least squares over pairs with
/// `s_lo <= s <= s_hi`. Pass one pair per size (see
/// [`ClusterCensus::radius_by_size`](super::ClusterCensus::radius_by_size));
/// per-cluster pairs put almost all the weight on the smallest sizes.
pub fn fit_fractal_dimension(pairs: &[(f64, f64)], s_lo: f64, s_hi: f64) -> Result<FractalFit> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(s, r)| *s >= s_lo && *s <= s_hi && *r > 0.0)
        .map(|(s, r)| (s.ln(), r.ln()))
        .collect();
    if pts.len() < MIN_FRACTAL_PAIRS {
        return Err(Error::InsufficientData(format!(
            "{} pairs in [{s_lo}, {s_hi}], need {MIN_FRACTAL_PAIRS}",
            pts.len()
        )));
    }
    let (slope, slope_se) = least_squares(&pts)?;
    if slope <= 0.0 {
        return Err(Error::DegenerateFit(format!("non-positive slope {slope}")));
    }
    Ok(FractalFit {
        dimension: 1.0 / slope,
        stderr: slope_se / (slope * slope),
        s_lo,
        s_hi,
        samples: pts.len(),
    })
}

/// Ordinary least-squares slope and its standard error.
pub(crate) fn least_squares(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let se = if pts.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, se))
}

/// Decay rate `c` in `n_s(p) / n_s(p_c) ~ exp(-c s)`.
///
/// Every cluster with `s_lo <= s <= s_hi` from either histogram is one
/// observation; the probability that a cluster of size `s` came from the
/// off-critical sample is logistic in `s` with slope `-c`. The fit
/// maximizes that binomial likelihood, so no size binning is needed and
/// sizes missing from one histogram carry information instead of breaking
/// a log ratio. Only the ratio matters, so histograms with any common
/// size-bias (such as origin-cluster sampling) may be passed directly.
pub fn fit_exponential_cutoff(
    off_critical: &BTreeMap<usize, usize>,
    critical: &BTreeMap<usize, usize>,
    s_lo: usize,
    s_hi: usize,
) -> Result<CutoffFit> {
    if s_lo > s_hi {
        return Err(Error::InvalidArgument(format!("empty size range [{s_lo}, {s_hi}]")));
    }
    let sizes: std::collections::BTreeSet<usize> = off_critical
        .range(s_lo..=s_hi)
        .chain(critical.range(s_lo..=s_hi))
        .map(|(&s, _)| s)
        .collect();
    // (s, clusters from the off-critical sample, clusters from both)
    let rows: Vec<(f64, f64, f64)> = sizes
        .into_iter()
        .map(|s| {
            let a = off_critical.get(&s).copied().unwrap_or(0) as f64;
            let b = critical.get(&s).copied().unwrap_or(0) as f64;
            (s as f64, a, a + b)
        })
        .collect();
    let n_off: f64 = rows.iter().map(|r| r.1).sum();
    let n_all: f64 = rows.iter().map(|r| r.2).sum();
    if n_off == 0.0 || n_off == n_all {
        return Err(Error::InsufficientData(
            "both histograms need clusters inside the size range".into(),
        ));
    }
    if rows.len() < 2 {
        return Err(Error::DegenerateFit("a single cluster size in range".into()));
    }

    // Centre s for conditioning; logit P(off | s) = alpha - c (s - s0).
    let s0 = rows.iter().map(|r| r.0 * r.2).sum::<f64>() / n_all;
    let mut alpha = (n_off / (n_all - n_off)).ln();
    let mut slope = 0.0;
    let mut info = [[0.0; 2]; 2];
    let mut converged = false;
    for _ in 0..100 {
        let mut grad = [0.0; 2];
        info = [[0.0; 2]; 2];
        for &(s, k, m) in &rows {
            let x = s - s0;
            let eta = alpha + slope * x;
            let pr = 1.0 / (1.0 + (-eta).exp());
            let resid = k - m * pr;
            let w = m * pr * (1.0 - pr);
            grad[0] += resid;
            grad[1] += resid * x;
            info[0][0] += w;
            info[0][1] += w * x;
            info[1][1] += w * x * x;
        }
        info[1][0] = info[0][1];
        let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
        if !(det > 0.0) {
            return Err(Error::DegenerateFit("singular information matrix".into()));
        }
        let da = (info[1][1] * grad[0] - info[0][1] * grad[1]) / det;
        let db = (info[0][0] * grad[1] - info[1][0] * grad[0]) / det;
        alpha += da;
        slope += db;
        if !(alpha.is_finite() && slope.is_finite()) {
            return Err(Error::DegenerateFit("cutoff fit diverged".into()));
        }
        if da.abs() < 1e-12 && db.abs() < 1e-12 * (1.0 + slope.abs()) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::DegenerateFit("cutoff fit did not converge".into()));
    }
    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    Ok(CutoffFit {
        c: -slope,
        stderr: (info[0][0] / det).sqrt(),
        s_lo,
        s_hi,
        samples: n_all as usize,
    })
}
