//! Calibration of the discrete power-law estimator on exact synthetic
//! samples.

use perclab::analysis::{fit_power_law, hurwitz_zeta};
use perclab::rng;
use rand::Rng;

/// Inverse-CDF sampler for `P(s) = s^-tau / zeta(tau, s_min)`, `s >= s_min`.
struct DiscretePowerLaw {
    tau: f64,
    s_min: u64,
    norm: f64,
}

impl DiscretePowerLaw {
    fn new(tau: f64, s_min: u64) -> Self {
        DiscretePowerLaw { tau, s_min, norm: hurwitz_zeta(tau, s_min as f64) }
    }

    /// `P(S >= s)`.
    fn tail(&self, s: u64) -> f64 {
        hurwitz_zeta(self.tau, s as f64) / self.norm
    }

    /// Largest `s` with `P(S >= s) > u`.
    fn sample(&self, rng: &mut rng::Stream) -> usize {
        let u: f64 = rng.random();
        let mut lo = self.s_min;
        let mut hi = self.s_min * 2;
        while self.tail(hi) > u {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail(mid) > u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo as usize
    }
}

fn draw(tau: f64, s_min: u64, n: usize, seed: u64) -> Vec<usize> {
    let law = DiscretePowerLaw::new(tau, s_min);
    let mut r = rng::stream(seed);
    (0..n).map(|_| law.sample(&mut r)).collect()
}

#[test]
fn sampler_matches_mass_function() {
    let samples = draw(2.5, 10, 50_000, 1);
    let law = DiscretePowerLaw::new(2.5, 10);
    let p10 = law.tail(10) - law.tail(11);
    let hits = samples.iter().filter(|&&s| s == 10).count() as f64 / 50_000.0;
    assert!((hits - p10).abs() < 3.0 * (p10 * (1.0 - p10) / 50_000.0).sqrt());
    assert!(samples.iter().all(|&s| s >= 10));
}

#[test]
fn recovers_tau_from_large_sample() {
    let fit = fit_power_law(&draw(2.5, 10, 100_000, 7), 10).unwrap();
    assert!((fit.tau - 2.5).abs() < 0.05, "{fit:?}");
    assert_eq!(fit.samples, 100_000);
}

#[test]
fn error_bars_are_calibrated() {
    for tau in [2.0, 2.5, 3.0] {
        let trials = 100;
        let covered = (0..trials)
            .filter(|&k| {
                let fit = fit_power_law(&draw(tau, 5, 2_000, rng::derive_seed(tau.to_bits(), k)), 5).unwrap();
                (fit.tau - tau).abs() < 3.0 * fit.stderr
            })
            .count();
        assert!(covered >= 95, "tau = {tau}: {covered}/{trials} within 3 sigma");
    }
}
