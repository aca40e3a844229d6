use rand::Rng;

use crate::error::{check_probability, Error, Result};
use crate::lattice::LatticeGeometry;
use crate::rng;

/// One occupancy realization. Occupancy is bit-packed, one bit per site.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    geometry: LatticeGeometry,
    words: Vec<u64>,
    occupied: usize,
    p: f64,
    seed: u64,
}

impl Configuration {
    /// Occupies each site independently with probability `p`.
    pub fn sample(geometry: &LatticeGeometry, p: f64, seed: u64) -> Result<Self> {
        check_probability(p)?;
        let n = geometry.site_count();
        let mut words = vec![0u64; n.div_ceil(64)];
        let mut occupied = 0;
        let mut rng = rng::stream(seed);
        for i in 0..n {
            if rng.random_bool(p) {
                words[i / 64] |= 1 << (i % 64);
                occupied += 1;
            }
        }
        Ok(Configuration {
            geometry: geometry.clone(),
            words,
            occupied,
            p,
            seed,
        })
    }

    /// Configuration with exactly the listed sites occupied. The recorded
    /// `p` is the occupied fraction and the seed is zero.
    pub fn from_sites(geometry: &LatticeGeometry, sites: &[usize]) -> Result<Self> {
        let n = geometry.site_count();
        let mut words = vec![0u64; n.div_ceil(64)];
        for &i in sites {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, sites: n });
            }
            words[i / 64] |= 1 << (i % 64);
        }
        let occupied = words.iter().map(|w| w.count_ones() as usize).sum();
        Ok(Configuration {
            geometry: geometry.clone(),
            words,
            occupied,
            p: occupied as f64 / n as f64,
            seed: 0,
        })
    }

    /// Every site occupied.
    pub fn full(geometry: &LatticeGeometry) -> Self {
        let all: Vec<usize> = (0..geometry.site_count()).collect();
        Self::from_sites(geometry, &all).expect("indices in range")
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    #[inline]
    pub fn is_occupied(&self, site: usize) -> bool {
        self.words[site / 64] >> (site % 64) & 1 == 1
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn occupied_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.geometry.site_count()).filter(|&i| self.is_occupied(i))
    }

    /// True when at least one nearest neighbor of `site` is occupied.
    pub fn has_occupied_neighbor(&self, site: usize) -> bool {
        let mut found = false;
        self.geometry.for_each_neighbor(site, |j, _, _| found |= self.is_occupied(j));
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;

    #[test]
    fn extreme_probabilities() {
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        assert_eq!(Configuration::sample(&g, 0.0, 1).unwrap().occupied_count(), 0);
        assert_eq!(Configuration::sample(&g, 1.0, 1).unwrap().occupied_count(), 9);
        assert!(matches!(
            Configuration::sample(&g, 1.5, 1),
            Err(Error::Probability(_))
        ));
        assert!(Configuration::sample(&g, f64::NAN, 1).is_err());
    }

    #[test]
    fn occupied_count_matches_bits() {
        let g = LatticeGeometry::new(vec![13, 11], Boundary::Free).unwrap();
        let c = Configuration::sample(&g, 0.37, 99).unwrap();
        assert_eq!(c.occupied_sites().count(), c.occupied_count());
        assert_eq!(c, Configuration::sample(&g, 0.37, 99).unwrap());
    }

    #[test]
    fn mean_occupation_on_3x3() {
        // Binomial(9, 1/2): mean 4.5, sd 1.5, so the mean of 1e4 draws has
        // sd 0.015.
        let g = LatticeGeometry::new(vec![3, 3], Boundary::Free).unwrap();
        let trials = 10_000;
        let total: usize = (0..trials)
            .map(|s| Configuration::sample(&g, 0.5, rng::derive_seed(5, s)).unwrap().occupied_count())
            .sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 4.5).abs() < 0.07, "mean {mean}");
    }
}
