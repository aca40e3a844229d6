//! Hypercubic lattice geometry: site indexing and nearest-neighbor structure.
//!
//! Sites are addressed by a flat row-major index; the last axis varies
//! fastest. Periodic lattices need every side to be at least 3 so that each
//! site has `2d` distinct neighbors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension. Face-contact sets are packed into a `u64`.
pub const MAX_DIM: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Free,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Free => f.write_str("free"),
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free" => Ok(Boundary::Free),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Geometry(format!("unknown boundary `{other}`"))),
        }
    }
}

/// A d-dimensional hypercubic lattice. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GeometryRecord", into = "GeometryRecord")]
pub struct LatticeGeometry {
    sides: Vec<usize>,
    strides: Vec<usize>,
    boundary: Boundary,
    sites: usize,
}

/// Serialized form: `{"d": .., "sides": [..], "boundary": ".."}`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryRecord {
    d: usize,
    sides: Vec<usize>,
    boundary: Boundary,
}

impl TryFrom<GeometryRecord> for LatticeGeometry {
    type Error = Error;

    fn try_from(rec: GeometryRecord) -> Result<Self> {
        if rec.d != rec.sides.len() {
            return Err(Error::Geometry(format!(
                "d = {} but {} side lengths given",
                rec.d,
                rec.sides.len()
            )));
        }
        LatticeGeometry::new(rec.sides, rec.boundary)
    }
}

impl From<LatticeGeometry> for GeometryRecord {
    fn from(g: LatticeGeometry) -> Self {
        GeometryRecord {
            d: g.dim(),
            sides: g.sides,
            boundary: g.boundary,
        }
    }
}

impl LatticeGeometry {
    pub fn new(sides: Vec<usize>, boundary: Boundary) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::Geometry("dimension must be at least 1".into()));
        }
        if sides.len() > MAX_DIM {
            return Err(Error::Geometry(format!(
                "dimension {} exceeds the supported maximum {MAX_DIM}",
                sides.len()
            )));
        }
        if let Some(&bad) = sides.iter().find(|&&s| s == 0) {
            return Err(Error::Geometry(format!("side length {bad} must be positive")));
        }
        if boundary == Boundary::Periodic {
            if let Some(&bad) = sides.iter().find(|&&s| s < 3) {
                return Err(Error::Geometry(format!(
                    "periodic boundaries need every side >= 3 (got {bad})"
                )));
            }
        }
        let sites = sides
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .ok_or_else(|| Error::Geometry(format!("site count of {sides:?} overflows")))?;

        let mut strides = vec![1usize; sides.len()];
        for axis in (0..sides.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * sides[axis + 1];
        }
        Ok(LatticeGeometry {
            sides,
            strides,
            boundary,
            sites,
        })
    }

    /// Hypercube with `d` axes of length `side`.
    pub fn cubic(d: usize, side: usize, boundary: Boundary) -> Result<Self> {
        Self::new(vec![side; d], boundary)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[usize] {
        &self.sides
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Total number of sites, the product of the side lengths.
    pub fn site_count(&self) -> usize {
        self.sites
    }

    /// Coordination number of the bulk lattice, `2d`.
    pub fn coordination(&self) -> usize {
        2 * self.dim()
    }

    pub fn index_to_coords(&self, index: usize) -> Result<Vec<usize>> {
        self.check_index(index)?;
        Ok(self.coords_unchecked(index))
    }

    pub fn coords_to_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.dim(),
                coords.len()
            )));
        }
        let mut index = 0;
        for (axis, (&c, &side)) in coords.iter().zip(&self.sides).enumerate() {
            if c >= side {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {c} on axis {axis} exceeds side {side}"
                )));
            }
            index += c * self.strides[axis];
        }
        Ok(index)
    }

    pub(crate) fn coords_unchecked(&self, index: usize) -> Vec<usize> {
        (0..self.dim()).map(|a| self.coord(index, a)).collect()
    }

    #[inline]
    pub(crate) fn coord(&self, index: usize, axis: usize) -> usize {
        (index / self.strides[axis]) % self.sides[axis]
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index < self.sites {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index,
                sites: self.sites,
            })
        }
    }

    pub fn neighbors(&self, index: usize) -> Result<Vec<usize>> {
        self.check_index(index)?;
        let mut out = Vec::with_capacity(self.coordination());
        self.for_each_neighbor(index, |j, _, _| out.push(j));
        Ok(out)
    }

    /// Visits every neighbor of `index` as `(neighbor, axis, step)` where
    /// `step` is the unwrapped displacement (+1 or -1) along `axis`.
    #[inline]
    pub fn for_each_neighbor(&self, index: usize, mut f: impl FnMut(usize, usize, i32)) {
        let periodic = self.is_periodic();
        for axis in 0..self.dim() {
            let side = self.sides[axis];
            let stride = self.strides[axis];
            let c = self.coord(index, axis);
            if c > 0 {
                f(index - stride, axis, -1);
            } else if periodic {
                f(index + (side - 1) * stride, axis, -1);
            }
            if c + 1 < side {
                f(index + stride, axis, 1);
            } else if periodic {
                f(index - (side - 1) * stride, axis, 1);
            }
        }
    }

    /// Bitmask of boundary faces the site lies on: bit `2a` for the low face
    /// of axis `a`, bit `2a + 1` for the high face. Axes of length 1 are
    /// ignored since they cannot be spanned.
    #[inline]
    pub(crate) fn face_mask(&self, index: usize) -> u64 {
        let mut mask = 0u64;
        for axis in 0..self.dim() {
            let side = self.sides[axis];
            if side < 2 {
                continue;
            }
            let c = self.coord(index, axis);
            if c == 0 {
                mask |= 1 << (2 * axis);
            }
            if c + 1 == side {
                mask |= 1 << (2 * axis + 1);
            }
        }
        mask
    }

    /// Minimum-image displacement `b - a` along each axis. Under free
    /// boundaries this is the plain coordinate difference.
    pub fn displacement(&self, a: &[usize], b: &[usize]) -> Vec<i64> {
        a.iter()
            .zip(b)
            .zip(&self.sides)
            .map(|((&x, &y), &side)| {
                let mut delta = y as i64 - x as i64;
                if self.is_periodic() {
                    let side = side as i64;
                    if delta > side / 2 {
                        delta -= side;
                    } else if delta < -(side / 2) {
                        delta += side;
                    }
                }
                delta
            })
            .collect()
    }
}

impl fmt::Display for LatticeGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sides: Vec<String> = self.sides.iter().map(|s| s.to_string()).collect();
        write!(f, "{} {}", sides.join("x"), self.boundary)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn free(sides: &[usize]) -> LatticeGeometry {
        LatticeGeometry::new(sides.to_vec(), Boundary::Free).unwrap()
    }

    #[test]
    fn site_counts() {
        assert_eq!(free(&[3, 3]).site_count(), 9);
        assert_eq!(free(&[2, 2, 2]).site_count(), 8);
        let g = LatticeGeometry::cubic(7, 8, Boundary::Periodic).unwrap();
        assert_eq!(g.dim(), 7);
        assert_eq!(g.site_count(), 2_097_152);
    }

    #[test]
    fn overflow_rejected() {
        let err = LatticeGeometry::new(vec![usize::MAX, 2], Boundary::Free).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn invalid_shapes_rejected() {
        assert!(LatticeGeometry::new(vec![], Boundary::Free).is_err());
        assert!(LatticeGeometry::new(vec![3, 0], Boundary::Free).is_err());
        assert!(LatticeGeometry::new(vec![3, 2], Boundary::Periodic).is_err());
        assert!(LatticeGeometry::new(vec![2; MAX_DIM + 1], Boundary::Free).is_err());
        assert!(LatticeGeometry::new(vec![3, 2], Boundary::Free).is_ok());
    }

    #[test]
    fn row_major_coordinates() {
        let g = free(&[3, 3]);
        assert_eq!(g.index_to_coords(0).unwrap(), vec![0, 0]);
        assert_eq!(g.index_to_coords(4).unwrap(), vec![1, 1]);
        assert_eq!(g.index_to_coords(5).unwrap(), vec![1, 2]);
        assert_eq!(free(&[5]).index_to_coords(4).unwrap(), vec![4]);
        assert!(matches!(
            g.index_to_coords(9),
            Err(Error::IndexOutOfRange { index: 9, sites: 9 })
        ));
        assert!(g.coords_to_index(&[3, 0]).is_err());
        assert!(g.coords_to_index(&[0]).is_err());
    }

    #[test]
    fn corner_neighbors_free() {
        let g = free(&[3, 3]);
        let mut nb = g.neighbors(0).unwrap();
        nb.sort_unstable();
        let expect = vec![
            g.coords_to_index(&[0, 1]).unwrap(),
            g.coords_to_index(&[1, 0]).unwrap(),
        ];
        assert_eq!(nb, expect);
    }

    #[test]
    fn ring_neighbors_wrap() {
        let g = LatticeGeometry::new(vec![5], Boundary::Periodic).unwrap();
        let mut nb = g.neighbors(0).unwrap();
        nb.sort_unstable();
        assert_eq!(nb, vec![1, 4]);
    }

    #[test]
    fn periodic_cube_has_six_distinct_neighbors() {
        let g = LatticeGeometry::cubic(3, 4, Boundary::Periodic).unwrap();
        for i in 0..g.site_count() {
            let mut nb = g.neighbors(i).unwrap();
            nb.sort_unstable();
            nb.dedup();
            assert_eq!(nb.len(), 6);
            assert!(!nb.contains(&i));
        }
    }

    #[test]
    fn face_mask_ignores_unit_axes() {
        let g = free(&[1, 4]);
        assert_eq!(g.face_mask(0), 0b0100);
        assert_eq!(g.face_mask(3), 0b1000);
        assert_eq!(g.face_mask(1), 0);
    }

    #[test]
    fn minimum_image() {
        let g = LatticeGeometry::new(vec![10, 10], Boundary::Periodic).unwrap();
        assert_eq!(g.displacement(&[0, 0], &[9, 3]), vec![-1, 3]);
        let g = free(&[10, 10]);
        assert_eq!(g.displacement(&[0, 0], &[9, 3]), vec![9, 3]);
    }

    #[test]
    fn json_shape() {
        let g = LatticeGeometry::new(vec![4, 5], Boundary::Periodic).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(text, r#"{"d":2,"sides":[4,5],"boundary":"periodic"}"#);
        let back: LatticeGeometry = serde_json::from_str(&text).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<LatticeGeometry>(
            r#"{"d":3,"sides":[4,5],"boundary":"periodic"}"#
        )
        .is_err());
    }

    fn geometry_strategy() -> impl Strategy<Value = LatticeGeometry> {
        (1usize..=8, any::<bool>())
            .prop_flat_map(|(d, periodic)| {
                let lo = if periodic { 3 } else { 1 };
                (prop::collection::vec(lo..=5usize, d), Just(periodic))
            })
            .prop_map(|(sides, periodic)| {
                let b = if periodic { Boundary::Periodic } else { Boundary::Free };
                LatticeGeometry::new(sides, b).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn index_round_trip(g in geometry_strategy(), seed in any::<u64>()) {
            let i = (seed % g.site_count() as u64) as usize;
            let c = g.index_to_coords(i).unwrap();
            prop_assert_eq!(g.coords_to_index(&c).unwrap(), i);
        }

        #[test]
        fn neighbor_relation_symmetric(g in geometry_strategy(), seed in any::<u64>()) {
            let i = (seed % g.site_count() as u64) as usize;
            let nb = g.neighbors(i).unwrap();
            if g.is_periodic() {
                prop_assert_eq!(nb.len(), 2 * g.dim());
                let mut uniq = nb.clone();
                uniq.sort_unstable();
                uniq.dedup();
                prop_assert_eq!(uniq.len(), nb.len());
            } else {
                prop_assert!(nb.len() <= 2 * g.dim());
            }
            for j in nb {
                prop_assert!(g.neighbors(j).unwrap().contains(&i));
            }
        }
    }
}
