//! Union-find over lattice sites with unwrapped displacement tracking.
//!
//! Each site stores the vector from its parent to itself in unwrapped
//! lattice coordinates. When a bond joins two sites that already share a
//! root, the two routes to the root disagree by a multiple of the side
//! length exactly when the cluster wraps around a periodic axis. Under free
//! boundaries each root instead accumulates the set of boundary faces its
//! cluster touches.

use crate::lattice::LatticeGeometry;

pub(crate) const EMPTY: usize = usize::MAX;

#[derive(Debug, Clone)]
pub(crate) struct ClusterForest {
    geometry: LatticeGeometry,
    dim: usize,
    periodic: bool,
    pub(crate) parent: Vec<usize>,
    pub(crate) size: Vec<usize>,
    /// `dim` entries per site: position(site) - position(parent).
    pub(crate) offset: Vec<i32>,
    /// Per root: wrapped axes (periodic) or touched faces (free).
    pub(crate) contacts: Vec<u64>,
    pub(crate) occupied: usize,
    pub(crate) clusters: usize,
    path: Vec<usize>,
}

impl ClusterForest {
    pub(crate) fn new(geometry: &LatticeGeometry) -> Self {
        let n = geometry.site_count();
        let dim = geometry.dim();
        ClusterForest {
            geometry: geometry.clone(),
            dim,
            periodic: geometry.is_periodic(),
            parent: vec![EMPTY; n],
            size: vec![0; n],
            offset: vec![0; n * dim],
            contacts: vec![0; n],
            occupied: 0,
            clusters: 0,
            path: Vec::new(),
        }
    }

    pub(crate) fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    #[inline]
    pub(crate) fn is_occupied(&self, site: usize) -> bool {
        self.parent[site] != EMPTY
    }

    /// Adds `site` as a singleton cluster.
    pub(crate) fn occupy(&mut self, site: usize) {
        debug_assert!(!self.is_occupied(site));
        self.parent[site] = site;
        self.size[site] = 1;
        self.contacts[site] = if self.periodic {
            0
        } else {
            self.geometry.face_mask(site)
        };
        self.occupied += 1;
        self.clusters += 1;
    }

    /// Root of `site`, compressing the path and folding offsets so that
    /// `offset(site)` afterwards points straight at the root.
    pub(crate) fn find(&mut self, site: usize) -> usize {
        let mut root = site;
        while self.parent[root] != root {
            self.path.push(root);
            root = self.parent[root];
        }
        let d = self.dim;
        while let Some(node) = self.path.pop() {
            let up = self.parent[node];
            if up != root {
                for a in 0..d {
                    self.offset[node * d + a] += self.offset[up * d + a];
                }
                self.parent[node] = root;
            }
        }
        root
    }

    /// Records the bond between `a` and its neighbor `b`, where
    /// `position(b) = position(a) + step * e_axis`. Returns the root after
    /// the merge.
    pub(crate) fn bond(&mut self, a: usize, b: usize, axis: usize, step: i32) -> usize {
        let ra = self.find(a);
        let rb = self.find(b);
        let d = self.dim;
        if ra == rb {
            if self.periodic {
                let mut wrapped = 0u64;
                for k in 0..d {
                    let bond = if k == axis { step } else { 0 };
                    if self.offset[b * d + k] - self.offset[a * d + k] != bond {
                        wrapped |= 1 << k;
                    }
                }
                self.contacts[ra] |= wrapped;
            }
            return ra;
        }
        // position(rb) - position(ra)
        let mut delta = [0i32; crate::lattice::MAX_DIM];
        for (k, dk) in delta.iter_mut().enumerate().take(d) {
            let bond = if k == axis { step } else { 0 };
            *dk = bond + self.offset[a * d + k] - self.offset[b * d + k];
        }
        let (keep, absorb, sign) = if self.size[ra] >= self.size[rb] {
            (ra, rb, 1)
        } else {
            (rb, ra, -1)
        };
        for (slot, dk) in self.offset[absorb * d..(absorb + 1) * d].iter_mut().zip(&delta) {
            *slot = sign * dk;
        }
        self.parent[absorb] = keep;
        self.size[keep] += self.size[absorb];
        self.contacts[keep] |= self.contacts[absorb];
        self.clusters -= 1;
        keep
    }

    /// Whether the cluster rooted at `root` wraps (periodic) or connects
    /// opposite faces (free).
    #[inline]
    pub(crate) fn root_spans(&self, root: usize) -> bool {
        let c = self.contacts[root];
        if self.periodic {
            c != 0
        } else {
            // Low and high face bits of some axis both set.
            c & (c >> 1) & 0x5555_5555_5555_5555 != 0
        }
    }

    /// Compress every path so each occupied site points at its root.
    pub(crate) fn compress_all(&mut self) {
        for i in 0..self.parent.len() {
            if self.parent[i] != EMPTY {
                self.find(i);
            }
        }
    }
}
