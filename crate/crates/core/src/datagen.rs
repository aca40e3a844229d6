//! Synthetic labeled datasets built on percolation clusters.
//!
//! Generation runs in the constructive direction: occupy sites, label
//! clusters, then give every cluster its own pseudorandom target function
//! of the site coordinates. Sites in one cluster therefore share a
//! function by construction. Occupied sites with no occupied neighbor get
//! an independent random label each and are marked out of distribution.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::ClusterCensus;
use crate::error::{check_probability, Error, Result};
use crate::lattice::LatticeGeometry;
use crate::percolation::{label_clusters, ClusterLabeling, Configuration};
use crate::rng::{derive_seed, mix64};

/// Identifier of the function family `F` used for cluster targets.
pub const FUNCTION_FAMILY: &str = "splitmix64-coordinate-fold";

const FUNCTION_STREAM: u64 = 0x6675_6e63_7469_6f6e;
const MEMORY_STREAM: u64 = 0x6d65_6d6f_7279_0000;

/// Default `p / p_c` multiplier separating near-critical from extreme
/// supercritical datasets.
pub const DEFAULT_REGIME_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub geometry: LatticeGeometry,
    pub p: f64,
    /// Size of the label space `Y`.
    pub labels: u64,
    pub seed: u64,
    pub min_cluster_size: usize,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)?;
        if self.labels < 2 {
            return Err(Error::InvalidArgument(format!("label space size {} < 2", self.labels)));
        }
        if self.min_cluster_size < 1 {
            return Err(Error::InvalidArgument("min_cluster_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub site_index: usize,
    pub coords: Vec<usize>,
    pub label: u64,
    /// Canonical id (smallest member site index) of the site's cluster;
    /// `None` for isolated sites.
    pub cluster_id: Option<usize>,
    pub in_distribution: bool,
}

/// The map from cluster to target function: one 64-bit key of the family
/// [`FUNCTION_FAMILY`] per non-isolated cluster, keyed by canonical id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterFunctionAssignment {
    pub family: String,
    pub keys: std::collections::BTreeMap<usize, u64>,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub configuration: Configuration,
    pub labeling: ClusterLabeling,
    pub examples: Vec<LabeledExample>,
    pub functions: ClusterFunctionAssignment,
}

/// Key of the function assigned to the cluster with this canonical id.
pub fn function_key(seed: u64, canonical_id: usize) -> u64 {
    derive_seed(seed ^ FUNCTION_STREAM, canonical_id as u64)
}

/// The keyed function `F(key, x)`: a SplitMix64 fold over the coordinates,
/// reduced modulo the label count.
pub fn cluster_function(key: u64, coords: &[usize], labels: u64) -> u64 {
    let h = coords
        .iter()
        .fold(mix64(key), |h, &c| mix64(h ^ mix64(c as u64)));
    h % labels
}

/// Label memorized for the isolated site `site`.
pub fn memorized_label(seed: u64, site: usize, labels: u64) -> u64 {
    derive_seed(seed ^ MEMORY_STREAM, site as u64) % labels
}

/// Samples a configuration from the spec and labels every occupied site.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let g = &spec.geometry;
    let configuration = Configuration::sample(g, spec.p, spec.seed)?;
    let labeling = label_clusters(&configuration);

    // Canonical id per root: sites are visited in increasing order, so the
    // first member seen is the smallest.
    let mut canonical = vec![usize::MAX; g.site_count()];
    let mut functions = ClusterFunctionAssignment {
        family: FUNCTION_FAMILY.to_string(),
        keys: Default::default(),
    };
    let mut examples = Vec::with_capacity(configuration.occupied_count());
    for site in configuration.occupied_sites() {
        let root = labeling.root(site).expect("occupied");
        let coords = g.index_to_coords(site)?;
        let in_distribution = configuration.has_occupied_neighbor(site);
        let (label, cluster_id) = if in_distribution {
            if canonical[root] == usize::MAX {
                canonical[root] = site;
                functions.keys.insert(site, function_key(spec.seed, site));
            }
            let id = canonical[root];
            (cluster_function(functions.keys[&id], &coords, spec.labels), Some(id))
        } else {
            (memorized_label(spec.seed, site, spec.labels), None)
        };
        examples.push(LabeledExample {
            site_index: site,
            coords,
            label,
            cluster_id,
            in_distribution,
        });
    }
    Ok(Dataset {
        spec: spec.clone(),
        configuration,
        labeling,
        examples,
        functions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    NearCritical,
    ExtremeSupercritical,
}

impl Regime {
    pub fn id(self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::NearCritical => "near_critical",
            Regime::ExtremeSupercritical => "extreme_supercritical",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Below `p_c`, between `p_c` and `band * p_c`, or beyond.
pub fn classify_regime(p: f64, p_c: f64, band: f64) -> Result<Regime> {
    check_probability(p)?;
    if !(p_c > 0.0) || !p_c.is_finite() {
        return Err(Error::InvalidArgument(format!("threshold estimate {p_c} is not positive")));
    }
    if !(band > 1.0) || !band.is_finite() {
        return Err(Error::InvalidArgument(format!("regime band {band} must exceed 1")));
    }
    Ok(if p < p_c {
        Regime::Subcritical
    } else if p < band * p_c {
        Regime::NearCritical
    } else {
        Regime::ExtremeSupercritical
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterFeature {
    pub size: usize,
    pub spanning: bool,
    pub component_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Non-spanning clusters with at least `min_cluster_size` sites.
    pub context_feature_count: usize,
    pub min_cluster_size: usize,
    /// Clusters counted as contexts plus every spanning cluster, largest
    /// first.
    pub clusters: Vec<ClusterFeature>,
    /// Fraction of occupied sites in spanning clusters.
    pub spanning_fraction: f64,
}

/// Intrinsic dimension of a finite cluster: the fractal dimension 4, but
/// never more than the lattice allows.
fn finite_component_dim(d: usize) -> usize {
    d.min(4)
}

/// Counts context features and assigns each cluster its component
/// dimension. A spanning cluster is Euclidean (dimension `d`) only in the
/// extreme supercritical regime.
pub fn feature_inventory(census: &ClusterCensus, regime: Regime, min_cluster_size: usize, d: usize) -> RegimeReport {
    let finite = census.finite_histogram();
    let mut clusters: Vec<ClusterFeature> = census
        .spanning_sizes
        .iter()
        .map(|&size| ClusterFeature {
            size,
            spanning: true,
            component_dim: if regime == Regime::ExtremeSupercritical {
                d
            } else {
                finite_component_dim(d)
            },
        })
        .collect();
    let mut context_feature_count = 0;
    for (&size, &k) in finite.range(min_cluster_size.max(1)..).rev() {
        context_feature_count += k;
        clusters.extend(std::iter::repeat_n(
            ClusterFeature {
                size,
                spanning: false,
                component_dim: finite_component_dim(d),
            },
            k,
        ));
    }
    clusters.sort_by(|a, b| b.size.cmp(&a.size).then(b.spanning.cmp(&a.spanning)));
    let spanning_fraction = if census.occupied == 0 {
        0.0
    } else {
        census.spanning_sizes.iter().sum::<usize>() as f64 / census.occupied as f64
    };
    RegimeReport {
        regime,
        context_feature_count,
        min_cluster_size,
        clusters,
        spanning_fraction,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    pub fn extension(self) -> &'static str {
        match self {
            DatasetFormat::Csv => "csv",
            DatasetFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(DatasetFormat::Csv),
            "jsonl" => Ok(DatasetFormat::Jsonl),
            _ => Err(Error::InvalidArgument(format!("unknown dataset format `{s}`"))),
        }
    }
}

/// Writes one record per example. CSV columns are
/// `site_index,coord_0..coord_{d-1},y,cluster_id,in_distribution` with
/// `cluster_id = -1` for isolated sites; JSONL uses the same fields after a
/// header line holding the spec.
pub fn write_dataset<W: Write>(dataset: &Dataset, format: DatasetFormat, mut out: W) -> std::io::Result<()> {
    let d = dataset.spec.geometry.dim();
    let id = |e: &LabeledExample| e.cluster_id.map_or(-1, |c| c as i64);
    match format {
        DatasetFormat::Csv => {
            write!(out, "site_index")?;
            for a in 0..d {
                write!(out, ",coord_{a}")?;
            }
            writeln!(out, ",y,cluster_id,in_distribution")?;
            for e in &dataset.examples {
                write!(out, "{}", e.site_index)?;
                for c in &e.coords {
                    write!(out, ",{c}")?;
                }
                writeln!(out, ",{},{},{}", e.label, id(e), e.in_distribution)?;
            }
        }
        DatasetFormat::Jsonl => {
            let spec = serde_json::to_string(&dataset.spec).map_err(std::io::Error::other)?;
            writeln!(out, "{{\"spec\":{spec}}}")?;
            for e in &dataset.examples {
                write!(out, "{{\"site_index\":{}", e.site_index)?;
                for (a, c) in e.coords.iter().enumerate() {
                    write!(out, ",\"coord_{a}\":{c}")?;
                }
                writeln!(
                    out,
                    ",\"y\":{},\"cluster_id\":{},\"in_distribution\":{}}}",
                    e.label,
                    id(e),
                    e.in_distribution
                )?;
            }
        }
    }
    Ok(())
}

/// Writes the dataset to `path`.
pub fn export_dataset(dataset: &Dataset, format: DatasetFormat, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_dataset(dataset, format, &mut buf).map_err(|e| Error::io(path, e))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}
