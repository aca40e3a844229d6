//! Command-line grammar and the flat `key = value` config file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use perclab::{Boundary, LatticeGeometry};

#[derive(Debug, Parser)]
#[command(
    name = "perclab",
    version,
    about = "Percolation experiments: sweeps, ensembles, Bethe-lattice results, datasets, fits",
    arg_required_else_help = true,
    args_override_self = true
)]
pub struct Cli {
    /// Flat `key = value` file of flag defaults. Flags given on the
    /// command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "PERCLAB_OUT", default_value = ".")]
    pub out: PathBuf,

    /// Master seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,

    /// Threads used for ensembles. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Newman-Ziff sweep over all occupation counts.
    Sweep(SweepArgs),
    /// Cluster statistics of independent configurations at fixed p.
    Sample(SampleArgs),
    /// Closed-form Bethe-lattice results, optionally checked by cluster growth.
    Bethe(BetheArgs),
    /// Labeled dataset with one target function per cluster.
    Datagen(DatagenArgs),
    /// Exponent and cutoff estimators on saved censuses.
    Fit(FitArgs),
    /// Exact statistics of a tiny lattice by full enumeration.
    Oracle(OracleArgs),
    /// SVG picture of a two-dimensional configuration.
    Render(RenderArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sweep(_) => "sweep",
            Command::Sample(_) => "sample",
            Command::Bethe(_) => "bethe",
            Command::Datagen(_) => "datagen",
            Command::Fit(_) => "fit",
            Command::Oracle(_) => "oracle",
            Command::Render(_) => "render",
            Command::Replay(_) => "replay",
        }
    }
}

pub const SUBCOMMANDS: [&str; 8] = ["sweep", "sample", "bethe", "datagen", "fit", "oracle", "render", "replay"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryArg {
    Free,
    Periodic,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Free => Boundary::Free,
            BoundaryArg::Periodic => Boundary::Periodic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct LatticeArgs {
    /// Side lengths, comma separated (e.g. 64,64).
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["d", "side"])]
    pub sides: Option<Vec<usize>>,
    /// Dimension of a cubic lattice; use with --side.
    #[arg(long, requires = "side")]
    pub d: Option<usize>,
    /// Side length of a cubic lattice; use with --d.
    #[arg(long, requires = "d")]
    pub side: Option<usize>,
    #[arg(long, value_enum, default_value = "free")]
    pub boundary: BoundaryArg,
}

impl LatticeArgs {
    pub fn geometry(&self) -> perclab::Result<LatticeGeometry> {
        let sides = match (&self.sides, self.d, self.side) {
            (Some(s), _, _) => s.clone(),
            (None, Some(d), Some(l)) => vec![l; d],
            _ => {
                return Err(perclab::Error::InvalidArgument(
                    "lattice needs --sides or --d with --side".into(),
                ))
            }
        };
        LatticeGeometry::new(sides, self.boundary.into())
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long, default_value_t = 100)]
    pub realizations: usize,
    /// Observables to record: largest, spanning, mean_finite_size, cluster_count.
    #[arg(long, value_delimiter = ',', default_value = "largest,spanning,mean_finite_size,cluster_count")]
    pub observables: Vec<String>,
    /// Occupation probabilities at which to evaluate canonical averages.
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Also estimate the threshold from the spanning curve.
    #[arg(long)]
    pub threshold: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SampleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 10)]
    pub realizations: usize,
    /// Record the radius of gyration of every cluster.
    #[arg(long)]
    pub shapes: bool,
    /// Measure the chemical correlation function up to this distance.
    #[arg(long)]
    pub l_max: Option<usize>,
    /// Correlation origins per configuration (default: every occupied site).
    #[arg(long, requires = "l_max")]
    pub origins: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct BetheArgs {
    /// Coordination number.
    #[arg(long)]
    pub z: u32,
    #[arg(long)]
    pub p: f64,
    /// Shells of the correlation function to report.
    #[arg(long, default_value_t = 8)]
    pub shells: u32,
    /// Order of the cluster moment to sum.
    #[arg(long)]
    pub moment: Option<f64>,
    /// Grow this many clusters and compare with the closed forms.
    #[arg(long)]
    pub mc: Option<usize>,
    /// Growth cap per cluster.
    #[arg(long, default_value_t = perclab::bethe::DEFAULT_GROWTH_CAP)]
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Args, Serialize)]
pub struct DatagenArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub p: f64,
    /// Size of the label space.
    #[arg(long, default_value_t = 10)]
    pub labels: u64,
    /// Smallest cluster counted as a context feature.
    #[arg(long, default_value_t = 10)]
    pub min_cluster_size: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
    /// Threshold used for the regime; estimated on the same lattice if absent.
    #[arg(long)]
    pub p_c: Option<f64>,
    /// Sweeps used to estimate the threshold.
    #[arg(long, default_value_t = 20)]
    pub threshold_realizations: usize,
    /// Multiple of the threshold where the extreme supercritical regime starts.
    #[arg(long, default_value_t = perclab::datagen::DEFAULT_REGIME_BAND)]
    pub band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitKind {
    /// Size-distribution exponent by discrete maximum likelihood.
    Tau,
    /// Fractal dimension from cluster radii.
    Fractal,
    /// Exponential cutoff of an off-critical census against a critical one.
    Cutoff,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(value_enum)]
    pub kind: FitKind,
    /// `s,count` census (tau, and the off-critical side of cutoff).
    #[arg(long)]
    pub census: Option<PathBuf>,
    /// `s,count` census at the threshold (cutoff).
    #[arg(long)]
    pub critical: Option<PathBuf>,
    /// `s,radius_sq[,spans]` rows (fractal).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub s_min: usize,
    #[arg(long)]
    pub s_lo: Option<usize>,
    #[arg(long)]
    pub s_hi: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum HighlightArg {
    Largest,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct RenderArgs {
    #[command(flatten)]
    pub lattice: LatticeArgs,
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_enum, default_value = "largest")]
    pub highlight: HighlightArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Parses a flat config file into `--key value` tokens. `true` turns a key
/// into a bare switch and `false` drops it.
pub fn config_tokens(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut tokens = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected `key = value`", path.display(), k + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("{}:{}: invalid key `{key}`", path.display(), k + 1));
        }
        match value {
            "true" => tokens.push(format!("--{key}")),
            "false" => {}
            _ => {
                tokens.push(format!("--{key}"));
                tokens.push(value.to_string());
            }
        }
    }
    Ok(tokens)
}

fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Splices config-file tokens in right after the subcommand name and moves
/// every user token behind them, so the command line overrides the file.
pub fn merge_config(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = argv.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(argv);
    };
    let pos = pos + 1;
    let mut out = vec![argv[0].clone(), argv[pos].clone()];
    out.extend(config_tokens(&path)?);
    out.extend(argv[1..pos].iter().cloned());
    out.extend(argv[pos + 1..].iter().cloned());
    Ok(out)
}

/// Arguments that fully determine a run's artifacts: the merged argv
/// without output location, worker count or config file, plus the seed.
pub fn reproducible_argv(argv: &[String], seed: u64) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let skip_value = ["--out", "--workers", "--config", "--seed"].contains(&a.as_str());
        if skip_value {
            it.next();
            continue;
        }
        if ["--out=", "--workers=", "--config=", "--seed="].iter().any(|p| a.starts_with(p)) {
            continue;
        }
        out.push(a.clone());
    }
    out.push("--seed".into());
    out.push(seed.to_string());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn grammar_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn command_line_beats_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# sweep grid\nsides = 8,8\nrealizations=5\nthreshold = true\np_grid = 0.5,0.6\n").unwrap();
        let argv = s(&["perclab", "--config", path.to_str().unwrap(), "sweep", "--realizations", "7"]);
        let merged = merge_config(argv).unwrap();
        let cli = Cli::try_parse_from(&merged).unwrap();
        let Command::Sweep(a) = cli.command else { panic!() };
        assert_eq!(a.realizations, 7);
        assert!(a.threshold);
        assert_eq!(a.lattice.sides, Some(vec![8, 8]));
        assert_eq!(a.p_grid, Some(vec![0.5, 0.6]));
    }

    #[test]
    fn unknown_config_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "colour = red\n").unwrap();
        let argv = s(&["perclab", "sweep", "--sides", "4,4", "--config", path.to_str().unwrap()]);
        let merged = merge_config(argv).unwrap();
        assert!(Cli::try_parse_from(&merged).is_err());
        std::fs::write(&path, "no equals sign\n").unwrap();
        assert!(merge_config(s(&["perclab", "--config", path.to_str().unwrap(), "sweep"])).is_err());
    }

    #[test]
    fn reproducible_argv_drops_location() {
        let argv = s(&["perclab", "--out", "x", "sweep", "--workers=8", "--sides", "4,4", "--seed", "3"]);
        assert_eq!(reproducible_argv(&argv, 3), s(&["sweep", "--sides", "4,4", "--seed", "3"]));
    }

    #[test]
    fn lattice_forms() {
        let cli = Cli::try_parse_from(s(&["perclab", "oracle", "--d", "2", "--side", "3", "--p", "0.5"])).unwrap();
        let Command::Oracle(a) = cli.command else { panic!() };
        assert_eq!(a.lattice.geometry().unwrap().sides(), &[3, 3]);
        assert!(Cli::try_parse_from(s(&["perclab", "oracle", "--d", "2", "--p", "0.5"])).is_err());
    }
}
