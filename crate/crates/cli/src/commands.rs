//! One runner per subcommand. Runners compute everything in memory and
//! hand back artifacts; nothing touches the output directory here.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use perclab::analysis::{
    census, census_with_shapes, chemical_correlation, chemical_correlation_length,
    euclidean_correlation_length, exact_enumeration, fit_exponential_cutoff, fit_fractal_dimension,
    fit_power_law, mean_cluster_size, percolation_strength, ClusterCensus, ClusterShape, Origins,
};
use perclab::bethe::{bethe_exact, bethe_moment_scaling, bethe_monte_carlo, write_comparison_csv};
use perclab::datagen::{classify_regime, feature_inventory, generate_dataset, write_dataset, DatasetFormat, DatasetSpec};
use perclab::percolation::{
    canonical_convolve, estimate_threshold, label_clusters, newman_ziff_sweep, write_curves_csv,
    Configuration, Observable,
};
use perclab::render::{render_lattice_svg, Highlight};
use perclab::rng::derive_seed;
use perclab::{Ensemble, LatticeGeometry};

use crate::args::*;
use crate::error::CliError;
use crate::output::Artifacts;

type Result<T> = std::result::Result<T, CliError>;

pub struct Context {
    pub seed: u64,
    pub workers: usize,
}

impl Context {
    fn ensemble(&self, realizations: usize) -> Ensemble {
        Ensemble::new(realizations, self.seed).with_workers(self.workers)
    }
}

#[derive(Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    /// Report echoed on stdout.
    pub report: Option<serde_json::Value>,
    pub derived: serde_json::Value,
}

pub fn dispatch(command: &Command, ctx: &Context) -> Result<Outcome> {
    match command {
        Command::Sweep(a) => sweep(a, ctx),
        Command::Sample(a) => sample(a, ctx),
        Command::Bethe(a) => bethe(a, ctx),
        Command::Datagen(a) => datagen(a, ctx),
        Command::Fit(a) => fit(a),
        Command::Oracle(a) => oracle(a),
        Command::Render(a) => render(a, ctx),
        Command::Replay(_) => Err(CliError::usage("invalid_argument", "a replay cannot replay another replay")),
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(CliError::runtime)?;
    Ok(buf)
}

fn sweep(a: &SweepArgs, ctx: &Context) -> Result<Outcome> {
    let g = a.lattice.geometry()?;
    let observables = a
        .observables
        .iter()
        .map(|s| s.parse::<Observable>())
        .collect::<perclab::Result<Vec<_>>>()?;
    if let Some(grid) = &a.p_grid {
        for &p in grid {
            if !(0.0..=1.0).contains(&p) {
                return Err(perclab::Error::Probability(p).into());
            }
        }
    }
    let ensemble = ctx.ensemble(a.realizations);
    let curves = newman_ziff_sweep(&g, &ensemble, &observables)?;
    let mut out = Outcome::default();
    out.artifacts.add("curves.csv", csv_bytes(|b| write_curves_csv(&curves, b))?);
    if let Some(grid) = &a.p_grid {
        let mut text = String::from("p,observable,value\n");
        for &p in grid {
            for c in &curves {
                text.push_str(&format!("{p},{},{}\n", c.observable, canonical_convolve(c, p)?));
            }
        }
        out.artifacts.add("canonical.csv", text.into_bytes());
    }
    if a.threshold {
        let t = estimate_threshold(&g, &ensemble)?;
        out.artifacts.add_json("threshold.json", &t)?;
        out.derived = json!({ "p_c_hat": t.p_c, "p_c_stderr": t.stderr });
    }
    Ok(out)
}

#[derive(Serialize)]
struct MeanStderr {
    mean: f64,
    stderr: f64,
    count: usize,
}

#[derive(Default, Clone, Copy)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn summary(&self) -> Option<MeanStderr> {
        if self.n == 0 {
            return None;
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let stderr = if self.n > 1 {
            (((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt()
        } else {
            0.0
        };
        Some(MeanStderr { mean, stderr, count: self.n })
    }
}

#[derive(Serialize)]
struct CorrelationRow {
    l: usize,
    g: f64,
    stderr: f64,
}

#[derive(Serialize)]
struct SampleSummary {
    geometry: LatticeGeometry,
    p: f64,
    realizations: usize,
    occupied_fraction: Option<MeanStderr>,
    spanning_fraction: f64,
    /// Mean cluster size, leaving out the largest cluster when it spans.
    mean_size: Option<MeanStderr>,
    percolation_strength: Option<MeanStderr>,
    clusters: usize,
    xi_r: Option<f64>,
    correlation: Option<Vec<CorrelationRow>>,
    xi_l: Option<f64>,
}

struct SampleAcc {
    census: ClusterCensus,
    occupied: Moments,
    spanning: usize,
    size: Moments,
    strength: Moments,
    /// Per distance: sum of n*g, sum of (n*se)^2, with total origins.
    corr: Vec<(f64, f64)>,
    origins: usize,
}

fn sample(a: &SampleArgs, ctx: &Context) -> Result<Outcome> {
    let g = a.lattice.geometry()?;
    if !(0.0..=1.0).contains(&a.p) {
        return Err(perclab::Error::Probability(a.p).into());
    }
    if a.l_max == Some(0) {
        return Err(CliError::usage("invalid_argument", "--l-max must be at least 1"));
    }
    let ensemble = ctx.ensemble(a.realizations);
    let n = g.site_count() as f64;
    let init: perclab::Result<SampleAcc> = Ok(SampleAcc {
        census: ClusterCensus::default(),
        occupied: Moments::default(),
        spanning: 0,
        size: Moments::default(),
        strength: Moments::default(),
        corr: vec![(0.0, 0.0); a.l_max.unwrap_or(0) + 1],
        origins: 0,
    });
    let acc = ensemble.fold(
        init,
        |_, seed| -> perclab::Result<_> {
            let config = Configuration::sample(&g, a.p, seed)?;
            let labeling = label_clusters(&config);
            let c = if a.shapes { census_with_shapes(&labeling) } else { census(&labeling) };
            let corr = match a.l_max {
                Some(l_max) if config.occupied_count() > 0 => {
                    let origins = match a.origins {
                        Some(count) => Origins::Sample { count, seed: derive_seed(seed, 1) },
                        None => Origins::All,
                    };
                    Some(chemical_correlation(&config, &labeling, origins, l_max)?)
                }
                _ => None,
            };
            Ok((c, corr))
        },
        |acc, r| {
            let mut acc = acc?;
            let (c, corr) = r?;
            acc.occupied.push(c.occupied as f64 / n);
            acc.spanning += c.spanning as usize;
            if let Ok(s) = mean_cluster_size(&c, c.spanning) {
                acc.size.push(s);
            }
            if let Ok(s) = percolation_strength(&c) {
                acc.strength.push(s);
            }
            if let Some(est) = corr {
                let m = est.samples as f64;
                for (l, slot) in acc.corr.iter_mut().enumerate().skip(1) {
                    slot.0 += m * est.values[&l];
                    slot.1 += (m * est.stderr[&l]).powi(2);
                }
                acc.origins += est.samples;
            }
            acc.census.merge(c);
            Ok(acc)
        },
    )??;

    let mut out = Outcome::default();
    let full = &acc.census;
    out.artifacts.add("census.csv", csv_bytes(|b| full.write_csv(b))?);
    let finite = ClusterCensus {
        histogram: full.finite_histogram(),
        ..Default::default()
    };
    out.artifacts.add("finite_census.csv", csv_bytes(|b| finite.write_csv(b))?);

    let mut xi_r = None;
    if let Some(shapes) = &full.shapes {
        let mut text = String::from("s,radius_sq,spans\n");
        for c in shapes {
            let r = c.radius_sq.map(|r| r.to_string()).unwrap_or_default();
            text.push_str(&format!("{},{r},{}\n", c.size, c.spans));
        }
        out.artifacts.add("shapes.csv", text.into_bytes());
        let finite_shapes = ClusterCensus {
            shapes: Some(shapes.iter().filter(|c| !c.spans).copied().collect()),
            ..Default::default()
        };
        xi_r = euclidean_correlation_length(&finite_shapes).ok();
    }

    let (correlation, xi_l) = if a.l_max.is_some() && acc.origins > 0 {
        let m = acc.origins as f64;
        let rows: Vec<CorrelationRow> = acc
            .corr
            .iter()
            .enumerate()
            .skip(1)
            .map(|(l, &(s, v))| CorrelationRow { l, g: s / m, stderr: v.sqrt() / m })
            .collect();
        let est = perclab::analysis::CorrelationEstimate::from_values(rows.iter().map(|r| (r.l, r.g)).collect());
        let xi = chemical_correlation_length(&est).ok();
        (Some(rows), xi)
    } else {
        (None, None)
    };

    let summary = SampleSummary {
        geometry: g.clone(),
        p: a.p,
        realizations: a.realizations,
        occupied_fraction: acc.occupied.summary(),
        spanning_fraction: acc.spanning as f64 / a.realizations as f64,
        mean_size: acc.size.summary(),
        percolation_strength: acc.strength.summary(),
        clusters: full.cluster_count(),
        xi_r,
        correlation,
        xi_l,
    };
    out.artifacts.add_json("summary.json", &summary)?;
    Ok(out)
}

fn bethe(a: &BetheArgs, ctx: &Context) -> Result<Outcome> {
    let exact = bethe_exact(a.z, a.p, a.shells)?;
    let moment = match a.moment {
        Some(k) => match bethe_moment_scaling(a.z, a.p, k) {
            Ok(m) => Some(m),
            Err(perclab::Error::Divergent(_)) => None,
            Err(e) => return Err(e.into()),
        },
        None => None,
    };
    let mut report = serde_json::to_value(&exact).map_err(CliError::runtime)?;
    if a.moment.is_some() {
        report["moment"] = serde_json::to_value(moment).map_err(CliError::runtime)?;
    }
    let mut out = Outcome::default();
    out.artifacts.add_json("bethe.json", &report)?;
    if let Some(r) = a.mc {
        let mc = bethe_monte_carlo(a.z, a.p, &ctx.ensemble(r), a.cap, a.shells as usize)?;
        let mut table = Vec::new();
        write_comparison_csv(&mc, &mut table)?;
        out.artifacts.add("comparison.csv", table);
        let c = ClusterCensus {
            histogram: mc.size_histogram.clone(),
            ..Default::default()
        };
        out.artifacts.add("bethe_census.csv", csv_bytes(|b| c.write_csv(b))?);
        out.derived = json!({ "mc_truncated": mc.truncated, "perimeter_violations": mc.perimeter_violations });
        report["monte_carlo"] = json!({
            "realizations": mc.realizations,
            "truncated": mc.truncated,
            "mean_size": mc.mean_size,
            "mean_size_stderr": mc.mean_size_stderr,
            "shell_mean": mc.shell_mean,
            "shell_stderr": mc.shell_stderr,
            "perimeter_violations": mc.perimeter_violations,
        });
        out.artifacts.add_json("bethe_mc.json", &report["monte_carlo"])?;
    }
    out.report = Some(report);
    Ok(out)
}

fn datagen(a: &DatagenArgs, ctx: &Context) -> Result<Outcome> {
    let g = a.lattice.geometry()?;
    let spec = DatasetSpec {
        geometry: g.clone(),
        p: a.p,
        labels: a.labels,
        seed: ctx.seed,
        min_cluster_size: a.min_cluster_size,
    };
    spec.validate()?;
    let p_c = match a.p_c {
        Some(p_c) => p_c,
        None => {
            let ens = Ensemble::new(a.threshold_realizations, derive_seed(ctx.seed, 1)).with_workers(ctx.workers);
            estimate_threshold(&g, &ens)?.p_c
        }
    };
    let regime = classify_regime(a.p, p_c, a.band)?;
    let dataset = generate_dataset(&spec)?;
    let report = feature_inventory(&census(&dataset.labeling), regime, a.min_cluster_size, g.dim());

    let format = match a.format {
        FormatArg::Csv => DatasetFormat::Csv,
        FormatArg::Jsonl => DatasetFormat::Jsonl,
    };
    let mut out = Outcome::default();
    let name = format!("dataset.{}", format.extension());
    out.artifacts.add(&name, csv_bytes(|b| write_dataset(&dataset, format, b))?);
    out.artifacts.add_json("functions.json", &dataset.functions)?;
    out.artifacts.add_json(
        "report.json",
        &json!({
            "spec": spec,
            "p_c_hat": p_c,
            "examples": dataset.examples.len(),
            "in_distribution": dataset.examples.iter().filter(|e| e.in_distribution).count(),
            "inventory": report,
        }),
    )?;
    out.derived = json!({ "p_c_hat": p_c, "regime": regime });
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_census(path: &Option<std::path::PathBuf>, flag: &str) -> Result<BTreeMap<usize, usize>> {
    let path = path
        .as_ref()
        .ok_or_else(|| CliError::usage("invalid_argument", format!("this fit needs --{flag}")))?;
    Ok(ClusterCensus::read_histogram_csv(&read_text(path)?)?)
}

/// Cluster shapes from `s,radius_sq[,spans]` rows; an empty radius marks a
/// wrapping cluster.
fn read_shapes(path: &Path) -> Result<Vec<ClusterShape>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if !header.starts_with("s,radius_sq") {
        return Err(CliError::usage("invalid_argument", format!("{}: expected header `s,radius_sq`", path.display())));
    }
    let mut shapes = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || CliError::usage("invalid_argument", format!("{}:{}: malformed row", path.display(), k + 2));
        let mut f = line.split(',').map(str::trim);
        let size: usize = f.next().and_then(|x| x.parse().ok()).ok_or_else(bad)?;
        let radius_sq = match f.next() {
            Some("") => None,
            Some(r) => Some(r.parse::<f64>().map_err(|_| bad())?),
            None => return Err(bad()),
        };
        let spans = match f.next() {
            None => false,
            Some(b) => b.parse::<bool>().map_err(|_| bad())?,
        };
        shapes.push(ClusterShape { size, radius_sq, spans });
    }
    Ok(shapes)
}

fn fit(a: &FitArgs) -> Result<Outcome> {
    let report = match a.kind {
        FitKind::Tau => {
            let h = read_census(&a.census, "census")?;
            let samples: Vec<usize> = h.iter().flat_map(|(&s, &k)| std::iter::repeat_n(s, k)).collect();
            let f = fit_power_law(&samples, a.s_min)?;
            json!({ "estimator": "tau_discrete_mle", "value": f.tau, "stderr": f.stderr,
                    "range": [f.s_min, null], "samples": f.samples })
        }
        FitKind::Fractal => {
            let path = a
                .pairs
                .as_ref()
                .ok_or_else(|| CliError::usage("invalid_argument", "this fit needs --pairs"))?;
            let pairs = ClusterCensus {
                shapes: Some(read_shapes(path)?),
                ..Default::default()
            }
            .radius_by_size();
            let lo = a.s_lo.unwrap_or(a.s_min) as f64;
            let hi = a.s_hi.map_or(f64::INFINITY, |s| s as f64);
            let f = fit_fractal_dimension(&pairs, lo, hi)?;
            json!({ "estimator": "fractal_dimension_mean_radius_per_size", "value": f.dimension, "stderr": f.stderr,
                    "range": [f.s_lo, if f.s_hi.is_finite() { json!(f.s_hi) } else { json!(null) }],
                    "samples": f.samples })
        }
        FitKind::Cutoff => {
            let off = read_census(&a.census, "census")?;
            let crit = read_census(&a.critical, "critical")?;
            let f = fit_exponential_cutoff(&off, &crit, a.s_lo.unwrap_or(1), a.s_hi.unwrap_or(usize::MAX))?;
            json!({ "estimator": "cutoff_logistic", "value": f.c, "stderr": f.stderr,
                    "range": [f.s_lo, f.s_hi], "samples": f.samples })
        }
    };
    let mut out = Outcome::default();
    out.artifacts.add_json("fit.json", &report)?;
    out.report = Some(report);
    Ok(out)
}

fn oracle(a: &OracleArgs) -> Result<Outcome> {
    let g = a.lattice.geometry()?;
    let ex = exact_enumeration(&g, a.p)?;
    let report = json!({
        "geometry": g,
        "p": a.p,
        "mean_size": ex.mean_size,
        "spanning_probability": ex.spanning_probability,
        "cluster_numbers": ex.cluster_numbers,
        "cluster_counts": ex.cluster_counts.iter().map(|(&s, m)| (s, m.mean)).collect::<BTreeMap<_, _>>(),
    });
    let mut out = Outcome::default();
    out.artifacts.add_json("oracle.json", &report)?;
    out.report = Some(report);
    Ok(out)
}

fn render(a: &RenderArgs, ctx: &Context) -> Result<Outcome> {
    let g = a.lattice.geometry()?;
    let config = Configuration::sample(&g, a.p, ctx.seed)?;
    let labeling = label_clusters(&config);
    let highlight = match a.highlight {
        HighlightArg::Largest => Highlight::Largest,
        HighlightArg::All => Highlight::All,
    };
    let svg = render_lattice_svg(&config, &labeling, highlight)?;
    let mut out = Outcome::default();
    out.artifacts.add("lattice.svg", svg.into_bytes());
    Ok(out)
}
