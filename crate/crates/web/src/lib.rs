//! Browser bindings. Every call is single-threaded and returns either an
//! SVG document or a JSON string, so the page needs no glue beyond
//! `JSON.parse`.

use serde_json::json;
use wasm_bindgen::prelude::*;

use perclab::analysis::census;
use perclab::bethe::bethe_exact;
use perclab::percolation::{
    canonical_convolve, estimate_threshold, label_clusters, newman_ziff_sweep, Configuration, Observable,
};
use perclab::render::{render_lattice_svg, Highlight};
use perclab::{Boundary, Ensemble, LatticeGeometry};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn boundary(periodic: bool) -> Boundary {
    if periodic {
        Boundary::Periodic
    } else {
        Boundary::Free
    }
}

/// Samples a `rows x cols` configuration and returns
/// `{"svg", "occupied", "clusters", "largest", "spanning"}`.
#[wasm_bindgen]
pub fn render_configuration(
    rows: usize,
    cols: usize,
    p: f64,
    seed: u64,
    highlight: &str,
    periodic: bool,
) -> Result<String, JsError> {
    let g = LatticeGeometry::new(vec![rows, cols], boundary(periodic)).map_err(js_err)?;
    let config = Configuration::sample(&g, p, seed).map_err(js_err)?;
    let labeling = label_clusters(&config);
    let highlight: Highlight = highlight.parse().map_err(js_err)?;
    let svg = render_lattice_svg(&config, &labeling, highlight).map_err(js_err)?;
    let c = census(&labeling);
    Ok(json!({
        "svg": svg,
        "occupied": c.occupied,
        "clusters": labeling.cluster_count(),
        "largest": c.largest,
        "spanning": c.spanning,
    })
    .to_string())
}

/// Closed-form Bethe-lattice results for each p of an evenly spaced grid
/// on `[0, p_max]`.
#[wasm_bindgen]
pub fn bethe_curves(z: u32, p_max: f64, points: usize, shells: u32) -> Result<String, JsError> {
    if points < 2 {
        return Err(JsError::new("need at least two grid points"));
    }
    let rows = (0..points)
        .map(|k| {
            let p = p_max * k as f64 / (points - 1) as f64;
            bethe_exact(z, p, shells).map_err(js_err)
        })
        .collect::<Result<Vec<_>, _>>()?;
    serde_json::to_string(&rows).map_err(js_err)
}

/// Newman-Ziff sweep of a `side^d` lattice: canonical spanning probability,
/// largest-cluster fraction and mean finite size on a p grid, plus the
/// threshold estimate.
#[wasm_bindgen]
pub fn sweep_curves(d: usize, side: usize, periodic: bool, realizations: usize, seed: u64, points: usize) -> Result<String, JsError> {
    if points < 2 {
        return Err(JsError::new("need at least two grid points"));
    }
    let g = LatticeGeometry::cubic(d, side, boundary(periodic)).map_err(js_err)?;
    let ensemble = Ensemble::new(realizations, seed);
    let observables = [Observable::Spanning, Observable::Largest, Observable::MeanFiniteSize];
    let curves = newman_ziff_sweep(&g, &ensemble, &observables).map_err(js_err)?;
    let threshold = estimate_threshold(&g, &ensemble).map_err(js_err)?;
    let n = g.site_count() as f64;
    let mut grid = Vec::with_capacity(points);
    for k in 0..points {
        let p = k as f64 / (points - 1) as f64;
        let v: Vec<f64> = curves
            .iter()
            .map(|c| canonical_convolve(c, p))
            .collect::<perclab::Result<_>>()
            .map_err(js_err)?;
        grid.push(json!({ "p": p, "spanning": v[0], "largest_fraction": v[1] / n, "mean_finite_size": v[2] }));
    }
    Ok(json!({ "sites": g.site_count(), "p_c": threshold.p_c, "p_c_stderr": threshold.stderr, "grid": grid }).to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_reports_counts() {
        let v: serde_json::Value = serde_json::from_str(&render_configuration(20, 30, 0.6, 1, "largest", false).unwrap()).unwrap();
        assert!(v["svg"].as_str().unwrap().starts_with("<svg"));
        assert!(v["largest"].as_u64().unwrap() <= v["occupied"].as_u64().unwrap());
    }

    #[test]
    fn bethe_grid_marks_divergence() {
        let v: serde_json::Value = serde_json::from_str(&bethe_curves(3, 0.6, 7, 4).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 7);
        assert_eq!(v[1]["mean_size"], serde_json::json!(1.0 + 3.0 * 0.1 / (1.0 - 0.2)));
        assert!(v[6]["mean_size"].is_null());
    }

    #[test]
    fn sweep_is_monotone_in_spanning() {
        let v: serde_json::Value = serde_json::from_str(&sweep_curves(2, 16, true, 10, 3, 11).unwrap()).unwrap();
        let s: Vec<f64> = v["grid"].as_array().unwrap().iter().map(|r| r["spanning"].as_f64().unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert_eq!(s[0], 0.0);
        assert!((s[10] - 1.0).abs() < 1e-12);
    }
}
