//! SVG pictures of two-dimensional configurations.

use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::percolation::{ClusterLabeling, Configuration};
use crate::rng::mix64;

const CELL: usize = 6;
const BACKGROUND: &str = "#ffffff";
const OCCUPIED: &str = "#b8b8b8";
const LARGEST: &str = "#000000";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Highlight {
    /// Largest cluster black, every other occupied site gray.
    Largest,
    /// One color per cluster.
    All,
}

impl FromStr for Highlight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "largest" => Ok(Highlight::Largest),
            "all" => Ok(Highlight::All),
            _ => Err(Error::InvalidArgument(format!("unknown highlight `{s}`"))),
        }
    }
}

fn cluster_color(canonical: usize) -> String {
    let h = mix64(canonical as u64);
    let hue = h % 360;
    let light = 35 + (h >> 16) % 30;
    format!("hsl({hue},70%,{light}%)")
}

/// One square per occupied site; axis 0 runs down the rows and axis 1
/// across. Runs of equal color within a row share a rectangle, so the
/// document stays small and its bytes depend only on the input.
pub fn render_lattice_svg(config: &Configuration, labeling: &ClusterLabeling, highlight: Highlight) -> Result<String> {
    let g = config.geometry();
    if g.dim() != 2 {
        return Err(Error::Unsupported(format!("rendering needs d = 2, got d = {}", g.dim())));
    }
    let (rows, cols) = (g.sides()[0], g.sides()[1]);

    // Canonical cluster id = smallest member index.
    let mut canonical = vec![usize::MAX; g.site_count()];
    for site in config.occupied_sites() {
        let r = labeling.root(site).expect("occupied");
        if canonical[r] == usize::MAX {
            canonical[r] = site;
        }
    }
    let largest = labeling
        .roots()
        .max_by(|&a, &b| {
            labeling
                .cluster_size(a)
                .cmp(&labeling.cluster_size(b))
                .then(canonical[b].cmp(&canonical[a]))
        });
    let color = |site: usize| -> Option<String> {
        let r = labeling.root(site)?;
        Some(match highlight {
            Highlight::Largest if Some(r) == largest => LARGEST.to_string(),
            Highlight::Largest => OCCUPIED.to_string(),
            Highlight::All => cluster_color(canonical[r]),
        })
    };

    let (w, h) = (cols * CELL, rows * CELL);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" shape-rendering=\"crispEdges\">"
    );
    let _ = writeln!(svg, "<rect width=\"{w}\" height=\"{h}\" fill=\"{BACKGROUND}\"/>");
    for row in 0..rows {
        let mut col = 0;
        while col < cols {
            let Some(fill) = color(row * cols + col) else {
                col += 1;
                continue;
            };
            let start = col;
            while col < cols && color(row * cols + col).as_deref() == Some(fill.as_str()) {
                col += 1;
            }
            let _ = writeln!(
                svg,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{CELL}\" fill=\"{fill}\"/>",
                start * CELL,
                row * CELL,
                (col - start) * CELL
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
