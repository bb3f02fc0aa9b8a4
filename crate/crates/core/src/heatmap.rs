//! SVG rendering of a level-`k` weight field, one rectangle per cell.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::params::Params;
use crate::weight::{CellBox, WeightExponents, WeightField};

/// Low to high weight.
const PALETTE: [&str; 9] = [
    "#440154", "#472d7b", "#3b528b", "#2c728e", "#21918c", "#28ae80", "#5ec962", "#addc30",
    "#fde725",
];

pub const DEFAULT_CELL_BUDGET: u64 = 1 << 18;
const CANVAS: u64 = 512;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatmapOptions {
    pub level: u32,
    /// Level-`level` cell indices of axes `2..n`; defaults to the middle.
    pub slice: Option<Vec<u64>>,
    pub cell_budget: u64,
}

impl Default for HeatmapOptions {
    fn default() -> Self {
        Self {
            level: 2,
            slice: None,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LegendEntry {
    pub a: u32,
    pub b: u32,
    pub value: f64,
    pub cells: u64,
    pub colour: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct Heatmap {
    pub level: u32,
    pub slice: Vec<u64>,
    pub legend: Vec<LegendEntry>,
    #[serde(skip)]
    pub svg: String,
}

pub fn heatmap(params: &Params, opts: &HeatmapOptions) -> Result<Heatmap> {
    let n = params.dim();
    let k = opts.level;
    let side = params.cells_per_axis(k);
    let cells = (side as u128).pow(2);
    if cells > opts.cell_budget as u128 {
        return Err(Error::Resource {
            what: format!("heatmap cells at level {k} (try a smaller level)"),
            required: cells,
            budget: opts.cell_budget as u128,
        });
    }
    let slice = match &opts.slice {
        Some(s) if s.len() != n - 2 => {
            return domain(format!("slice needs {} indices for n = {n}", n - 2))
        }
        Some(s) if s.iter().any(|&c| c >= side) => {
            return domain(format!("slice index outside 0..{side}"))
        }
        Some(s) => s.clone(),
        None => vec![side / 2; n - 2],
    };
    let mut lo = vec![0, 0];
    let mut hi = vec![side - 1, side - 1];
    lo.extend(&slice);
    hi.extend(&slice);
    let field = WeightField::over(params, k, CellBox { lo, hi }, opts.cell_budget)?;

    let mut pairs: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for w in field.cells() {
        *pairs.entry((w.a, w.b)).or_default() += 1;
    }
    let ln = |(a, b): (u32, u32)| WeightExponents::new(a, b).ln(params);
    let lns: Vec<f64> = pairs.keys().map(|&p| ln(p)).collect();
    let (min, max) = lns
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let colour = |v: f64| {
        let t = if max > min {
            (v - min) / (max - min)
        } else {
            0.0
        };
        PALETTE[(t * (PALETTE.len() - 1) as f64).round() as usize]
    };
    let mut legend: Vec<LegendEntry> = pairs
        .iter()
        .map(|(&(a, b), &count)| {
            let v = ln((a, b));
            LegendEntry {
                a,
                b,
                value: v.exp(),
                cells: count,
                colour: colour(v),
            }
        })
        .collect();
    legend.sort_by(|x, y| {
        WeightExponents::new(x.a, x.b)
            .cmp_value(&WeightExponents::new(y.a, y.b), params)
            .then((x.a, x.b).cmp(&(y.a, y.b)))
    });

    let px = (CANVAS / side).max(1);
    let width = side * px;
    let legend_h = 20 * legend.len() as u64 + 10;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" shape-rendering="crispEdges">"#,
        w = width.max(260),
        h = width + legend_h
    );
    let colours: BTreeMap<(u32, u32), &str> =
        legend.iter().map(|e| ((e.a, e.b), e.colour)).collect();
    for i in 0..side {
        for j in 0..side {
            let w = field.cells()[(i * side + j) as usize];
            let _ = writeln!(
                svg,
                r#"<rect x="{}" y="{}" width="{px}" height="{px}" fill="{}"/>"#,
                i * px,
                (side - 1 - j) * px,
                colours[&(w.a, w.b)]
            );
        }
    }
    for (row, e) in legend.iter().enumerate() {
        let y = width + 10 + 20 * row as u64;
        let _ = writeln!(
            svg,
            r#"<rect x="4" y="{y}" width="14" height="14" fill="{}"/>"#,
            e.colour
        );
        let _ = writeln!(
            svg,
            r#"<text x="24" y="{}" font-family="monospace" font-size="12">s^{} L^-{} = {:.6e} ({} cells)</text>"#,
            y + 12,
            e.a,
            e.b,
            e.value,
            e.cells
        );
    }
    svg.push_str("</svg>\n");
    Ok(Heatmap {
        level: k,
        slice,
        legend,
        svg,
    })
}
