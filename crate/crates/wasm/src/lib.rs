//! Browser bindings: weight heatmaps, a distance field from a clicked point
//! and a parameter explorer. Each export wraps a plain Rust function so the
//! logic can be tested natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use qsmetric_core::cube::GridPoint;
use qsmetric_core::heatmap::{heatmap, HeatmapOptions};
use qsmetric_core::metric::{GridSpec, Stencil, WeightedGrid};
use qsmetric_core::params::parse_rational;
use qsmetric_core::stochastic::walk_closed_form;
use qsmetric_core::verify::DimensionPlan;
use qsmetric_core::Params;

const NODE_BUDGET: u64 = 1 << 18;
const CELL_BUDGET: u64 = 1 << 16;

fn params(n: usize, arity: u32, l: &str, capped: bool) -> Result<Params, String> {
    Params::with_l(
        n,
        arity,
        parse_rational(l).map_err(|e| e.to_string())?,
        capped,
    )
    .map_err(|e| e.to_string())
}

pub fn heatmap_svg_inner(arity: u32, l: &str, capped: bool, level: u32) -> Result<String, String> {
    let p = params(2, arity, l, capped)?;
    let opts = HeatmapOptions {
        level,
        slice: None,
        cell_budget: CELL_BUDGET,
    };
    heatmap(&p, &opts).map(|h| h.svg).map_err(|e| e.to_string())
}

/// SVG heatmap of the level-`level` weight for `n = 2`.
#[wasm_bindgen]
pub fn heatmap_svg(arity: u32, l: &str, capped: bool, level: u32) -> Result<String, JsError> {
    heatmap_svg_inner(arity, l, capped, level).map_err(|e| JsError::new(&e))
}

/// Graph distances from one point to every node of a square grid, row-major
/// with `y` fastest.
#[wasm_bindgen]
pub struct DistanceField {
    side: u32,
    values: Vec<f64>,
    lambda: f64,
}

#[wasm_bindgen]
impl DistanceField {
    #[wasm_bindgen(getter)]
    pub fn side(&self) -> u32 {
        self.side
    }

    #[wasm_bindgen(getter)]
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

pub fn distance_field_inner(
    arity: u32,
    l: &str,
    capped: bool,
    weight_level: u32,
    resolution: u32,
    x: f64,
    y: f64,
) -> Result<DistanceField, String> {
    let p = params(2, arity, l, capped)?;
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err("the point must lie in the unit square".into());
    }
    let spec =
        GridSpec::new(weight_level, resolution, Stencil::default()).map_err(|e| e.to_string())?;
    let grid = WeightedGrid::build(&p, spec, None, NODE_BUDGET).map_err(|e| e.to_string())?;
    // snap the click to a lattice three levels finer than the grid
    let level = resolution + 3;
    let side = (arity as u64).pow(level) as f64;
    let source = GridPoint {
        level,
        coords: vec![(x * side).round() as u64, (y * side).round() as u64],
    };
    let targets: Vec<GridPoint> = (0..grid.node_count() as u32)
        .map(|i| grid.node_point(i))
        .collect();
    let values = grid
        .distances(&source, &targets)
        .map_err(|e| e.to_string())?;
    Ok(DistanceField {
        side: (arity as u64).pow(resolution) as u32 + 1,
        values,
        lambda: grid.lambda(),
    })
}

/// Distances from `(x, y)` in the unit square, for `n = 2`.
#[wasm_bindgen]
pub fn distance_field(
    arity: u32,
    l: &str,
    capped: bool,
    weight_level: u32,
    resolution: u32,
    x: f64,
    y: f64,
) -> Result<DistanceField, JsError> {
    distance_field_inner(arity, l, capped, weight_level, resolution, x, y)
        .map_err(|e| JsError::new(&e))
}

pub fn explore_inner(n: usize, arity: u32, beta: &str, alpha: &str) -> Result<String, String> {
    let beta = parse_rational(beta).map_err(|e| e.to_string())?;
    let alpha = parse_rational(alpha).map_err(|e| e.to_string())?;
    let plan = DimensionPlan::new(n, arity, beta, alpha).map_err(|e| e.to_string())?;
    let walk = walk_closed_form(plan.params());
    Ok(json!({ "plan": plan, "walk": walk }).to_string())
}

/// Dimension plan and capped-walk law for `L = M^beta`, as JSON.
#[wasm_bindgen]
pub fn explore(n: usize, arity: u32, beta: &str, alpha: &str) -> Result<String, JsError> {
    explore_inner(n, arity, beta, alpha).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heatmap_has_one_rect_per_cell_plus_legend() {
        let svg = heatmap_svg_inner(8, "8", false, 1).unwrap();
        assert_eq!(svg.matches("<rect").count(), 64 + 3);
        assert!(heatmap_svg_inner(8, "8", false, 9).is_err());
    }

    #[test]
    fn distance_field_vanishes_at_the_source() {
        let f = distance_field_inner(8, "8", false, 1, 2, 0.25, 0.5).unwrap();
        assert_eq!(f.side(), 65);
        assert_eq!(f.values().len(), 65 * 65);
        // (0.25, 0.5) is node (16, 32)
        assert_eq!(f.values()[16 * 65 + 32], 0.0);
        assert!(f.values().iter().all(|v| v.is_finite() && *v >= 0.0));
        assert!(f.max() > 0.0);
        assert!(distance_field_inner(8, "8", false, 1, 2, 1.5, 0.0).is_err());
    }

    #[test]
    fn explorer_reports_plan_and_walk() {
        let v: serde_json::Value =
            serde_json::from_str(&explore_inner(2, 16, "3", "1.1").unwrap()).unwrap();
        assert_eq!(v["plan"]["feasible"], true);
        assert_eq!(v["walk"]["r"], "7/9");
        assert!(explore_inner(2, 16, "3", "2").is_err());
    }
}
