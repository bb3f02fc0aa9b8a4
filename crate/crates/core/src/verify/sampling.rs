use rand::Rng;

use crate::cube::GridPoint;

/// Uniform lattice point of `V_level`.
pub fn random_node(rng: &mut impl Rng, dim: usize, arity: u32, level: u32) -> GridPoint {
    let side = (arity as u64).pow(level);
    GridPoint {
        level,
        coords: (0..dim).map(|_| rng.random_range(0..=side)).collect(),
    }
}

/// Uniform lattice point of `V_level` in the box of half-width `radius`
/// lattice units around `centre`, clipped to the unit cube.
pub fn random_node_near(
    rng: &mut impl Rng,
    centre: &GridPoint,
    radius: u64,
    arity: u32,
) -> GridPoint {
    let side = (arity as u64).pow(centre.level);
    let coords = centre
        .coords
        .iter()
        .map(|&c| rng.random_range(c.saturating_sub(radius)..=(c + radius).min(side)))
        .collect();
    GridPoint {
        level: centre.level,
        coords,
    }
}

/// Picks `count` distinct targets different from `x`, drawing with `draw`
/// until `accept` holds; gives up after `100 * count` attempts.
pub fn distinct_targets<R: Rng>(
    rng: &mut R,
    x: &GridPoint,
    count: usize,
    mut draw: impl FnMut(&mut R) -> GridPoint,
    accept: impl Fn(&GridPoint) -> bool,
) -> Vec<GridPoint> {
    let mut out: Vec<GridPoint> = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count {
        attempts += 1;
        let y = draw(rng);
        if y != *x && accept(&y) && !out.contains(&y) {
            out.push(y);
        }
    }
    out
}
