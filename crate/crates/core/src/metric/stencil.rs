use serde::{Deserialize, Serialize};

/// Neighbourhood used to connect grid nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// The `2n` unit axis moves.
    Axis,
    /// All moves with entries in `{-1, 0, 1}`.
    #[default]
    AxisDiagonal,
    /// Primitive moves with entries in `{-2, ..., 2}` (dimension at most 3).
    Extended,
}

impl Stencil {
    pub fn max_dim(self) -> usize {
        match self {
            Stencil::Extended => 3,
            _ => usize::MAX,
        }
    }

    /// Move vectors, sorted lexicographically.
    pub fn vectors(self, dim: usize) -> Vec<Vec<i32>> {
        let reach: i32 = if self == Stencil::Extended { 2 } else { 1 };
        let width = (2 * reach + 1) as u32;
        let mut out = Vec::new();
        for code in 0..width.pow(dim as u32) {
            let mut c = code;
            let mut v = vec![0i32; dim];
            for slot in v.iter_mut().rev() {
                *slot = (c % width) as i32 - reach;
                c /= width;
            }
            let nonzero = v.iter().filter(|&&x| x != 0).count();
            let keep = match self {
                Stencil::Axis => nonzero == 1,
                Stencil::AxisDiagonal => nonzero >= 1,
                Stencil::Extended => {
                    nonzero >= 1 && v.iter().fold(0, |g, &x| gcd(g, x.unsigned_abs())) == 1
                }
            };
            if keep {
                out.push(v);
            }
        }
        out
    }

    /// Worst ratio of shortest stencil-path length to Euclidean length over
    /// all directions.
    ///
    /// For a direction `d` the cheapest stencil decomposition costs
    /// `max { w.d : w.v <= |v| for all moves v }`, so the worst ratio is the
    /// largest norm of a vertex of that polytope.
    pub fn anisotropy(self, dim: usize) -> f64 {
        let vs = self.vectors(dim);
        let norms: Vec<f64> = vs.iter().map(|v| norm(v)).collect();
        let mut best = 0.0f64;
        let mut pick: Vec<usize> = (0..dim).collect();
        loop {
            let a: Vec<Vec<f64>> = pick
                .iter()
                .map(|&i| vs[i].iter().map(|&x| x as f64).collect())
                .collect();
            let b: Vec<f64> = pick.iter().map(|&i| norms[i]).collect();
            if let Some(w) = solve(a, b) {
                let feasible = vs.iter().zip(&norms).all(|(v, &nv)| {
                    v.iter().zip(&w).map(|(&x, y)| x as f64 * y).sum::<f64>() <= nv + 1e-12
                });
                if feasible {
                    best = best.max(w.iter().map(|x| x * x).sum::<f64>().sqrt());
                }
            }
            if !next_combination(&mut pick, vs.len()) {
                break;
            }
        }
        best
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn norm(v: &[i32]) -> f64 {
    v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt()
}

fn next_combination(pick: &mut [usize], total: usize) -> bool {
    let k = pick.len();
    for i in (0..k).rev() {
        if pick[i] < total - k + i {
            pick[i] += 1;
            for j in i + 1..k {
                pick[j] = pick[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting; `None` for singular systems.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for c in col..n {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}
