//! Scalar fields sampled on a uniform grid.

use crate::geometry::{Grid, NodeTag, Vec2};

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub tags: Vec<NodeTag>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<f64>, tags: Vec<NodeTag>) -> Self {
        assert_eq!(values.len(), grid.len(), "value count must match the grid");
        assert_eq!(tags.len(), grid.len(), "tag count must match the grid");
        GridField { grid, values, tags }
    }

    /// Samples `f` at every node, exterior nodes included.
    pub fn from_fn(grid: Grid, tags: Vec<NodeTag>, f: impl Fn(Vec2) -> f64) -> Self {
        let values = (0..grid.len()).map(|idx| f(grid.node_at(idx))).collect();
        GridField::new(grid, values, tags)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn tag(&self, i: usize, j: usize) -> NodeTag {
        self.tags[self.grid.index(i, j)]
    }

    /// True when all nodes with `|di|, |dj| <= reach` around `(i, j)` exist and are inside.
    pub fn patch_inside(&self, i: usize, j: usize, reach: usize) -> bool {
        if i < reach || j < reach || i + reach >= self.grid.nx || j + reach >= self.grid.ny {
            return false;
        }
        (j - reach..=j + reach).all(|jj| (i - reach..=i + reach).all(|ii| self.tag(ii, jj).inside()))
    }

    pub fn bilinear(&self, p: Vec2) -> Option<f64> {
        let (i, j, fx, fy) = self.grid.locate(p)?;
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Some((1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11))
    }

    /// Tensor-product cubic Lagrange interpolation on the 4x4 nodes around
    /// `p`. Returns `None` when the stencil leaves the grid or touches an
    /// exterior node.
    pub fn bicubic(&self, p: Vec2) -> Option<f64> {
        let (i, j, fx, fy) = self.grid.locate(p)?;
        if i < 1 || j < 1 || i + 2 >= self.grid.nx || j + 2 >= self.grid.ny {
            return None;
        }
        let wx = cubic_weights(fx);
        let wy = cubic_weights(fy);
        let mut acc = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            let jj = j + b - 1;
            let mut row = 0.0;
            for (a, wxa) in wx.iter().enumerate() {
                let ii = i + a - 1;
                if !self.tag(ii, jj).inside() {
                    return None;
                }
                row += wxa * self.at(ii, jj);
            }
            acc += wyb * row;
        }
        Some(acc)
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Lagrange weights for nodes at -1, 0, 1, 2 evaluated at `t ∈ [0, 1]`.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(f: impl Fn(Vec2) -> f64) -> GridField {
        let grid = Grid::new(Vec2::new(-1.0, -1.0), 0.1, 21, 21).unwrap();
        let tags = vec![NodeTag::Interior; grid.len()];
        GridField::from_fn(grid, tags, f)
    }

    #[test]
    fn bilinear_is_exact_on_bilinear_functions() {
        let u = field(|p| 1.0 + 2.0 * p.x - p.y + 0.5 * p.x * p.y);
        let q = Vec2::new(0.237, -0.611);
        assert!((u.bilinear(q).unwrap() - (1.0 + 2.0 * q.x - q.y + 0.5 * q.x * q.y)).abs() < 1e-14);
        assert!(u.bilinear(Vec2::new(1.5, 0.0)).is_none());
    }

    #[test]
    fn bicubic_is_exact_on_cubics() {
        let f = |p: Vec2| p.x.powi(3) - 2.0 * p.x * p.y * p.y + p.y.powi(2) - 0.3;
        let u = field(f);
        let q = Vec2::new(0.237, -0.611);
        assert!((u.bicubic(q).unwrap() - f(q)).abs() < 1e-13);
        assert!(u.bicubic(Vec2::new(-0.95, 0.0)).is_none());
    }
}
