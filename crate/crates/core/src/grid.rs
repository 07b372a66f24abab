//! Uniform periodic grids in one or two dimensions and fields sampled on them.
//!
//! Node `i` on an axis of period `L` with `N` nodes sits at `-L/2 + i L/N`,
//! so every grid is centred on the origin. Storage is row-major with the
//! first axis slowest.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("axis {axis}: need at least 8 nodes, got {count}")]
    TooFewNodes { axis: usize, count: usize },
    #[error("axis {axis}: extent must be positive and finite, got {extent}")]
    Extent { axis: usize, extent: f64 },
    #[error("{0} values supplied for a grid of {1} nodes")]
    Length(usize, usize),
    #[error("coarsening ratio {ratio} does not divide {count} nodes on axis {axis} (ratio must be odd)")]
    Coarsen { axis: usize, count: usize, ratio: usize },
    #[error("point has {0} coordinates, grid has dimension {1}")]
    PointDim(usize, usize),
}

pub const MIN_NODES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGrid {
    extents: Vec<f64>,
    counts: Vec<usize>,
}

impl PeriodicGrid {
    pub fn new(extents: &[f64], counts: &[usize]) -> Result<Self, GridError> {
        let dim = extents.len();
        if !(1..=2).contains(&dim) || counts.len() != dim {
            return Err(GridError::Dimension(dim.max(counts.len())));
        }
        for axis in 0..dim {
            if !(extents[axis] > 0.0 && extents[axis].is_finite()) {
                return Err(GridError::Extent {
                    axis,
                    extent: extents[axis],
                });
            }
            if counts[axis] < MIN_NODES {
                return Err(GridError::TooFewNodes {
                    axis,
                    count: counts[axis],
                });
            }
        }
        Ok(Self {
            extents: extents.to_vec(),
            counts: counts.to_vec(),
        })
    }

    pub fn line(extent: f64, count: usize) -> Result<Self, GridError> {
        Self::new(&[extent], &[count])
    }

    pub fn plane(extents: [f64; 2], counts: [usize; 2]) -> Result<Self, GridError> {
        Self::new(&extents, &counts)
    }

    /// Unit-period square with `count` nodes per side.
    pub fn unit_square(count: usize) -> Result<Self, GridError> {
        Self::plane([1.0, 1.0], [count, count])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extents[axis] / self.counts[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|a| self.spacing(a)).collect()
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|a| self.spacing(a))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area (or length) of one node's cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        -0.5 * self.extents[axis] + i as f64 * self.spacing(axis)
    }

    /// Physical coordinates of the node with flat index `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        match self.dim() {
            1 => [self.coord(0, idx), 0.0],
            _ => {
                let n1 = self.counts[1];
                [self.coord(0, idx / n1), self.coord(1, idx % n1)]
            }
        }
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        if self.dim() == 1 {
            i
        } else {
            i * self.counts[1] + j
        }
    }

    /// Periodic minimum-image difference `a - b` along `axis`.
    pub fn wrap_delta(&self, axis: usize, d: f64) -> f64 {
        let l = self.extents[axis];
        d - l * (d / l).round()
    }

    /// Index of the nearest node along `axis` to coordinate `x`, wrapped.
    pub fn nearest_index(&self, axis: usize, x: f64) -> usize {
        let n = self.counts[axis] as i64;
        let k = ((x + 0.5 * self.extents[axis]) / self.spacing(axis)).round() as i64;
        k.rem_euclid(n) as usize
    }

    pub fn nearest_node(&self, point: &[f64]) -> Result<usize, GridError> {
        if point.len() != self.dim() {
            return Err(GridError::PointDim(point.len(), self.dim()));
        }
        let i = self.nearest_index(0, point[0]);
        let j = if self.dim() == 2 {
            self.nearest_index(1, point[1])
        } else {
            0
        };
        Ok(self.flat(i, j))
    }

    /// Grid with every axis coarsened by the odd factor `ratio`. Coarse node
    /// `k` coincides with fine node `k * ratio`.
    pub fn coarsen(&self, ratio: usize) -> Result<Self, GridError> {
        let mut counts = Vec::with_capacity(self.dim());
        for axis in 0..self.dim() {
            let c = self.counts[axis];
            if ratio == 0 || ratio % 2 == 0 || c % ratio != 0 {
                return Err(GridError::Coarsen {
                    axis,
                    count: c,
                    ratio,
                });
            }
            counts.push(c / ratio);
        }
        Self::new(&self.extents, &counts)
    }
}

/// Real values on the nodes of a [`PeriodicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PeriodicGrid,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length(values.len(), grid.len()));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: &PeriodicGrid, c: f64) -> Self {
        Self {
            values: vec![c; grid.len()],
            grid: grid.clone(),
        }
    }

    /// Samples `f` at every node. For 1-D grids the second coordinate is 0.
    pub fn from_fn(grid: &PeriodicGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let [x, y] = grid.node(idx);
                f(x, y)
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Arithmetic mean by compensated summation in node order.
    pub fn mean(&self) -> f64 {
        neumaier_sum(self.values.iter().copied()) / self.values.len() as f64
    }

    /// Index and value of the largest sample.
    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc })
    }

    /// Value at the node nearest to `point`.
    pub fn at(&self, point: &[f64]) -> Result<f64, GridError> {
        Ok(self.values[self.grid.nearest_node(point)?])
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Block average onto the grid coarsened by `ratio`; each coarse node is the
    /// mean over the centred `ratio^dim` block of fine nodes. Preserves the mean.
    pub fn restrict(&self, ratio: usize) -> Result<Self, GridError> {
        let coarse = self.grid.coarsen(ratio)?;
        let half = (ratio / 2) as i64;
        let weight = 1.0 / (ratio.pow(self.grid.dim() as u32) as f64);
        let fc = self.grid.counts();
        let cc = coarse.counts().to_vec();
        let mut values = Vec::with_capacity(coarse.len());
        match self.grid.dim() {
            1 => {
                let n = fc[0] as i64;
                for k in 0..cc[0] {
                    let centre = (k * ratio) as i64;
                    let s = neumaier_sum(
                        (-half..=half).map(|d| self.values[(centre + d).rem_euclid(n) as usize]),
                    );
                    values.push(s * weight);
                }
            }
            _ => {
                let (n0, n1) = (fc[0] as i64, fc[1] as i64);
                for k0 in 0..cc[0] {
                    for k1 in 0..cc[1] {
                        let (c0, c1) = ((k0 * ratio) as i64, (k1 * ratio) as i64);
                        let s = neumaier_sum((-half..=half).flat_map(|d0| {
                            let row = (c0 + d0).rem_euclid(n0) * n1;
                            (-half..=half)
                                .map(move |d1| self.values[(row + (c1 + d1).rem_euclid(n1)) as usize])
                        }));
                        values.push(s * weight);
                    }
                }
            }
        }
        Ok(Self {
            grid: coarse,
            values,
        })
    }
}

/// Compensated (Neumaier) summation in iteration order.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_bad_grids() {
        assert!(matches!(
            PeriodicGrid::line(1.0, 7),
            Err(GridError::TooFewNodes { .. })
        ));
        assert!(matches!(
            PeriodicGrid::line(0.0, 16),
            Err(GridError::Extent { .. })
        ));
        assert!(PeriodicGrid::new(&[1.0, 1.0, 1.0], &[8, 8, 8]).is_err());
    }

    #[test]
    fn node_layout_is_centred() {
        let g = PeriodicGrid::plane([2.0, 1.0], [16, 8]).unwrap();
        assert_eq!(g.node(0), [-1.0, -0.5]);
        assert_eq!(g.node(g.flat(8, 4)), [0.0, 0.0]);
        assert_eq!(g.nearest_node(&[0.0, 0.0]).unwrap(), g.flat(8, 4));
        // wraps
        assert_eq!(g.nearest_node(&[1.0, 0.5]).unwrap(), g.flat(0, 0));
        assert!((g.wrap_delta(0, 1.9) + 0.1).abs() < 1e-15);
    }

    #[test]
    fn restriction_keeps_mean_and_aligns_nodes() {
        let g = PeriodicGrid::plane([1.0, 1.0], [27, 45]).unwrap();
        let f = ScalarField::from_fn(&g, |x, y| (x * 3.0).sin() + y * y);
        let c = f.restrict(3).unwrap();
        assert_eq!(c.grid().counts(), &[9, 15]);
        assert!((c.mean() - f.mean()).abs() < 1e-14);
        let (a, b) = (c.grid().node(5), g.node(g.flat(0, 15)));
        assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        assert!(f.restrict(2).is_err());
        assert!(f.restrict(5).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let v = vec![1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(v), 2.0);
    }
}
