//! Uniform-grid spatial hashing for proximity queries in the arena.

use crate::vec2::Vec2;

/// Dense bucket grid over `[0, width] x [0, height]` with square cells.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialGrid {
    /// `cell` must be positive and finite.
    pub fn new(width: f64, height: f64, cell: f64) -> Self {
        debug_assert!(cell > 0.0 && cell.is_finite());
        let cols = ((width / cell).ceil() as usize).max(1);
        let rows = ((height / cell).ceil() as usize).max(1);
        Self {
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let cx = ((p.x / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let cy = ((p.y / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        (cx, cy)
    }

    pub fn rebuild(&mut self, positions: &[Vec2]) {
        for b in &mut self.buckets {
            b.clear();
        }
        for (id, &p) in positions.iter().enumerate() {
            let (cx, cy) = self.cell_of(p);
            self.buckets[cy * self.cols + cx].push(id);
        }
    }

    /// All pairs `(i, j)`, `i < j`, with distance strictly below `radius`,
    /// sorted ascending. `radius` must not exceed the cell size.
    pub fn pairs_within(&self, positions: &[Vec2], radius: f64) -> Vec<(usize, usize)> {
        debug_assert!(radius <= self.cell);
        let r2 = radius * radius;
        let mut pairs = Vec::new();
        for (i, &p) in positions.iter().enumerate() {
            let (cx, cy) = self.cell_of(p);
            for ny in cy.saturating_sub(1)..=(cy + 1).min(self.rows - 1) {
                for nx in cx.saturating_sub(1)..=(cx + 1).min(self.cols - 1) {
                    for &j in &self.buckets[ny * self.cols + nx] {
                        if j > i && (positions[j] - p).norm_squared() < r2 {
                            pairs.push((i, j));
                        }
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs
    }
}

/// Pairs of agents closer than `radius` (strict inequality).
pub fn contacts_within(positions: &[Vec2], radius: f64, width: f64, height: f64) -> Vec<(usize, usize)> {
    if positions.len() < 2 || radius.is_nan() || radius <= 0.0 {
        return Vec::new();
    }
    let mut grid = SpatialGrid::new(width, height, radius);
    grid.rebuild(positions);
    grid.pairs_within(positions, radius)
}
