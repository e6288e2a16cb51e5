//! Uniform-grid spatial index over point positions in any dimension.

use crate::geom::{BoxRegion, Position};

/// Cells are stored in CSR form: `items[start[c]..start[c + 1]]` are the
/// point indices whose clamped cell is `c`.
#[derive(Debug, Clone)]
pub struct GridIndex {
    lo: Vec<f64>,
    cell: f64,
    dims: Vec<usize>,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl GridIndex {
    /// Index with roughly `per_cell` points per cell on average.
    pub fn build(positions: &[Position], window: &BoxRegion, per_cell: f64) -> Self {
        let d = window.dim();
        let n = positions.len().max(1) as f64;
        let cells_target = (n / per_cell.max(1e-9)).clamp(1.0, 4.0 * n + 16.0);
        let per_axis = cells_target.powf(1.0 / d as f64).floor().max(1.0);
        let cell = window.side / per_axis;
        Self::with_cell(positions, window, cell)
    }

    pub fn with_cell(positions: &[Position], window: &BoxRegion, cell: f64) -> Self {
        let d = window.dim();
        let lo: Vec<f64> = (0..d).map(|i| window.lo(i)).collect();
        let per_axis = ((window.side / cell).ceil() as usize).max(1);
        let dims = vec![per_axis; d];
        let total: usize = dims.iter().product();
        let mut grid = GridIndex { lo, cell, dims, start: vec![0; total + 1], items: vec![0; positions.len()] };
        let cells: Vec<usize> = positions.iter().map(|p| grid.flat(&grid.cell_of(p.coords()))).collect();
        for &c in &cells {
            grid.start[c + 1] += 1;
        }
        for c in 0..total {
            grid.start[c + 1] += grid.start[c];
        }
        let mut fill = grid.start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid
    }

    pub fn cell_side(&self) -> f64 {
        self.cell
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn origin(&self) -> &[f64] {
        &self.lo
    }

    /// Cell coordinates of `p`, clamped into the grid.
    pub fn cell_of(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .enumerate()
            .map(|(i, &x)| (((x - self.lo[i]) / self.cell).floor() as i64).clamp(0, self.dims[i] as i64 - 1))
            .collect()
    }

    fn flat(&self, c: &[i64]) -> usize {
        c.iter().zip(&self.dims).fold(0usize, |acc, (&k, &m)| acc * m + k as usize)
    }

    pub fn items_in(&self, c: &[i64]) -> &[u32] {
        let f = self.flat(c);
        &self.items[self.start[f] as usize..self.start[f + 1] as usize]
    }

    /// Calls `f` on every point index in cells `lo..=hi` (clipped to the grid).
    pub fn for_each_in_cells<F: FnMut(usize)>(&self, lo: &[i64], hi: &[i64], mut f: F) {
        let d = self.dims.len();
        let a: Vec<i64> = (0..d).map(|i| lo[i].max(0)).collect();
        let b: Vec<i64> = (0..d).map(|i| hi[i].min(self.dims[i] as i64 - 1)).collect();
        if (0..d).any(|i| a[i] > b[i]) {
            return;
        }
        let mut c = a.clone();
        loop {
            for &it in self.items_in(&c) {
                f(it as usize);
            }
            let mut i = d;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                c[i] += 1;
                if c[i] <= b[i] {
                    break;
                }
                c[i] = a[i];
            }
        }
    }

    /// Candidate indices whose cell meets the closed box `[lo, hi]`.
    pub fn for_each_near_box<F: FnMut(usize)>(&self, lo: &[f64], hi: &[f64], f: F) {
        let a = self.cell_of(lo);
        let b = self.cell_of(hi);
        self.for_each_in_cells(&a, &b, f);
    }

    /// The `count` nearest points to `q` (excluding index `exclude`), sorted
    /// by increasing distance. Returns fewer when the index holds fewer.
    pub fn k_nearest(&self, pts: &[Position], q: &[f64], count: usize, exclude: Option<usize>) -> Vec<(f64, usize)> {
        let d = self.dims.len();
        let c = self.cell_of(q);
        let max_r = (0..d).map(|i| c[i].max(self.dims[i] as i64 - 1 - c[i])).max().unwrap_or(0);
        let mut found: Vec<(f64, usize)> = Vec::new();
        let qp = Position::from_slice_unchecked(q);
        let mut r = 0i64;
        loop {
            let lo: Vec<i64> = c.iter().map(|k| k - r).collect();
            let hi: Vec<i64> = c.iter().map(|k| k + r).collect();
            self.for_each_in_ring(&c, &lo, &hi, r, |i| {
                if Some(i) != exclude {
                    found.push((pts[i].dist(&qp), i));
                }
            });
            if r >= max_r {
                break;
            }
            if found.len() >= count && count > 0 {
                found.select_nth_unstable_by(count - 1, |a, b| a.0.total_cmp(&b.0));
                if found[count - 1].0 <= r as f64 * self.cell {
                    break;
                }
            }
            r += 1;
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        found.truncate(count);
        found
    }

    fn for_each_in_ring<F: FnMut(usize)>(&self, c: &[i64], lo: &[i64], hi: &[i64], r: i64, mut f: F) {
        if r == 0 {
            self.for_each_in_cells(lo, hi, f);
            return;
        }
        let d = self.dims.len();
        let a: Vec<i64> = (0..d).map(|i| lo[i].max(0)).collect();
        let b: Vec<i64> = (0..d).map(|i| hi[i].min(self.dims[i] as i64 - 1)).collect();
        if (0..d).any(|i| a[i] > b[i]) {
            return;
        }
        let mut cur = a.clone();
        loop {
            if (0..d).any(|i| (cur[i] - c[i]).abs() == r) {
                for &it in self.items_in(&cur) {
                    f(it as usize);
                }
            }
            let mut i = d;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] <= b[i] {
                    break;
                }
                cur[i] = a[i];
            }
        }
    }
}
