//! Uniform bucket grid for bounding-box queries during mesh construction and audit.

use super::point::{BBox, Point};

pub(crate) struct BucketGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    start: Vec<usize>,
    items: Vec<u32>,
}

impl BucketGrid {
    /// Builds a grid over `domain` with roughly one bucket per item.
    pub fn new(domain: BBox, boxes: &[BBox]) -> Self {
        let w = (domain.max.x - domain.min.x).max(0.0);
        let ht = (domain.max.y - domain.min.y).max(0.0);
        let n = boxes.len().max(1) as f64;
        let mut cell = ((w * ht) / n).sqrt();
        if !(cell.is_finite() && cell > 0.0) {
            cell = w.max(ht).max(f64::MIN_POSITIVE);
        }
        // Cap the bucket count so that pathological inputs stay linear in memory.
        let cap = (4.0 * n).max(16.0);
        let mut nx = ((w / cell).ceil() as usize).max(1);
        let mut ny = ((ht / cell).ceil() as usize).max(1);
        while (nx as f64) * (ny as f64) > cap {
            cell *= 2.0;
            nx = ((w / cell).ceil() as usize).max(1);
            ny = ((ht / cell).ceil() as usize).max(1);
        }
        let mut grid = BucketGrid {
            origin: domain.min,
            cell,
            nx,
            ny,
            start: vec![0; nx * ny + 1],
            items: Vec::new(),
        };
        for b in boxes {
            let (i0, i1, j0, j1) = grid.range(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.start[j * nx + i + 1] += 1;
                }
            }
        }
        for k in 0..nx * ny {
            grid.start[k + 1] += grid.start[k];
        }
        let mut fill = grid.start.clone();
        grid.items = vec![0; grid.start[nx * ny]];
        for (id, b) in boxes.iter().enumerate() {
            let (i0, i1, j0, j1) = grid.range(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let k = j * nx + i;
                    grid.items[fill[k]] = id as u32;
                    fill[k] += 1;
                }
            }
        }
        grid
    }

    fn index(&self, v: f64, o: f64, n: usize) -> usize {
        let t = ((v - o) / self.cell).floor();
        if t.is_nan() || t < 0.0 {
            0
        } else {
            (t as usize).min(n - 1)
        }
    }

    fn range(&self, b: &BBox) -> (usize, usize, usize, usize) {
        (
            self.index(b.min.x, self.origin.x, self.nx),
            self.index(b.max.x, self.origin.x, self.nx),
            self.index(b.min.y, self.origin.y, self.ny),
            self.index(b.max.y, self.origin.y, self.ny),
        )
    }

    /// Calls `f` with every item whose bucket overlaps `query`; an item may be
    /// reported more than once, callers deduplicate when it matters.
    pub fn visit(&self, query: &BBox, mut f: impl FnMut(usize)) {
        let (i0, i1, j0, j1) = self.range(query);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let k = j * self.nx + i;
                for &id in &self.items[self.start[k]..self.start[k + 1]] {
                    f(id as usize);
                }
            }
        }
    }

    /// Sorted, deduplicated candidates for `query`.
    pub fn candidates(&self, query: &BBox, out: &mut Vec<usize>) {
        out.clear();
        self.visit(query, |id| out.push(id));
        out.sort_unstable();
        out.dedup();
    }
}
