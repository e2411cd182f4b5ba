use crate::grid_map::State;
use crate::scalar::Scalar;

/// Uniform bucket grid over tree vertices for exact nearest / radius queries.
///
/// Ties in distance resolve to the lowest vertex index.
#[derive(Debug, Clone)]
pub struct GridIndex<T> {
    cell: T,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl<T: Scalar> GridIndex<T> {
    pub fn new(width: usize, height: usize, cell: T) -> Self {
        let cols = ((T::from_usize_lossy(width) / cell).ceil().as_f64() as usize).max(1);
        let rows = ((T::from_usize_lossy(height) / cell).ceil().as_f64() as usize).max(1);
        Self {
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn bucket_of(&self, s: &State<T>) -> (usize, usize) {
        let c = (s.x / self.cell).floor().as_f64().max(0.0) as usize;
        let r = (s.y / self.cell).floor().as_f64().max(0.0) as usize;
        (c.min(self.cols - 1), r.min(self.rows - 1))
    }

    pub fn insert(&mut self, id: usize, s: &State<T>) {
        let (c, r) = self.bucket_of(s);
        self.buckets[r * self.cols + c].push(id);
    }

    /// Nearest of `points` (indexed by id) to `q`; `None` when the index is empty.
    pub fn nearest(&self, q: &State<T>, points: &[State<T>]) -> Option<usize> {
        let (qc, qr) = self.bucket_of(q);
        let max_ring = self.cols.max(self.rows);
        let mut best: Option<(T, usize)> = None;
        for ring in 0..=max_ring {
            self.for_ring(qc, qr, ring, |id| {
                let d = points[id].dist_sq(q);
                let better = match best {
                    None => true,
                    Some((bd, bid)) => d < bd || (d == bd && id < bid),
                };
                if better {
                    best = Some((d, id));
                }
            });
            if let Some((bd, _)) = best {
                // Anything in ring + 1 or beyond is at least `ring * cell` away.
                let reach = T::from_usize_lossy(ring) * self.cell;
                if bd < reach * reach {
                    break;
                }
            }
        }
        best.map(|(_, id)| id)
    }

    /// Ids within `radius` of `q` (inclusive), ascending.
    pub fn within(&self, q: &State<T>, radius: T, points: &[State<T>]) -> Vec<usize> {
        let r2 = radius * radius;
        let lo = State::new(q.x - radius, q.y - radius);
        let hi = State::new(q.x + radius, q.y + radius);
        let (c0, r0) = self.bucket_of(&lo);
        let (c1, r1) = self.bucket_of(&hi);
        let mut out = Vec::new();
        for r in r0..=r1 {
            for c in c0..=c1 {
                out.extend(
                    self.buckets[r * self.cols + c]
                        .iter()
                        .copied()
                        .filter(|&id| points[id].dist_sq(q) <= r2),
                );
            }
        }
        out.sort_unstable();
        out
    }

    fn for_ring(&self, qc: usize, qr: usize, ring: usize, mut f: impl FnMut(usize)) {
        let (qc, qr, ring) = (qc as i64, qr as i64, ring as i64);
        let (cols, rows) = (self.cols as i64, self.rows as i64);
        let mut visit = |c: i64, r: i64| {
            if c >= 0 && r >= 0 && c < cols && r < rows {
                for &id in &self.buckets[(r * cols + c) as usize] {
                    f(id);
                }
            }
        };
        if ring == 0 {
            visit(qc, qr);
            return;
        }
        for c in qc - ring..=qc + ring {
            visit(c, qr - ring);
            visit(c, qr + ring);
        }
        for r in qr - ring + 1..qr + ring {
            visit(qc - ring, r);
            visit(qc + ring, r);
        }
    }
}
