//! Maximum spanning forest over predicted edge probabilities and the binary
//! partition tree recording its merges.
//!
//! Edges are indexed over both channels: the x edges first, `k = i * (W - 1) + j`
//! for `j < W - 1`, then the y edges, `k = H * (W - 1) + i * W + j` for `i < H - 1`,
//! giving `2HW - H - W` edges in total. Node ids are row-major, `i * W + j`.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::Result;
use crate::region_graph::{EdgeField, RegionMask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// Rightward edge, stored in the x channel.
    X,
    /// Downward edge, stored in the y channel.
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeRecord<T> {
    pub index: usize,
    /// Node ids; `endpoints.0` is the upper-left node that owns the edge.
    pub endpoints: (usize, usize),
    pub direction: Direction,
    pub probability: T,
    /// Both endpoints are promising in the ground truth.
    pub promising: bool,
}

impl<T> EdgeRecord<T> {
    /// Flat position of this edge in its channel of an [`EdgeField`].
    pub fn channel_offset(&self) -> usize {
        self.endpoints.0
    }
}

/// Either a grid node or an earlier merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbptChild {
    Leaf(usize),
    Merge(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merge<T> {
    pub edge: EdgeRecord<T>,
    /// Promising nodes in the component of `edge.endpoints.0` just before the merge.
    pub left_promising_count: u64,
    /// Promising nodes in the component of `edge.endpoints.1` just before the merge.
    pub right_promising_count: u64,
    pub left: CbptChild,
    pub right: CbptChild,
}

/// Merge tree of a maximum spanning forest. Merges appear in acceptance order, so
/// probabilities are non-increasing along `merges`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cbpt<T> {
    width: usize,
    height: usize,
    merges: Vec<Merge<T>>,
    in_mst: Vec<bool>,
}

impl<T: Scalar> Cbpt<T> {
    pub fn merges(&self) -> &[Merge<T>] {
        &self.merges
    }

    pub fn in_mst(&self, edge_index: usize) -> bool {
        self.in_mst[edge_index]
    }

    pub fn edge_count(&self) -> usize {
        self.in_mst.len()
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Accepted spanning-forest edges in merge order.
    pub fn mst_edges(&self) -> impl Iterator<Item = &EdgeRecord<T>> {
        self.merges.iter().map(|m| &m.edge)
    }

    /// Merges whose subtree roots are not consumed by a later merge.
    pub fn roots(&self) -> Vec<usize> {
        let mut consumed = vec![false; self.merges.len()];
        for m in &self.merges {
            for child in [m.left, m.right] {
                if let CbptChild::Merge(k) = child {
                    consumed[k] = true;
                }
            }
        }
        (0..self.merges.len()).filter(|&k| !consumed[k]).collect()
    }
}

/// Enumerates every grid edge with its probability from `field` and its label from `truth`.
pub fn edge_records<T: Scalar>(field: &EdgeField<T>, truth: &RegionMask) -> Vec<EdgeRecord<T>> {
    let (w, h) = field.dims();
    let mut edges = Vec::with_capacity((2 * w * h).saturating_sub(w + h));
    for i in 0..h {
        for j in 0..w.saturating_sub(1) {
            let (a, b) = (i * w + j, i * w + j + 1);
            edges.push(EdgeRecord {
                index: edges.len(),
                endpoints: (a, b),
                direction: Direction::X,
                probability: field.px()[a],
                promising: truth.as_slice()[a] && truth.as_slice()[b],
            });
        }
    }
    for i in 0..h.saturating_sub(1) {
        for j in 0..w {
            let (a, b) = (i * w + j, (i + 1) * w + j);
            edges.push(EdgeRecord {
                index: edges.len(),
                endpoints: (a, b),
                direction: Direction::Y,
                probability: field.py()[a],
                promising: truth.as_slice()[a] && truth.as_slice()[b],
            });
        }
    }
    edges
}

/// Union-find with union by size and path compression; each root carries the
/// number of promising nodes in its set and the latest merge that formed it.
struct Components {
    parent: Vec<usize>,
    size: Vec<usize>,
    promising: Vec<u64>,
    node: Vec<CbptChild>,
}

impl Components {
    fn new(truth: &RegionMask) -> Self {
        let n = truth.as_slice().len();
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
            promising: truth.as_slice().iter().map(|&p| u64::from(p)).collect(),
            node: (0..n).map(CbptChild::Leaf).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        let mut root = v;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[v] != root {
            let next = self.parent[v];
            self.parent[v] = root;
            v = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize, merge: usize) {
        let (big, small) = if self.size[a] >= self.size[b] {
            (a, b)
        } else {
            (b, a)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.promising[big] += self.promising[small];
        self.node[big] = CbptChild::Merge(merge);
    }
}

/// Kruskal in decreasing probability (ties by ascending edge index), recording the
/// promising-node count of both components at every merge.
pub fn build_cbpt<T: Scalar>(field: &EdgeField<T>, truth: &RegionMask) -> Result<Cbpt<T>> {
    truth.check_dims(field.dims())?;
    let edges = edge_records(field, truth);
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| {
        edges[b]
            .probability
            .partial_cmp(&edges[a].probability)
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut comps = Components::new(truth);
    let mut merges = Vec::new();
    let mut in_mst = vec![false; edges.len()];
    for k in order {
        let e = edges[k];
        let (ra, rb) = (comps.find(e.endpoints.0), comps.find(e.endpoints.1));
        if ra == rb {
            continue;
        }
        merges.push(Merge {
            edge: e,
            left_promising_count: comps.promising[ra],
            right_promising_count: comps.promising[rb],
            left: comps.node[ra],
            right: comps.node[rb],
        });
        comps.union(ra, rb, merges.len() - 1);
        in_mst[k] = true;
    }
    let (width, height) = field.dims();
    Ok(Cbpt {
        width,
        height,
        merges,
        in_mst,
    })
}

/// `w(e) = |V_T0| * |V_T1|` for every promising spanning-forest edge, keyed by edge index.
///
/// `w(e)` is the number of promising node pairs whose maximin (bottleneck) edge is `e`.
pub fn edge_weights<T: Scalar>(cbpt: &Cbpt<T>) -> BTreeMap<usize, u64> {
    cbpt.merges
        .iter()
        .filter(|m| m.edge.promising)
        .map(|m| {
            (
                m.edge.index,
                m.left_promising_count * m.right_promising_count,
            )
        })
        .collect()
}
