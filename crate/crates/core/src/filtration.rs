//! Weighted graph of a unit and its descending-threshold edge filtration.
//!
//! Vertices are the unit's row/column indices `0..m`. Entry `(i, j)` weighs
//! the edge `{i, j}`. Ranks enumerate the strictly positive off-diagonal
//! entries from largest to smallest (ties in row-major order), and the graph
//! at rank `v` holds every edge with an entry `>= a(v)`, the `v`-th largest
//! value. Symmetrization makes `{i, j}` enter at the rank of the larger of
//! `A[i][j]` and `A[j][i]`.

use crate::activation::ActivationUnit;
use crate::scalar::Scalar;

/// Edge weights of a unit; a plain view of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency<T> {
    side: usize,
    entries: Vec<T>,
}

impl<T: Scalar> WeightedAdjacency<T> {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Row-major weights.
    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn weight(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.side + j]
    }
}

pub fn build_adjacency<T: Scalar>(unit: &ActivationUnit<T>) -> WeightedAdjacency<T> {
    WeightedAdjacency {
        side: unit.side(),
        entries: unit.values().to_vec(),
    }
}

/// Undirected simple edge, stored with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub lo: u32,
    pub hi: u32,
}

impl Edge {
    /// # Panics
    /// When `a == b`.
    pub fn new(a: usize, b: usize) -> Edge {
        assert_ne!(a, b, "self-loop");
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Edge {
            lo: lo as u32,
            hi: hi as u32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEvent<T> {
    /// 1-based rank at which the edge first enters.
    pub rank: usize,
    pub value: T,
    pub edge: Edge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphFiltration<T> {
    vertex_count: usize,
    events: Vec<EdgeEvent<T>>,
    /// `thresholds[v - 1]` = a(v).
    thresholds: Vec<T>,
    /// `prefix_len[v - 1]` = number of events in the graph at rank `v`.
    prefix_len: Vec<usize>,
}

impl<T: Scalar> GraphFiltration<T> {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// First appearances of edges, rank ascending.
    pub fn events(&self) -> &[EdgeEvent<T>] {
        &self.events
    }

    /// Number of strictly positive off-diagonal entries.
    pub fn total_ranks(&self) -> usize {
        self.prefix_len.len()
    }

    /// a(v) for 1-based `rank`.
    pub fn threshold(&self, rank: usize) -> &T {
        &self.thresholds[rank - 1]
    }

    /// Number of events in the graph at `rank`; 0 for rank 0.
    pub fn prefix_len(&self, rank: usize) -> usize {
        match rank {
            0 => 0,
            v => self.prefix_len[v - 1],
        }
    }

    /// Edge events of the graph at `rank`.
    pub fn prefix(&self, rank: usize) -> &[EdgeEvent<T>] {
        &self.events[..self.prefix_len(rank)]
    }

    pub fn edges_at(&self, rank: usize) -> Vec<Edge> {
        self.prefix(rank).iter().map(|e| e.edge).collect()
    }
}

pub fn build_filtration<T: Scalar>(adj: &WeightedAdjacency<T>) -> GraphFiltration<T> {
    let m = adj.side();
    let mut cells: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| i != j && *adj.weight(i, j) > T::zero())
        .collect();
    // stable: ties keep row-major order
    cells.sort_by(|a, b| {
        adj.weight(b.0, b.1)
            .partial_cmp(adj.weight(a.0, a.1))
            .expect("unit values are finite")
    });

    let mut seen = vec![false; m * m];
    let mut events = Vec::new();
    let mut thresholds = Vec::with_capacity(cells.len());
    for (idx, &(i, j)) in cells.iter().enumerate() {
        let edge = Edge::new(i, j);
        let slot = edge.lo as usize * m + edge.hi as usize;
        let value = adj.weight(i, j).clone();
        if !seen[slot] {
            seen[slot] = true;
            events.push(EdgeEvent {
                rank: idx + 1,
                value: value.clone(),
                edge,
            });
        }
        thresholds.push(value);
    }

    // The graph at rank v holds every event whose value reaches a(v), which
    // runs past rank v when later ranks tie with it.
    let mut prefix_len = vec![0; thresholds.len()];
    let mut count = events.len();
    let mut v = thresholds.len();
    while v > 0 {
        let mut start = v - 1;
        while start > 0 && thresholds[start - 1] == thresholds[v - 1] {
            start -= 1;
        }
        while count > 0 && events[count - 1].rank > v {
            count -= 1;
        }
        for slot in &mut prefix_len[start..v] {
            *slot = count;
        }
        v = start;
    }

    GraphFiltration {
        vertex_count: m,
        events,
        thresholds,
        prefix_len,
    }
}
