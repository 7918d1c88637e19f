//! Incremental Betti numbers of a growing flag complex over GF(2).
//!
//! β₀ comes from a union-find over the vertices. β₁ = E − V + β₀ − rank ∂₂,
//! where rank ∂₂ is maintained by reducing each new triangle boundary against
//! the previously reduced ones (pivot = largest edge index).

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;

const ABSENT: u32 = u32::MAX;

/// Column reduction of triangle boundaries over GF(2).
#[derive(Debug, Default)]
pub(crate) struct BoundaryReducer {
    pivot_owner: Vec<u32>,
    columns: Vec<Vec<u32>>,
}

impl BoundaryReducer {
    /// Adds a boundary column (edge indices ascending). Returns true when it
    /// is independent of the columns seen so far.
    pub(crate) fn push(&mut self, mut column: Vec<u32>) -> bool {
        while let Some(&pivot) = column.last() {
            let owner = self.pivot_owner.get(pivot as usize).copied().unwrap_or(ABSENT);
            if owner == ABSENT {
                break;
            }
            column = symmetric_difference(&column, &self.columns[owner as usize]);
        }
        match column.last() {
            None => false,
            Some(&pivot) => {
                let pivot = pivot as usize;
                if self.pivot_owner.len() <= pivot {
                    self.pivot_owner.resize(pivot + 1, ABSENT);
                }
                self.pivot_owner[pivot] = self.columns.len() as u32;
                self.columns.push(column);
                true
            }
        }
    }

    pub(crate) fn rank(&self) -> usize {
        self.columns.len()
    }
}

fn symmetric_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Flag complex on a fixed vertex set, grown one edge at a time.
#[derive(Debug)]
pub(crate) struct IncrementalFlag {
    vertex_count: usize,
    neighbors: Vec<FixedBitSet>,
    edge_ids: Vec<u32>,
    edge_count: usize,
    components: UnionFind<u32>,
    component_count: usize,
    with_triangles: bool,
    triangle_count: usize,
    reducer: BoundaryReducer,
}

impl IncrementalFlag {
    /// `with_triangles = false` skips 2-simplices, enough for β₀.
    pub(crate) fn new(vertex_count: usize, with_triangles: bool) -> Self {
        IncrementalFlag {
            vertex_count,
            neighbors: vec![FixedBitSet::with_capacity(vertex_count); vertex_count],
            edge_ids: vec![ABSENT; vertex_count * vertex_count],
            edge_count: 0,
            components: UnionFind::new(vertex_count),
            component_count: vertex_count,
            with_triangles,
            triangle_count: 0,
            reducer: BoundaryReducer::default(),
        }
    }

    fn edge_id(&self, a: usize, b: usize) -> u32 {
        self.edge_ids[a * self.vertex_count + b]
    }

    /// Inserts `{a, b}` with every triangle it closes. Re-inserting an edge
    /// is a no-op.
    pub(crate) fn add_edge(&mut self, a: usize, b: usize) {
        debug_assert_ne!(a, b);
        if self.edge_id(a, b) != ABSENT {
            return;
        }
        let id = self.edge_count as u32;
        if self.with_triangles {
            let closing: Vec<usize> = self.neighbors[a].intersection(&self.neighbors[b]).collect();
            for w in closing {
                let mut column = vec![self.edge_id(a, w), self.edge_id(b, w)];
                column.sort_unstable();
                column.push(id);
                self.reducer.push(column);
                self.triangle_count += 1;
            }
        }
        let n = self.vertex_count;
        self.edge_ids[a * n + b] = id;
        self.edge_ids[b * n + a] = id;
        self.edge_count += 1;
        self.neighbors[a].insert(b);
        self.neighbors[b].insert(a);
        if self.components.union(a as u32, b as u32) {
            self.component_count -= 1;
        }
    }

    pub(crate) fn betti0(&self) -> usize {
        self.component_count
    }

    pub(crate) fn betti1(&self) -> usize {
        debug_assert!(self.with_triangles);
        // dim ker ∂₁ = E − (V − β₀)
        self.edge_count + self.component_count - self.vertex_count - self.reducer.rank()
    }

    pub(crate) fn betti(&self, k: usize) -> usize {
        match k {
            0 => self.betti0(),
            _ => self.betti1(),
        }
    }

    #[cfg(test)]
    pub(crate) fn triangle_count(&self) -> usize {
        self.triangle_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_difference_merges() {
        assert_eq!(symmetric_difference(&[1, 3, 5], &[3, 4, 5, 9]), vec![1, 4, 9]);
        assert!(symmetric_difference(&[2, 7], &[2, 7]).is_empty());
    }

    #[test]
    fn square_then_diagonal() {
        let mut f = IncrementalFlag::new(4, true);
        for (a, b) in [(0, 1), (1, 3), (3, 2)] {
            f.add_edge(a, b);
            assert_eq!(f.betti1(), 0);
        }
        f.add_edge(2, 0);
        assert_eq!((f.betti0(), f.betti1()), (1, 1));
        // a chord fills the square with two triangles
        f.add_edge(0, 3);
        assert_eq!(f.triangle_count(), 2);
        assert_eq!(f.betti1(), 0);
        f.add_edge(0, 3);
        assert_eq!(f.triangle_count(), 2);
    }

    #[test]
    fn complete_graph_on_four_vertices() {
        // K4's flag complex is the boundary of a tetrahedron: β₁ = 0 and the
        // fourth triangle is dependent (it closes a 2-sphere).
        let mut f = IncrementalFlag::new(4, true);
        for a in 0..4 {
            for b in a + 1..4 {
                f.add_edge(a, b);
            }
        }
        assert_eq!(f.triangle_count(), 4);
        assert_eq!(f.reducer.rank(), 3);
        assert_eq!(f.betti1(), 0);
    }
}
