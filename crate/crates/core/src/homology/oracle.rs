//! From-scratch Betti numbers of a graph's flag complex: enumerate every
//! vertex triple, build dense boundary matrices and take their ranks over
//! GF(2). Shares nothing with the incremental engine; used to check it.

use crate::error::{Error, Result};

pub const BRUTE_FORCE_VERTEX_CAP: usize = 12;

/// Dense GF(2) matrix with rows packed into 64-bit words.
struct BitMatrix {
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows: vec![vec![0; cols.div_ceil(64).max(1)]; rows],
        }
    }

    fn set(&mut self, r: usize, c: usize) {
        self.rows[r][c / 64] ^= 1 << (c % 64);
    }

    /// Gaussian elimination.
    fn rank(mut self) -> usize {
        let width = self.rows.first().map_or(0, |r| r.len() * 64);
        let mut rank = 0;
        for col in 0..width {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..self.rows.len()).find(|&r| self.rows[r][w] & bit != 0) else {
                continue;
            };
            self.rows.swap(rank, pivot);
            let pivot_row = self.rows[rank].clone();
            for r in 0..self.rows.len() {
                if r != rank && self.rows[r][w] & bit != 0 {
                    for (x, y) in self.rows[r].iter_mut().zip(&pivot_row) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

pub fn brute_force_betti(edges: &[(usize, usize)], vertex_count: usize, k: usize) -> Result<usize> {
    if k > 1 {
        return Err(Error::UnsupportedDegree(k));
    }
    if vertex_count > BRUTE_FORCE_VERTEX_CAP {
        return Err(Error::SizeCapExceeded {
            cap: BRUTE_FORCE_VERTEX_CAP,
            got: vertex_count,
        });
    }
    let n = vertex_count;
    let mut adjacent = vec![vec![false; n]; n];
    for &(a, b) in edges {
        if a >= n || b >= n || a == b {
            return Err(Error::invalid(format!("edge ({a}, {b}) invalid for {n} vertices")));
        }
        adjacent[a][b] = true;
        adjacent[b][a] = true;
    }

    let mut edge_list = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if adjacent[a][b] {
                edge_list.push((a, b));
            }
        }
    }
    let edge_index = |a: usize, b: usize| edge_list.iter().position(|&e| e == (a.min(b), a.max(b))).unwrap();

    let mut triangles = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if adjacent[a][b] && adjacent[a][c] && adjacent[b][c] {
                    triangles.push((a, b, c));
                }
            }
        }
    }

    let mut d1 = BitMatrix::zeros(n, edge_list.len());
    for (j, &(a, b)) in edge_list.iter().enumerate() {
        d1.set(a, j);
        d1.set(b, j);
    }
    let rank1 = d1.rank();
    let betti0 = n - rank1;
    if k == 0 {
        return Ok(betti0);
    }

    let mut d2 = BitMatrix::zeros(edge_list.len(), triangles.len());
    for (j, &(a, b, c)) in triangles.iter().enumerate() {
        d2.set(edge_index(a, b), j);
        d2.set(edge_index(a, c), j);
        d2.set(edge_index(b, c), j);
    }
    let rank2 = d2.rank();
    Ok(edge_list.len() - rank1 - rank2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clique(vs: &[usize]) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, &a) in vs.iter().enumerate() {
            for &b in &vs[i + 1..] {
                out.push((a, b));
            }
        }
        out
    }

    #[test]
    fn four_cycle() {
        let c4 = [(0, 1), (1, 3), (3, 2), (2, 0)];
        assert_eq!(brute_force_betti(&c4, 4, 1).unwrap(), 1);
        assert_eq!(brute_force_betti(&c4, 4, 0).unwrap(), 1);
    }

    #[test]
    fn two_filled_triangles() {
        let mut e = clique(&[0, 1, 2]);
        e.extend(clique(&[3, 4, 5]));
        assert_eq!(brute_force_betti(&e, 6, 0).unwrap(), 2);
        assert_eq!(brute_force_betti(&e, 6, 1).unwrap(), 0);
    }

    #[test]
    fn complete_k5() {
        assert_eq!(brute_force_betti(&clique(&[0, 1, 2, 3, 4]), 5, 1).unwrap(), 0);
    }

    #[test]
    fn octahedron_skeleton_has_no_one_cycles() {
        // K_{2,2,2}: flag complex is the octahedron (a 2-sphere), β₁ = 0
        let e: Vec<_> = clique(&[0, 1, 2, 3, 4, 5])
            .into_iter()
            .filter(|&(a, b)| !matches!((a, b), (0, 1) | (2, 3) | (4, 5)))
            .collect();
        assert_eq!(brute_force_betti(&e, 6, 1).unwrap(), 0);
    }

    #[test]
    fn limits() {
        assert!(matches!(brute_force_betti(&[], 13, 1), Err(Error::SizeCapExceeded { .. })));
        assert!(matches!(brute_force_betti(&[], 3, 2), Err(Error::UnsupportedDegree(2))));
        assert!(brute_force_betti(&[(0, 0)], 3, 1).is_err());
        assert_eq!(brute_force_betti(&[], 5, 0).unwrap(), 5);
    }
}
