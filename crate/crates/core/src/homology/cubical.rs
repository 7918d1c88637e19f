//! Sublevel filtration of a unit as a 2D cubical complex.
//!
//! Pixel `(r, c)` is the closed unit square `[c, c+1] × [r, r+1]` together
//! with its four edges and four corners. Pixels enter in descending value
//! order over strictly positive entries, ties entering together. In the plane
//! β₂ = 0, so β₁ = β₀ − χ with χ = V − E + F.

use petgraph::unionfind::UnionFind;

use super::{check_degree, BettiCurve, BirthTime};
use crate::activation::ActivationUnit;
use crate::error::Result;
use crate::scalar::Scalar;

struct CubicalState {
    side: usize,
    vertex_on: Vec<bool>,
    h_edge_on: Vec<bool>,
    v_edge_on: Vec<bool>,
    corners: UnionFind<u32>,
    vertices: usize,
    edges: usize,
    faces: usize,
    components: usize,
}

impl CubicalState {
    fn new(side: usize) -> Self {
        let grid = side + 1;
        CubicalState {
            side,
            vertex_on: vec![false; grid * grid],
            h_edge_on: vec![false; grid * side],
            v_edge_on: vec![false; side * grid],
            corners: UnionFind::new(grid * grid),
            vertices: 0,
            edges: 0,
            faces: 0,
            components: 0,
        }
    }

    fn vertex(&self, r: usize, c: usize) -> usize {
        r * (self.side + 1) + c
    }

    fn add_vertex(&mut self, r: usize, c: usize) {
        let v = self.vertex(r, c);
        if !self.vertex_on[v] {
            self.vertex_on[v] = true;
            self.vertices += 1;
            self.components += 1;
        }
    }

    fn join(&mut self, a: usize, b: usize) {
        if self.corners.union(a as u32, b as u32) {
            self.components -= 1;
        }
    }

    fn add_pixel(&mut self, r: usize, c: usize) {
        for (dr, dc) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            self.add_vertex(r + dr, c + dc);
        }
        // horizontal edges along rows r and r + 1
        for row in [r, r + 1] {
            let e = row * self.side + c;
            if !self.h_edge_on[e] {
                self.h_edge_on[e] = true;
                self.edges += 1;
                self.join(self.vertex(row, c), self.vertex(row, c + 1));
            }
        }
        // vertical edges along columns c and c + 1
        for col in [c, c + 1] {
            let e = r * (self.side + 1) + col;
            if !self.v_edge_on[e] {
                self.v_edge_on[e] = true;
                self.edges += 1;
                self.join(self.vertex(r, col), self.vertex(r + 1, col));
            }
        }
        self.faces += 1;
    }

    fn betti(&self, k: usize) -> usize {
        match k {
            0 => self.components,
            _ => {
                let euler = self.vertices as isize - self.edges as isize + self.faces as isize;
                (self.components as isize - euler) as usize
            }
        }
    }
}

/// Positive pixels in descending order, each paired with the number of
/// pixels admitted at its rank (ties admit the whole run).
fn pixel_order<T: Scalar>(unit: &ActivationUnit<T>) -> (Vec<usize>, Vec<usize>) {
    let values = unit.values();
    let mut order: Vec<usize> = (0..values.len()).filter(|&i| values[i] > T::zero()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("unit values are finite"));
    let mut admitted = vec![0; order.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        admitted[start..end].fill(end);
        start = end;
    }
    (order, admitted)
}

fn run<T: Scalar>(unit: &ActivationUnit<T>, k: usize, stop_at_birth: bool) -> Result<BettiCurve> {
    check_degree(k)?;
    let m = unit.side();
    let (order, admitted) = pixel_order(unit);
    let mut state = CubicalState::new(m);
    let mut added = 0;
    let mut values = Vec::with_capacity(order.len());
    for &target in &admitted {
        while added < target {
            let idx = order[added];
            state.add_pixel(idx / m, idx % m);
            added += 1;
        }
        let b = state.betti(k);
        values.push(b);
        if stop_at_birth && b > 0 {
            break;
        }
    }
    Ok(BettiCurve { k, values })
}

/// Betti curve of the cubical sublevel filtration, one value per positive
/// pixel rank.
pub fn cubical_betti_curve<T: Scalar>(unit: &ActivationUnit<T>, k: usize) -> Result<BettiCurve> {
    run(unit, k, false)
}

pub fn cubical_birth_time<T: Scalar>(unit: &ActivationUnit<T>, k: usize) -> Result<BirthTime> {
    let partial = run(unit, k, true)?;
    Ok(BirthTime::from_curve(&partial))
}
