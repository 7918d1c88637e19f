//! Flag complexes of filtration steps, their Betti numbers over GF(2), Betti
//! curves and birth times.
//!
//! Only degrees 0 and 1 are supported. Curves and birth times run one
//! incremental pass over the filtration; birth times stop at the first rank
//! with a nonzero Betti number.

mod cubical;
mod engine;
mod oracle;

use std::collections::BTreeSet;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

pub use cubical::{cubical_betti_curve, cubical_birth_time};
pub use oracle::{brute_force_betti, BRUTE_FORCE_VERTEX_CAP};

use engine::{BoundaryReducer, IncrementalFlag};
use petgraph::unionfind::UnionFind;

use crate::error::{Error, Result};
use crate::filtration::{Edge, GraphFiltration};
use crate::scalar::Scalar;

pub(crate) fn check_degree(k: usize) -> Result<()> {
    if k <= 1 {
        Ok(())
    } else {
        Err(Error::UnsupportedDegree(k))
    }
}

/// Clique complex of a simple graph, truncated at `dimension_cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagComplex {
    pub vertex_count: usize,
    /// Sorted, deduplicated.
    pub edges: Vec<Edge>,
    /// Vertex triples `(a, b, c)` with `a < b < c`, sorted.
    pub triangles: Vec<(u32, u32, u32)>,
    pub dimension_cap: usize,
}

/// Builds the flag complex holding every clique of up to `k + 2` vertices.
pub fn flag_complex(edges: &[Edge], vertex_count: usize, k: usize) -> Result<FlagComplex> {
    check_degree(k)?;
    if let Some(e) = edges.iter().find(|e| e.hi as usize >= vertex_count || e.lo == e.hi) {
        return Err(Error::invalid(format!("edge {e:?} invalid for {vertex_count} vertices")));
    }
    let edges: Vec<Edge> = edges.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut triangles = Vec::new();
    if k == 1 {
        let mut neighbors = vec![FixedBitSet::with_capacity(vertex_count); vertex_count];
        for e in &edges {
            neighbors[e.lo as usize].insert(e.hi as usize);
            neighbors[e.hi as usize].insert(e.lo as usize);
        }
        for e in &edges {
            for w in neighbors[e.lo as usize].intersection(&neighbors[e.hi as usize]) {
                if w > e.hi as usize {
                    triangles.push((e.lo, e.hi, w as u32));
                }
            }
        }
        triangles.sort_unstable();
    }
    Ok(FlagComplex {
        vertex_count,
        edges,
        triangles,
        dimension_cap: k + 1,
    })
}

/// β_k of a flag complex. Every vertex counts, isolated or not.
pub fn betti_numbers(complex: &FlagComplex, k: usize) -> Result<usize> {
    check_degree(k)?;
    if complex.dimension_cap < k + 1 {
        return Err(Error::invalid(format!(
            "complex truncated at dimension {} cannot give β_{k}",
            complex.dimension_cap
        )));
    }
    let n = complex.vertex_count;
    let mut uf = UnionFind::<u32>::new(n);
    let mut components = n;
    for e in &complex.edges {
        if uf.union(e.lo, e.hi) {
            components -= 1;
        }
    }
    if k == 0 {
        return Ok(components);
    }
    let index = |a: u32, b: u32| {
        complex
            .edges
            .binary_search(&Edge::new(a as usize, b as usize))
            .expect("triangle edges belong to the complex") as u32
    };
    let mut reducer = BoundaryReducer::default();
    for &(a, b, c) in &complex.triangles {
        let mut column = vec![index(a, b), index(a, c), index(b, c)];
        column.sort_unstable();
        reducer.push(column);
    }
    Ok(complex.edges.len() + components - n - reducer.rank())
}

/// β_k at every rank of a filtration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiCurve {
    pub k: usize,
    /// `values[v - 1]` is β_k at rank `v`.
    pub values: Vec<usize>,
}

impl BettiCurve {
    /// 1-based rank of the first nonzero value.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.values.iter().position(|&b| b > 0).map(|i| i + 1)
    }

    /// 1-based rank of the first occurrence of the maximum, if nonzero.
    pub fn argmax(&self) -> Option<usize> {
        let max = curve_maximum(self);
        (max > 0).then(|| self.values.iter().position(|&b| b == max).unwrap() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BirthTime {
    /// `None` when β_k vanishes at every rank.
    pub rank: Option<usize>,
}

impl BirthTime {
    pub const UNDEFINED: BirthTime = BirthTime { rank: None };

    pub fn at(rank: usize) -> BirthTime {
        BirthTime { rank: Some(rank) }
    }

    pub fn is_defined(&self) -> bool {
        self.rank.is_some()
    }

    pub(crate) fn from_curve(curve: &BettiCurve) -> BirthTime {
        BirthTime {
            rank: curve.first_nonzero(),
        }
    }
}

/// Runs the filtration rank by rank, handing β_k to `visit` until it returns
/// false. Returns the number of ranks evaluated.
fn sweep<T: Scalar>(filtration: &GraphFiltration<T>, k: usize, mut visit: impl FnMut(usize, usize) -> bool) -> usize {
    let mut complex = IncrementalFlag::new(filtration.vertex_count(), k == 1);
    let events = filtration.events();
    let mut added = 0;
    for rank in 1..=filtration.total_ranks() {
        let target = filtration.prefix_len(rank);
        while added < target {
            let e = events[added].edge;
            complex.add_edge(e.lo as usize, e.hi as usize);
            added += 1;
        }
        if !visit(rank, complex.betti(k)) {
            return rank;
        }
    }
    filtration.total_ranks()
}

pub fn betti_curve<T: Scalar>(filtration: &GraphFiltration<T>, k: usize) -> Result<BettiCurve> {
    check_degree(k)?;
    let mut values = Vec::with_capacity(filtration.total_ranks());
    sweep(filtration, k, |_, b| {
        values.push(b);
        true
    });
    Ok(BettiCurve { k, values })
}

/// Birth time plus the number of ranks evaluated to find it.
pub fn birth_time_with_steps<T: Scalar>(filtration: &GraphFiltration<T>, k: usize) -> Result<(BirthTime, usize)> {
    check_degree(k)?;
    let mut birth = BirthTime::UNDEFINED;
    let steps = sweep(filtration, k, |rank, b| {
        if b > 0 {
            birth = BirthTime::at(rank);
            false
        } else {
            true
        }
    });
    Ok((birth, steps))
}

/// First rank with β_k ≠ 0, evaluating no rank past it.
pub fn birth_time<T: Scalar>(filtration: &GraphFiltration<T>, k: usize) -> Result<BirthTime> {
    birth_time_with_steps(filtration, k).map(|(b, _)| b)
}

pub fn curve_maximum(curve: &BettiCurve) -> usize {
    curve.values.iter().copied().max().unwrap_or(0)
}

pub fn curve_integral(curve: &BettiCurve) -> usize {
    curve.values.iter().sum()
}

/// Integer summary of a unit's filtration fed into the birth distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Characterization {
    /// Birth time, with early exit.
    #[default]
    BirthTime,
    /// First rank at which the Betti curve reaches its maximum.
    MaximumRank,
    /// Sum of the Betti curve.
    Integral,
}

impl Characterization {
    pub fn name(self) -> &'static str {
        match self {
            Characterization::BirthTime => "birth_time",
            Characterization::MaximumRank => "maximum_rank",
            Characterization::Integral => "integral",
        }
    }
}

/// Summary value of a filtration; `None` when the curve is identically zero.
pub fn characterize<T: Scalar>(
    filtration: &GraphFiltration<T>,
    k: usize,
    characterization: Characterization,
) -> Result<Option<usize>> {
    Ok(match characterization {
        Characterization::BirthTime => birth_time(filtration, k)?.rank,
        Characterization::MaximumRank => betti_curve(filtration, k)?.argmax(),
        Characterization::Integral => {
            let total = curve_integral(&betti_curve(filtration, k)?);
            (total > 0).then_some(total)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationUnit;
    use crate::filtration::{build_adjacency, build_filtration};

    fn edges(pairs: &[(usize, usize)]) -> Vec<Edge> {
        pairs.iter().map(|&(a, b)| Edge::new(a, b)).collect()
    }

    fn filtration_of(rows: Vec<Vec<f64>>) -> GraphFiltration<f64> {
        build_filtration(&build_adjacency(&ActivationUnit::from_rows(rows).unwrap()))
    }

    #[test]
    fn flag_complex_examples() {
        let tri = flag_complex(&edges(&[(0, 1), (1, 2), (0, 2)]), 3, 1).unwrap();
        assert_eq!((tri.edges.len(), tri.triangles.len()), (3, 1));
        assert_eq!(betti_numbers(&tri, 1).unwrap(), 0);

        let square = flag_complex(&edges(&[(0, 1), (1, 3), (2, 3), (0, 2)]), 4, 1).unwrap();
        assert_eq!((square.edges.len(), square.triangles.len()), (4, 0));
        assert_eq!(betti_numbers(&square, 1).unwrap(), 1);

        let empty = flag_complex(&[], 5, 1).unwrap();
        assert!(empty.edges.is_empty() && empty.triangles.is_empty());
        assert_eq!(betti_numbers(&empty, 0).unwrap(), 5);
        assert_eq!(betti_numbers(&empty, 1).unwrap(), 0);
    }

    #[test]
    fn degree_and_cap_checks() {
        assert!(matches!(flag_complex(&[], 3, 2), Err(Error::UnsupportedDegree(2))));
        let c0 = flag_complex(&edges(&[(0, 1)]), 2, 0).unwrap();
        assert_eq!(c0.dimension_cap, 1);
        assert!(betti_numbers(&c0, 1).is_err());
        assert!(flag_complex(&edges(&[(0, 5)]), 3, 1).is_err());
    }

    #[test]
    fn curve_summaries() {
        let c = BettiCurve { k: 1, values: vec![0, 0, 0, 1] };
        assert_eq!((curve_maximum(&c), curve_integral(&c)), (1, 1));
        let c = BettiCurve { k: 1, values: vec![0, 1, 2, 1] };
        assert_eq!((curve_maximum(&c), curve_integral(&c)), (2, 4));
        assert_eq!(c.argmax(), Some(3));
        let c = BettiCurve { k: 1, values: vec![] };
        assert_eq!((curve_maximum(&c), curve_integral(&c)), (0, 0));
        assert_eq!(c.argmax(), None);
    }

    #[test]
    fn path_has_no_birth() {
        let f = filtration_of(vec![
            vec![0.0, 4.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0, 0.0],
            vec![0.0, 0.0, 0.0, 2.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(birth_time(&f, 1).unwrap(), BirthTime::UNDEFINED);
        assert_eq!(birth_time_with_steps(&f, 1).unwrap().1, 3);
    }

    #[test]
    fn zero_degree_births_at_first_rank() {
        let f = filtration_of(vec![vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert_eq!(birth_time(&f, 0).unwrap(), BirthTime::at(1));
        assert_eq!(betti_curve(&f, 0).unwrap().values, vec![1]);
        let empty = filtration_of(vec![vec![0.0; 3]; 3]);
        assert_eq!(birth_time(&empty, 0).unwrap(), BirthTime::UNDEFINED);
        assert!(betti_curve(&empty, 1).unwrap().values.is_empty());
    }

    #[test]
    fn tied_ranks_share_a_value() {
        // the closing edges of the square tie, so ranks 3 and 4 see the same graph
        let f = filtration_of(vec![
            vec![0.0, 9.0, 5.0, 0.0],
            vec![0.0, 0.0, 0.0, 8.0],
            vec![0.0, 0.0, 0.0, 5.0],
            vec![0.0, 0.0, 0.0, 0.0],
        ]);
        assert_eq!(betti_curve(&f, 1).unwrap().values, vec![0, 0, 1, 1]);
        assert_eq!(birth_time_with_steps(&f, 1).unwrap(), (BirthTime::at(3), 3));
    }

    #[test]
    fn characterizations_on_toy() {
        let f = filtration_of(vec![
            vec![0.0, 9.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 7.0],
            vec![6.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 8.0, 0.0],
        ]);
        assert_eq!(characterize(&f, 1, Characterization::BirthTime).unwrap(), Some(4));
        assert_eq!(characterize(&f, 1, Characterization::MaximumRank).unwrap(), Some(4));
        assert_eq!(characterize(&f, 1, Characterization::Integral).unwrap(), Some(1));
    }

    #[test]
    fn cubical_examples() {
        let single = ActivationUnit::from_rows(vec![vec![0.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(cubical_birth_time(&single, 1).unwrap(), BirthTime::UNDEFINED);
        let ring = ActivationUnit::from_rows(vec![
            vec![8.0, 7.0, 6.0],
            vec![1.0, 0.0, 5.0],
            vec![2.0, 3.0, 4.0],
        ])
        .unwrap();
        assert_eq!(cubical_birth_time(&ring, 1).unwrap(), BirthTime::at(8));
        assert_eq!(cubical_betti_curve(&ring, 1).unwrap().values, vec![0, 0, 0, 0, 0, 0, 0, 1]);
        let flat = ring.map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(cubical_birth_time(&flat, 1).unwrap(), BirthTime::at(1));
        // corner-touching pixels are connected through their shared vertex
        let diag = ActivationUnit::from_rows(vec![vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(cubical_betti_curve(&diag, 0).unwrap().values, vec![1, 1]);
        assert_eq!(cubical_betti_curve(&diag, 1).unwrap().values, vec![0, 0]);
        assert!(cubical_birth_time(&ActivationUnit::<f64>::zeros(3).unwrap(), 1).unwrap() == BirthTime::UNDEFINED);
        assert!(cubical_birth_time(&ring, 2).is_err());
    }
}
