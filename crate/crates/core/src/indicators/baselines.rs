//! Magnitude-based unit indicators used for comparison.

use crate::activation::ClassUnitStack;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean over samples of each unit's entrywise absolute sum.
pub fn l1_norm<T: Scalar>(stack: &ClassUnitStack<T>) -> T {
    let total = stack.units().iter().fold(T::zero(), |acc, u| {
        acc + u.values().iter().fold(T::zero(), |s, v| s + v.abs())
    });
    total / T::from_usize(stack.sample_count())
}

/// Fraction of exactly-zero activations over all samples and positions.
pub fn apoz<T: Scalar>(stack: &ClassUnitStack<T>) -> f64 {
    let zeros: usize = stack
        .units()
        .iter()
        .map(|u| u.values().iter().filter(|v| v.is_zero()).count())
        .sum();
    zeros as f64 / (stack.sample_count() * stack.side() * stack.side()) as f64
}

/// Mean activation over all samples and positions.
pub fn mean_activation<T: Scalar>(stack: &ClassUnitStack<T>) -> T {
    let cells = stack.side() * stack.side();
    l1_norm(stack) / T::from_usize(cells)
}

/// `(μ_max − μ_rest) / (μ_max + μ_rest)` over class-conditional means, where
/// μ_rest averages every class but the strongest. 0 when both terms vanish.
pub fn class_selectivity<T: Scalar>(class_means: &[T]) -> Result<T> {
    if class_means.len() < 2 {
        return Err(Error::invalid("class selectivity needs at least two classes"));
    }
    if let Some(m) = class_means.iter().find(|m| **m < T::zero() || !m.is_finite_value()) {
        return Err(Error::invalid(format!("class mean {m:?} must be finite and non-negative")));
    }
    let best = class_means
        .iter()
        .enumerate()
        .fold(0, |best, (i, m)| if *m > class_means[best] { i } else { best });
    let rest = class_means
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != best)
        .fold(T::zero(), |acc, (_, m)| acc + m.clone())
        / T::from_usize(class_means.len() - 1);
    let max = class_means[best].clone();
    let denom = max.clone() + rest.clone();
    if denom.is_zero() {
        return Ok(T::zero());
    }
    Ok((max - rest) / denom)
}

fn check_filters<T: Scalar>(filters: &[Vec<T>]) -> Result<()> {
    if filters.len() < 2 {
        return Err(Error::invalid("FPGM needs at least two filters"));
    }
    let dim = filters[0].len();
    if let Some(i) = filters.iter().position(|f| f.len() != dim) {
        return Err(Error::DimensionMismatch(format!(
            "filter {i} has {} weights, filter 0 has {dim}",
            filters[i].len()
        )));
    }
    Ok(())
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T::Length {
    let squared = a.iter().zip(b).fold(T::zero(), |acc, (x, y)| {
        let d = x.clone() - y.clone();
        acc + d.clone() * d
    });
    squared.sqrt_nonneg()
}

/// Summed Euclidean distance from filter `index` to every filter.
pub fn fpgm_score<T: Scalar>(filters: &[Vec<T>], index: usize) -> Result<T::Length> {
    check_filters(filters)?;
    let target = filters
        .get(index)
        .ok_or_else(|| Error::invalid(format!("filter index {index} out of range")))?;
    Ok(filters
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != index)
        .fold(T::Length::zero_value(), |acc, (_, f)| acc + distance(target, f)))
}

/// FPGM score of every filter.
pub fn fpgm_scores<T: Scalar>(filters: &[Vec<T>]) -> Result<Vec<T::Length>> {
    check_filters(filters)?;
    (0..filters.len()).map(|i| fpgm_score(filters, i)).collect()
}

fn check_nisp<T: Scalar>(weights: &[Vec<T>], next_scores: &[T]) -> Result<()> {
    if let Some(i) = weights.iter().position(|row| row.len() != next_scores.len()) {
        return Err(Error::DimensionMismatch(format!(
            "weight row {i} has {} entries for {} next-layer scores",
            weights[i].len(),
            next_scores.len()
        )));
    }
    if next_scores.iter().any(|s| *s < T::zero()) {
        return Err(Error::invalid("next-layer scores must be non-negative"));
    }
    Ok(())
}

/// `Σ_j |W[index][j]| · s[j]`.
pub fn nisp_score<T: Scalar>(weights: &[Vec<T>], next_scores: &[T], index: usize) -> Result<T> {
    check_nisp(weights, next_scores)?;
    let row = weights
        .get(index)
        .ok_or_else(|| Error::invalid(format!("unit index {index} out of range")))?;
    Ok(row
        .iter()
        .zip(next_scores)
        .fold(T::zero(), |acc, (w, s)| acc + w.abs() * s.clone()))
}

/// Propagates next-layer importance scores back through `|W|`; rows of
/// `weights` index this layer's units.
pub fn nisp_backprop<T: Scalar>(weights: &[Vec<T>], next_scores: &[T]) -> Result<Vec<T>> {
    check_nisp(weights, next_scores)?;
    (0..weights.len()).map(|i| nisp_score(weights, next_scores, i)).collect()
}

trait ZeroValue {
    fn zero_value() -> Self;
}

impl<L: num_traits::Zero> ZeroValue for L {
    fn zero_value() -> Self {
        L::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::ActivationUnit;
    use num_rational::Rational64;

    fn stack(units: Vec<Vec<Vec<f64>>>) -> ClassUnitStack<f64> {
        ClassUnitStack::new(
            "c",
            "L",
            0,
            units.into_iter().map(|u| ActivationUnit::from_rows(u).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_norm(&stack(vec![vec![vec![1.0, 2.0], vec![3.0, 0.0]]])), 6.0);
        let two = stack(vec![vec![vec![1.0, 2.0], vec![3.0, 0.0]], vec![vec![4.0, 0.0], vec![0.0, 6.0]]]);
        assert_eq!(l1_norm(&two), 8.0);
        assert_eq!(l1_norm(&stack(vec![vec![vec![0.0; 2]; 2]])), 0.0);
        assert_eq!(mean_activation(&two), 2.0);
    }

    #[test]
    fn apoz_examples() {
        assert_eq!(apoz(&stack(vec![vec![vec![0.0, 2.0], vec![0.0, 4.0]]])), 0.5);
        assert_eq!(apoz(&stack(vec![vec![vec![0.0; 2]; 2]])), 1.0);
        assert_eq!(apoz(&stack(vec![vec![vec![1.0; 2]; 2]])), 0.0);
    }

    #[test]
    fn selectivity_examples() {
        assert!((class_selectivity(&[4.0f64, 1.0, 1.0]).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(class_selectivity(&[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(class_selectivity(&[4.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(class_selectivity(&[0.0, 0.0]).unwrap(), 0.0);
        assert!(class_selectivity(&[1.0]).is_err());
        assert!(class_selectivity(&[1.0, -1.0]).is_err());
        let exact = class_selectivity(&[Rational64::from_integer(4), Rational64::from_integer(1), Rational64::from_integer(1)]);
        assert_eq!(exact.unwrap(), Rational64::new(3, 5));
    }

    #[test]
    fn fpgm_examples() {
        let scalars = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert_eq!(fpgm_scores(&scalars).unwrap(), vec![3.0, 2.0, 3.0]);
        assert_eq!(fpgm_scores(&[vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap(), vec![0.0, 0.0]);
        let halved: Vec<Vec<f64>> = scalars.iter().map(|f| f.iter().map(|x| x * 0.5).collect()).collect();
        assert_eq!(fpgm_scores(&halved).unwrap(), vec![1.5, 1.0, 1.5]);
        assert!(matches!(fpgm_scores(&[vec![1.0], vec![1.0, 2.0]]), Err(Error::DimensionMismatch(_))));
        assert!(fpgm_scores(&[vec![1.0]]).is_err());
        // 3-4-5 triangle
        assert_eq!(fpgm_score(&[vec![0.0, 0.0], vec![3.0, 4.0]], 0).unwrap(), 5.0);
    }

    #[test]
    fn exact_fpgm_keeps_surds() {
        let r = |n| Rational64::from_integer(n);
        let filters = vec![vec![r(0), r(0)], vec![r(1), r(1)], vec![r(3), r(4)]];
        let scores = fpgm_scores(&filters).unwrap();
        // √2 + 5
        assert!((scores[0].to_f64() - (2f64.sqrt() + 5.0)).abs() < 1e-12);
        let scaled: Vec<Vec<Rational64>> = filters.iter().map(|f| f.iter().map(|x| x * r(10)).collect()).collect();
        let rescaled = fpgm_scores(&scaled).unwrap();
        for (a, b) in scores.iter().zip(&rescaled) {
            assert_eq!(a.scaled(&r(10)), *b);
        }
    }

    #[test]
    fn nisp_examples() {
        let w = vec![vec![1.0, -2.0], vec![3.0, 4.0]];
        assert_eq!(nisp_backprop(&w, &[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert_eq!(nisp_backprop(&w, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let half: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| x * 0.5).collect()).collect();
        assert_eq!(nisp_backprop(&half, &[1.0, 1.0]).unwrap(), vec![1.5, 3.5]);
        assert!(matches!(nisp_backprop(&w, &[1.0]), Err(Error::DimensionMismatch(_))));
        assert!(nisp_backprop(&w, &[1.0, -1.0]).is_err());
    }
}
