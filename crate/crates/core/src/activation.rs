//! Activation grids and per-class stacks of them.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One post-activation feature map of a single channel for a single image.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationUnit<T> {
    side: usize,
    values: Vec<T>,
}

impl<T: Scalar> ActivationUnit<T> {
    /// Builds a unit from row-major values.
    ///
    /// Rejects grids with side < 2, the wrong length, negative or non-finite
    /// entries. Errors on entries report sample index 0; stack loaders
    /// substitute the real index.
    pub fn new(side: usize, values: Vec<T>) -> Result<Self> {
        if side < 2 {
            return Err(Error::invalid(format!("unit side must be at least 2, got {side}")));
        }
        if values.len() != side * side {
            return Err(Error::DimensionMismatch(format!(
                "unit of side {side} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        check_grid(&values, side, 0)?;
        Ok(ActivationUnit { side, values })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(Error::DimensionMismatch("unit rows must form a square grid".into()));
        }
        Self::new(side, rows.into_iter().flatten().collect())
    }

    pub fn zeros(side: usize) -> Result<Self> {
        Self::new(side, vec![T::zero(); side * side])
    }

    pub fn side(&self) -> usize {
        self.side
    }

    /// Row-major values.
    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.values[row * self.side + col]
    }

    /// Applies `f` entrywise. The result is re-validated.
    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Result<ActivationUnit<U>> {
        ActivationUnit::new(self.side, self.values.iter().map(f).collect())
    }

    /// Exact conversion into another scalar type.
    pub fn convert<U: Scalar>(&self) -> Result<ActivationUnit<U>> {
        let values = self
            .values
            .iter()
            .map(|v| {
                U::from_f64(v.to_f64())
                    .ok_or_else(|| Error::invalid(format!("{v:?} is not exactly representable")))
            })
            .collect::<Result<Vec<_>>>()?;
        ActivationUnit::new(self.side, values)
    }

    /// Same grid with rows and columns permuted by `perm` (new index `i`
    /// takes old index `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let m = self.side;
        let mut seen = vec![false; m];
        if perm.len() != m || perm.iter().any(|&p| p >= m || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::invalid("not a permutation of the unit's indices"));
        }
        let mut values = Vec::with_capacity(m * m);
        for &r in perm {
            for &c in perm {
                values.push(self.values[r * m + c].clone());
            }
        }
        Ok(ActivationUnit { side: m, values })
    }
}

fn check_grid<T: Scalar>(values: &[T], side: usize, sample: usize) -> Result<()> {
    for (idx, v) in values.iter().enumerate() {
        let (row, col) = (idx / side, idx % side);
        if !v.is_finite_value() {
            return Err(Error::NonFiniteActivation { sample, row, col });
        }
        if *v < T::zero() {
            return Err(Error::NegativeActivation {
                sample,
                row,
                col,
                value: v.to_f64(),
            });
        }
    }
    Ok(())
}

/// All sampled units of one channel of one layer for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassUnitStack<T> {
    pub class_id: String,
    pub layer_id: String,
    pub channel_id: usize,
    units: Vec<ActivationUnit<T>>,
}

impl<T: Scalar> ClassUnitStack<T> {
    pub fn new(
        class_id: impl Into<String>,
        layer_id: impl Into<String>,
        channel_id: usize,
        units: Vec<ActivationUnit<T>>,
    ) -> Result<Self> {
        let Some(first) = units.first() else {
            return Err(Error::invalid("a stack needs at least one unit"));
        };
        let side = first.side();
        if let Some(pos) = units.iter().position(|u| u.side() != side) {
            return Err(Error::DimensionMismatch(format!(
                "unit {pos} has side {}, expected {side}",
                units[pos].side()
            )));
        }
        Ok(ClassUnitStack {
            class_id: class_id.into(),
            layer_id: layer_id.into(),
            channel_id,
            units,
        })
    }

    /// Builds a stack from raw row-major grids, reporting the offending
    /// sample index on validation failures.
    pub fn from_grids(
        class_id: impl Into<String>,
        layer_id: impl Into<String>,
        channel_id: usize,
        side: usize,
        grids: Vec<Vec<T>>,
    ) -> Result<Self> {
        let mut units = Vec::with_capacity(grids.len());
        for (sample, grid) in grids.into_iter().enumerate() {
            if side >= 2 && grid.len() == side * side {
                check_grid(&grid, side, sample)?;
            }
            units.push(ActivationUnit::new(side, grid)?);
        }
        Self::new(class_id, layer_id, channel_id, units)
    }

    pub fn units(&self) -> &[ActivationUnit<T>] {
        &self.units
    }

    pub fn sample_count(&self) -> usize {
        self.units.len()
    }

    pub fn side(&self) -> usize {
        self.units[0].side()
    }

    /// Keeps the units at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let units = indices
            .iter()
            .map(|&i| {
                self.units
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("sample index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.class_id.clone(), self.layer_id.clone(), self.channel_id, units)
    }

    pub fn convert<U: Scalar>(&self) -> Result<ClassUnitStack<U>> {
        let units = self.units.iter().map(|u| u.convert()).collect::<Result<Vec<_>>>()?;
        ClassUnitStack::new(self.class_id.clone(), self.layer_id.clone(), self.channel_id, units)
    }

    pub fn map_units(&self, f: impl Fn(&ActivationUnit<T>) -> Result<ActivationUnit<T>>) -> Result<Self> {
        let units = self.units.iter().map(f).collect::<Result<Vec<_>>>()?;
        Self::new(self.class_id.clone(), self.layer_id.clone(), self.channel_id, units)
    }
}

/// Multiplies every entry of every unit by `factor`.
pub fn rescale_stack<T: Scalar>(stack: &ClassUnitStack<T>, factor: &T) -> Result<ClassUnitStack<T>> {
    if !factor.is_finite_value() || *factor <= T::zero() {
        return Err(Error::invalid(format!("rescale factor must be positive, got {factor:?}")));
    }
    stack.map_units(|u| u.map(|v| v.clone() * factor.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;
    use proptest::prelude::*;

    fn unit(rows: Vec<Vec<f32>>) -> ActivationUnit<f32> {
        ActivationUnit::from_rows(rows).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(ActivationUnit::<f32>::new(1, vec![0.0]), Err(Error::InvalidArgument(_))));
        assert!(matches!(ActivationUnit::<f32>::new(2, vec![0.0; 3]), Err(Error::DimensionMismatch(_))));
        let err = ActivationUnit::<f32>::new(2, vec![0.0, 1.0, -2.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NegativeActivation { row: 1, col: 0, .. }));
        assert!(matches!(
            ActivationUnit::<f32>::new(2, vec![f32::NAN, 0.0, 0.0, 0.0]),
            Err(Error::NonFiniteActivation { .. })
        ));
    }

    #[test]
    fn from_grids_reports_sample_index() {
        let grids = vec![vec![0.0f32; 4], vec![-0.5, 0.0, 0.0, 0.0]];
        let err = ClassUnitStack::from_grids("c", "L", 0, 2, grids).unwrap_err();
        assert!(matches!(err, Error::NegativeActivation { sample: 1, row: 0, col: 0, .. }));
    }

    #[test]
    fn mixed_sides_rejected() {
        let a = ActivationUnit::<f32>::zeros(2).unwrap();
        let b = ActivationUnit::<f32>::zeros(3).unwrap();
        assert!(ClassUnitStack::new("c", "L", 0, vec![a, b]).is_err());
        assert!(ClassUnitStack::<f32>::new("c", "L", 0, vec![]).is_err());
    }

    #[test]
    fn rescale_examples() {
        let s = ClassUnitStack::new("c", "L", 0, vec![unit(vec![vec![2.0, 0.0], vec![4.0, 6.0]])]).unwrap();
        let half = rescale_stack(&s, &0.5).unwrap();
        assert_eq!(half.units()[0].values(), &[1.0, 0.0, 2.0, 3.0]);
        let same = rescale_stack(&s, &1.0).unwrap();
        assert_eq!(same, s);
        assert!(rescale_stack(&s, &0.0).is_err());
        assert!(rescale_stack(&s, &-1.0).is_err());
    }

    #[test]
    fn permutation_relabels_rows_and_columns() {
        let u = unit(vec![vec![0.0, 1.0, 2.0], vec![3.0, 0.0, 4.0], vec![5.0, 6.0, 0.0]]);
        let p = u.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(p.get(0, 1), u.get(2, 0));
        assert_eq!(p.get(1, 2), u.get(0, 1));
        assert!(u.permuted(&[0, 0, 1]).is_err());
    }

    proptest! {
        #[test]
        fn composed_rescale_within_one_ulp(
            vals in proptest::collection::vec(0.0f32..1000.0, 9),
            (ma, ea) in (1u32..4096, -12i32..8),
            (mb, eb) in (1u32..4096, -12i32..8),
        ) {
            // 12-bit mantissas keep a·b exact in f32, so both sides scale by
            // the same factor
            let a = ma as f32 * 2f32.powi(ea);
            let b = mb as f32 * 2f32.powi(eb);
            prop_assert_eq!((a as f64) * (b as f64), (a * b) as f64);
            let s = ClassUnitStack::new("c", "L", 0, vec![ActivationUnit::new(3, vals).unwrap()]).unwrap();
            let twice = rescale_stack(&rescale_stack(&s, &a).unwrap(), &b).unwrap();
            let once = rescale_stack(&s, &(a * b)).unwrap();
            for (x, y) in twice.units()[0].values().iter().zip(once.units()[0].values()) {
                // two roundings against one
                let ulp = f32::EPSILON * x.abs().max(y.abs());
                prop_assert!((x - y).abs() <= ulp + f32::MIN_POSITIVE, "{x} vs {y}");
            }
        }

        #[test]
        fn exact_rescale_composes(
            nums in proptest::collection::vec(0i64..1000, 4),
            a in 1i64..50,
            b in 1i64..50,
        ) {
            let vals = nums.into_iter().map(|n| Rational64::new(n, 7)).collect();
            let s = ClassUnitStack::new("c", "L", 0, vec![ActivationUnit::new(2, vals).unwrap()]).unwrap();
            let (a, b) = (Rational64::new(a, 3), Rational64::new(b, 5));
            let twice = rescale_stack(&rescale_stack(&s, &a).unwrap(), &b).unwrap();
            prop_assert_eq!(twice, rescale_stack(&s, &(a * b)).unwrap());
        }
    }
}
