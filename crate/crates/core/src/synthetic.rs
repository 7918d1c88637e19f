//! Deterministic synthetic unit stacks.
//!
//! Every generator draws from SplitMix64 (state initialised to the seed; each
//! draw adds `0x9e3779b97f4a7c15` to the state and returns the standard
//! `z ^= z >> 30; z *= 0xbf58476d1ce4e5b9; z ^= z >> 27; z *= 0x94d049bb133111eb;
//! z ^= z >> 31` finalizer). Grid cells are visited sample by sample in
//! row-major order, one 64-bit draw per cell, whatever the kind. The top 16
//! bits of a draw give `u = (hi + 1) / 65536 ∈ (0, 1]`; the low 32 bits give
//! `z = lo / 2^32 ∈ [0, 1)`.
//!
//! * `uniform_random`: cell = `u`.
//! * `sparse_random`: cell = 0 if `z < sparsity`, otherwise `u`.
//! * `all_zero`: cell = 0.
//! * `planted_cycle`: the four cells `(0,1), (m−1,m−2), (1,m−1), (m−2,0)`
//!   hold 1, 15/16, 7/8, 13/16 in that order; every other cell holds
//!   `⌊noise · 3/4 · u · 2^16⌋ / 2^16`, strictly below the planted values.
//!
//! All values lie on the 2^-16 grid, so they are exact in `f32` and stay
//! exact under rescaling by 1/2, 2 or 10.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::activation::{ActivationUnit, ClassUnitStack};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const GRID: f64 = 65536.0;
const PLANTED_VALUES: [f64; 4] = [1.0, 0.9375, 0.875, 0.8125];
const NOISE_CEILING: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SyntheticKind {
    PlantedCycle,
    UniformRandom,
    SparseRandom,
    AllZero,
}

impl SyntheticKind {
    pub fn name(self) -> &'static str {
        match self {
            SyntheticKind::PlantedCycle => "planted_cycle",
            SyntheticKind::UniformRandom => "uniform_random",
            SyntheticKind::SparseRandom => "sparse_random",
            SyntheticKind::AllZero => "all_zero",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planted_cycle" => Ok(SyntheticKind::PlantedCycle),
            "uniform_random" => Ok(SyntheticKind::UniformRandom),
            "sparse_random" => Ok(SyntheticKind::SparseRandom),
            "all_zero" => Ok(SyntheticKind::AllZero),
            other => Err(Error::invalid(format!("unknown synthetic kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub side: usize,
    pub samples: usize,
    /// Scale of the background entries of `planted_cycle`, in [0, 1].
    pub noise: f64,
    pub seed: u64,
    /// Fraction of zeroed cells for `sparse_random`.
    pub sparsity: f64,
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, side: usize, samples: usize, noise: f64, seed: u64) -> Self {
        SyntheticSpec {
            kind,
            side,
            samples,
            noise,
            seed,
            sparsity: 0.8,
        }
    }
}

/// Positions of the planted 4-cycle, highest value first.
pub fn planted_positions(side: usize) -> [(usize, usize); 4] {
    let m = side;
    [(0, 1), (m - 1, m - 2), (1, m - 1), (m - 2, 0)]
}

pub fn generate_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<ClassUnitStack<T>> {
    let m = spec.side;
    if m < 2 {
        return Err(Error::invalid(format!("synthetic side must be at least 2, got {m}")));
    }
    if spec.kind == SyntheticKind::PlantedCycle && m < 4 {
        return Err(Error::invalid("planted_cycle needs side >= 4 to hold a chordless 4-cycle"));
    }
    if spec.samples == 0 {
        return Err(Error::invalid("synthetic stack needs at least one sample"));
    }
    if !(0.0..=1.0).contains(&spec.noise) {
        return Err(Error::invalid(format!("noise must lie in [0, 1], got {}", spec.noise)));
    }
    if !(0.0..=1.0).contains(&spec.sparsity) {
        return Err(Error::invalid(format!("sparsity must lie in [0, 1], got {}", spec.sparsity)));
    }

    let mut rng = SplitMix64::seed_from_u64(spec.seed);
    let planted = planted_positions(m.max(4));
    let mut units = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let mut grid = Vec::with_capacity(m * m);
        for idx in 0..m * m {
            let draw = rng.next_u64();
            let u = ((draw >> 48) + 1) as f64 / GRID;
            let z = (draw & 0xffff_ffff) as f64 / 4_294_967_296.0;
            let value = match spec.kind {
                SyntheticKind::AllZero => 0.0,
                SyntheticKind::UniformRandom => u,
                SyntheticKind::SparseRandom => {
                    if z < spec.sparsity {
                        0.0
                    } else {
                        u
                    }
                }
                SyntheticKind::PlantedCycle => {
                    let (row, col) = (idx / m, idx % m);
                    match planted.iter().position(|&p| p == (row, col)) {
                        Some(k) => PLANTED_VALUES[k],
                        None => (spec.noise * NOISE_CEILING * u * GRID).floor() / GRID,
                    }
                }
            };
            grid.push(T::from_f64(value).ok_or_else(|| {
                Error::invalid(format!("synthetic value {value} not representable"))
            })?);
        }
        units.push(ActivationUnit::new(m, grid)?);
    }
    ClassUnitStack::new(spec.kind.name(), "synthetic", 0, units)
}

/// Independent seed for stream `index` derived from `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut rng = SplitMix64::seed_from_u64(seed ^ index.wrapping_mul(0xd1b5_4a32_d192_ed03));
    rng.next_u64()
}

/// Replaces a `fraction` of the samples (chosen by seed) with uniform random
/// units, mimicking a class whose samples no longer share a common pattern.
pub fn corrupt_stack<T: Scalar>(stack: &ClassUnitStack<T>, fraction: f64, seed: u64) -> Result<ClassUnitStack<T>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("corruption fraction must lie in [0, 1], got {fraction}")));
    }
    let n = stack.sample_count();
    let count = (fraction * n as f64).round() as usize;
    let mut rng = SplitMix64::seed_from_u64(seed);
    let chosen = rand::seq::index::sample(&mut rng, n, count);
    let replacement: ClassUnitStack<T> = generate_synthetic(&SyntheticSpec::new(
        SyntheticKind::UniformRandom,
        stack.side(),
        count.max(1),
        0.0,
        child_seed(seed, 1),
    ))?;
    let mut units = stack.units().to_vec();
    for (slot, sample) in chosen.iter().enumerate() {
        units[sample] = replacement.units()[slot].clone();
    }
    ClassUnitStack::new(stack.class_id.clone(), stack.layer_id.clone(), stack.channel_id, units)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(kind: SyntheticKind, side: usize, samples: usize, noise: f64, seed: u64) -> ClassUnitStack<f32> {
        generate_synthetic(&SyntheticSpec::new(kind, side, samples, noise, seed)).unwrap()
    }

    #[test]
    fn splitmix_reference_stream() {
        // published SplitMix64 outputs for seed 1234567
        let mut rng = SplitMix64::seed_from_u64(1234567);
        let expected = [
            6457827717110365317u64,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ];
        for e in expected {
            assert_eq!(rng.next_u64(), e);
        }
    }

    #[test]
    fn all_zero_units() {
        let s = gen(SyntheticKind::AllZero, 4, 5, 0.0, 7);
        assert_eq!(s.sample_count(), 5);
        assert!(s.units().iter().all(|u| u.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn planted_top_four_positions() {
        let s = gen(SyntheticKind::PlantedCycle, 4, 1, 0.0, 7);
        let u = &s.units()[0];
        let mut cells: Vec<(f32, usize, usize)> =
            (0..16).map(|i| (u.values()[i], i / 4, i % 4)).collect();
        cells.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let top: Vec<(usize, usize)> = cells[..4].iter().map(|c| (c.1, c.2)).collect();
        assert_eq!(top, vec![(0, 1), (3, 2), (1, 3), (2, 0)]);
        assert!(cells[4..].iter().all(|c| c.0 == 0.0));
    }

    #[test]
    fn seeds_change_noise_only() {
        let a = gen(SyntheticKind::PlantedCycle, 4, 1, 0.3, 7);
        let b = gen(SyntheticKind::PlantedCycle, 4, 1, 0.3, 8);
        let (ua, ub) = (&a.units()[0], &b.units()[0]);
        for (r, c) in planted_positions(4) {
            assert_eq!(ua.get(r, c), ub.get(r, c));
        }
        assert_ne!(ua, ub);
        let max_noise = ua
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| !planted_positions(4).contains(&(i / 4, i % 4)))
            .map(|(_, v)| *v)
            .fold(0.0f32, f32::max);
        assert!(max_noise > 0.0 && max_noise < 0.8125);
    }

    #[test]
    fn deterministic_and_on_grid() {
        let a = gen(SyntheticKind::UniformRandom, 6, 3, 0.0, 42);
        let b = gen(SyntheticKind::UniformRandom, 6, 3, 0.0, 42);
        assert_eq!(a, b);
        for u in a.units() {
            for &v in u.values() {
                assert!(v > 0.0 && v <= 1.0);
                assert_eq!((v as f64 * GRID).fract(), 0.0);
            }
        }
    }

    #[test]
    fn sparse_fraction_close_to_default() {
        let s = gen(SyntheticKind::SparseRandom, 20, 10, 0.0, 3);
        let zeros = s.units().iter().flat_map(|u| u.values()).filter(|&&v| v == 0.0).count();
        let frac = zeros as f64 / 4000.0;
        assert!((frac - 0.8).abs() < 0.03, "{frac}");
    }

    #[test]
    fn invalid_specs() {
        let bad = |spec: SyntheticSpec| generate_synthetic::<f32>(&spec).is_err();
        assert!(bad(SyntheticSpec::new(SyntheticKind::UniformRandom, 1, 1, 0.0, 0)));
        assert!(bad(SyntheticSpec::new(SyntheticKind::PlantedCycle, 3, 1, 0.0, 0)));
        assert!(bad(SyntheticSpec::new(SyntheticKind::UniformRandom, 4, 0, 0.0, 0)));
        assert!(bad(SyntheticSpec::new(SyntheticKind::PlantedCycle, 4, 1, 1.5, 0)));
        assert!("bogus".parse::<SyntheticKind>().is_err());
        assert_eq!("sparse_random".parse::<SyntheticKind>().unwrap(), SyntheticKind::SparseRandom);
    }

    #[test]
    fn corruption_replaces_requested_fraction() {
        let s = gen(SyntheticKind::PlantedCycle, 5, 20, 0.0, 1);
        let c = corrupt_stack(&s, 0.5, 9).unwrap();
        let changed = s.units().iter().zip(c.units()).filter(|(a, b)| a != b).count();
        assert_eq!(changed, 10);
        assert_eq!(corrupt_stack(&s, 0.0, 9).unwrap(), s);
    }
}
