//! Topological feature entropy of convolutional units.
//!
//! A unit (one channel's m×m activation map for one image) is read as a
//! weighted graph on its m row/column indices. Lowering a threshold through
//! the unit's positive values gives a nested sequence of graphs; the first
//! rank at which the flag complex of that graph carries a 1-cycle is the
//! unit's birth time. Birth times over a class's samples form a distribution
//! whose entropy scores how consistently the unit responds to the class.
//!
//! The numeric core is generic over [`Scalar`]: `f32` for activations as
//! exported, `f64`, and [`Rational64`] for exact arithmetic.

pub mod activation;
pub mod analysis;
pub mod error;
pub mod filtration;
pub mod homology;
pub mod indicators;
pub mod io;
pub mod scalar;
pub mod synthetic;

pub use num_rational::Rational64;

pub use activation::{rescale_stack, ActivationUnit, ClassUnitStack};
pub use error::{Error, Result};
pub use filtration::{build_adjacency, build_filtration, Edge, EdgeEvent, GraphFiltration, WeightedAdjacency};
pub use homology::{
    betti_curve, betti_numbers, birth_time, birth_time_with_steps, brute_force_betti, characterize,
    cubical_betti_curve, cubical_birth_time, curve_integral, curve_maximum, flag_complex, BettiCurve, BirthTime,
    Characterization, FlagComplex,
};
pub use indicators::{
    birth_distribution, feature_entropy, unit_report, BirthDistribution, EntropyConfig, IndicatorReport, LogBase,
    ReportConfig, UnitContext,
};
pub use io::{load_class_stack, load_layer_stacks, load_manifest, DatasetManifest, DatasetWriter};
pub use scalar::{Scalar, SurdSum};
pub use synthetic::{generate_synthetic, SyntheticKind, SyntheticSpec};

pub type Unit32 = ActivationUnit<f32>;
pub type Unit64 = ActivationUnit<f64>;
pub type ExactUnit = ActivationUnit<Rational64>;
pub type Stack32 = ClassUnitStack<f32>;
pub type Stack64 = ClassUnitStack<f64>;
pub type ExactStack = ClassUnitStack<Rational64>;
pub type Report32 = IndicatorReport<f32>;
pub type ExactReport = IndicatorReport<Rational64>;
