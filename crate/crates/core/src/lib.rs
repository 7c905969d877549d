//! Shortest distance between `k` orbits of a dynamical system, longest common
//! substring between `k` random sequences, and the generalized fractal
//! dimensions and Rényi entropies that govern their growth rates.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`dynamics`] | interval, torus and skew-product maps; orbit sampling |
//! | [`distance`] | k-point diameter, shortest distance `m_n`, tuple counts `S_n` |
//! | [`dimension`] | correlation sums and generalized dimension `D_k` |
//! | [`symbolic`] | Markov sources, cylinders, Rényi entropies `H_k` |
//! | [`matching`] | longest common substring `M_n`, encoders, stochastic scrabble |
//! | [`experiment`] | config-driven replicated experiments and reports |

pub mod dimension;
pub mod distance;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod matching;
pub mod regression;
pub mod seed;
pub mod symbolic;

pub use dimension::{CorrelationForm, DimensionEstimate, Estimator, RadiiLadder};
pub use distance::{MetricSpec, OrbitSet};
pub use dynamics::{MapSpec, ObservationSpec, Point, PointSet, SkewProduct};
pub use error::{Error, Result};
pub use matching::{EncoderSpec, ScrabbleSpec};
pub use symbolic::{CylinderTable, MarkovModel, SymbolSequence};
