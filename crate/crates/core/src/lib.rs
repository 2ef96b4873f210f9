//! Incremental and multi-temporal PGD solvers for small-strain
//! elastoplastic solids with ratcheting under cyclic loading.

// `!(a > b)` deliberately treats NaN as failure; index loops follow the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beam;
pub mod compare;
pub mod constitutive;
pub mod fem2d;
pub mod incremental;
pub mod io;
pub mod linalg;
pub mod model;
pub mod pgd;
pub mod scenario;
pub mod scalar;
pub mod tensor;
pub mod time;

pub use scalar::Scalar;

/// Double-precision aliases of the generic types.
pub type SymTensor = tensor::SymTensor<f64>;
pub type MaterialParams = constitutive::MaterialParams<f64>;
pub type InternalState = constitutive::InternalState<f64>;
pub type Mesh = fem2d::Mesh2D<f64>;
pub type PlateModel = fem2d::PlateModel<f64>;
pub type WinklerModel = beam::WinklerModel<f64>;
pub type PlateHistory = incremental::HistoryRecord<f64, fem2d::MaterialPoint<f64>>;
pub type PileHistory = incremental::HistoryRecord<f64, beam::SpringPoint<f64>>;
pub type Decomposition = pgd::Decomposition<f64>;
