//! Certification of q-positive maps on matrix algebras: superoperator
//! algebra, the q-order, conditionally negative maps, q-pure
//! classification, corners and boundary weight simulations.

pub mod bwsim;
pub mod cneg;
pub mod corner;
pub mod error;
pub mod format;
pub mod gen;
pub mod linalg;
pub mod qorder;
pub mod qpure;
pub mod quadrature;
pub mod superop;

pub use error::{Error, Result};
pub use linalg::{Mat, C64};
pub use superop::{ChoiMatrix, KrausSet, SuperOp};
