//! Optimal variable-height transport packaging.
//!
//! The pipeline:
//!
//! 1. [`model`] builds the universe of candidate boxes on a millimetre grid,
//!    derives cartons with crease lines and ingests packing units.
//! 2. [`binpack`] decides whether a unit's items fit a given box.
//! 3. [`kdtree`] (or the exhaustive evaluator in [`fitmatrix`]) fills the
//!    bit-packed fitting matrix.
//! 4. [`master`] runs the Benders loop; [`subproblem`] scores carton
//!    selections analytically and produces the optimality cuts.
//!
//! The guide under `book/` walks through each step; its code listings are
//! compiled and run as doc tests of this crate.

pub mod binpack;
pub mod error;
pub mod fitmatrix;
pub mod kdtree;
pub mod master;
pub mod model;
pub mod subproblem;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/model.md")]
    pub struct Model;
    #[doc = include_str!("../../../book/src/binpack.md")]
    pub struct BinPacking;
    #[doc = include_str!("../../../book/src/fit-matrix.md")]
    pub struct FitMatrix;
    #[doc = include_str!("../../../book/src/kdtree.md")]
    pub struct KdTree;
    #[doc = include_str!("../../../book/src/subproblem.md")]
    pub struct SubProblem;
    #[doc = include_str!("../../../book/src/benders.md")]
    pub struct Benders;
}
